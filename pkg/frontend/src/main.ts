/**
 * Browser entry point: wires DOM events to the controller and re-renders
 * the view on every state change. All service traffic goes through the
 * fetch transport; nothing here computes model math.
 */

import { ServiceClient, type Transport } from "./api.js";
import { Controller } from "./controller.js";
import { renderApp } from "./render.js";

export function fetchTransport(base: string): Transport {
  return async (method, path, body) => {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await fetch(base + path, init);
    return { status: resp.status, body: await resp.text() };
  };
}

function download(name: string, text: string): void {
  const blob = new Blob([text], { type: "text/plain" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = name;
  anchor.click();
  URL.revokeObjectURL(url);
}

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) throw new Error(`missing #${id}`);
  return found as T;
}

export function boot(base = ""): Controller {
  const view = element<HTMLDivElement>("view");
  const client = new ServiceClient(fetchTransport(base));
  const controller = new Controller(client, (state) => {
    view.innerHTML = renderApp(state, controller.config);
  });

  const text = element<HTMLTextAreaElement>("text");
  const label = element<HTMLInputElement>("label");
  const model = element<HTMLInputElement>("model");
  const generator = element<HTMLSelectElement>("generator");

  // Offer only the generators the running service actually supports.
  void client.health().then((health) => {
    generator.replaceChildren();
    for (const [name, available] of Object.entries(health.generators_available)) {
      if (!available) continue;
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      option.selected = name === controller.config.generator;
      generator.append(option);
    }
    if (model.value === "") model.placeholder = health.default_model;
  });

  element<HTMLButtonElement>("start").addEventListener("click", () => {
    void controller.start(
      text.value,
      label.value.trim(),
      model.value.trim() === "" ? undefined : model.value.trim(),
    );
  });
  element<HTMLButtonElement>("undo").addEventListener("click", () => {
    void controller.undo();
  });
  element<HTMLButtonElement>("refresh-importance").addEventListener("click", () => {
    void controller.refreshImportance();
  });
  element<HTMLButtonElement>("auto").addEventListener("click", () => {
    void controller.runAuto({ generator: generator.value });
  });
  element<HTMLButtonElement>("accept-suggestions").addEventListener("click", () => {
    void controller.acceptSuggestions();
  });
  element<HTMLButtonElement>("toggle-diff").addEventListener("click", () => {
    controller.toggleDiff();
  });
  element<HTMLButtonElement>("export").addEventListener("click", () => {
    void controller.exportText().then((exported) => {
      if (exported !== null) download("obfuscated.txt", exported.text);
    });
  });

  view.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const candidate = target.closest<HTMLElement>("button.candidate");
    if (candidate !== null && candidate.dataset.surface !== undefined) {
      void controller.accept(candidate.dataset.surface);
      return;
    }
    if (target.closest(".menu-close") !== null) {
      controller.closeMenu();
      return;
    }
    const token = target.closest<HTMLElement>(".token.attackable");
    if (token !== null && token.dataset.position !== undefined) {
      void controller.openCandidates(Number(token.dataset.position), generator.value);
    }
  });

  return controller;
}

if (typeof document !== "undefined" && document.getElementById("view") !== null) {
  boot();
}
