/**
 * Orchestrates service calls and state transitions.
 *
 * The controller never invents numbers: every state change that carries a
 * probability or score applies a service response. Optimistic rendering of
 * prediction values is deliberately absent — a privacy tool must not show
 * stale risk estimates, so the gauge only moves when a response arrives.
 */

import {
  ServiceClient,
  type AutoRequest,
  type EditResponse,
  type ExportResponse,
} from "./api.js";
import { DEFAULT_CONFIG, type UiConfig } from "./config.js";
import {
  applyAuto,
  applyImportance,
  applyScoredState,
  clearSuggestions,
  closeMenu,
  emptyState,
  openMenu,
  recordEdit,
  recordRevert,
  type ViewState,
} from "./state.js";

function messageOf(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

export class Controller {
  state: ViewState = emptyState();

  constructor(
    private readonly client: ServiceClient,
    private readonly onChange: (state: ViewState) => void = () => undefined,
    readonly config: UiConfig = DEFAULT_CONFIG,
  ) {}

  private emit(next: ViewState): void {
    this.state = next;
    this.onChange(next);
  }

  /**
   * Runs one service call, folding the response into whatever the state is
   * by the time it resolves. Failures land in state.error and resolve to
   * null so flows can stop without throwing across the UI boundary.
   */
  private async call<T>(
    work: () => Promise<T>,
    apply: (state: ViewState, value: T) => ViewState,
  ): Promise<T | null> {
    this.emit({ ...this.state, busy: true, error: null });
    try {
      const value = await work();
      this.emit({ ...apply(this.state, value), busy: false });
      return value;
    } catch (err) {
      this.emit({ ...this.state, busy: false, error: messageOf(err) });
      return null;
    }
  }

  async start(text: string, label: string, model?: string): Promise<void> {
    const created = await this.call(
      () => this.client.createSession(text, label, model),
      (state, resp) =>
        applyScoredState({ ...emptyState(), diffView: state.diffView }, resp),
    );
    if (created) await this.refreshImportance();
  }

  async refreshImportance(): Promise<void> {
    const sid = this.state.session;
    if (sid === null) return;
    await this.call(() => this.client.importance(sid), applyImportance);
  }

  async openCandidates(
    position: number,
    generator: string = this.config.generator,
  ): Promise<void> {
    const sid = this.state.session;
    if (sid === null) return;
    await this.call(
      () =>
        this.client.candidates(sid, position, generator, this.config.candidateLimit),
      (state, resp) => openMenu(state, resp, generator),
    );
  }

  closeMenu(): void {
    this.emit(closeMenu(this.state));
  }

  /** Applies the open menu's candidate with the given surface. */
  async accept(surface: string): Promise<void> {
    const menu = this.state.menu;
    if (menu === null) return;
    await this.editAt(menu.position, surface);
  }

  async editAt(position: number, surface: string): Promise<EditResponse | null> {
    const sid = this.state.session;
    if (sid === null) return null;
    const applied = await this.call(
      () => this.client.edit(sid, position, surface),
      recordEdit,
    );
    if (applied) await this.refreshImportance();
    return applied;
  }

  async undo(): Promise<void> {
    const sid = this.state.session;
    if (sid === null || this.state.history.length === 0) return;
    const applied = await this.call(() => this.client.revert(sid), recordRevert);
    if (applied) await this.refreshImportance();
  }

  async runAuto(overrides?: Partial<AutoRequest>): Promise<void> {
    const sid = this.state.session;
    if (sid === null) return;
    const request: AutoRequest = { ...this.config.auto, ...overrides };
    await this.call(() => this.client.auto(sid, request), applyAuto);
  }

  /** Applies every pending suggestion through the edit endpoint, in order. */
  async acceptSuggestions(): Promise<void> {
    const suggestions = this.state.suggestions;
    for (const suggestion of suggestions) {
      const applied = await this.editAt(suggestion.position, suggestion.replacement);
      if (applied === null) return;
    }
    this.emit(clearSuggestions(this.state));
  }

  discardSuggestions(): void {
    this.emit(clearSuggestions(this.state));
  }

  toggleDiff(): void {
    this.emit({ ...this.state, diffView: !this.state.diffView });
  }

  /** Fetches the export payload; callers hand exported.text to the user verbatim. */
  async exportText(): Promise<ExportResponse | null> {
    const sid = this.state.session;
    if (sid === null) return null;
    return this.call(
      () => this.client.exportSession(sid),
      (state, resp) => ({ ...state, exported: resp }),
    );
  }
}
