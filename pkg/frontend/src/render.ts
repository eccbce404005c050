/**
 * Pure HTML-string renderers over the view state.
 *
 * Every probability, score or delta that reaches the page carries its raw
 * service-reported value in a data attribute (data-prob, data-delta-prob,
 * data-score); the visible text is only a formatting of that same value.
 * This is what makes the single-source-of-truth property checkable: tests
 * can collect the data attributes and match them against recorded traffic.
 */

import type { UiConfig } from "./config.js";
import {
  badgeFor,
  diffEntries,
  importanceStale,
  type ViewState,
} from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function formatProbability(p: number): string {
  return `${(p * 100).toFixed(1)}%`;
}

export function formatDelta(d: number): string {
  return `${d >= 0 ? "+" : ""}${d.toFixed(3)}`;
}

export function renderGauge(state: ViewState): string {
  if (state.gauge === null) {
    return `<div class="gauge gauge-empty">no session</div>`;
  }
  const width = (state.gauge * 100).toFixed(1);
  const flipped = state.flipped
    ? ` <span class="flip-banner">prediction flipped</span>`
    : "";
  return (
    `<div class="gauge" data-prob="${String(state.gauge)}">` +
    `<div class="gauge-bar"><div class="gauge-fill" style="width:${width}%"></div></div>` +
    `<span class="gauge-label">P(${escapeHtml(state.label ?? "")}) = ` +
    `${formatProbability(state.gauge)}</span>` +
    ` <span class="gauge-prediction">predicted: ${escapeHtml(
      state.prediction ?? "",
    )}</span>${flipped}</div>`
  );
}

export function renderTokens(state: ViewState): string {
  const spans = state.tokens.map((t) => {
    const classes = ["token", `bin-${t.bin}`];
    if (t.attackable) classes.push("attackable");
    if (state.menu !== null && state.menu.position === t.position) {
      classes.push("menu-open");
    }
    const score = t.score === null ? "" : ` data-score="${String(t.score)}"`;
    return (
      `<span class="${classes.join(" ")}" data-position="${t.position}"` +
      `${score}>${escapeHtml(t.surface)}</span>`
    );
  });
  const stale = importanceStale(state)
    ? `<p class="stale-note">heatmap is stale — recompute importance</p>`
    : "";
  return `<div class="document">${spans.join(" ")}</div>${stale}`;
}

export function renderMenu(state: ViewState, config: UiConfig): string {
  const menu = state.menu;
  if (menu === null) return "";
  const similarity = config.similarityGenerators.includes(menu.generator);
  const rows = menu.candidates.map((c) => {
    const badge = similarity ? badgeFor(c.generator_score, config.badge) : null;
    const badgeHtml = badge
      ? ` <span class="badge badge-${badge}">${badge}</span>`
      : "";
    const flips = c.flips ? ` <span class="flips">flips</span>` : "";
    return (
      `<li><button class="candidate" data-surface="${escapeHtml(c.surface)}"` +
      ` data-prob="${String(c.probability)}"` +
      ` data-delta-prob="${String(c.delta_probability)}">` +
      `${escapeHtml(c.surface)}</button>` +
      ` <span class="delta">${formatDelta(c.delta_probability)}</span>` +
      `${badgeHtml}${flips}</li>`
    );
  });
  return (
    `<div class="menu" data-position="${menu.position}">` +
    `<h3>replace &ldquo;${escapeHtml(menu.original)}&rdquo;</h3>` +
    `<ul>${rows.join("")}</ul>` +
    `<button class="menu-close">close</button></div>`
  );
}

export function renderHistory(state: ViewState): string {
  if (state.history.length === 0) {
    return `<div class="history history-empty">no edits</div>`;
  }
  const items = state.history.map(
    (e) =>
      `<li data-position="${e.position}" data-prob="${String(e.probability)}">` +
      `${escapeHtml(e.before)} &rarr; ${escapeHtml(e.after)}` +
      ` <span class="prob">${formatProbability(e.probability)}</span></li>`,
  );
  return `<ol class="history">${items.join("")}</ol>`;
}

export function renderDiff(state: ViewState): string {
  if (!state.diffView) return "";
  const entries = diffEntries(state.history);
  if (entries.length === 0) return `<div class="diff diff-empty">no changes</div>`;
  const rows = entries.map(
    (e) =>
      `<li data-position="${e.position}"><del>${escapeHtml(e.before)}</del>` +
      `<ins>${escapeHtml(e.after)}</ins></li>`,
  );
  return `<ul class="diff">${rows.join("")}</ul>`;
}

export function renderSuggestions(state: ViewState): string {
  if (state.suggestions.length === 0) return "";
  const rows = state.suggestions.map((s) => {
    const prob =
      s.probability === null
        ? ""
        : ` data-prob="${String(s.probability)}"`;
    const probText =
      s.probability === null ? "" : ` <span class="prob">${formatProbability(s.probability)}</span>`;
    return (
      `<li data-position="${s.position}"${prob}>` +
      `${escapeHtml(s.original)} &rarr; ${escapeHtml(s.replacement)}` +
      `${probText}${s.flipped ? ` <span class="flips">flips</span>` : ""}</li>`
    );
  });
  const done = state.autoDone;
  const summary = done
    ? `<p class="auto-summary" data-prob="${String(done.final_probability)}">` +
      `${done.edit_count} suggested edits, ${done.queries} queries, ` +
      `final ${formatProbability(done.final_probability)}` +
      `${done.flipped ? ", flips the prediction" : ""}</p>`
    : "";
  return `<div class="suggestions"><h3>suggested edits</h3><ul>${rows.join("")}</ul>${summary}</div>`;
}

export function renderExport(state: ViewState): string {
  const exported = state.exported;
  if (exported === null) return "";
  return (
    `<div class="export">` +
    `<h3>export</h3>` +
    `<pre class="export-text">${escapeHtml(exported.text)}</pre>` +
    `<p><span data-metric="meteor" data-value="${String(exported.meteor)}">` +
    `meteor ${exported.meteor.toFixed(4)}</span>, ` +
    `<span data-metric="change_rate" data-value="${String(exported.change_rate)}">` +
    `change rate ${exported.change_rate.toFixed(4)}</span>, ` +
    `${exported.edits.length} changed tokens</p></div>`
  );
}

export function renderApp(state: ViewState, config: UiConfig): string {
  const busy = state.busy ? `<div class="busy">working&hellip;</div>` : "";
  const error = state.error
    ? `<div class="error">${escapeHtml(state.error)}</div>`
    : "";
  if (state.session === null) {
    return `${busy}${error}<div class="no-session">start a session to begin</div>`;
  }
  return (
    `${busy}${error}` +
    renderGauge(state) +
    renderTokens(state) +
    renderMenu(state, config) +
    renderSuggestions(state) +
    `<section class="panel"><h3>edit history</h3>${renderHistory(state)}</section>` +
    renderDiff(state) +
    renderExport(state)
  );
}
