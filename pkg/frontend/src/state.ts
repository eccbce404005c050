/**
 * View model for the rewriting companion.
 *
 * Every number in the state is copied verbatim from a service response; the
 * only local computation is presentational (quantile binning of importance
 * magnitudes for the heatmap, similarity badges from configured thresholds).
 * In particular the prediction gauge always holds the last service-reported
 * probability — it is never derived from a logit locally.
 */

import type {
  AutoDone,
  AutoEditEvent,
  AutoEvent,
  Candidate,
  EditResponse,
  ExportResponse,
  ImportanceResponse,
  RevertResponse,
  ScoredState,
} from "./api.js";
import type { BadgeThresholds } from "./config.js";

export const BIN_COUNT = 5;

export interface TokenSpan {
  position: number;
  surface: string;
  kind: string;
  /** Omission score from the importance endpoint; null until fetched. */
  score: number | null;
  attackable: boolean;
  /** Heat bin, 0 = uncolored, 1..BIN_COUNT in increasing |score|. */
  bin: number;
}

export interface CandidateMenu {
  position: number;
  original: string;
  baseLogit: number;
  generator: string;
  /** Kept in the exact order the service returned them. */
  candidates: Candidate[];
}

export interface HistoryEntry {
  position: number;
  /** Pristine surface from session creation, as reported by the service. */
  before: string;
  after: string;
  /** Service-reported probability right after this edit was applied. */
  probability: number;
}

export interface DiffEntry {
  position: number;
  before: string;
  after: string;
}

export interface Suggestion {
  position: number;
  original: string;
  replacement: string;
  logit: number | null;
  probability: number | null;
  flipped: boolean;
}

export interface ViewState {
  session: string | null;
  model: string | null;
  label: string | null;
  prediction: string | null;
  flipped: boolean;
  /** Invariant: always the last service-reported probability. */
  gauge: number | null;
  logit: number | null;
  editCount: number;
  tokens: TokenSpan[];
  /** edit_count the heatmap was computed at; differing from editCount
   * means the colors describe an older working document. */
  importanceEditCount: number | null;
  menu: CandidateMenu | null;
  history: HistoryEntry[];
  diffView: boolean;
  suggestions: Suggestion[];
  autoDone: AutoDone | null;
  exported: ExportResponse | null;
  busy: boolean;
  error: string | null;
}

export function emptyState(): ViewState {
  return {
    session: null,
    model: null,
    label: null,
    prediction: null,
    flipped: false,
    gauge: null,
    logit: null,
    editCount: 0,
    tokens: [],
    importanceEditCount: null,
    menu: null,
    history: [],
    diffView: false,
    suggestions: [],
    autoDone: null,
    exported: null,
    busy: false,
    error: null,
  };
}

/**
 * Folds a prediction snapshot into the state: gauge, logit, prediction and
 * token surfaces all come from the response. Importance scores and bins are
 * carried over from the previous spans (tokenization is fixed at session
 * creation, so positions are stable); they may now be stale, which
 * `importanceStale` reports by comparing edit counts.
 */
export function applyScoredState(state: ViewState, resp: ScoredState): ViewState {
  const carry = state.tokens.length === resp.tokens.length ? state.tokens : [];
  const tokens = resp.tokens.map((t, i): TokenSpan => {
    const old = carry[i];
    return {
      position: i,
      surface: t.surface,
      kind: t.kind,
      score: old ? old.score : null,
      attackable: old ? old.attackable : t.kind === "word",
      bin: old ? old.bin : 0,
    };
  });
  return {
    ...state,
    session: resp.session,
    model: resp.model,
    label: resp.label,
    prediction: resp.prediction,
    flipped: resp.flipped,
    gauge: resp.probability,
    logit: resp.logit,
    editCount: resp.edit_count,
    tokens,
  };
}

/**
 * Five quantile bins of |importance| for the heatmap. Zero (or missing)
 * scores stay in bin 0 and render uncolored; nonzero magnitudes are binned
 * by nearest-rank quintiles, so a larger magnitude never lands in a lower
 * bin.
 */
export function quantileBins(scores: ReadonlyArray<number | null>): number[] {
  const magnitudes = scores
    .filter((s): s is number => s !== null && s !== 0)
    .map(Math.abs)
    .sort((a, b) => a - b);
  if (magnitudes.length === 0) return scores.map(() => 0);
  const edges: number[] = [];
  for (let k = 1; k < BIN_COUNT; k += 1) {
    const rank = Math.ceil((magnitudes.length * k) / BIN_COUNT) - 1;
    edges.push(magnitudes[Math.min(Math.max(rank, 0), magnitudes.length - 1)]!);
  }
  return scores.map((s) => {
    if (s === null || s === 0) return 0;
    const magnitude = Math.abs(s);
    let bin = 1;
    for (const edge of edges) if (magnitude > edge) bin += 1;
    return bin;
  });
}

export function applyImportance(
  state: ViewState,
  resp: ImportanceResponse,
): ViewState {
  const byPosition = new Map(resp.scores.map((s) => [s.position, s]));
  const raw = state.tokens.map((t) => {
    const entry = byPosition.get(t.position);
    return entry ? entry.score : null;
  });
  const bins = quantileBins(raw);
  const tokens = state.tokens.map((t, i): TokenSpan => {
    const entry = byPosition.get(t.position);
    return entry
      ? { ...t, score: entry.score, attackable: entry.attackable, bin: bins[i]! }
      : { ...t, score: null, attackable: false, bin: 0 };
  });
  return { ...state, tokens, importanceEditCount: resp.edit_count };
}

/** True when the heatmap was computed for an older working document. */
export function importanceStale(state: ViewState): boolean {
  return (
    state.importanceEditCount !== null &&
    state.importanceEditCount !== state.editCount
  );
}

export function openMenu(
  state: ViewState,
  resp: { position: number; original: string; base_logit: number; candidates: Candidate[] },
  generator: string,
): ViewState {
  return {
    ...state,
    menu: {
      position: resp.position,
      original: resp.original,
      baseLogit: resp.base_logit,
      generator,
      candidates: resp.candidates,
    },
  };
}

export function closeMenu(state: ViewState): ViewState {
  return { ...state, menu: null };
}

/**
 * Mirrors the service's edit-stack discipline — one entry per position,
 * latest wins — so the local history stays replay-equivalent to the
 * service's own stack without ever being recomputed from text.
 */
export function recordEdit(state: ViewState, resp: EditResponse): ViewState {
  const next = applyScoredState(state, resp);
  const history = state.history.filter((e) => e.position !== resp.edit.position);
  history.push({
    position: resp.edit.position,
    before: resp.edit.before,
    after: resp.edit.after,
    probability: resp.probability,
  });
  return { ...next, history, menu: null };
}

/** A revert pops the most recent history entry, like the service's stack. */
export function recordRevert(state: ViewState, resp: RevertResponse): ViewState {
  const next = applyScoredState(state, resp);
  return { ...next, history: state.history.slice(0, -1) };
}

/** The diff view is derived solely from the edit history. */
export function diffEntries(history: ReadonlyArray<HistoryEntry>): DiffEntry[] {
  return history
    .filter((e) => e.before !== e.after)
    .map((e) => ({ position: e.position, before: e.before, after: e.after }))
    .sort((a, b) => a.position - b.position);
}

export function applyAuto(state: ViewState, events: AutoEvent[]): ViewState {
  const suggestions = events
    .filter((e): e is AutoEditEvent => e.type === "edit")
    .map(
      (e): Suggestion => ({
        position: e.position,
        original: e.original,
        replacement: e.replacement,
        logit: e.logit,
        probability: e.probability,
        flipped: e.flipped,
      }),
    );
  const done = events.find((e): e is AutoDone => e.type === "done") ?? null;
  return { ...state, suggestions, autoDone: done };
}

export function clearSuggestions(state: ViewState): ViewState {
  return { ...state, suggestions: [], autoDone: null };
}

export type Badge = "high" | "medium" | "low";

/**
 * Semantic-similarity badge for generators whose score is a similarity;
 * thresholds come from UI configuration, not from the service.
 */
export function badgeFor(
  score: number | null,
  thresholds: BadgeThresholds,
): Badge | null {
  if (score === null) return null;
  if (score >= thresholds.high) return "high";
  if (score >= thresholds.medium) return "medium";
  return "low";
}
