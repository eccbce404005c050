import { describe, expect, it } from "vitest";

import type { EditResponse, RevertResponse, ScoredState } from "../src/api.js";
import {
  applyAuto,
  applyImportance,
  applyScoredState,
  badgeFor,
  diffEntries,
  emptyState,
  importanceStale,
  quantileBins,
  recordEdit,
  recordRevert,
  type ViewState,
} from "../src/state.js";
import { NumberWell } from "./support.js";

function scoredState(overrides: Partial<ScoredState> = {}): ScoredState {
  return {
    v: 1,
    session: "s1",
    model: "sub",
    label: "a",
    tokens: [
      { surface: "the", kind: "word" },
      { surface: "fox", kind: "word" },
      { surface: ",", kind: "punct" },
    ],
    prediction: "a",
    logit: 1.25,
    probability: 0.7773,
    flipped: false,
    edit_count: 0,
    ...overrides,
  };
}

describe("quantileBins", () => {
  it("splits ten distinct magnitudes evenly into the five bins", () => {
    const scores = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
    expect(quantileBins(scores)).toEqual([1, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
  });

  it("bins by magnitude, ignoring sign", () => {
    expect(quantileBins([-10, 1])).toEqual(quantileBins([10, 1]));
  });

  it("leaves zero and missing scores in bin 0", () => {
    expect(quantileBins([0, null, 5])).toEqual([0, 0, 1]);
    expect(quantileBins([0, 0])).toEqual([0, 0]);
    expect(quantileBins([])).toEqual([]);
  });

  it("puts equal magnitudes in the same bin", () => {
    expect(quantileBins([3, -3, 3])).toEqual([1, 1, 1]);
  });

  it("is monotone: larger magnitude never lands in a lower bin", () => {
    const well = new NumberWell(7);
    for (let trial = 0; trial < 50; trial += 1) {
      const scores = Array.from(
        { length: 1 + Math.floor(well.next01() * 30) },
        () => (well.next01() - 0.5) * 4,
      );
      const bins = quantileBins(scores);
      for (let i = 0; i < scores.length; i += 1) {
        for (let j = 0; j < scores.length; j += 1) {
          if (Math.abs(scores[i]!) >= Math.abs(scores[j]!)) {
            expect(bins[i]!).toBeGreaterThanOrEqual(bins[j]!);
          }
        }
      }
      expect(Math.max(...bins)).toBeLessThanOrEqual(5);
    }
  });
});

describe("applyScoredState", () => {
  it("copies the service numbers into the gauge verbatim", () => {
    const resp = scoredState({ probability: 0.123456789, logit: -2.5 });
    const state = applyScoredState(emptyState(), resp);
    expect(Object.is(state.gauge, resp.probability)).toBe(true);
    expect(Object.is(state.logit, resp.logit)).toBe(true);
    expect(state.prediction).toBe("a");
    expect(state.tokens.map((t) => t.surface)).toEqual(["the", "fox", ","]);
  });

  it("keeps existing importance data when token count is unchanged", () => {
    let state = applyScoredState(emptyState(), scoredState());
    state = applyImportance(state, {
      v: 1,
      session: "s1",
      edit_count: 0,
      scores: [
        { position: 0, surface: "the", score: 0.5, attackable: true },
        { position: 1, surface: "fox", score: -0.9, attackable: true },
        { position: 2, surface: ",", score: 0, attackable: false },
      ],
      order: [1, 0],
      prediction: "a",
    });
    const next = applyScoredState(
      state,
      scoredState({
        tokens: [
          { surface: "the", kind: "word" },
          { surface: "wolf", kind: "word" },
          { surface: ",", kind: "punct" },
        ],
        edit_count: 1,
      }),
    );
    expect(next.tokens[1]!.surface).toBe("wolf");
    expect(next.tokens[1]!.score).toBe(-0.9);
    expect(next.tokens[1]!.bin).toBeGreaterThan(0);
  });
});

describe("importance staleness", () => {
  it("flags a heatmap computed for an older working document", () => {
    let state = applyScoredState(emptyState(), scoredState());
    state = applyImportance(state, {
      v: 1,
      session: "s1",
      edit_count: 0,
      scores: [],
      order: [],
      prediction: "a",
    });
    expect(importanceStale(state)).toBe(false);
    const edited = { ...state, editCount: 1 };
    expect(importanceStale(edited)).toBe(true);
  });
});

describe("edit history", () => {
  function applyEdit(state: ViewState, position: number, before: string, after: string, probability: number): ViewState {
    const resp: EditResponse = {
      ...scoredState({ probability, edit_count: state.history.filter((e) => e.position !== position).length + 1 }),
      edit: { position, before, after },
    };
    return recordEdit(state, resp);
  }

  it("keeps one entry per position, latest wins", () => {
    let state = applyScoredState(emptyState(), scoredState());
    state = applyEdit(state, 1, "fox", "wolf", 0.61);
    state = applyEdit(state, 0, "the", "a", 0.44);
    state = applyEdit(state, 1, "fox", "hound", 0.39);
    expect(state.history).toHaveLength(2);
    expect(state.history.map((e) => [e.position, e.after])).toEqual([
      [0, "a"],
      [1, "hound"],
    ]);
  });

  it("closes the candidate menu when an edit lands", () => {
    let state = applyScoredState(emptyState(), scoredState());
    state = {
      ...state,
      menu: { position: 1, original: "fox", baseLogit: 1.25, generator: "ws", candidates: [] },
    };
    state = applyEdit(state, 1, "fox", "wolf", 0.61);
    expect(state.menu).toBeNull();
  });

  it("revert pops the most recent entry", () => {
    let state = applyScoredState(emptyState(), scoredState());
    state = applyEdit(state, 1, "fox", "wolf", 0.61);
    state = applyEdit(state, 0, "the", "a", 0.44);
    const resp: RevertResponse = {
      ...scoredState({ probability: 0.61, edit_count: 1 }),
      reverted: { position: 0, before: "a", after: "the" },
    };
    state = recordRevert(state, resp);
    expect(state.history.map((e) => e.position)).toEqual([1]);
    expect(state.gauge).toBe(0.61);
  });
});

describe("diffEntries", () => {
  it("is derived solely from the history, sorted by position", () => {
    const history = [
      { position: 4, before: "fox", after: "wolf", probability: 0.5 },
      { position: 1, before: "the", after: "a", probability: 0.4 },
    ];
    expect(diffEntries(history)).toEqual([
      { position: 1, before: "the", after: "a" },
      { position: 4, before: "fox", after: "wolf" },
    ]);
  });

  it("drops identity entries", () => {
    const history = [{ position: 2, before: "fox", after: "fox", probability: 0.5 }];
    expect(diffEntries(history)).toEqual([]);
  });
});

describe("applyAuto", () => {
  it("collects edit events as suggestions and keeps the summary", () => {
    const state = applyAuto(applyScoredState(emptyState(), scoredState()), [
      { type: "start", session: "s1", generator: "ws", mode: "loop_check" },
      {
        type: "edit",
        position: 1,
        original: "fox",
        replacement: "wolf",
        logit: -0.2,
        probability: 0.45,
        flipped: false,
      },
      {
        type: "done",
        flipped: true,
        final_logit: -1.0,
        final_probability: 0.269,
        queries: 12,
        edit_count: 1,
        skipped_positions: [],
        text: "the wolf ,",
      },
    ]);
    expect(state.suggestions).toHaveLength(1);
    expect(state.suggestions[0]!.replacement).toBe("wolf");
    expect(state.autoDone!.queries).toBe(12);
  });
});

describe("badgeFor", () => {
  const thresholds = { high: 0.8, medium: 0.5 };

  it("maps scores to badges at the configured thresholds", () => {
    expect(badgeFor(0.95, thresholds)).toBe("high");
    expect(badgeFor(0.8, thresholds)).toBe("high");
    expect(badgeFor(0.79, thresholds)).toBe("medium");
    expect(badgeFor(0.5, thresholds)).toBe("medium");
    expect(badgeFor(0.49, thresholds)).toBe("low");
  });

  it("returns no badge without a score", () => {
    expect(badgeFor(null, thresholds)).toBeNull();
  });

  it("honours custom thresholds", () => {
    expect(badgeFor(0.6, { high: 0.55, medium: 0.2 })).toBe("high");
  });
});
