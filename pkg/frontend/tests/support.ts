/**
 * In-memory stand-in for the rewriting service, recording every reply it
 * sends so tests can check the single-source-of-truth property: whatever
 * number the UI shows must appear verbatim in recorded traffic.
 *
 * The fake deliberately invents numbers with no internal consistency — in
 * particular `probability` is NOT the logistic of `logit`, and candidate
 * deltas are not differences of the other fields — so a UI that computed
 * any of them locally would visibly disagree with the recorded traffic.
 */

import type { HttpReply, Transport } from "../src/api.js";

/** Deterministic irregular doubles (xorshift32 scaled to [0, 1)). */
export class NumberWell {
  private state: number;

  constructor(seed = 0x9e3779b9) {
    this.state = seed >>> 0;
  }

  next01(): number {
    let x = this.state;
    x ^= x << 13;
    x >>>= 0;
    x ^= x >>> 17;
    x ^= x << 5;
    x >>>= 0;
    this.state = x;
    return x / 0x100000000;
  }
}

interface StackRecord {
  position: number;
  before: string;
  after: string;
  preProbability: number;
  preLogit: number;
  prePrediction: string;
}

interface FakeSession {
  id: string;
  model: string;
  label: string;
  otherLabel: string;
  tokens: { surface: string; kind: string }[];
  pristine: string[];
  stack: StackRecord[];
  probability: number;
  logit: number;
  prediction: string;
}

export interface RecordedReply {
  method: string;
  path: string;
  status: number;
  body: string;
}

const PUNCT = /^[.,!?;:]$/;

export class FakeService {
  readonly recorded: RecordedReply[] = [];
  /** Set to make the next routed request fail once with this reply. */
  failNext: { status: number; detail: string } | null = null;

  private readonly well = new NumberWell();
  private readonly sessions = new Map<string, FakeSession>();
  private counter = 0;

  readonly transport: Transport = (method, path, body) => {
    const reply =
      this.failNext !== null
        ? this.json(this.failNext.status, { detail: this.failNext.detail })
        : this.route(method, path, body);
    this.failNext = null;
    this.recorded.push({ method, path, status: reply.status, body: reply.body });
    return Promise.resolve(reply);
  };

  /** Every numeric value that appeared in any recorded response body. */
  numbers(): number[] {
    const out: number[] = [];
    const walk = (value: unknown): void => {
      if (typeof value === "number") {
        out.push(value);
      } else if (Array.isArray(value)) {
        value.forEach(walk);
      } else if (value !== null && typeof value === "object") {
        Object.values(value).forEach(walk);
      }
    };
    for (const reply of this.recorded) {
      for (const line of reply.body.split("\n")) {
        const trimmed = line.trim();
        if (trimmed) walk(JSON.parse(trimmed));
      }
    }
    return out;
  }

  lastReply(): unknown {
    const reply = this.recorded[this.recorded.length - 1];
    if (!reply) throw new Error("no traffic recorded");
    return JSON.parse(reply.body);
  }

  callsTo(method: string, pathPrefix: string): RecordedReply[] {
    return this.recorded.filter(
      (r) => r.method === method && r.path.startsWith(pathPrefix),
    );
  }

  private json(status: number, payload: unknown): HttpReply {
    return { status, body: JSON.stringify(payload) };
  }

  private scored(sess: FakeSession): Record<string, unknown> {
    return {
      v: 1,
      session: sess.id,
      model: sess.model,
      label: sess.label,
      tokens: sess.tokens.map((t) => ({ ...t })),
      prediction: sess.prediction,
      logit: sess.logit,
      probability: sess.probability,
      flipped: sess.prediction !== sess.label,
      edit_count: sess.stack.length,
    };
  }

  /** Moves the session to a fresh invented prediction state. */
  private advance(sess: FakeSession, flipped: boolean): void {
    sess.logit = this.well.next01() * 8 - 4;
    sess.probability = this.well.next01();
    sess.prediction = flipped ? sess.otherLabel : sess.label;
  }

  private route(method: string, path: string, body: unknown): HttpReply {
    if (method === "GET" && path === "/health") {
      return this.json(200, {
        v: 1,
        models: ["sub"],
        default_model: "sub",
        sessions: this.sessions.size,
        generators_available: {
          leet: true,
          flip: true,
          space: true,
          ws: true,
          mb: false,
          db: false,
        },
      });
    }
    if (method === "POST" && path === "/session") {
      return this.createSession(body as { text: string; label: string; model?: string });
    }
    const match = /^\/session\/([^/?]+)(.*)$/.exec(path);
    if (!match) return this.json(404, { detail: `no route ${path}` });
    const sess = this.sessions.get(match[1]!);
    if (!sess) return this.json(404, { detail: "unknown session" });
    const rest = match[2]!;

    if (method === "GET" && rest === "") return this.json(200, this.scored(sess));
    if (method === "GET" && rest === "/importance") return this.importance(sess);
    if (method === "GET" && rest.startsWith("/candidates")) {
      return this.candidates(sess, rest);
    }
    if (method === "POST" && rest === "/edit") {
      return this.edit(sess, body as { position: number; surface: string });
    }
    if (method === "POST" && rest === "/revert") return this.revert(sess);
    if (method === "POST" && rest === "/auto") {
      return this.auto(sess, body as { generator: string; mode?: string });
    }
    if (method === "GET" && rest === "/export") return this.exportSession(sess);
    if (method === "DELETE" && rest === "") {
      this.sessions.delete(sess.id);
      return this.json(200, { v: 1, dropped: sess.id });
    }
    return this.json(404, { detail: `no route ${path}` });
  }

  private createSession(body: { text: string; label: string; model?: string }): HttpReply {
    const surfaces = body.text.split(/\s+/).filter((s) => s.length > 0);
    if (surfaces.length === 0) {
      return this.json(400, { detail: "text produced no tokens" });
    }
    this.counter += 1;
    const sess: FakeSession = {
      id: `s${this.counter}`,
      model: body.model ?? "sub",
      label: body.label,
      otherLabel: body.label === "a" ? "b" : "a",
      tokens: surfaces.map((s) => ({
        surface: s.toLowerCase(),
        kind: PUNCT.test(s) ? "punct" : "word",
      })),
      pristine: surfaces.map((s) => s.toLowerCase()),
      stack: [],
      probability: 0,
      logit: 0,
      prediction: body.label,
    };
    this.advance(sess, false);
    this.sessions.set(sess.id, sess);
    return this.json(201, this.scored(sess));
  }

  private importance(sess: FakeSession): HttpReply {
    let firstWord = true;
    const scores = sess.tokens.map((t, i) => {
      let score = 0;
      if (t.kind === "word") {
        // The first word scores exactly zero so the uncolored-bin case is
        // always exercised; signs alternate to exercise magnitude binning.
        score = firstWord ? 0 : (this.well.next01() - 0.5) * 2;
        firstWord = false;
      }
      return {
        position: i,
        surface: t.surface,
        score,
        attackable: t.kind === "word",
      };
    });
    const order = scores
      .filter((s) => s.attackable)
      .sort((a, b) => Math.abs(b.score) - Math.abs(a.score))
      .map((s) => s.position);
    return this.json(200, {
      v: 1,
      session: sess.id,
      edit_count: sess.stack.length,
      scores,
      order,
      prediction: sess.prediction,
    });
  }

  private candidates(sess: FakeSession, rest: string): HttpReply {
    const query = new URLSearchParams(rest.split("?")[1] ?? "");
    const position = Number(query.get("position"));
    if (!Number.isInteger(position) || position < 0 || position >= sess.tokens.length) {
      return this.json(400, { detail: `position ${query.get("position")} out of range` });
    }
    const token = sess.tokens[position]!;
    if (token.kind !== "word") {
      return this.json(400, { detail: `token at ${position} is not a word` });
    }
    const invent = (surface: string, generatorScore: number, flips: boolean) => ({
      surface,
      source: query.get("generator") ?? "ws",
      generator_score: generatorScore,
      logit: this.well.next01() * 8 - 4,
      probability: this.well.next01(),
      delta_probability: (this.well.next01() - 0.5) / 2,
      delta_logit: (this.well.next01() - 0.5) * 2,
      flips,
    });
    // Deliberately not alphabetical and not sorted by any field: the menu
    // must preserve exactly this order.
    const candidates = [
      invent("veiled", 0.91, false),
      {
        surface: token.surface,
        source: query.get("generator") ?? "ws",
        generator_score: 1.0,
        logit: sess.logit,
        probability: sess.probability,
        delta_probability: 0,
        delta_logit: 0,
        flips: sess.prediction !== sess.label,
      },
      invent("masked", 0.63, true),
      invent("cloaked", 0.42, false),
    ];
    return this.json(200, {
      v: 1,
      session: sess.id,
      position,
      original: token.surface,
      base_logit: sess.logit,
      candidates,
    });
  }

  private edit(sess: FakeSession, body: { position: number; surface: string }): HttpReply {
    if (!Number.isInteger(body.position) || body.position < 0 || body.position >= sess.tokens.length) {
      return this.json(400, { detail: `position ${body.position} out of range` });
    }
    const surface = body.surface.trim().toLowerCase();
    if (!surface) return this.json(400, { detail: "replacement surface must be a word" });
    const record: StackRecord = {
      position: body.position,
      before: sess.pristine[body.position]!,
      after: surface,
      preProbability: sess.probability,
      preLogit: sess.logit,
      prePrediction: sess.prediction,
    };
    sess.tokens[body.position]!.surface = surface;
    sess.stack = sess.stack.filter((r) => r.position !== body.position);
    sess.stack.push(record);
    this.advance(sess, sess.stack.length >= 2);
    const state = this.scored(sess);
    state.edit = { position: record.position, before: record.before, after: record.after };
    return this.json(200, state);
  }

  private revert(sess: FakeSession): HttpReply {
    const record = sess.stack.pop();
    if (!record) return this.json(400, { detail: "nothing to revert" });
    sess.tokens[record.position]!.surface = record.before;
    // Restoring the snapshot mirrors the real service, where reverting the
    // document makes the recomputed logits bit-equal to the pre-edit ones.
    sess.probability = record.preProbability;
    sess.logit = record.preLogit;
    sess.prediction = record.prePrediction;
    const state = this.scored(sess);
    state.reverted = {
      position: record.position,
      before: record.after,
      after: record.before,
    };
    return this.json(200, state);
  }

  private auto(sess: FakeSession, body: { generator: string; mode?: string }): HttpReply {
    const words = sess.tokens
      .map((t, i) => ({ ...t, position: i }))
      .filter((t) => t.kind === "word")
      .slice(0, 2);
    const lines: unknown[] = [
      {
        v: 1,
        type: "start",
        session: sess.id,
        generator: body.generator,
        mode: body.mode ?? "loop_nocheck",
      },
    ];
    words.forEach((word, i) => {
      lines.push({
        v: 1,
        type: "edit",
        position: word.position,
        original: word.surface,
        replacement: `auto${i}`,
        logit: i === 0 ? this.well.next01() * 8 - 4 : null,
        probability: i === 0 ? this.well.next01() : null,
        flipped: i > 0,
      });
    });
    lines.push({
      v: 1,
      type: "done",
      flipped: true,
      final_logit: this.well.next01() * 8 - 4,
      final_probability: this.well.next01(),
      queries: 17,
      edit_count: words.length,
      skipped_positions: [],
      text: sess.tokens.map((t) => t.surface).join(" "),
    });
    return {
      status: 200,
      body: lines.map((l) => JSON.stringify(l)).join("\n") + "\n",
    };
  }

  private exportSession(sess: FakeSession): HttpReply {
    const edits = sess.tokens
      .map((t, i) => ({ position: i, before: sess.pristine[i]!, after: t.surface }))
      .filter((e) => e.before !== e.after);
    const state = this.scored(sess);
    state.original_text = sess.pristine.join(" ");
    state.text = sess.tokens.map((t) => t.surface).join(" ");
    state.edits = edits;
    state.meteor = this.well.next01();
    state.change_rate = this.well.next01();
    return this.json(200, state);
  }
}
