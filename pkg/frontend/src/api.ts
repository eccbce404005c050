/**
 * Typed client for the rewriting service's JSON endpoints.
 *
 * The transport is injectable so tests can intercept traffic; the browser
 * entry point wraps `fetch`. All requests go through a queue that keeps at
 * most one in flight at a time (one session per tab), later calls starting
 * only after earlier ones settle, in arrival order.
 */

export interface HttpReply {
  status: number;
  body: string;
}

export type Transport = (
  method: string,
  path: string,
  body?: unknown,
) => Promise<HttpReply>;

export interface TokenView {
  surface: string;
  kind: string;
}

/** Prediction snapshot returned by every state-changing endpoint. */
export interface ScoredState {
  v: number;
  session: string;
  model: string;
  label: string;
  tokens: TokenView[];
  prediction: string;
  logit: number;
  probability: number;
  flipped: boolean;
  edit_count: number;
}

export interface EditDetail {
  position: number;
  before: string;
  after: string;
}

export interface EditResponse extends ScoredState {
  edit: EditDetail;
}

export interface RevertResponse extends ScoredState {
  reverted: EditDetail;
}

export interface ImportanceEntry {
  position: number;
  surface: string;
  score: number;
  attackable: boolean;
}

export interface ImportanceResponse {
  v: number;
  session: string;
  edit_count: number;
  scores: ImportanceEntry[];
  order: number[];
  prediction: string;
}

export interface Candidate {
  surface: string;
  source: string;
  generator_score: number | null;
  logit: number;
  probability: number;
  delta_logit: number;
  delta_probability: number;
  flips: boolean;
}

export interface CandidatesResponse {
  v: number;
  session: string;
  position: number;
  original: string;
  base_logit: number;
  candidates: Candidate[];
}

export interface AutoStart {
  type: "start";
  session: string;
  generator: string;
  mode: string;
}

export interface AutoEditEvent {
  type: "edit";
  position: number;
  original: string;
  replacement: string;
  logit: number | null;
  probability: number | null;
  flipped: boolean;
}

export interface AutoDone {
  type: "done";
  flipped: boolean;
  final_logit: number;
  final_probability: number;
  queries: number;
  edit_count: number;
  skipped_positions: number[];
  text: string;
}

export type AutoEvent = AutoStart | AutoEditEvent | AutoDone;

export interface AutoRequest {
  generator: string;
  mode?: string;
  k_targets?: number;
  top_k?: number;
  n_synonyms?: number;
  delta?: number;
  dropout_p?: number;
  rerank?: string;
  seed?: number;
}

export interface ExportEdit {
  position: number;
  before: string;
  after: string;
}

export interface ExportResponse extends ScoredState {
  original_text: string;
  text: string;
  edits: ExportEdit[];
  meteor: number;
  change_rate: number;
}

export interface HealthResponse {
  v: number;
  models: string[];
  default_model: string;
  sessions: number;
  generators_available: Record<string, boolean>;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

const ignore = () => undefined;

/**
 * Serializes asynchronous work: each task starts only after every earlier
 * task has settled. A rejected task does not wedge the queue.
 */
export class RequestQueue {
  private tail: Promise<unknown> = Promise.resolve();

  run<T>(task: () => Promise<T>): Promise<T> {
    const next = this.tail.then(task, task);
    this.tail = next.then(ignore, ignore);
    return next;
  }
}

function detailOf(reply: HttpReply): string {
  try {
    const parsed: unknown = JSON.parse(reply.body);
    if (
      parsed !== null &&
      typeof parsed === "object" &&
      "detail" in parsed &&
      typeof (parsed as { detail: unknown }).detail === "string"
    ) {
      return (parsed as { detail: string }).detail;
    }
  } catch {
    // Not JSON; fall through to the raw body.
  }
  return reply.body || `service responded ${reply.status}`;
}

/** Splits an application/x-ndjson body into its parsed events. */
export function parseAutoStream(body: string): AutoEvent[] {
  const events: AutoEvent[] = [];
  for (const line of body.split("\n")) {
    const trimmed = line.trim();
    if (trimmed) events.push(JSON.parse(trimmed) as AutoEvent);
  }
  return events;
}

export class ServiceClient {
  private readonly queue = new RequestQueue();

  constructor(private readonly transport: Transport) {}

  private request<T>(method: string, path: string, body?: unknown): Promise<T> {
    return this.queue.run(async () => {
      const reply = await this.transport(method, path, body);
      if (reply.status < 200 || reply.status >= 300) {
        throw new ServiceError(reply.status, detailOf(reply));
      }
      return JSON.parse(reply.body) as T;
    });
  }

  health(): Promise<HealthResponse> {
    return this.request("GET", "/health");
  }

  createSession(
    text: string,
    label: string,
    model?: string,
  ): Promise<ScoredState> {
    const body: Record<string, unknown> = { text, label };
    if (model !== undefined) body.model = model;
    return this.request("POST", "/session", body);
  }

  state(sid: string): Promise<ScoredState> {
    return this.request("GET", `/session/${sid}`);
  }

  importance(sid: string): Promise<ImportanceResponse> {
    return this.request("GET", `/session/${sid}/importance`);
  }

  candidates(
    sid: string,
    position: number,
    generator: string,
    limit: number,
  ): Promise<CandidatesResponse> {
    const query = `position=${position}&generator=${encodeURIComponent(generator)}&limit=${limit}`;
    return this.request("GET", `/session/${sid}/candidates?${query}`);
  }

  edit(sid: string, position: number, surface: string): Promise<EditResponse> {
    return this.request("POST", `/session/${sid}/edit`, { position, surface });
  }

  revert(sid: string): Promise<RevertResponse> {
    return this.request("POST", `/session/${sid}/revert`);
  }

  /** Runs the automatic attack; the stream is buffered and parsed whole. */
  async auto(sid: string, request: AutoRequest): Promise<AutoEvent[]> {
    return this.queue.run(async () => {
      const reply = await this.transport(
        "POST",
        `/session/${sid}/auto`,
        request,
      );
      if (reply.status < 200 || reply.status >= 300) {
        throw new ServiceError(reply.status, detailOf(reply));
      }
      return parseAutoStream(reply.body);
    });
  }

  exportSession(sid: string): Promise<ExportResponse> {
    return this.request("GET", `/session/${sid}/export`);
  }

  drop(sid: string): Promise<void> {
    return this.request("DELETE", `/session/${sid}`);
  }
}
