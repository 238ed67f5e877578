// Typed client for the session service. Every method maps 1:1 to an
// endpoint; nothing here caches or invents board state.

export interface Coord {
  x: number;
  y: number;
}

export interface MaskedView {
  width: number;
  height: number;
  start: Coord;
  goals: Coord[];
  position: Coord;
  available: string[];
  goal_actions: string[];
}

export type Decision = "obey" | "disobey";
export type SessionStatus = "active" | "finished";

export interface ProposeResult {
  decision: Decision;
  feedback: { reason: string } | null;
  observation: MaskedView;
  rewards: { leader: number; follower?: number };
  status: SessionStatus;
  outcome: string | null;
}

export interface SessionCreated {
  session_id: string;
  status: SessionStatus;
  observation: MaskedView;
}

export interface FinishedLog {
  status: "finished";
  outcome: string;
  log: string;
  instance: string;
}

export interface ActiveLog {
  status: "active";
  outcome: null;
  steps: unknown[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details: Record<string, unknown> = {},
  ) {
    super(message);
  }
}

async function unwrap<T>(res: Response): Promise<T> {
  const body = await res.json();
  if (!res.ok) {
    throw new ApiError(
      res.status,
      body.code ?? "http_error",
      body.message ?? `HTTP ${res.status}`,
      body.details ?? {},
    );
  }
  return body as T;
}

export class ApiClient {
  constructor(readonly base: string) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => unwrap<T>(r));
  }

  private get<T>(path: string): Promise<T> {
    return fetch(this.url(path)).then((r) => unwrap<T>(r));
  }

  createInstance(document: string): Promise<{ id: string; document: string }> {
    return this.post("/instances", { document });
  }

  createSession(opts: {
    instance_id: string;
    follower?: string;
    feedback?: boolean;
    seed?: number;
  }): Promise<SessionCreated> {
    return this.post("/sessions", opts);
  }

  propose(sessionId: string, direction: string): Promise<ProposeResult> {
    return this.post(`/sessions/${sessionId}/propose`, { direction });
  }

  observation(sessionId: string): Promise<{
    status: SessionStatus;
    outcome: string | null;
    observation: MaskedView;
  }> {
    return this.get(`/sessions/${sessionId}/observation`);
  }

  log(sessionId: string): Promise<FinishedLog | ActiveLog> {
    return this.get(`/sessions/${sessionId}/log`);
  }
}
