// Typed client for the session service. Values travel as decimal strings
// end to end: they can be hundreds of digits, so nothing here ever parses
// them into numbers.

export interface SessionCreated {
  session_id: string;
  n: number;
  state: string;
}

export interface RevealPayload {
  step: number;
  value: string | null; // null under the flags-only reveal policy
  is_candidate: boolean;
  n: number;
}

export interface DecisionAck {
  session_id: string;
  n: number;
  state: string;
  cursor: number;
  pending_decision: boolean;
  revealed: RevealPayload[];
  finalized: boolean;
}

export type OutcomeClass = "success" | "wrong_pick" | "no_pick";

export interface Counterfactual {
  threshold: number;
  stop_index: number | null;
  outcome_class: OutcomeClass;
  duration: number;
  payoff: number;
}

export interface ResultPayload {
  session_id: string;
  state: string;
  outcome_class: OutcomeClass;
  stop_index: number | null;
  duration: number;
  payoff: number;
  best_index: number;
  base_a: number;
  values: string[];
  counterfactual: Counterfactual;
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export interface SessionClient {
  createSession(n: number, seed?: number): Promise<SessionCreated>;
  next(sessionId: string): Promise<RevealPayload>;
  decide(sessionId: string, choice: "stop" | "pass", latencyMs: number): Promise<DecisionAck>;
  result(sessionId: string): Promise<ResultPayload>;
}

export class SessionApi implements SessionClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, init);
    } catch (err) {
      throw new ServiceError(0, "unreachable", `service unreachable: ${String(err)}`);
    }
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const code = body && typeof body.error === "string" ? body.error : "unknown";
      const message = body && typeof body.message === "string" ? body.message : response.statusText;
      throw new ServiceError(response.status, code, message);
    }
    return body as T;
  }

  createSession(n: number, seed?: number): Promise<SessionCreated> {
    const payload: Record<string, unknown> = { n };
    if (seed !== undefined) payload.seed = seed;
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  next(sessionId: string): Promise<RevealPayload> {
    return this.request(`/sessions/${sessionId}/next`, { method: "POST" });
  }

  decide(sessionId: string, choice: "stop" | "pass", latencyMs: number): Promise<DecisionAck> {
    return this.request(`/sessions/${sessionId}/decision`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ choice, metadata: { latency_ms: latencyMs } }),
    });
  }

  result(sessionId: string): Promise<ResultPayload> {
    return this.request(`/sessions/${sessionId}/result`);
  }
}
