// Pure session-state machine mirroring the service protocol. Transitions
// throw on anything the protocol forbids, so a UI bug cannot silently
// desynchronise from the server.

import type { ResultPayload, RevealPayload } from "./api.js";

export type Phase = "idle" | "awaiting_reveal" | "awaiting_decision" | "done";

export interface RevealedRow {
  step: number;
  value: string | null;
  isCandidate: boolean;
}

export interface UiSessionState {
  sessionId: string | null;
  n: number;
  revealed: RevealedRow[];
  cursor: number;
  phase: Phase;
  result: ResultPayload | null;
  error: string | null;
}

export class ProtocolViolation extends Error {}

export function initialState(): UiSessionState {
  return {
    sessionId: null,
    n: 0,
    revealed: [],
    cursor: 0,
    phase: "idle",
    result: null,
    error: null,
  };
}

export function sessionStarted(state: UiSessionState, sessionId: string, n: number): UiSessionState {
  if (state.phase !== "idle") throw new ProtocolViolation(`cannot start in phase ${state.phase}`);
  return { ...initialState(), sessionId, n, phase: "awaiting_reveal" };
}

export function observationRevealed(state: UiSessionState, payload: RevealPayload): UiSessionState {
  if (state.phase !== "awaiting_reveal") {
    throw new ProtocolViolation(`reveal out of phase ${state.phase}`);
  }
  if (payload.step !== state.cursor + 1) {
    throw new ProtocolViolation(`reveal step ${payload.step}, expected ${state.cursor + 1}`);
  }
  const row: RevealedRow = {
    step: payload.step,
    value: payload.value,
    isCandidate: payload.is_candidate,
  };
  return {
    ...state,
    revealed: [...state.revealed, row],
    cursor: state.cursor + 1,
    phase: "awaiting_decision",
  };
}

export function decisionAcknowledged(state: UiSessionState, finalized: boolean): UiSessionState {
  if (state.phase !== "awaiting_decision") {
    throw new ProtocolViolation(`decision out of phase ${state.phase}`);
  }
  return { ...state, phase: finalized ? "done" : "awaiting_reveal" };
}

export function resultLoaded(state: UiSessionState, result: ResultPayload): UiSessionState {
  if (state.phase !== "done") throw new ProtocolViolation(`result out of phase ${state.phase}`);
  return { ...state, result };
}

export function withError(state: UiSessionState, message: string): UiSessionState {
  return { ...state, error: message };
}

/** Recompute a row's candidate badge from the revealed prefix alone.
 *  Decimal-string comparison via BigInt: values overflow doubles. */
export function isRelativeMax(rows: RevealedRow[], step: number): boolean | null {
  const prefix = rows.filter((row) => row.step <= step);
  const target = prefix.find((row) => row.step === step);
  if (!target || target.value === null || prefix.some((row) => row.value === null)) {
    return null; // flags-only sessions cannot recompute
  }
  const value = BigInt(target.value);
  return prefix.every((row) => row.step === step || BigInt(row.value as string) < value);
}

/** Structural invariants used by the test-suite after every transition. */
export function checkInvariants(state: UiSessionState): void {
  if (state.revealed.length !== state.cursor) {
    throw new ProtocolViolation("revealed.length must equal cursor");
  }
  if (state.revealed.some((row, index) => row.step !== index + 1)) {
    throw new ProtocolViolation("revealed rows must be dense and ordered");
  }
  if (state.cursor > state.n && state.n > 0) {
    throw new ProtocolViolation("cursor beyond horizon");
  }
  if (state.result !== null && state.phase !== "done") {
    throw new ProtocolViolation("result only in done phase");
  }
}
