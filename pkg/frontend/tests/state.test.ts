import { describe, expect, it } from "vitest";

import type { ResultPayload, RevealPayload } from "../src/api.js";
import {
  ProtocolViolation,
  checkInvariants,
  decisionAcknowledged,
  initialState,
  isRelativeMax,
  observationRevealed,
  resultLoaded,
  sessionStarted,
} from "../src/state.js";

function reveal(step: number, value: string, isCandidate: boolean): RevealPayload {
  return { step, value, is_candidate: isCandidate, n: 5 };
}

const RESULT: ResultPayload = {
  session_id: "s",
  state: "finalized",
  outcome_class: "success",
  stop_index: 2,
  duration: 2,
  payoff: 1,
  best_index: 2,
  base_a: 3,
  values: ["5", "9", "1", "3", "7"],
  counterfactual: { threshold: 2, stop_index: 2, outcome_class: "success", duration: 2, payoff: 1 },
};

describe("phase machine", () => {
  it("walks the full protocol", () => {
    let state = initialState();
    checkInvariants(state);
    state = sessionStarted(state, "abc", 5);
    expect(state.phase).toBe("awaiting_reveal");
    state = observationRevealed(state, reveal(1, "5", true));
    checkInvariants(state);
    expect(state.phase).toBe("awaiting_decision");
    expect(state.cursor).toBe(1);
    state = decisionAcknowledged(state, false);
    expect(state.phase).toBe("awaiting_reveal");
    state = observationRevealed(state, reveal(2, "9", true));
    state = decisionAcknowledged(state, true);
    expect(state.phase).toBe("done");
    state = resultLoaded(state, RESULT);
    checkInvariants(state);
    expect(state.result?.outcome_class).toBe("success");
  });

  it("revealed rows always equal the cursor", () => {
    let state = sessionStarted(initialState(), "abc", 5);
    for (let step = 1; step <= 3; step++) {
      state = observationRevealed(state, reveal(step, String(step), step === 1));
      checkInvariants(state);
      expect(state.revealed.length).toBe(state.cursor);
      state = decisionAcknowledged(state, false);
    }
  });

  it("rejects out-of-order reveals", () => {
    const state = sessionStarted(initialState(), "abc", 5);
    expect(() => observationRevealed(state, reveal(2, "9", true))).toThrow(ProtocolViolation);
  });

  it("rejects protocol-breaking transitions", () => {
    const idle = initialState();
    expect(() => decisionAcknowledged(idle, false)).toThrow(ProtocolViolation);
    expect(() => resultLoaded(idle, RESULT)).toThrow(ProtocolViolation);
    const started = sessionStarted(idle, "abc", 5);
    expect(() => sessionStarted(started, "other", 5)).toThrow(ProtocolViolation);
  });

  it("never holds unrevealed values", () => {
    let state = sessionStarted(initialState(), "abc", 5);
    state = observationRevealed(state, reveal(1, "5", true));
    const serialized = JSON.stringify(state);
    for (const hidden of ["9", "1", "3", "7"]) {
      expect(serialized).not.toContain(`"${hidden}"`);
    }
  });
});

describe("candidate recomputation", () => {
  it("matches running-maximum semantics on big decimal strings", () => {
    const big = (exponent: number) => (10n ** BigInt(exponent)).toString();
    let state = sessionStarted(initialState(), "abc", 5);
    const sequence: Array<[string, boolean]> = [
      [big(40), true],
      ["7", false],
      [big(41), true],
      [big(41 - 1), false],
    ];
    sequence.forEach(([value, flag], index) => {
      state = observationRevealed(state, reveal(index + 1, value, flag));
      expect(isRelativeMax(state.revealed, index + 1)).toBe(flag);
      if (index + 1 < sequence.length) state = decisionAcknowledged(state, false);
    });
  });

  it("returns null when values are hidden", () => {
    let state = sessionStarted(initialState(), "abc", 5);
    state = observationRevealed(state, { step: 1, value: null, is_candidate: true, n: 5 });
    expect(isRelativeMax(state.revealed, 1)).toBeNull();
  });
});
