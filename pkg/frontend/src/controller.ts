// Glue between the API client, the pure state machine, and the renderer.
// One decision in flight at a time: controls are disabled while a request
// runs, matching the service's one-pending-decision protocol.

import { ServiceError, type SessionClient } from "./api.js";
import {
  decisionAcknowledged,
  initialState,
  observationRevealed,
  resultLoaded,
  sessionStarted,
  withError,
  type UiSessionState,
} from "./state.js";
import { render, type Handlers } from "./ui.js";

function describe(err: unknown): string {
  if (err instanceof ServiceError) {
    return err.status === 0 ? "Service unreachable — is the server running?" : err.message;
  }
  return String(err);
}

export class GameController {
  state: UiSessionState = initialState();
  busy = false;
  private revealShownAt = 0;

  constructor(
    private api: SessionClient,
    private root: HTMLElement,
  ) {}

  private handlers: Handlers = {
    onStart: (n) => void this.start(n),
    onChoice: (choice) => void this.choose(choice),
    onReset: () => this.reset(),
  };

  render(): void {
    render(this.root, this.state, this.handlers, this.busy);
  }

  async start(n: number, seed?: number): Promise<void> {
    if (this.busy || this.state.phase !== "idle") return;
    this.busy = true;
    this.render();
    try {
      const created = await this.api.createSession(n, seed);
      this.state = sessionStarted(this.state, created.session_id, created.n);
      await this.reveal();
    } catch (err) {
      this.state = withError(initialState(), describe(err)); // no phantom session
    } finally {
      this.busy = false;
      this.render();
    }
  }

  private async reveal(): Promise<void> {
    const payload = await this.api.next(this.state.sessionId as string);
    this.state = observationRevealed(this.state, payload);
    this.revealShownAt = performance.now();
  }

  async choose(choice: "stop" | "pass"): Promise<void> {
    if (this.busy || this.state.phase !== "awaiting_decision") return;
    this.busy = true;
    this.render();
    const latency = Math.max(0, performance.now() - this.revealShownAt);
    try {
      const ack = await this.api.decide(this.state.sessionId as string, choice, latency);
      this.state = decisionAcknowledged(this.state, ack.finalized);
      if (ack.finalized) {
        // only now is /result permitted
        this.state = resultLoaded(this.state, await this.api.result(this.state.sessionId as string));
      } else {
        await this.reveal();
      }
    } catch (err) {
      this.state = withError(this.state, describe(err));
    } finally {
      this.busy = false;
      this.render();
    }
  }

  reset(): void {
    if (this.busy) return;
    this.state = initialState();
    this.render();
  }
}
