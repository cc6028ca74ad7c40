// DOM rendering: one function per screen, rebuilt from state on every
// change. No framework; the page is a single sequential game.

import type { UiSessionState } from "./state.js";

export interface Handlers {
  onStart: (n: number) => void;
  onChoice: (choice: "stop" | "pass") => void;
  onReset: () => void;
}

const OUTCOME_HEADLINES: Record<string, string> = {
  success: "You picked the overall best!",
  wrong_pick: "Wrong pick — that was not the best value.",
  no_pick: "No pick — the sequence ended without a selection.",
};

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function badge(): HTMLElement {
  return el("span", "badge", "relative best");
}

function errorBanner(message: string): HTMLElement {
  const banner = el("div", "error-banner", message);
  banner.id = "error-banner";
  return banner;
}

function renderStart(root: HTMLElement, state: UiSessionState, handlers: Handlers, busy: boolean): void {
  const screen = el("div", "screen start-screen");
  screen.id = "start-screen";
  screen.appendChild(el("h1", "", "Sequential selection game"));
  screen.appendChild(
    el(
      "p",
      "intro",
      "Values appear one at a time in random order. Stop on the one you believe " +
        "is the overall largest — you cannot go back.",
    ),
  );
  const form = el("div", "start-form");
  const input = el("input", "") as HTMLInputElement;
  input.id = "n-input";
  input.type = "number";
  input.min = "1";
  input.value = "10";
  const button = el("button", "primary", "Start") as HTMLButtonElement;
  button.id = "start-btn";
  button.disabled = busy;
  button.addEventListener("click", () => {
    const n = parseInt(input.value, 10);
    if (Number.isFinite(n) && n >= 1) handlers.onStart(n);
  });
  form.appendChild(input);
  form.appendChild(button);
  screen.appendChild(form);
  if (state.error) screen.appendChild(errorBanner(state.error));
  root.appendChild(screen);
}

function renderHistory(state: UiSessionState): HTMLElement {
  const panel = el("div", "history");
  panel.id = "history";
  panel.appendChild(el("h2", "", "Seen so far"));
  for (const row of state.revealed) {
    const line = el("div", "row");
    line.dataset.step = String(row.step);
    line.appendChild(el("span", "step", `${row.step}.`));
    line.appendChild(el("span", "value-cell", row.value ?? "(hidden)"));
    if (row.isCandidate) line.appendChild(badge());
    panel.appendChild(line);
  }
  return panel;
}

function renderPlay(root: HTMLElement, state: UiSessionState, handlers: Handlers, busy: boolean): void {
  const screen = el("div", "screen play-screen");
  screen.id = "play-screen";
  const header = el("div", "header", `Observation ${state.cursor} of ${state.n}`);
  header.id = "header";
  screen.appendChild(header);

  const current = state.revealed[state.revealed.length - 1];
  const card = el("div", "current-card");
  card.id = "current-card";
  if (current && state.phase === "awaiting_decision") {
    card.appendChild(el("div", "value-cell current-value", current.value ?? "(value hidden)"));
    if (current.isCandidate) card.appendChild(badge());
  } else {
    card.appendChild(el("div", "waiting", "revealing..."));
  }
  screen.appendChild(card);

  const controls = el("div", "controls");
  const disabled = busy || state.phase !== "awaiting_decision";
  const stopButton = el("button", "primary", "Stop here") as HTMLButtonElement;
  stopButton.id = "stop-btn";
  stopButton.disabled = disabled;
  stopButton.addEventListener("click", () => handlers.onChoice("stop"));
  const passButton = el("button", "", "Pass") as HTMLButtonElement;
  passButton.id = "pass-btn";
  passButton.disabled = disabled;
  passButton.addEventListener("click", () => handlers.onChoice("pass"));
  controls.appendChild(stopButton);
  controls.appendChild(passButton);
  screen.appendChild(controls);

  screen.appendChild(renderHistory(state));
  if (state.error) screen.appendChild(errorBanner(state.error));
  root.appendChild(screen);
}

function renderResult(root: HTMLElement, state: UiSessionState, handlers: Handlers, busy: boolean): void {
  const result = state.result;
  const screen = el("div", "screen result-screen");
  screen.id = "result-screen";
  if (!result) {
    screen.appendChild(el("div", "waiting", "scoring..."));
    if (state.error) screen.appendChild(errorBanner(state.error));
    root.appendChild(screen);
    return;
  }
  screen.classList.add(`outcome-${result.outcome_class}`);
  const headline = el("h1", "outcome-headline", OUTCOME_HEADLINES[result.outcome_class] ?? result.outcome_class);
  headline.id = "outcome-headline";
  screen.appendChild(headline);
  screen.appendChild(el("p", "payoff", `Payoff: ${result.payoff}`));

  const disclosure = el("div", "disclosure");
  disclosure.id = "disclosure";
  disclosure.appendChild(el("h2", "", "Full sequence"));
  result.values.forEach((value, index) => {
    const row = el("div", "row");
    row.dataset.step = String(index + 1);
    row.appendChild(el("span", "step", `${index + 1}.`));
    const cell = el("span", "value-cell", value);
    if (index + 1 === result.best_index) {
      cell.classList.add("best");
      row.appendChild(cell);
      row.appendChild(el("span", "badge best-badge", "overall best"));
    } else {
      row.appendChild(cell);
    }
    if (result.stop_index === index + 1) {
      row.appendChild(el("span", "badge picked-badge", "your pick"));
    }
    disclosure.appendChild(row);
  });
  screen.appendChild(disclosure);

  const cf = result.counterfactual;
  const cfText =
    cf.stop_index === null
      ? `The optimal rule (threshold ${cf.threshold}) would not have picked either.`
      : `The optimal rule (threshold ${cf.threshold}) would have stopped at observation ` +
        `${cf.stop_index} (${cf.outcome_class === "success" ? "winning" : "not the best"}).`;
  const counterfactual = el("p", "counterfactual", cfText);
  counterfactual.id = "counterfactual";
  screen.appendChild(counterfactual);

  const again = el("button", "primary", "Play again") as HTMLButtonElement;
  again.id = "reset-btn";
  again.disabled = busy;
  again.addEventListener("click", () => handlers.onReset());
  screen.appendChild(again);
  root.appendChild(screen);
}

export function render(root: HTMLElement, state: UiSessionState, handlers: Handlers, busy: boolean): void {
  root.replaceChildren();
  if (state.phase === "idle") {
    renderStart(root, state, handlers, busy);
  } else if (state.phase === "done") {
    renderResult(root, state, handlers, busy);
  } else {
    renderPlay(root, state, handlers, busy);
  }
}
