/**
 * Browser wiring for the advisor page.
 *
 * This module is deliberately thin: it moves values between service
 * responses and DOM nodes, and forwards clicks to the session, panel and
 * wizard objects. Any number on screen was computed by the service; the
 * only arithmetic here is scaling sparkline points into the SVG viewBox.
 */

import { AdvisorClient, ApiError } from "./api.js";
import { currency, fixed2, gigabytes, rawValue } from "./format.js";
import { DecisionPanel } from "./panel.js";
import { cumulativeUsage, pollIntervalMs, SessionView } from "./session.js";
import { ElicitationWizard } from "./wizard.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

/** Write a number with two decimals shown and the raw value on hover. */
function setNumber(node: HTMLElement, value: number, unit: "gb" | "money"): void {
  node.textContent = unit === "gb" ? gigabytes(value) : currency(value);
  node.title = rawValue(value);
}

function setNote(node: HTMLElement, text: string | null): void {
  node.textContent = text ?? "";
  node.hidden = text === null;
}

interface Controls {
  client: AdvisorClient;
  session: SessionView;
  panel: DecisionPanel;
  wizard: ElicitationWizard;
}

let controls: Controls | null = null;
let pollTimer: number | null = null;

function connect(): void {
  const baseUrl = el<HTMLInputElement>("base-url").value.replace(/\/$/, "");
  const accountId = el<HTMLInputElement>("account-id").value.trim();
  if (accountId === "") {
    setNote(el("connect-note"), "enter an account id");
    return;
  }
  const client = new AdvisorClient(baseUrl);
  controls = {
    client,
    session: new SessionView(client, accountId),
    panel: new DecisionPanel(client, accountId),
    wizard: new ElicitationWizard(client, accountId),
  };
  setNote(el("connect-note"), null);
  el("dashboard").hidden = false;
  renderWizard();
  void refresh();
  if (pollTimer !== null) {
    window.clearInterval(pollTimer);
  }
  pollTimer = window.setInterval(() => void refresh(), pollIntervalMs(1));
}

async function refresh(): Promise<void> {
  if (controls === null) return;
  try {
    const snapshot = await controls.session.refresh();

    if (snapshot.market !== null) {
      setNumber(el("ask"), snapshot.market.min_sell_price, "money");
      setNumber(el("bid"), snapshot.market.max_buy_price, "money");
    } else {
      el("ask").textContent = "—";
      el("bid").textContent = "—";
    }
    setNote(el("market-note"), snapshot.marketNote);

    setNumber(el("quota"), snapshot.ledger.quota, "gb");
    el("day").textContent = String(snapshot.ledger.day);
    el("cycle-length").textContent = String(snapshot.ledger.cycle_length);
    drawSparkline(snapshot.ledger.usage, snapshot.ledger.initial_quota);

    setNumber(el("beta"), snapshot.profile.beta, "money");
    setNumber(el("lam"), snapshot.profile.lam, "money");
    setNumber(el("mu"), snapshot.profile.mu, "money");
    el("reference").textContent = snapshot.profile.reference;

    if (snapshot.recommendation !== null) {
      const rec = snapshot.recommendation;
      const verb =
        rec.role === "buy" ? "Buy" : rec.role === "sell" ? "Sell" : "Hold — no trade today";
      el("advice").textContent =
        rec.role === "none"
          ? verb
          : `${verb} ${fixed2(rec.quantity)} GB at ${fixed2(
              rec.role === "buy" ? rec.quote.min_sell_price : rec.quote.max_buy_price,
            )} (utility ${fixed2(rec.utility)})`;
      el("advice").title = `quantity ${rawValue(rec.quantity)}, utility ${rawValue(rec.utility)}`;
      // Keep the panel's held copy in step with what is on screen.
      await controls.panel.refresh();
    } else {
      el("advice").textContent = snapshot.recommendationNote ?? "";
      el("advice").title = "";
    }

    renderLedger(snapshot.ledger.trades);
  } catch (err) {
    setNote(el("connect-note"), err instanceof Error ? err.message : String(err));
  }
}

function drawSparkline(usage: readonly number[], initialQuota: number): void {
  const svg = el<HTMLElement>("usage-spark");
  const totals = cumulativeUsage(usage);
  if (totals.length === 0) {
    svg.innerHTML = "";
    return;
  }
  const last = totals[totals.length - 1] ?? 0;
  const top = Math.max(initialQuota, last, 1e-9);
  const width = 120;
  const height = 32;
  const step = totals.length > 1 ? width / (totals.length - 1) : width;
  const points = totals
    .map((total, i) => `${(i * step).toFixed(1)},${(height - (total / top) * height).toFixed(1)}`)
    .join(" ");
  svg.innerHTML = `<polyline points="${points}" fill="none" stroke="currentColor" stroke-width="1.5" />`;
}

function renderLedger(trades: readonly { day: number; quantity: number; price: number }[]): void {
  const body = el<HTMLElement>("trades-body");
  body.innerHTML = "";
  for (const trade of trades) {
    const row = document.createElement("tr");
    const cells = [
      String(trade.day),
      gigabytes(trade.quantity),
      currency(trade.price),
    ];
    const raws = ["", rawValue(trade.quantity), rawValue(trade.price)];
    cells.forEach((text, i) => {
      const cell = document.createElement("td");
      cell.textContent = text;
      const raw = raws[i];
      if (raw) cell.title = raw;
      row.appendChild(cell);
    });
    body.appendChild(row);
  }
}

async function acceptTrade(): Promise<void> {
  if (controls === null) return;
  try {
    const receipt = await controls.panel.accept();
    setNote(
      el("panel-note"),
      `traded ${fixed2(receipt.quantity)} GB at ${fixed2(receipt.price)}; quota is now ${fixed2(receipt.quota)} GB`,
    );
    await refresh();
  } catch (err) {
    if (err instanceof ApiError && err.code === "over_quota") {
      setNote(
        el("panel-note"),
        "That sale exceeds the quota you hold — the market may have moved. Refresh and accept the new advice.",
      );
      await refresh();
    } else {
      setNote(el("panel-note"), err instanceof Error ? err.message : String(err));
    }
  }
}

function dismiss(): void {
  if (controls === null) return;
  controls.panel.dismiss();
  setNote(el("panel-note"), "dismissed — nothing was traded");
}

async function runWhatIf(): Promise<void> {
  if (controls === null) return;
  const quantity = Number(el<HTMLInputElement>("whatif-qty").value);
  if (!Number.isFinite(quantity)) {
    el("whatif-out").textContent = "enter a quantity in GB";
    return;
  }
  try {
    const answer = await controls.panel.whatIf(quantity);
    el("whatif-out").textContent =
      `buy ${fixed2(answer.utilities.buy)} · sell ${fixed2(answer.utilities.sell)} · ` +
      `hold ${fixed2(answer.utilities.none)}`;
    el("whatif-out").title =
      `buy ${rawValue(answer.utilities.buy)}, sell ${rawValue(answer.utilities.sell)}, ` +
      `hold ${rawValue(answer.utilities.none)}`;
  } catch (err) {
    el("whatif-out").textContent = err instanceof Error ? err.message : String(err);
  }
}

function renderWizard(): void {
  if (controls === null) return;
  const wizard = controls.wizard;
  el("wizard-prompt").textContent = wizard.prompt();
  setNote(el("wizard-error"), wizard.error);
  const answering = wizard.currentStep === "buy-question" || wizard.currentStep === "sell-question";
  el<HTMLInputElement>("wizard-input").hidden = !answering;
  el<HTMLButtonElement>("wizard-answer-btn").hidden = !answering;
  el<HTMLButtonElement>("wizard-back-btn").hidden = wizard.currentStep === "buy-question";
  el<HTMLButtonElement>("wizard-submit-btn").hidden = wizard.currentStep !== "review";
  if (wizard.currentStep === "review") {
    const { buyPrice, sellPrice } = wizard.answers;
    el("wizard-result").textContent =
      `buy at ${fixed2(buyPrice ?? 0)}, sell at ${fixed2(sellPrice ?? 0)}`;
  }
}

function wizardAnswer(): void {
  if (controls === null) return;
  const input = el<HTMLInputElement>("wizard-input");
  if (controls.wizard.answer(input.value)) {
    input.value = "";
  }
  renderWizard();
}

async function wizardSubmit(): Promise<void> {
  if (controls === null) return;
  try {
    const estimate = await controls.wizard.submit();
    el("wizard-result").textContent =
      `estimated β ${fixed2(estimate.beta)}, λ ${fixed2(estimate.lam)} ` +
      `(from ${estimate.days_used} day${estimate.days_used === 1 ? "" : "s"})`;
    el("wizard-result").title = `beta ${rawValue(estimate.beta)}, lambda ${rawValue(estimate.lam)}`;
    // The profile changed server-side; pull everything fresh, advice included.
    await refresh();
  } catch {
    // the wizard already carries the service's message
  }
  renderWizard();
}

function main(): void {
  el<HTMLButtonElement>("connect-btn").addEventListener("click", connect);
  el<HTMLButtonElement>("accept-btn").addEventListener("click", () => void acceptTrade());
  el<HTMLButtonElement>("dismiss-btn").addEventListener("click", dismiss);
  el<HTMLButtonElement>("whatif-btn").addEventListener("click", () => void runWhatIf());
  el<HTMLButtonElement>("wizard-answer-btn").addEventListener("click", wizardAnswer);
  el<HTMLButtonElement>("wizard-back-btn").addEventListener("click", () => {
    controls?.wizard.back();
    renderWizard();
  });
  el<HTMLButtonElement>("wizard-submit-btn").addEventListener("click", () => void wizardSubmit());
  // Concurrent tabs resolve by last write wins on the service; catch up
  // whenever this tab comes back into focus.
  window.addEventListener("focus", () => void refresh());
}

main();
