/**
 * Indifference-price elicitation wizard.
 *
 * A linear two-question flow, kept free of DOM concerns so the state
 * machine is unit-testable on its own. Each answer is validated locally
 * (a price must lie strictly between 0 and the overage rate) before
 * anything leaves the page; an invalid answer keeps the wizard on the
 * same question with an inline message and posts nothing. Only the final
 * submit talks to the service, which does all the estimation.
 */

import { ApiError, EstimateAnswer } from "./api.js";

/** The one service call the wizard needs; AdvisorClient satisfies this. */
export interface ElicitationPoster {
  submitIndifferencePrices(
    accountId: string,
    buyPrice: number,
    sellPrice: number,
  ): Promise<EstimateAnswer>;
}

export type WizardStep = "buy-question" | "sell-question" | "review" | "done";

const PROMPTS: Record<WizardStep, string> = {
  "buy-question":
    "At what price per GB would you just be willing to buy enough data to cover your worst-case month?",
  "sell-question":
    "At what price per GB would you just be willing to sell the data you may not end up needing?",
  review: "Send these two prices to the advisor?",
  done: "Profile updated.",
};

export class ElicitationWizard {
  private step: WizardStep = "buy-question";
  private buyPrice: number | null = null;
  private sellPrice: number | null = null;
  private inlineError: string | null = null;
  private outcome: EstimateAnswer | null = null;

  constructor(
    private readonly client: ElicitationPoster,
    private readonly accountId: string,
    private readonly kappa: number = 60,
  ) {}

  get currentStep(): WizardStep {
    return this.step;
  }

  get error(): string | null {
    return this.inlineError;
  }

  get result(): EstimateAnswer | null {
    return this.outcome;
  }

  /** The answers gathered so far, for the review screen. */
  get answers(): { buyPrice: number | null; sellPrice: number | null } {
    return { buyPrice: this.buyPrice, sellPrice: this.sellPrice };
  }

  prompt(): string {
    return PROMPTS[this.step];
  }

  /**
   * Answer the question on screen. Returns true when the answer was
   * accepted and the wizard advanced; false leaves the same question up
   * with `error` set — and nothing has been posted.
   */
  answer(input: string): boolean {
    if (this.step !== "buy-question" && this.step !== "sell-question") {
      this.inlineError = "the wizard is not waiting for an answer";
      return false;
    }
    const parsed = parsePrice(input, this.kappa);
    if (typeof parsed === "string") {
      this.inlineError = parsed;
      return false;
    }
    this.inlineError = null;
    if (this.step === "buy-question") {
      this.buyPrice = parsed;
      this.step = "sell-question";
    } else {
      this.sellPrice = parsed;
      this.step = "review";
    }
    return true;
  }

  /** Step back one question to revise an answer (allowed until submission). */
  back(): void {
    if (this.step === "sell-question") {
      this.step = "buy-question";
      this.inlineError = null;
    } else if (this.step === "review") {
      this.step = "sell-question";
      this.inlineError = null;
    }
  }

  /**
   * Post both answers and record the service's estimate. A service-side
   * rejection (for example, prices no risk profile can explain) surfaces
   * its message verbatim and rewinds to the first question so the answers
   * can be revised.
   */
  async submit(): Promise<EstimateAnswer> {
    if (this.step !== "review" || this.buyPrice === null || this.sellPrice === null) {
      throw new Error("both indifference prices must be answered before submitting");
    }
    try {
      const estimate = await this.client.submitIndifferencePrices(
        this.accountId,
        this.buyPrice,
        this.sellPrice,
      );
      this.outcome = estimate;
      this.step = "done";
      return estimate;
    } catch (err) {
      if (err instanceof ApiError) {
        this.inlineError = err.message;
        this.step = "buy-question";
      }
      throw err;
    }
  }
}

function parsePrice(input: string, kappa: number): number | string {
  const trimmed = input.trim();
  if (trimmed === "") {
    return "enter a price";
  }
  const price = Number(trimmed);
  if (!Number.isFinite(price)) {
    return "enter a price as a plain number";
  }
  if (price <= 0) {
    return "the price must be positive";
  }
  if (price >= kappa) {
    return `a price of ${price} is no better than the overage rate ${kappa}; enter a price below ${kappa}`;
  }
  return price;
}
