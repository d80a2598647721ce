/**
 * Daily recommendation panel.
 *
 * Holds the most recent recommendation fetched from the service and turns
 * the user's choice into the matching API call. Accepting a "buy" places a
 * positive-quantity trade at the market's minimum selling price; accepting
 * a "sell" places a negative quantity at the maximum buying price.
 * Dismissing is purely local — nothing is posted — and the next refresh
 * re-fetches, so the panel never shows stale optimistic state.
 */

import { Recommendation, TradeReceipt, WhatIfAnswer, WhatIfOptions } from "./api.js";

/** The service calls the panel needs; AdvisorClient satisfies this. */
export interface PanelClient {
  recommendation(accountId: string, usedToday?: number): Promise<Recommendation>;
  placeTrade(accountId: string, quantity: number, price: number): Promise<TradeReceipt>;
  whatIf(accountId: string, quantity: number, options?: WhatIfOptions): Promise<WhatIfAnswer>;
}

export class DecisionPanel {
  private latest: Recommendation | null = null;

  constructor(
    private readonly client: PanelClient,
    private readonly accountId: string,
  ) {}

  /** The recommendation currently on screen (most recent service answer). */
  get recommendation(): Recommendation | null {
    return this.latest;
  }

  async refresh(usedToday = 0): Promise<Recommendation> {
    this.latest = await this.client.recommendation(this.accountId, usedToday);
    return this.latest;
  }

  /**
   * Place the recommended trade. Buys are positive quantities paid at the
   * quoted minimum selling price; sells are negative quantities credited
   * at the quoted maximum buying price. The held recommendation is cleared
   * afterwards: the ledger moved, so the next one must be re-fetched.
   */
  async accept(): Promise<TradeReceipt> {
    const rec = this.latest;
    if (rec === null) {
      throw new Error("no recommendation fetched yet");
    }
    if (rec.role === "none" || rec.quantity === 0) {
      throw new Error("the advisor recommends holding; there is no trade to accept");
    }
    const signed = rec.role === "buy" ? rec.quantity : -rec.quantity;
    const price = rec.role === "buy" ? rec.quote.min_sell_price : rec.quote.max_buy_price;
    const receipt = await this.client.placeTrade(this.accountId, signed, price);
    this.latest = null;
    return receipt;
  }

  /** Dismiss without trading. No request is made; nothing changes server-side. */
  dismiss(): void {
    this.latest = null;
  }

  /** Ask the service to value a hypothetical position change. */
  whatIf(quantity: number, options: WhatIfOptions = {}): Promise<WhatIfAnswer> {
    return this.client.whatIf(this.accountId, quantity, options);
  }
}
