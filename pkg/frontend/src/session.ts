/**
 * Session state for the advisor page.
 *
 * One refresh pulls everything from the service: profile, ledger, market
 * quote and the current recommendation. The view model never computes a
 * utility or a trade size itself; pieces the service cannot provide yet
 * (no quote posted, fresh account without usage history) are carried as
 * empty slots with the service's own explanation attached, for the page
 * to render as-is.
 */

import {
  ApiError,
  LedgerView,
  MarketQuote,
  Profile,
  Recommendation,
} from "./api.js";

/** The service calls a session refresh makes; AdvisorClient satisfies this. */
export interface SessionClient {
  getProfile(accountId: string): Promise<Profile>;
  getLedger(accountId: string): Promise<LedgerView>;
  getMarket(): Promise<MarketQuote>;
  recommendation(accountId: string, usedToday?: number): Promise<Recommendation>;
}

export interface SessionSnapshot {
  accountId: string;
  profile: Profile;
  ledger: LedgerView;
  market: MarketQuote | null;
  marketNote: string | null;
  recommendation: Recommendation | null;
  recommendationNote: string | null;
}

/** Codes that mean "nothing to show yet", not a failure of the page. */
const EXPECTED_GAPS = new Set(["no_quote", "no_history", "cycle_complete"]);

export class SessionView {
  private snapshot: SessionSnapshot | null = null;

  constructor(
    private readonly client: SessionClient,
    readonly accountId: string,
  ) {}

  get current(): SessionSnapshot | null {
    return this.snapshot;
  }

  /** Pull a fresh snapshot; every field is a service response. */
  async refresh(usedToday = 0): Promise<SessionSnapshot> {
    const [profile, ledger] = await Promise.all([
      this.client.getProfile(this.accountId),
      this.client.getLedger(this.accountId),
    ]);

    let market: MarketQuote | null = null;
    let marketNote: string | null = null;
    try {
      market = await this.client.getMarket();
    } catch (err) {
      marketNote = describeGap(err);
    }

    let recommendation: Recommendation | null = null;
    let recommendationNote: string | null = null;
    try {
      recommendation = await this.client.recommendation(this.accountId, usedToday);
    } catch (err) {
      recommendationNote = describeGap(err);
    }

    this.snapshot = {
      accountId: this.accountId,
      profile,
      ledger,
      market,
      marketNote,
      recommendation,
      recommendationNote,
    };
    return this.snapshot;
  }
}

function describeGap(err: unknown): string {
  if (err instanceof ApiError && EXPECTED_GAPS.has(err.code)) {
    return err.message;
  }
  throw err;
}

/**
 * Polling cadence. The account stores a notification frequency in days;
 * on screen we poll the service rather than wait for a push, scaled so a
 * weekly-notification user produces proportionally less traffic than a
 * daily one.
 */
export function pollIntervalMs(notifyEveryDays: number): number {
  const days = Math.max(1, notifyEveryDays);
  return 5_000 * days;
}

/** Running total of the ledger's usage entries, for the sparkline. */
export function cumulativeUsage(usage: readonly number[]): number[] {
  const out: number[] = [];
  let total = 0;
  for (const used of usage) {
    total += used;
    out.push(total);
  }
  return out;
}
