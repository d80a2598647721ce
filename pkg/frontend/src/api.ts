/**
 * HTTP client for the quota advisor service.
 *
 * This client is the page's single source of numbers: every utility, price
 * and quota rendered on screen is a value that came back from one of these
 * calls. Mutating requests carry a client-generated request id, so a retry
 * after a flaky response (or a double click) is acknowledged with the
 * original result instead of being applied twice.
 */

export interface Profile {
  beta: number;
  lam: number;
  mu: number;
  reference: string;
}

export interface MarketQuote {
  min_sell_price: number;
  max_buy_price: number;
  day: number | null;
}

export interface AccountSettings {
  notify_every_days: number;
}

export interface AccountSummary {
  id: string;
  profile: Profile;
  settings: AccountSettings;
  quota: number;
  day: number;
  cycle_length: number;
  complete: boolean;
}

export interface NewAccount {
  id?: string;
  initial_quota: number;
  cycle_length?: number;
  profile?: Partial<Profile>;
  prior_months?: number[][];
  notify_every_days?: number;
}

export type TradeRole = "buy" | "sell" | "none";

export interface Recommendation {
  role: TradeRole;
  quantity: number;
  utility: number;
  day: number;
  quote: { min_sell_price: number; max_buy_price: number };
}

export interface TradeReceipt {
  day: number;
  quantity: number;
  price: number;
  quota: number;
}

export interface UsageReceipt {
  day: number;
  quota: number;
  complete: boolean;
  profit: number | null;
}

export interface WhatIfAnswer {
  quantity: number;
  quota: number;
  utilities: { buy: number; sell: number; none: number };
}

export interface EstimateAnswer {
  beta: number;
  lam: number;
  days_used: number;
  skipped: { day: number; reason: string }[];
}

export interface LedgerTrade {
  day: number;
  quantity: number;
  price: number;
}

export interface LedgerView {
  initial_quota: number;
  cycle_length: number;
  quota: number;
  day: number;
  trades: LedgerTrade[];
  usage: number[];
  profit: number | null;
}

export interface WhatIfOptions {
  usedToday?: number;
  minSellPrice?: number;
  maxBuyPrice?: number;
}

/** Error carrying the service's machine-readable code alongside the text. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AdvisorClient {
  private readonly fetchImpl: FetchLike;
  private readonly newRequestId: () => string;

  constructor(
    readonly baseUrl: string,
    fetchImpl?: FetchLike,
    newRequestId?: () => string,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
    this.newRequestId = newRequestId ?? (() => crypto.randomUUID());
  }

  // -- market -------------------------------------------------------------

  getMarket(): Promise<MarketQuote> {
    return this.request("GET", "/market");
  }

  setMarket(minSellPrice: number, maxBuyPrice: number): Promise<MarketQuote> {
    return this.request("PUT", "/market", {
      min_sell_price: minSellPrice,
      max_buy_price: maxBuyPrice,
    });
  }

  // -- account state (pure reads) ------------------------------------------

  createAccount(body: NewAccount): Promise<AccountSummary> {
    return this.request("POST", "/accounts", body);
  }

  getProfile(accountId: string): Promise<Profile> {
    return this.request("GET", `/accounts/${accountId}/profile`);
  }

  getLedger(accountId: string): Promise<LedgerView> {
    return this.request("GET", `/accounts/${accountId}/ledger`);
  }

  recommendation(accountId: string, usedToday = 0): Promise<Recommendation> {
    const query = usedToday > 0 ? `?used_today=${usedToday}` : "";
    return this.request("GET", `/accounts/${accountId}/recommendation${query}`);
  }

  /** Hypothetical valuation; computed server-side, never changes state. */
  whatIf(accountId: string, quantity: number, options: WhatIfOptions = {}): Promise<WhatIfAnswer> {
    const body: Record<string, number> = {
      quantity,
      used_today: options.usedToday ?? 0,
    };
    if (options.minSellPrice !== undefined) body.min_sell_price = options.minSellPrice;
    if (options.maxBuyPrice !== undefined) body.max_buy_price = options.maxBuyPrice;
    return this.request("POST", `/accounts/${accountId}/whatif`, body);
  }

  // -- mutations (each carries a fresh request id) ---------------------------

  reportUsage(accountId: string, usedGb: number): Promise<UsageReceipt> {
    return this.request("POST", `/accounts/${accountId}/usage`, {
      used_gb: usedGb,
      request_id: this.newRequestId(),
    });
  }

  placeTrade(accountId: string, quantity: number, price: number): Promise<TradeReceipt> {
    return this.request("POST", `/accounts/${accountId}/trades`, {
      quantity,
      price,
      request_id: this.newRequestId(),
    });
  }

  submitIndifferencePrices(
    accountId: string,
    buyPrice: number,
    sellPrice: number,
  ): Promise<EstimateAnswer> {
    return this.request("POST", `/accounts/${accountId}/elicitation`, {
      buy_price: buyPrice,
      sell_price: sellPrice,
      request_id: this.newRequestId(),
    });
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw await toApiError(response);
    }
    return (await response.json()) as T;
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const payload: unknown = await response.json();
    if (payload && typeof payload === "object" && "detail" in payload) {
      const detail = (payload as { detail: unknown }).detail;
      if (detail && typeof detail === "object") {
        const d = detail as { code?: unknown; message?: unknown };
        if (typeof d.code === "string") code = d.code;
        if (typeof d.message === "string") message = d.message;
      }
    }
  } catch {
    // not a JSON body; keep the generic message
  }
  return new ApiError(response.status, code, message);
}
