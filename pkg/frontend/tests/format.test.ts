import { describe, expect, it } from "vitest";

import { currency, fixed2, gigabytes, rawValue } from "../src/format.js";

describe("fixed2", () => {
  it("renders two decimals everywhere", () => {
    expect(fixed2(20)).toBe("20.00");
    expect(fixed2(1.5)).toBe("1.50");
    expect(fixed2(-21.968)).toBe("-21.97");
  });

  it("never shows a negative zero", () => {
    expect(fixed2(-0)).toBe("0.00");
    expect(fixed2(-0.0001)).toBe("0.00");
  });

  it("passes non-finite values through as text", () => {
    expect(fixed2(Number.NaN)).toBe("NaN");
    expect(fixed2(Number.POSITIVE_INFINITY)).toBe("Infinity");
  });
});

describe("units", () => {
  it("labels gigabyte amounts", () => {
    expect(gigabytes(1.5)).toBe("1.50 GB");
    expect(gigabytes(-0.75)).toBe("-0.75 GB");
  });

  it("keeps money to plain two-decimal figures", () => {
    expect(currency(16)).toBe("16.00");
  });
});

describe("rawValue", () => {
  it("keeps full precision for the hover tooltip", () => {
    expect(rawValue(-21.96846)).toBe("-21.96846");
    expect(rawValue(2)).toBe("2");
  });
});
