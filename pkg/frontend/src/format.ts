/**
 * Display formatting.
 *
 * Money and data volumes are shown to two decimals everywhere; the
 * untruncated value is kept in the element's tooltip so hovering reveals
 * what the service actually said.
 */

/** Two-decimal rendering, normalising the "-0.00" artefact away. */
export function fixed2(value: number): string {
  if (!Number.isFinite(value)) {
    return String(value);
  }
  const text = value.toFixed(2);
  return text === "-0.00" ? "0.00" : text;
}

export function gigabytes(value: number): string {
  return `${fixed2(value)} GB`;
}

export function currency(value: number): string {
  return fixed2(value);
}

/** Full-precision text for the hover tooltip. */
export function rawValue(value: number): string {
  return String(value);
}
