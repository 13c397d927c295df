/**
 * Display helpers.  Rounding here is presentation only; the exact value
 * a payload carried always travels alongside in a data-raw attribute.
 */

/** Exact string form of a payload number, suitable for data-* attributes. */
export function raw(value: number | null | undefined): string {
  if (value === null || value === undefined) return "";
  return String(value);
}

/** Rounded form for human eyes. */
export function fmt(value: number | null | undefined, digits = 4): string {
  if (value === null || value === undefined) return "–";
  if (!Number.isFinite(value)) return String(value);
  if (Number.isInteger(value)) return String(value);
  return value.toFixed(digits);
}

/** Plans and counts read best as a tuple: (1, 1, 1, 1). */
export function fmtPlan(counts: number[]): string {
  return `(${counts.join(", ")})`;
}

/** Candidate point label, e.g. [1, -1]. */
export function fmtPoint(point: number[]): string {
  return `[${point.join(", ")}]`;
}
