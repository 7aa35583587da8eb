/** Display formatting. Undefined quantities render as a dash, never as 0. */

export const DASH = "-";

export function formatPercent(value: number | null): string {
  if (value === null) return DASH;
  return `${(value * 100).toFixed(1)}%`;
}

export function formatProbability(value: number | null): string {
  if (value === null) return DASH;
  return value.toFixed(2);
}

export function formatReach(value: number | null): string {
  if (value === null) return DASH;
  return value.toFixed(1);
}

export function formatMeanWait(seconds: number): string {
  if (seconds < 3600) return `${Math.round(seconds / 60)}m`;
  return `${(seconds / 3600).toFixed(1)}h`;
}

export function formatCount(value: number | null): string {
  return value === null ? DASH : String(value);
}
