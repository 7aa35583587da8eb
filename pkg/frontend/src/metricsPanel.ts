/** Metrics panel view model: field-for-field from the GET /metrics payload. */

import { DASH, formatCount, formatPercent, formatReach } from "./format.ts";
import type { MetricsPayload } from "./types.ts";

export interface MetricsView {
  contacted: string;
  retweeted: string;
  rate: string;
  windowedRate: string;
  windowLabel: string;
  unitInfoReach: string;
  reachNote: string;
}

export function buildMetricsView(payload: MetricsPayload): MetricsView {
  const hours = payload.deadline_seconds / 3600;
  const nothingSent = payload.contacted === 0;
  return {
    contacted: formatCount(payload.contacted),
    retweeted: formatCount(payload.retweeted),
    // an undefined rate (nobody contacted) renders as a dash, not 0%
    rate: nothingSent ? DASH : formatPercent(payload.rate),
    windowedRate: nothingSent ? DASH : formatPercent(payload.windowed_rate),
    windowLabel: `rate within ${hours % 1 === 0 ? hours.toFixed(0) : hours.toFixed(1)}h`,
    unitInfoReach: nothingSent ? DASH : formatReach(payload.unit_info_reach),
    reachNote:
      payload.distinct_followers === false ? "follower overlap not adjusted" : "",
  };
}
