/** Candidate table rows, in exactly the order the service ranked them. */

import { formatMeanWait, formatProbability } from "./format.ts";
import type { ScoredCandidate } from "./types.ts";

export interface CandidateRow {
  rank: number;
  userId: string;
  retweetProbability: string;
  probWithinDeadline: string;
  followers: string;
  meanWait: string;
}

export function buildCandidateRows(candidates: ScoredCandidate[]): CandidateRow[] {
  // no client-side reordering: rank is the served position
  return candidates.map((c, i) => ({
    rank: i + 1,
    userId: c.user_id,
    retweetProbability: formatProbability(c.retweet_probability),
    probWithinDeadline: formatProbability(c.prob_within_deadline),
    followers: String(c.followers_count),
    meanWait: formatMeanWait(c.mean_wait),
  }));
}

export const CANDIDATE_COLUMNS = [
  "rank",
  "user",
  "retweet probability",
  "probability within deadline",
  "followers",
  "mean wait",
] as const;
