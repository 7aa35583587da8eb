/** Wire types, mirroring the service's JSON field names exactly. */

export interface ScoredCandidate {
  user_id: string;
  retweet_probability: number;
  prob_within_deadline: number | null;
  followers_count: number;
  mean_wait: number; // seconds
  eligible: boolean;
}

export interface MetricsPayload {
  contacted: number;
  retweeted: number;
  rate: number | null;
  windowed_rate: number | null;
  unit_info_reach: number | null;
  distinct_followers: boolean | null;
  deadline_seconds: number;
}

export interface CampaignDefinition {
  keywords: string[];
  template: string;
  deadline: number; // seconds
  cutoff: number;
  top_n: number;
  model_id: string;
}

export interface DispatchEvent {
  seq: number;
  ts: number;
  campaign_id: string;
  kind: string;
  user_id: string;
  message: string;
}

export interface ApiError {
  code: string;
  message: string;
}
