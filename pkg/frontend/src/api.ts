/** Thin typed client over the campaign service HTTP+JSON API.
 *
 * Reads are side-effect free; every mutation is a POST. The console computes
 * nothing itself: each number it shows comes from one of these responses.
 */

import type {
  ApiError,
  CampaignDefinition,
  DispatchEvent,
  MetricsPayload,
  ScoredCandidate,
} from "./types.ts";

export class ServiceError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

async function parseError(response: Response): Promise<never> {
  let body: ApiError = { code: "HttpError", message: `status ${response.status}` };
  try {
    const obj = await response.json();
    if (obj && typeof obj.code === "string") body = obj as ApiError;
  } catch {
    // non-JSON error body; keep the fallback
  }
  throw new ServiceError(response.status, body);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, { method: "POST", body });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  async createCampaign(definition: CampaignDefinition): Promise<string> {
    const out = await this.post<{ campaign_id: string }>(
      "/campaigns",
      JSON.stringify(definition),
    );
    return out.campaign_id;
  }

  recommendations(campaignId: string): Promise<ScoredCandidate[]> {
    return this.get(`/campaigns/${campaignId}/recommendations`);
  }

  metrics(campaignId: string): Promise<MetricsPayload> {
    return this.get(`/campaigns/${campaignId}/metrics`);
  }

  dispatch(campaignId: string, userId: string, message: string): Promise<DispatchEvent> {
    return this.post(
      `/campaigns/${campaignId}/dispatch`,
      JSON.stringify({ user_id: userId, message }),
    );
  }

  async ingestCandidates(campaignId: string, jsonlBody: string): Promise<number> {
    const out = await this.post<{ accepted: number }>(
      `/campaigns/${campaignId}/candidates`,
      jsonlBody,
    );
    return out.accepted;
  }
}
