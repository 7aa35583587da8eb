/** Console behavior against a fixture service speaking the real wire format. */

import { createServer, type Server } from "node:http";
import { AddressInfo } from "node:net";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ServiceError } from "../src/api.ts";
import { dispatchSelection } from "../src/dispatch.ts";
import { buildMetricsView } from "../src/metricsPanel.ts";
import { buildCandidateRows } from "../src/table.ts";
import type { MetricsPayload, ScoredCandidate } from "../src/types.ts";

const SERVED: ScoredCandidate[] = [
  { user_id: "u3", retweet_probability: 0.92, prob_within_deadline: 0.99,
    followers_count: 310, mean_wait: 1800, eligible: true },
  { user_id: "u1", retweet_probability: 0.81, prob_within_deadline: 0.75,
    followers_count: 12, mean_wait: 9200, eligible: true },
  { user_id: "u7", retweet_probability: 0.55, prob_within_deadline: 0.97,
    followers_count: 77, mean_wait: 3600, eligible: true },
];

const METRICS: MetricsPayload = {
  contacted: 100,
  retweeted: 19,
  rate: 0.19,
  windowed_rate: 0.17,
  unit_info_reach: 153.0,
  distinct_followers: true,
  deadline_seconds: 86400,
};

let server: Server;
let base: string;
const dispatched = new Set<string>();

beforeAll(async () => {
  server = createServer((req, res) => {
    const send = (status: number, body: unknown) => {
      res.writeHead(status, { "content-type": "application/json" });
      res.end(JSON.stringify(body));
    };
    if (req.method === "GET" && req.url === "/campaigns/c9/recommendations") {
      send(200, SERVED.filter((c) => !dispatched.has(c.user_id)));
      return;
    }
    if (req.method === "GET" && req.url === "/campaigns/c9/metrics") {
      send(200, METRICS);
      return;
    }
    if (req.method === "POST" && req.url === "/campaigns/c9/dispatch") {
      let raw = "";
      req.on("data", (chunk) => (raw += chunk));
      req.on("end", () => {
        const { user_id } = JSON.parse(raw);
        if (dispatched.has(user_id)) {
          send(409, { code: "AlreadyDispatched", message: `user '${user_id}' was already contacted` });
        } else {
          dispatched.add(user_id);
          send(200, { seq: dispatched.size, ts: 0, campaign_id: "c9",
                      kind: "dispatched", user_id, message: "sent" });
        }
      });
      return;
    }
    send(404, { code: "UnknownCampaign", message: "unknown campaign" });
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  base = `http://127.0.0.1:${(server.address() as AddressInfo).port}`;
});

afterAll(() => {
  server.close();
});

describe("console against a fixture service", () => {
  it("renders the served ranking order verbatim", async () => {
    const api = new ApiClient(base);
    const rows = buildCandidateRows(await api.recommendations("c9"));
    expect(rows.map((r) => r.userId)).toEqual(["u3", "u1", "u7"]);
    expect(rows.map((r) => r.rank)).toEqual([1, 2, 3]);
    expect(rows[0]!.retweetProbability).toBe("0.92");
  });

  it("shows metrics equal to the GET /metrics payload", async () => {
    const api = new ApiClient(base);
    const payload = await api.metrics("c9");
    expect(payload).toEqual(METRICS);
    const view = buildMetricsView(payload);
    expect(view.contacted).toBe("100");
    expect(view.retweeted).toBe("19");
    expect(view.rate).toBe("19.0%");
    expect(view.windowedRate).toBe("17.0%");
    expect(view.windowLabel).toBe("rate within 24h");
    expect(view.unitInfoReach).toBe("153.0");
  });

  it("dashes the rates when nothing was contacted", () => {
    const view = buildMetricsView({
      contacted: 0, retweeted: 0, rate: null, windowed_rate: null,
      unit_info_reach: null, distinct_followers: null, deadline_seconds: 3600,
    });
    expect(view.rate).toBe("-");
    expect(view.windowedRate).toBe("-");
    expect(view.unitInfoReach).toBe("-");
  });

  it("surfaces partial dispatch failures and drops sent rows on refresh", async () => {
    const api = new ApiClient(base);
    dispatched.add("u1"); // someone already contacted this user
    const outcomes = await dispatchSelection(api, "c9", ["u3", "u1"], "{user} please");
    expect(outcomes).toHaveLength(2);
    expect(outcomes[0]).toMatchObject({ userId: "u3", ok: true });
    expect(outcomes[1]).toMatchObject({ userId: "u1", ok: false, errorCode: "AlreadyDispatched" });

    const next = buildCandidateRows(await api.recommendations("c9"));
    expect(next.map((r) => r.userId)).toEqual(["u7"]);
  });

  it("raises typed errors for unknown campaigns", async () => {
    const api = new ApiClient(base);
    await expect(api.metrics("nope")).rejects.toSatisfy(
      (e: unknown) => e instanceof ServiceError && e.code === "UnknownCampaign",
    );
  });
});
