/** Typed client for the controller API. Every request the console makes goes
 * through this module, and only these paths exist. */

import { parseEventStream, type DelayBatch } from "./sse.js";

export const API_PATHS = [
  "POST /topology",
  "GET /topology/{id}",
  "GET /topology/{id}/configs",
  "POST /experiments",
  "GET /experiments/{id}",
  "GET /experiments/{id}/metrics",
  "GET /links/delays",
  "POST /links/{a}/{b}/state",
] as const;

export interface TopologyReceipt {
  id: string;
  validation: { nodes: number; links: number; connected: boolean };
}

export interface ApiFailure {
  status: number;
  error: string;
  kind?: string;
}

export interface ExperimentHandleDoc {
  id: string;
  state: "pending" | "running" | "done" | "failed";
  created_at: number;
  error: string;
  spec: Record<string, unknown>;
}

export interface SeriesDoc {
  metric: string;
  subject: string;
  bucket_s: number;
  points: [number, number | null][]; // null marks a lost probe round
}

export interface RunSummaryDoc {
  repetition: number;
  series: SeriesDoc[];
  aggregates: Record<string, Record<string, { mean: number; stddev: number; count: number }>>;
}

export interface MetricsDoc {
  id: string;
  repetitions: RunSummaryDoc[];
  csv: string;
}

export interface ExperimentRequest {
  topology_id: string;
  consumer: string;
  producer: string;
  strategy: "best_route" | "multicast";
  demand_mbps: number;
  payload_bytes: number;
  duration_s: number;
  failures: { a: string; b: string; at_s: number }[];
  repetitions: number;
  seed: number;
}

export class ApiError extends Error {
  constructor(public failure: ApiFailure) {
    super(failure.error);
  }
}

async function readFailure(res: Response): Promise<ApiFailure> {
  let body: Record<string, unknown> = {};
  try {
    body = (await res.json()) as Record<string, unknown>;
  } catch {
    // body stays empty; status carries the story
  }
  return {
    status: res.status,
    error: String(body.error ?? body.state ?? res.statusText),
    kind: typeof body.kind === "string" ? body.kind : undefined,
  };
}

export class ConsoleApi {
  constructor(
    public baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(method: string, path: string, body?: string): Promise<Response> {
    return this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      body,
      headers: body ? { "content-type": "application/json" } : undefined,
    });
  }

  async deployTopology(canonicalText: string): Promise<TopologyReceipt> {
    const res = await this.request("POST", "/topology", canonicalText);
    if (!res.ok) throw new ApiError(await readFailure(res));
    return (await res.json()) as TopologyReceipt;
  }

  async fetchTopology(id: string): Promise<{
    labels: string[];
    matrix: (number | null)[][];
    media: ("wired" | "wireless" | null)[][];
  }> {
    const res = await this.request("GET", `/topology/${id}`);
    if (!res.ok) throw new ApiError(await readFailure(res));
    return (await res.json()) as never;
  }

  async fetchConfigs(id: string): Promise<unknown> {
    const res = await this.request("GET", `/topology/${id}/configs`);
    if (!res.ok) throw new ApiError(await readFailure(res));
    return res.json();
  }

  async submitExperiment(spec: ExperimentRequest): Promise<ExperimentHandleDoc> {
    const res = await this.request("POST", "/experiments", JSON.stringify(spec));
    if (!res.ok) throw new ApiError(await readFailure(res));
    return (await res.json()) as ExperimentHandleDoc;
  }

  async fetchExperiment(id: string): Promise<ExperimentHandleDoc> {
    const res = await this.request("GET", `/experiments/${id}`);
    if (!res.ok) throw new ApiError(await readFailure(res));
    return (await res.json()) as ExperimentHandleDoc;
  }

  /** Resolves null while the run is still in flight (the 409 phase). */
  async fetchMetrics(id: string): Promise<MetricsDoc | null> {
    const res = await this.request("GET", `/experiments/${id}/metrics`);
    if (res.status === 409) return null;
    if (!res.ok) throw new ApiError(await readFailure(res));
    return (await res.json()) as MetricsDoc;
  }

  async pollUntilDone(
    id: string,
    opts: { intervalMs?: number; timeoutMs?: number; onState?: (s: string) => void } = {},
  ): Promise<ExperimentHandleDoc> {
    const interval = opts.intervalMs ?? 500;
    const deadline = Date.now() + (opts.timeoutMs ?? 300_000);
    for (;;) {
      const handle = await this.fetchExperiment(id);
      opts.onState?.(handle.state);
      if (handle.state === "done" || handle.state === "failed") return handle;
      if (Date.now() > deadline) throw new Error(`experiment ${id} timed out`);
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }

  async setLinkState(a: string, b: string, up: boolean): Promise<void> {
    const res = await this.request("POST", `/links/${a}/${b}/state`, JSON.stringify({ up }));
    if (!res.ok) throw new ApiError(await readFailure(res));
  }

  /**
   * Subscribe to the live delay feed. Calls onBatch per probe round until the
   * stream ends or the signal aborts; resolves when the stream closes.
   */
  async streamDelays(
    onBatch: (batch: DelayBatch) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    const res = await this.fetchImpl(`${this.baseUrl}/links/delays`, { signal });
    if (!res.ok || !res.body) throw new ApiError(await readFailure(res));
    try {
      for await (const batch of parseEventStream(res.body)) {
        onBatch(batch as DelayBatch);
      }
    } catch (err) {
      if (!(err instanceof DOMException && err.name === "AbortError")) throw err;
    }
  }
}
