import type { DecodeRequest, DecodeResponse, HealthResponse, LayoutDocument } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin client for the three service endpoints. At most one decode request is
 * in flight: starting a new one aborts the previous (stale gestures must not
 * land after newer ones).
 */
export class ApiClient {
  private inflight: AbortController | null = null;

  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async fetchLayout(name: string): Promise<LayoutDocument> {
    const resp = await this.fetchImpl(`${this.baseUrl}/layout/${name}`);
    if (!resp.ok) throw new Error(`layout ${name} unavailable (${resp.status})`);
    return (await resp.json()) as LayoutDocument;
  }

  async health(): Promise<HealthResponse> {
    const resp = await this.fetchImpl(`${this.baseUrl}/health`);
    if (!resp.ok) throw new Error(`health check failed (${resp.status})`);
    return (await resp.json()) as HealthResponse;
  }

  /** Serialize exactly once so replayed fixtures yield byte-identical bodies. */
  encodeBody(request: DecodeRequest): string {
    return JSON.stringify(request);
  }

  async decode(request: DecodeRequest): Promise<DecodeResponse | null> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const resp = await this.fetchImpl(`${this.baseUrl}/decode`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: this.encodeBody(request),
        signal: controller.signal,
      });
      if (resp.status === 400) return { suggestions: [], timing_ms: 0 }; // degenerate stroke
      if (!resp.ok) throw new Error(`decode failed (${resp.status})`);
      return (await resp.json()) as DecodeResponse;
    } catch (err) {
      if ((err as Error).name === "AbortError") return null; // superseded
      throw err;
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  get hasInflight(): boolean {
    return this.inflight !== null;
  }
}
