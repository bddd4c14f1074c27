import { describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import type { DecodeRequest } from "../src/types.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

const REQUEST: DecodeRequest = {
  layout_name: "qwerty_en",
  task: "indic_to_indic",
  points: [
    [0.1, 0.1],
    [0.5, 0.2],
  ],
  k: 3,
};

describe("ApiClient", () => {
  it("fetches and parses layout documents", async () => {
    const doc = { schema_version: 1, name: "qwerty_en", aspect: 0.4, keys: [] };
    const client = new ApiClient("", async (url) => {
      expect(url).toBe("/layout/qwerty_en");
      return jsonResponse(doc);
    });
    expect(await client.fetchLayout("qwerty_en")).toEqual(doc);
  });

  it("raises on missing layouts", async () => {
    const client = new ApiClient("", async () => jsonResponse({ detail: "no" }, 404));
    await expect(client.fetchLayout("missing")).rejects.toThrow("404");
  });

  it("decodes and returns suggestions", async () => {
    const payload = {
      suggestions: [{ word: "cat", score: 0.1, score_kind: "correction_score",
                      stage_provenance: { path_string: "cat", translit: null,
                                          translit_log_prob: null, fallback: false } }],
      timing_ms: 5,
    };
    const client = new ApiClient("", async (_url, init) => {
      expect(init?.method).toBe("POST");
      expect(JSON.parse(init?.body as string)).toEqual(REQUEST);
      return jsonResponse(payload);
    });
    const result = await client.decode(REQUEST);
    expect(result?.suggestions[0]?.word).toBe("cat");
  });

  it("aborts a stale decode when a new one starts", async () => {
    const gates: Array<() => void> = [];
    const client = new ApiClient("", (_url, init) => {
      return new Promise<Response>((resolve, reject) => {
        const signal = init?.signal;
        signal?.addEventListener("abort", () =>
          reject(Object.assign(new Error("aborted"), { name: "AbortError" })));
        gates.push(() => resolve(jsonResponse({ suggestions: [], timing_ms: 1 })));
      });
    });
    const first = client.decode(REQUEST);
    const second = client.decode({ ...REQUEST, k: 1 });
    gates[1]?.();
    expect(await first).toBeNull(); // superseded gesture resolves to null
    expect(await second).toEqual({ suggestions: [], timing_ms: 1 });
    expect(client.hasInflight).toBe(false);
  });

  it("treats 400 responses as degenerate strokes, not errors", async () => {
    const client = new ApiClient("", async () => jsonResponse({ detail: "bad" }, 400));
    const result = await client.decode(REQUEST);
    expect(result).toEqual({ suggestions: [], timing_ms: 0 });
  });

  it("request bodies are byte-stable across runs", () => {
    const client = new ApiClient("");
    expect(client.encodeBody(REQUEST)).toBe(client.encodeBody({ ...REQUEST }));
  });
});
