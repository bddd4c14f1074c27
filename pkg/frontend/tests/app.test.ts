import { describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { AppController, dedupeSuggestions, SuggestionView } from "../src/app.js";
import type { BoardRect } from "../src/trace.js";
import type { Suggestion } from "../src/types.js";

const RECT: BoardRect = { left: 0, top: 0, width: 500, height: 200, aspect: 0.4 };

function suggestion(word: string): Suggestion {
  return {
    word,
    score: 0.5,
    score_kind: "correction_score",
    stage_provenance: { path_string: word, translit: null, translit_log_prob: null, fallback: false },
  };
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), { status });
}

class FakeView implements SuggestionView {
  suggestions: string[] = [];
  highlighted = -1;
  composition = "";
  errors: string[] = [];

  showSuggestions(words: string[], highlighted: number): void {
    this.suggestions = words;
    this.highlighted = highlighted;
  }

  showComposition(text: string): void {
    this.composition = text;
  }

  showError(message: string): void {
    this.errors.push(message);
  }
}

function makeApp(words: string[][], requests: string[] = []) {
  let call = 0;
  const api = new ApiClient("", async (url, init) => {
    if (url.startsWith("/layout/")) {
      return jsonResponse({ schema_version: 1, name: "qwerty_en", aspect: 0.4, keys: [] });
    }
    requests.push(init?.body as string);
    const batch = words[Math.min(call, words.length - 1)];
    call += 1;
    return jsonResponse({ suggestions: batch.map(suggestion), timing_ms: 1 });
  });
  const view = new FakeView();
  const app = new AppController(api, view);
  return { app, view, requests };
}

async function swipe(app: AppController, n = 10): Promise<unknown> {
  app.pointerDown(5, 5);
  for (let i = 1; i < n; i++) app.pointerMove(5 + i * 20, 5 + i * 7);
  return app.pointerUp(RECT);
}

describe("AppController", () => {
  it("renders ranked suggestions with the first highlighted", async () => {
    const { app, view } = makeApp([["budhi", "budh", "buddhi"]]);
    await app.loadLayout("qwerty_en");
    await swipe(app);
    expect(view.suggestions).toEqual(["budhi", "budh", "buddhi"]);
    expect(view.highlighted).toBe(0);
  });

  it("committing a suggestion appends word plus space", async () => {
    const { app, view } = makeApp([["budhi", "other"]]);
    await app.loadLayout("qwerty_en");
    await swipe(app);
    app.commit(0);
    expect(app.compositionText).toBe("budhi ");
    expect(view.composition).toBe("budhi ");
    expect(view.suggestions).toEqual([]);
    await swipe(app);
    app.commit(1);
    expect(app.compositionText).toBe("budhi other ");
  });

  it("deduplicates suggestions defensively", () => {
    const deduped = dedupeSuggestions(["cat", "cat", "dog"].map(suggestion));
    expect(deduped.map((s) => s.word)).toEqual(["cat", "dog"]);
  });

  it("duplicate words from the service render once", async () => {
    const { app, view } = makeApp([["cat", "cat", "dog"]]);
    await app.loadLayout("qwerty_en");
    await swipe(app);
    expect(view.suggestions).toEqual(["cat", "dog"]);
  });

  it("single-point taps send no request", async () => {
    const requests: string[] = [];
    const { app } = makeApp([["x"]], requests);
    await app.loadLayout("qwerty_en");
    app.pointerDown(5, 5);
    const result = await app.pointerUp(RECT);
    expect(result).toBeNull();
    expect(requests.length).toBe(0);
  });

  it("task toggle switches the task field in subsequent requests", async () => {
    const requests: string[] = [];
    const { app } = makeApp([["x"]], requests);
    await app.loadLayout("qwerty_en");
    await swipe(app);
    expect(JSON.parse(requests[0]).task).toBe("indic_to_indic");
    app.toggleTask();
    await swipe(app);
    expect(JSON.parse(requests[1]).task).toBe("english_to_indic");
  });

  it("identical gestures produce identical payloads", async () => {
    const requests: string[] = [];
    const { app } = makeApp([["x"]], requests);
    await app.loadLayout("qwerty_en");
    await swipe(app);
    await swipe(app);
    expect(requests[0]).toBe(requests[1]);
  });

  it("a new gesture cancels the stale in-flight decode", async () => {
    const gates: Array<() => void> = [];
    const api = new ApiClient("", (url, init) => {
      if (url.startsWith("/layout/")) {
        return Promise.resolve(jsonResponse({ schema_version: 1, name: "qwerty_en", aspect: 0.4, keys: [] }));
      }
      return new Promise<Response>((resolve, reject) => {
        init?.signal?.addEventListener("abort", () =>
          reject(Object.assign(new Error("aborted"), { name: "AbortError" })));
        gates.push(() =>
          resolve(jsonResponse({ suggestions: [suggestion(`w${gates.length}`)], timing_ms: 1 })));
      });
    });
    const view = new FakeView();
    const app = new AppController(api, view);
    await app.loadLayout("qwerty_en");

    const first = swipe(app);   // left pending
    const second = swipe(app);  // supersedes the first
    gates[1]?.();
    expect(await first).toBeNull();
    await second;
    expect(view.suggestions).toEqual(["w2"]);
  });
});
