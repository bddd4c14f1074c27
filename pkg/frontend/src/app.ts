import { ApiClient } from "./api.js";
import type { BoardRect } from "./trace.js";
import { TraceRecorder } from "./trace.js";
import type { DecodeResponse, LayoutDocument, Suggestion, TaskKind } from "./types.js";

export interface SuggestionView {
  showSuggestions(words: string[], highlighted: number): void;
  showComposition(text: string): void;
  showError(message: string): void;
}

/** Drop duplicate words, keeping the first (highest-ranked) occurrence. */
export function dedupeSuggestions(suggestions: Suggestion[]): Suggestion[] {
  const seen = new Set<string>();
  return suggestions.filter((s) => {
    if (seen.has(s.word)) return false;
    seen.add(s.word);
    return true;
  });
}

/**
 * Demo state machine: one stroke at a time, suggestions from the service,
 * accepted words accumulate in the composition buffer.
 */
export class AppController {
  readonly recorder = new TraceRecorder();
  private layout: LayoutDocument | null = null;
  private composition: string[] = [];
  private suggestions: Suggestion[] = [];
  task: TaskKind = "indic_to_indic";
  k = 3;

  constructor(private api: ApiClient, private view: SuggestionView) {}

  async loadLayout(name: string): Promise<LayoutDocument> {
    this.layout = await this.api.fetchLayout(name);
    return this.layout;
  }

  get layoutDocument(): LayoutDocument | null {
    return this.layout;
  }

  get compositionText(): string {
    return this.composition.join("");
  }

  currentSuggestions(): string[] {
    return this.suggestions.map((s) => s.word);
  }

  pointerDown(px: number, py: number): void {
    // a new gesture supersedes whatever decode is still pending
    this.recorder.start(px, py);
  }

  pointerMove(px: number, py: number): void {
    this.recorder.extend(px, py);
  }

  async pointerUp(rect: BoardRect): Promise<DecodeResponse | null> {
    if (!this.layout) return null;
    const points = this.recorder.finish(rect);
    if (points === null) return null; // single-point tap: no request
    const response = await this.api.decode({
      layout_name: this.layout.name,
      task: this.task,
      points,
      k: this.k,
    });
    if (response === null) return null; // aborted by a newer gesture
    this.suggestions = dedupeSuggestions(response.suggestions).slice(0, this.k);
    this.view.showSuggestions(this.currentSuggestions(), 0);
    return response;
  }

  commit(index: number): void {
    const chosen = this.suggestions[index];
    if (!chosen) return;
    this.composition.push(chosen.word + " ");
    this.suggestions = [];
    this.view.showSuggestions([], -1);
    this.view.showComposition(this.compositionText);
  }

  toggleTask(): TaskKind {
    this.task = this.task === "indic_to_indic" ? "english_to_indic" : "indic_to_indic";
    return this.task;
  }
}
