export interface LayoutKey {
  char: string;
  cx: number;
  cy: number;
  w: number;
  h: number;
}

export interface LayoutDocument {
  schema_version: number;
  name: string;
  aspect: number;
  keys: LayoutKey[];
}

export type TaskKind = "english_to_indic" | "indic_to_indic";

export interface DecodeRequest {
  layout_name: string;
  task: TaskKind;
  points: [number, number][];
  k: number;
}

export interface StageProvenance {
  path_string: string;
  translit: string | null;
  translit_log_prob: number | null;
  fallback: boolean;
}

export interface Suggestion {
  word: string;
  score: number;
  score_kind: string;
  stage_provenance: StageProvenance;
}

export interface DecodeResponse {
  suggestions: Suggestion[];
  timing_ms: number;
}

export interface HealthResponse {
  status: "ok" | "loading";
  task: TaskKind | null;
  checkpoints: string[];
  layouts: string[];
}
