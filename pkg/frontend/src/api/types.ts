/** Request and response shapes of the lazyrag service /v1 API. */

/** POST /v1/corpora response. */
export interface CreateCorpusResponse {
  corpus_id: string;
  clips: number;
}

/** One row of GET /v1/corpora. */
export interface CorpusSummary {
  corpus_id: string;
  clips: number;
  preprocessed: boolean;
}

/** GET /v1/corpora response. */
export interface CorporaList {
  corpora: CorpusSummary[];
}

/** POST /v1/corpora/{id}/preprocess response. */
export interface StartPreprocessResponse {
  job_id: string;
  state: string;
}

export type JobStateName = "not_started" | "running" | "done" | "failed";

/** GET /v1/corpora/{id}/preprocess/status response. */
export interface PreprocessStatus {
  state: JobStateName;
  clips_done: number;
  clips_total: number;
  simulated_cost: number;
  job_id?: string;
  error?: string | null;
}

/** Per-phase timing, in simulated cost units or wall seconds. */
export interface PhaseTimes {
  retrieval: number;
  extraction: number;
  llm: number;
}

export interface QueryTiming {
  simulated: PhaseTimes;
  wall: PhaseTimes;
}

/** One LLM round of a query: context used, whether the answer was the
 * run-more-models sentinel, and what got extracted before the next round. */
export interface IterationTrace {
  iteration: number;
  answer: string;
  sentinel: boolean;
  context_chunk_ids: string[];
  extracted_clips: string[];
  chunks_added: number;
  extraction_cost: number;
}

/** POST /v1/corpora/{id}/query response. */
export interface QueryResult {
  answer: string;
  supporting_clips: string[];
  iterations_used: number;
  timing: QueryTiming;
  context_chunks: string[];
  trace: IterationTrace[];
}

export type ChunkLevel = "index" | "detailed";

export interface ClipChunk {
  chunk_id: string;
  level: ChunkLevel;
  source_model_id: string;
  text: string;
}

export interface ObjectFact {
  object_class: string;
  color: string;
  text_label: string | null;
}

export interface FrameFacts {
  objects: ObjectFact[];
  caption: string;
}

export interface ClipFrame {
  frame_id: string;
  timestamp: number;
  facts: FrameFacts | null;
}

/** GET /v1/corpora/{id}/clips/{clip_id} response: clip metadata plus its
 * chunks at both levels. thumbnail_url is rendered when a manifest carries
 * one; synthetic manifests do not. */
export interface ClipDetail {
  clip_id: string;
  start: number;
  end: number;
  frames: ClipFrame[];
  extraction_state: string[];
  chunks: ClipChunk[];
  thumbnail_url?: string;
}

/** GET /v1/corpora/{id}/metrics response. */
export interface MetricsResponse {
  fraction_extracted: Record<string, number>;
  text_chunks: number;
  frame_vectors: number;
  simulated_cost: Record<string, number>;
  queries_answered: number;
}

/** Body of the synthetic variant of POST /v1/corpora. Extra keys are
 * forwarded verbatim (the service validates them). */
export interface SyntheticSpec {
  seed: number;
  n_clips: number;
  [field: string]: unknown;
}
