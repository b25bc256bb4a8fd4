/** Console view-model: plain data plus pure transition helpers.
 *
 * Everything rendered comes verbatim from service responses stored here;
 * the only arithmetic is presentation (progress percentage). No DOM, no
 * fetch, so the rules (query box disabled until ready, one query in flight
 * at a time, k bounds) are testable on their own.
 */

import type {
  ClipDetail,
  CorpusSummary,
  MetricsResponse,
  PreprocessStatus,
  QueryResult,
} from "./api/types.js";

export const K_MIN = 1;
export const K_MAX = 50;
export const DEFAULT_K = 8;

export type Connection = "idle" | "connecting" | "connected" | "unreachable";

export interface ConsoleState {
  connection: Connection;
  corpora: CorpusSummary[];
  selectedCorpus: string | null;
  job: PreprocessStatus | null;
  k: number;
  queryText: string;
  queryInFlight: boolean;
  lastResult: QueryResult | null;
  supportingClips: ClipDetail[];
  metrics: MetricsResponse | null;
  banner: string | null;
}

export function initialState(): ConsoleState {
  return {
    connection: "idle",
    corpora: [],
    selectedCorpus: null,
    job: null,
    k: DEFAULT_K,
    queryText: "",
    queryInFlight: false,
    lastResult: null,
    supportingClips: [],
    metrics: null,
    banner: null,
  };
}

export function connecting(state: ConsoleState): ConsoleState {
  return { ...state, connection: "connecting", banner: null };
}

export function connected(state: ConsoleState, corpora: CorpusSummary[]): ConsoleState {
  return { ...state, connection: "connected", corpora, banner: null };
}

export function unreachable(state: ConsoleState, message: string): ConsoleState {
  return { ...state, connection: "unreachable", banner: message };
}

/** Switching corpus drops everything tied to the previous one. */
export function selectCorpus(state: ConsoleState, corpusId: string | null): ConsoleState {
  if (corpusId === state.selectedCorpus) return state;
  return {
    ...state,
    selectedCorpus: corpusId,
    job: null,
    lastResult: null,
    supportingClips: [],
    metrics: null,
    banner: null,
  };
}

export function applyStatus(state: ConsoleState, status: PreprocessStatus): ConsoleState {
  return { ...state, job: status };
}

export function applyMetrics(state: ConsoleState, metrics: MetricsResponse): ConsoleState {
  return { ...state, metrics };
}

export function setQueryText(state: ConsoleState, text: string): ConsoleState {
  return { ...state, queryText: text };
}

/** Round and bound a k-slider value; garbage falls back to the default. */
export function clampK(value: number): number {
  if (!Number.isFinite(value)) return DEFAULT_K;
  return Math.min(K_MAX, Math.max(K_MIN, Math.round(value)));
}

export function setK(state: ConsoleState, value: number): ConsoleState {
  return { ...state, k: clampK(value) };
}

export function corpusReady(state: ConsoleState): boolean {
  return state.job !== null && state.job.state === "done";
}

/** The query box is live only on a connected, preprocessed corpus with no
 * query already in flight. */
export function canSubmitQuery(state: ConsoleState): boolean {
  return (
    state.connection === "connected" &&
    state.selectedCorpus !== null &&
    corpusReady(state) &&
    !state.queryInFlight &&
    state.queryText.trim().length > 0
  );
}

/** Marks a query in flight. Throws when the rules above do not allow one;
 * in particular a second concurrent submission. */
export function beginQuery(state: ConsoleState): ConsoleState {
  if (state.queryInFlight) {
    throw new Error("a query is already in flight");
  }
  if (!canSubmitQuery(state)) {
    throw new Error("query box is disabled in this state");
  }
  return { ...state, queryInFlight: true, banner: null };
}

export function finishQuery(
  state: ConsoleState,
  result: QueryResult,
  supportingClips: ClipDetail[],
): ConsoleState {
  return { ...state, queryInFlight: false, lastResult: result, supportingClips };
}

export function failQuery(state: ConsoleState, message: string): ConsoleState {
  return { ...state, queryInFlight: false, banner: message };
}

/** Percent complete for the progress bar, from the status' own counters. */
export function progressPercent(status: PreprocessStatus | null): number {
  if (status === null || status.clips_total <= 0) return 0;
  return Math.round((status.clips_done / status.clips_total) * 1000) / 10;
}
