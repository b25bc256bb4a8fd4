/** Typed fetch client for the lazyrag service /v1 API. */

import type {
  ClipDetail,
  CorporaList,
  CreateCorpusResponse,
  MetricsResponse,
  PreprocessStatus,
  QueryResult,
  StartPreprocessResponse,
  SyntheticSpec,
} from "./types.js";

/** The service could not be reached at all (network failure, not an HTTP error). */
export class ServiceUnreachableError extends Error {
  constructor(baseUrl: string, cause: unknown) {
    super(`service unreachable at ${baseUrl}: ${cause instanceof Error ? cause.message : String(cause)}`);
    this.name = "ServiceUnreachableError";
  }
}

/** Non-2xx HTTP response, with the parsed error detail when the body had one. */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(describeDetail(status, detail));
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

/** 409 from the query endpoint: the corpus has not finished preprocessing. */
export class NotReadyError extends ApiError {
  constructor(detail: unknown) {
    super(409, detail);
    this.name = "NotReadyError";
  }
}

function describeDetail(status: number, detail: unknown): string {
  if (typeof detail === "string" && detail) return detail;
  if (detail && typeof detail === "object") {
    const message = (detail as { message?: unknown }).message;
    if (typeof message === "string" && message) return message;
  }
  return `request failed with status ${status}`;
}

function isNotReadyDetail(detail: unknown): boolean {
  return (
    detail != null &&
    typeof detail === "object" &&
    (detail as { error?: unknown }).error === "not_ready"
  );
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: typeof fetch;

  constructor(baseUrl: string, fetchFn: typeof fetch = fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        headers: { Accept: "application/json", "Content-Type": "application/json" },
        ...init,
      });
    } catch (err) {
      throw new ServiceUnreachableError(this.baseUrl, err);
    }
    if (!response.ok) {
      const payload = (await response.json().catch(() => ({}))) as { detail?: unknown };
      const detail = payload.detail ?? payload;
      if (response.status === 409 && isNotReadyDetail(detail)) {
        throw new NotReadyError(detail);
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  /** Register a corpus from manifest file text. */
  async createCorpusFromManifest(manifestText: string): Promise<CreateCorpusResponse> {
    return this.request<CreateCorpusResponse>("/v1/corpora", {
      method: "POST",
      body: JSON.stringify({ manifest: manifestText }),
    });
  }

  /** Register a synthetic corpus generated server-side from a seed. */
  async createSyntheticCorpus(spec: SyntheticSpec): Promise<CreateCorpusResponse> {
    return this.request<CreateCorpusResponse>("/v1/corpora", {
      method: "POST",
      body: JSON.stringify({ synthetic: spec }),
    });
  }

  async listCorpora(): Promise<CorporaList> {
    return this.request<CorporaList>("/v1/corpora");
  }

  async startPreprocess(corpusId: string): Promise<StartPreprocessResponse> {
    return this.request<StartPreprocessResponse>(
      `/v1/corpora/${encodeURIComponent(corpusId)}/preprocess`,
      { method: "POST" },
    );
  }

  async preprocessStatus(corpusId: string): Promise<PreprocessStatus> {
    return this.request<PreprocessStatus>(
      `/v1/corpora/${encodeURIComponent(corpusId)}/preprocess/status`,
    );
  }

  /** Answer a query; k caps the number of context chunks when given. */
  async query(corpusId: string, query: string, k?: number): Promise<QueryResult> {
    return this.request<QueryResult>(
      `/v1/corpora/${encodeURIComponent(corpusId)}/query`,
      { method: "POST", body: JSON.stringify({ query, k: k ?? null }) },
    );
  }

  async clipDetail(corpusId: string, clipId: string): Promise<ClipDetail> {
    return this.request<ClipDetail>(
      `/v1/corpora/${encodeURIComponent(corpusId)}/clips/${encodeURIComponent(clipId)}`,
    );
  }

  async metrics(corpusId: string): Promise<MetricsResponse> {
    return this.request<MetricsResponse>(
      `/v1/corpora/${encodeURIComponent(corpusId)}/metrics`,
    );
  }
}
