/** Async polling of the preprocessing status endpoint. */

import type { PreprocessStatus } from "./types.js";

/** Anything that can report preprocessing status; satisfied by ApiClient. */
export interface StatusSource {
  preprocessStatus(corpusId: string): Promise<PreprocessStatus>;
}

/** The job ended in the failed state; the last status is attached. */
export class PreprocessFailedError extends Error {
  readonly status: PreprocessStatus;

  constructor(status: PreprocessStatus) {
    super(`preprocessing failed: ${status.error ?? "unknown error"}`);
    this.name = "PreprocessFailedError";
    this.status = status;
  }
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  /** Called with every observed status, including the terminal one. */
  onStatus?: (status: PreprocessStatus) => void;
}

function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * Poll until the job reaches "done". Rejects with PreprocessFailedError on
 * "failed" and with a plain Error when timeoutMs elapses first.
 */
export async function pollPreprocess(
  source: StatusSource,
  corpusId: string,
  options: PollOptions = {},
): Promise<PreprocessStatus> {
  const intervalMs = options.intervalMs ?? 250;
  const deadline = Date.now() + (options.timeoutMs ?? 120_000);
  for (;;) {
    const status = await source.preprocessStatus(corpusId);
    options.onStatus?.(status);
    if (status.state === "done") return status;
    if (status.state === "failed") throw new PreprocessFailedError(status);
    if (Date.now() >= deadline) {
      throw new Error(`timed out waiting for preprocessing of ${corpusId}`);
    }
    await delay(intervalMs);
  }
}
