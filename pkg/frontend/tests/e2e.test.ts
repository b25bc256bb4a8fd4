/** End-to-end console flow against a live backend.
 *
 * Boots the real service (python + uvicorn) on an ephemeral port with a
 * throwaway data directory, then drives the same client, state machine, and
 * render functions the browser entry point uses.
 */

import { type ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, NotReadyError } from "../src/api/client.js";
import { pollPreprocess } from "../src/api/poll.js";
import type { ClipDetail, PreprocessStatus, QueryResult } from "../src/api/types.js";
import { renderMetricsStrip } from "../src/render/metrics.js";
import { renderPreprocessPanel } from "../src/render/progress.js";
import { renderClipCards, renderTrace } from "../src/render/query.js";
import {
  applyStatus,
  beginQuery,
  canSubmitQuery,
  connected,
  finishQuery,
  initialState,
  progressPercent,
  selectCorpus,
  setK,
  setQueryText,
  type ConsoleState,
} from "../src/state.js";

const PYTHON_SRC = fileURLToPath(new URL("../../src", import.meta.url));

const LAUNCHER = `
import sys
sys.path.insert(0, sys.argv[1])
import uvicorn
from lazyrag.service import create_app
uvicorn.run(create_app(sys.argv[2]), host="127.0.0.1", port=0, log_level="info")
`;

let proc: ChildProcess;
let dataDir: string;
let client: ApiClient;

/** Start the service and resolve with the ephemeral port uvicorn picked. */
function startService(): Promise<number> {
  return new Promise((resolve, reject) => {
    let log = "";
    const onChunk = (chunk: Buffer): void => {
      log += chunk.toString();
      const match = log.match(/running on http:\/\/127\.0\.0\.1:(\d+)/);
      if (match) resolve(Number(match[1]));
    };
    proc.stdout?.on("data", onChunk);
    proc.stderr?.on("data", onChunk);
    proc.on("error", reject);
    proc.on("exit", (code) => {
      reject(new Error(`service exited early (code ${code}):\n${log}`));
    });
  });
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "lazyrag-console-"));
  proc = spawn("python3", ["-c", LAUNCHER, PYTHON_SRC, dataDir], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  const port = await startService();
  client = new ApiClient(`http://127.0.0.1:${port}`);
});

afterAll(() => {
  proc?.kill();
  if (dataDir) rmSync(dataDir, { recursive: true, force: true });
});

const CORPUS = { seed: 9, n_clips: 20 };
let corpusId: string;
let state: ConsoleState;
let coldResult: QueryResult;

describe("console against a live synthetic backend", () => {
  it("registers a corpus over http", async () => {
    const created = await client.createSyntheticCorpus(CORPUS);
    corpusId = created.corpus_id;
    expect(created.clips).toBe(CORPUS.n_clips);
    const list = await client.listCorpora();
    state = connected(initialState(), list.corpora);
    state = selectCorpus(state, corpusId);
    expect(state.corpora.map((c) => c.corpus_id)).toContain(corpusId);
  });

  it("rejects queries and keeps the box disabled until preprocessing is done", async () => {
    state = applyStatus(state, await client.preprocessStatus(corpusId));
    expect(state.job?.state).toBe("not_started");
    state = setQueryText(state, "What is the color of the car?");
    expect(canSubmitQuery(state)).toBe(false);
    const err = await client.query(corpusId, "What is the color of the car?").catch(
      (e: unknown) => e,
    );
    expect(err).toBeInstanceOf(NotReadyError);
  });

  it("shows preprocessing progress reaching 100%", async () => {
    await client.startPreprocess(corpusId);
    const panels: string[] = [];
    const statuses: PreprocessStatus[] = [];
    const final = await pollPreprocess(client, corpusId, {
      intervalMs: 20,
      onStatus: (status) => {
        statuses.push(status);
        panels.push(renderPreprocessPanel(status));
      },
    });
    state = applyStatus(state, final);
    expect(final.state).toBe("done");
    expect(final.clips_done).toBe(CORPUS.n_clips);
    expect(progressPercent(final)).toBe(100);
    const lastPanel = panels[panels.length - 1] ?? "";
    expect(lastPanel).toContain("100%");
    expect(lastPanel).toContain(`${CORPUS.n_clips} / ${CORPUS.n_clips} clips`);
    // progress never moves backwards while polling
    for (let i = 1; i < statuses.length; i++) {
      expect(statuses[i]!.clips_done).toBeGreaterThanOrEqual(statuses[i - 1]!.clips_done);
    }
    expect(canSubmitQuery(state)).toBe(true);
  });

  it("walks a cold attribute query through both iterations with an extraction list", async () => {
    state = beginQuery(state);
    coldResult = await client.query(corpusId, state.queryText, state.k);
    const clips: ClipDetail[] = await Promise.all(
      coldResult.supporting_clips.map((id) => client.clipDetail(corpusId, id)),
    );
    state = finishQuery(state, coldResult, clips);

    expect(coldResult.iterations_used).toBe(2);
    expect(coldResult.trace).toHaveLength(2);
    expect(coldResult.trace[0]?.sentinel).toBe(true);
    expect(coldResult.trace[0]?.extracted_clips.length).toBeGreaterThan(0);
    expect(coldResult.trace[1]?.sentinel).toBe(false);
    expect(coldResult.answer).toBe("blue");

    const traceHtml = renderTrace(coldResult.trace);
    expect(traceHtml).toContain("Iteration 0");
    expect(traceHtml).toContain("Iteration 1");
    expect(traceHtml).toContain("badge--sentinel");
    for (const clipId of coldResult.trace[0]?.extracted_clips ?? []) {
      expect(traceHtml).toContain(clipId);
    }

    const cardsHtml = renderClipCards(state.supportingClips);
    expect(cardsHtml).toContain("chunk--index");
    expect(cardsHtml).toContain("chunk--detailed");
  });

  it("answers the warm repeat with zero extractions", async () => {
    state = beginQuery(state);
    const warm = await client.query(corpusId, state.queryText, state.k);
    state = finishQuery(state, warm, []);

    expect(warm.answer).toBe(coldResult.answer);
    expect(warm.timing.simulated.extraction).toBe(0);
    for (const round of warm.trace) {
      expect(round.extracted_clips).toEqual([]);
    }
    expect(renderTrace(warm.trace)).toContain("no extraction");
  });

  it("bounds the supporting-clip count by the k slider value", async () => {
    for (const k of [1, 2, 3]) {
      state = setK(state, k);
      state = setQueryText(state, "Is there a blue car?");
      state = beginQuery(state);
      const result = await client.query(corpusId, state.queryText, state.k);
      state = finishQuery(state, result, []);
      expect(result.supporting_clips.length).toBeGreaterThan(0);
      expect(result.supporting_clips.length).toBeLessThanOrEqual(k);
    }
  });

  it("exposes a partial extraction fraction in the metrics strip", async () => {
    const metrics = await client.metrics(corpusId);
    const fraction = metrics.fraction_extracted["captioner"];
    expect(fraction).toBeGreaterThan(0);
    expect(fraction).toBeLessThanOrEqual(1);
    expect(metrics.queries_answered).toBeGreaterThanOrEqual(5);
    const html = renderMetricsStrip(metrics, coldResult.timing);
    expect(html).toContain("captioner extracted");
    expect(html).toContain("last query wall");
  });
});
