/** Browser entry point: wires the /v1 client and renderers to the page.
 *
 * All data on screen is the service's own response payloads; this file only
 * moves them between fetch calls, the view-model, and innerHTML.
 */

import { ApiClient, NotReadyError, ServiceUnreachableError } from "./api/client.js";
import { pollPreprocess } from "./api/poll.js";
import type { ClipDetail } from "./api/types.js";
import { renderBanner } from "./render/banner.js";
import { renderMetricsStrip } from "./render/metrics.js";
import { renderPreprocessPanel } from "./render/progress.js";
import { renderAnswerPane, renderClipCards, renderTrace } from "./render/query.js";
import {
  applyMetrics,
  applyStatus,
  beginQuery,
  canSubmitQuery,
  connected,
  connecting,
  corpusReady,
  failQuery,
  finishQuery,
  initialState,
  K_MAX,
  K_MIN,
  selectCorpus,
  setK,
  setQueryText,
  unreachable,
  type ConsoleState,
} from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error("element not found: " + id);
  return node as T;
}

function main(): void {
  const bannerEl = el<HTMLDivElement>("banner");
  const apiBaseEl = el<HTMLInputElement>("api-base");
  const connectBtn = el<HTMLButtonElement>("connect");
  const connectionLabel = el<HTMLSpanElement>("connection-label");
  const corpusSelect = el<HTMLSelectElement>("corpus-list");
  const seedEl = el<HTMLInputElement>("seed");
  const nClipsEl = el<HTMLInputElement>("n-clips");
  const registerBtn = el<HTMLButtonElement>("register");
  const startBtn = el<HTMLButtonElement>("start-preprocess");
  const progressEl = el<HTMLDivElement>("progress-panel");
  const queryForm = el<HTMLFormElement>("query-form");
  const queryInput = el<HTMLInputElement>("query-input");
  const querySubmit = el<HTMLButtonElement>("query-submit");
  const kSlider = el<HTMLInputElement>("k-slider");
  const kValue = el<HTMLSpanElement>("k-value");
  const answerEl = el<HTMLDivElement>("answer-pane");
  const traceEl = el<HTMLDivElement>("trace-panel");
  const cardsEl = el<HTMLDivElement>("clip-cards");
  const metricsEl = el<HTMLDivElement>("metrics-strip");

  let state: ConsoleState = initialState();
  let client: ApiClient | null = null;

  kSlider.min = String(K_MIN);
  kSlider.max = String(K_MAX);
  kSlider.value = String(state.k);

  function render(): void {
    bannerEl.innerHTML = renderBanner(state);
    connectionLabel.textContent = state.connection;
    progressEl.innerHTML = renderPreprocessPanel(state.job);
    answerEl.innerHTML = renderAnswerPane(state.lastResult);
    traceEl.innerHTML = renderTrace(state.lastResult?.trace ?? []);
    cardsEl.innerHTML = renderClipCards(state.supportingClips);
    metricsEl.innerHTML = renderMetricsStrip(state.metrics, state.lastResult?.timing ?? null);
    kValue.textContent = String(state.k);

    const ready = state.connection === "connected" && state.selectedCorpus !== null;
    corpusSelect.disabled = state.connection !== "connected";
    registerBtn.disabled = state.connection !== "connected";
    startBtn.disabled = !ready || state.job?.state === "running";
    queryInput.disabled = !ready || !corpusReady(state);
    querySubmit.disabled = !canSubmitQuery(state);
  }

  function update(next: ConsoleState): void {
    state = next;
    render();
  }

  function onFailure(err: unknown): void {
    if (err instanceof ServiceUnreachableError) {
      update(unreachable(state, err.message));
    } else if (err instanceof Error) {
      update(failQuery(state, err.message));
    } else {
      update(failQuery(state, String(err)));
    }
  }

  function renderCorpusOptions(): void {
    corpusSelect.innerHTML = state.corpora
      .map((c) => {
        const selected = c.corpus_id === state.selectedCorpus ? " selected" : "";
        const readiness = c.preprocessed ? "ready" : "raw";
        return `<option value="${c.corpus_id}"${selected}>${c.corpus_id} (${c.clips} clips, ${readiness})</option>`;
      })
      .join("");
    if (state.corpora.length === 0) {
      corpusSelect.innerHTML = `<option value="">(no corpora)</option>`;
    }
  }

  async function refreshCorpora(): Promise<void> {
    if (!client) return;
    const list = await client.listCorpora();
    update(connected(state, list.corpora));
    renderCorpusOptions();
  }

  async function refreshSelected(): Promise<void> {
    if (!client || state.selectedCorpus === null) return;
    const status = await client.preprocessStatus(state.selectedCorpus);
    update(applyStatus(state, status));
    if (status.state === "done") {
      const metrics = await client.metrics(state.selectedCorpus);
      update(applyMetrics(state, metrics));
    }
  }

  connectBtn.addEventListener("click", () => {
    update(connecting(state));
    client = new ApiClient(apiBaseEl.value.trim());
    refreshCorpora().catch(onFailure);
  });

  registerBtn.addEventListener("click", () => {
    if (!client) return;
    const spec = { seed: Number(seedEl.value), n_clips: Number(nClipsEl.value) };
    client
      .createSyntheticCorpus(spec)
      .then(async (created) => {
        await refreshCorpora();
        update(selectCorpus(state, created.corpus_id));
        renderCorpusOptions();
        await refreshSelected();
      })
      .catch(onFailure);
  });

  corpusSelect.addEventListener("change", () => {
    update(selectCorpus(state, corpusSelect.value || null));
    refreshSelected().catch(onFailure);
  });

  startBtn.addEventListener("click", () => {
    if (!client || state.selectedCorpus === null) return;
    const corpusId = state.selectedCorpus;
    client
      .startPreprocess(corpusId)
      .then(() =>
        pollPreprocess(client as ApiClient, corpusId, {
          intervalMs: 200,
          onStatus: (status) => update(applyStatus(state, status)),
        }),
      )
      .then(async () => {
        await refreshCorpora();
        await refreshSelected();
      })
      .catch(onFailure);
  });

  kSlider.addEventListener("input", () => {
    update(setK(state, Number(kSlider.value)));
  });

  queryInput.addEventListener("input", () => {
    update(setQueryText(state, queryInput.value));
  });

  queryForm.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!client || !canSubmitQuery(state)) return;
    const corpusId = state.selectedCorpus as string;
    const api = client;
    update(beginQuery(state));
    api
      .query(corpusId, state.queryText.trim(), state.k)
      .then(async (result) => {
        const clips: ClipDetail[] = await Promise.all(
          result.supporting_clips.map((id) => api.clipDetail(corpusId, id)),
        );
        update(finishQuery(state, result, clips));
        const metrics = await api.metrics(corpusId);
        update(applyMetrics(state, metrics));
      })
      .catch((err: unknown) => {
        if (err instanceof NotReadyError) {
          update(failQuery(state, err.message));
          refreshSelected().catch(onFailure);
        } else {
          onFailure(err);
        }
      });
  });

  render();
  renderCorpusOptions();
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", main);
} else {
  main();
}
