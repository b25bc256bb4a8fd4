/** Top-of-page banner: unreachable service, request errors, not-ready notice. */

import { corpusReady, type ConsoleState } from "../state.js";
import { escapeHtml } from "./format.js";

export function renderBanner(state: ConsoleState): string {
  if (state.connection === "unreachable") {
    return `<div class="banner banner--error">Service unreachable: ${escapeHtml(state.banner ?? "")}</div>`;
  }
  if (state.banner !== null) {
    return `<div class="banner banner--error">${escapeHtml(state.banner)}</div>`;
  }
  if (
    state.connection === "connected" &&
    state.selectedCorpus !== null &&
    !corpusReady(state)
  ) {
    return (
      `<div class="banner banner--notice">Corpus is not preprocessed yet; ` +
      `the query box is disabled until the job reports done.</div>`
    );
  }
  return "";
}
