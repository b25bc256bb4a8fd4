/** Preprocessing panel: state badge, clip counters, progress bar, cost. */

import type { PreprocessStatus } from "../api/types.js";
import { progressPercent } from "../state.js";
import { escapeHtml, fmtCost, fmtPercent } from "./format.js";

export function renderPreprocessPanel(status: PreprocessStatus | null): string {
  if (status === null) {
    return `<p class="muted">No corpus selected.</p>`;
  }
  const pct = progressPercent(status);
  const lines = [
    `<div class="preprocess">`,
    `  <div class="preprocess__head">`,
    `    <span class="badge badge--${status.state}">${status.state}</span>`,
    `    <span class="preprocess__count">${status.clips_done} / ${status.clips_total} clips</span>`,
    `    <span class="preprocess__pct">${fmtPercent(pct)}</span>`,
    `  </div>`,
    `  <div class="progress"><div class="progress__bar" style="width: ${pct}%"></div></div>`,
    `  <p class="preprocess__cost">simulated cost so far: ${fmtCost(status.simulated_cost)}</p>`,
  ];
  if (status.state === "failed" && status.error) {
    lines.push(`  <p class="preprocess__error">${escapeHtml(status.error)}</p>`);
  }
  lines.push(`</div>`);
  return lines.join("\n");
}
