/** Metrics strip: extraction fractions, store sizes, last-query latency. */

import type { MetricsResponse, QueryTiming } from "../api/types.js";
import { escapeHtml, fmtCost, fmtFraction, fmtMs } from "./format.js";

function cell(label: string, value: string): string {
  return (
    `<div class="metric">` +
    `<span class="metric__label">${escapeHtml(label)}</span>` +
    `<span class="metric__value">${value}</span>` +
    `</div>`
  );
}

export function renderMetricsStrip(
  metrics: MetricsResponse | null,
  lastTiming: QueryTiming | null,
): string {
  if (metrics === null) {
    return `<p class="muted">No metrics yet.</p>`;
  }
  const cells: string[] = [];
  for (const [model, fraction] of Object.entries(metrics.fraction_extracted)) {
    cells.push(cell(`${model} extracted`, fmtFraction(fraction)));
  }
  cells.push(cell("text chunks", String(metrics.text_chunks)));
  cells.push(cell("frame vectors", String(metrics.frame_vectors)));
  cells.push(cell("queries answered", String(metrics.queries_answered)));
  for (const [model, cost] of Object.entries(metrics.simulated_cost)) {
    cells.push(cell(`${model} cost`, fmtCost(cost)));
  }
  if (lastTiming !== null) {
    const wall = lastTiming.wall;
    cells.push(
      cell(
        "last query wall",
        `retrieval ${fmtMs(wall.retrieval)}, extraction ${fmtMs(wall.extraction)}, llm ${fmtMs(wall.llm)}`,
      ),
    );
    cells.push(cell("last query extraction", fmtCost(lastTiming.simulated.extraction)));
  }
  return `<div class="metrics">${cells.join("")}</div>`;
}
