/** Answer pane, per-iteration trace, and supporting-clip cards. */

import type { ClipDetail, IterationTrace, QueryResult } from "../api/types.js";
import { escapeHtml, fmtCost, fmtTimeRange } from "./format.js";

export function renderAnswerPane(result: QueryResult | null): string {
  if (result === null) {
    return `<p class="muted">No query answered yet.</p>`;
  }
  const lastRound = result.trace[result.trace.length - 1];
  const sentinel = lastRound !== undefined && lastRound.sentinel;
  const rounds = result.iterations_used === 1 ? "1 iteration" : `${result.iterations_used} iterations`;
  const clips = result.supporting_clips
    .map((id) => `<li class="clip-chip">${escapeHtml(id)}</li>`)
    .join("");
  return [
    `<div class="answer${sentinel ? " answer--sentinel" : ""}">`,
    `  <p class="answer__text">${escapeHtml(result.answer)}</p>`,
    `  <p class="answer__meta">${rounds}, ${result.supporting_clips.length} supporting clips</p>`,
    `  <ul class="answer__clips">${clips}</ul>`,
    `</div>`,
  ].join("\n");
}

function renderIteration(round: IterationTrace): string {
  const badge = round.sentinel
    ? `<span class="badge badge--sentinel">sentinel hit</span>`
    : `<span class="badge badge--answered">answered</span>`;
  const context = round.context_chunk_ids.length
    ? round.context_chunk_ids.map(escapeHtml).join(", ")
    : "none";
  const extraction = round.extracted_clips.length
    ? `<p class="iteration__extraction">extracted ${round.extracted_clips.length} clips ` +
      `(${round.chunks_added} chunks added, ${fmtCost(round.extraction_cost)}): ` +
      `${round.extracted_clips.map(escapeHtml).join(", ")}</p>`
    : `<p class="iteration__extraction iteration__extraction--none">no extraction</p>`;
  return [
    `<section class="iteration">`,
    `  <header class="iteration__head">`,
    `    <span class="iteration__label">Iteration ${round.iteration}</span>`,
    `    ${badge}`,
    `  </header>`,
    `  <p class="iteration__answer">${escapeHtml(round.answer)}</p>`,
    `  <p class="iteration__context">context: ${context}</p>`,
    `  ${extraction}`,
    `</section>`,
  ].join("\n");
}

export function renderTrace(trace: IterationTrace[]): string {
  if (trace.length === 0) {
    return "";
  }
  return `<div class="trace">\n${trace.map(renderIteration).join("\n")}\n</div>`;
}

function renderChunkRow(chunk: ClipDetail["chunks"][number]): string {
  return (
    `<li class="chunk chunk--${chunk.level}">` +
    `<span class="chunk__level">${chunk.level}</span>` +
    `<span class="chunk__model">${escapeHtml(chunk.source_model_id)}</span>` +
    `<span class="chunk__text">${escapeHtml(chunk.text)}</span>` +
    `</li>`
  );
}

function renderClipCard(clip: ClipDetail): string {
  const thumb = clip.thumbnail_url
    ? `  <img class="clip-card__thumb" src="${escapeHtml(clip.thumbnail_url)}" alt="${escapeHtml(clip.clip_id)} thumbnail">\n`
    : "";
  const models = clip.extraction_state.length
    ? clip.extraction_state.map(escapeHtml).join(", ")
    : "none";
  return [
    `<li class="clip-card">`,
    thumb +
      `  <header class="clip-card__head">` +
      `<span class="clip-card__id">${escapeHtml(clip.clip_id)}</span>` +
      `<span class="clip-card__time">${fmtTimeRange(clip.start, clip.end)}</span>` +
      `</header>`,
    `  <p class="clip-card__models">${clip.frames.length} keyframes, models run: ${models}</p>`,
    `  <ul class="clip-card__chunks">${clip.chunks.map(renderChunkRow).join("")}</ul>`,
    `</li>`,
  ].join("\n");
}

export function renderClipCards(clips: ClipDetail[]): string {
  if (clips.length === 0) {
    return "";
  }
  return `<ul class="clip-cards">\n${clips.map(renderClipCard).join("\n")}\n</ul>`;
}
