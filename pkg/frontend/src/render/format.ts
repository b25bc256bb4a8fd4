/** Small formatting helpers shared by the render modules. */

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => ESCAPES[ch] ?? ch);
}

/** Simulated cost units with thousands separators: 60000 -> "60,000 units". */
export function fmtCost(units: number): string {
  return `${units.toLocaleString("en-US")} units`;
}

/** Wall-clock seconds shown as milliseconds: 0.00046 -> "0.46 ms". */
export function fmtMs(seconds: number): string {
  return `${(seconds * 1000).toFixed(2)} ms`;
}

export function fmtFraction(value: number): string {
  return value.toFixed(2);
}

export function fmtPercent(percent: number): string {
  return `${percent}%`;
}

/** Clip time range in seconds: "0.0s - 5.0s". */
export function fmtTimeRange(start: number, end: number): string {
  return `${start.toFixed(1)}s - ${end.toFixed(1)}s`;
}
