/** Shared test helpers: fixture loading and a recording fake fetch. */

import { readFileSync } from "node:fs";

/** Load a captured service response from tests/fixtures. */
export function loadFixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as T;
}

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

/** A fetch stub that records calls and replays queued responses in order. */
export function recordingFetch(responses: Response[]): {
  calls: RecordedCall[];
  fetchFn: typeof fetch;
} {
  const calls: RecordedCall[] = [];
  const queue = [...responses];
  const fetchFn: typeof fetch = async (input, init) => {
    const body = typeof init?.body === "string" ? JSON.parse(init.body) : null;
    calls.push({
      url: String(input),
      method: init?.method ?? "GET",
      body,
    });
    const next = queue.shift();
    if (!next) throw new Error("recordingFetch: response queue is empty");
    return next;
  };
  return { calls, fetchFn };
}

/** A JSON Response with the given status. */
export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
