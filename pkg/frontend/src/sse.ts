// Server-sent event reader over fetch streams.
//
// Written against fetch + ReadableStream rather than the EventSource
// class so the same code runs in the browser and under node test
// harnesses, and so `since`/`limit` query parameters stay explicit.

import type { BusMessage } from "./types.js";

export interface EventStreamOptions {
  since?: number;
  limit?: number;
  signal?: AbortSignal;
}

/** Parse one SSE frame block ("id: ...\nevent: ...\ndata: ...") if complete. */
export function parseFrame(block: string): BusMessage | null {
  let data = "";
  for (const line of block.split("\n")) {
    if (line.startsWith("data: ")) {
      data += line.slice(6);
    }
  }
  if (!data) return null; // keepalive comment or empty frame
  return JSON.parse(data) as BusMessage;
}

/** Stream bus messages from the gateway's /events endpoint, in seq order. */
export async function* readEvents(
  baseUrl: string,
  options: EventStreamOptions = {},
): AsyncGenerator<BusMessage> {
  const params = new URLSearchParams();
  if (options.since !== undefined) params.set("since", String(options.since));
  if (options.limit !== undefined) params.set("limit", String(options.limit));
  const query = params.toString();
  const url = `${baseUrl}/events${query ? "?" + query : ""}`;
  const response = await fetch(url, {
    headers: { accept: "text/event-stream" },
    signal: options.signal,
  });
  if (!response.ok || !response.body) {
    throw new Error(`event stream failed: HTTP ${response.status}`);
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let cut;
      while ((cut = buffer.indexOf("\n\n")) >= 0) {
        const block = buffer.slice(0, cut);
        buffer = buffer.slice(cut + 2);
        const message = parseFrame(block);
        if (message) yield message;
      }
    }
  } finally {
    reader.releaseLock();
    if (!options.signal?.aborted) {
      await response.body.cancel().catch(() => undefined);
    }
  }
}
