// NDJSON /events stream reader with exponential-backoff reconnect.
// The UI never mutates anything through this channel; it is display-only.

import type { BusEnvelope } from "./types";

export function splitNdjsonChunks(): (chunk: string) => BusEnvelope[] {
  // stateful splitter: carries partial lines across chunks
  let buffer = "";
  return (chunk: string) => {
    buffer += chunk;
    const out: BusEnvelope[] = [];
    let idx: number;
    while ((idx = buffer.indexOf("\n")) >= 0) {
      const line = buffer.slice(0, idx).trim();
      buffer = buffer.slice(idx + 1);
      if (!line) continue;
      try {
        out.push(JSON.parse(line) as BusEnvelope);
      } catch {
        // a torn line mid-reconnect is dropped, not fatal
      }
    }
    return out;
  };
}

export function backoffDelays(initialMs = 500, factor = 2, maxMs = 10000): () => number {
  let current = initialMs;
  return () => {
    const d = current;
    current = Math.min(maxMs, current * factor);
    return d;
  };
}

export interface StreamHandle {
  stop(): void;
}

export function openEventStream(
  baseUrl: string,
  token: string,
  pattern: string | null,
  onEnvelope: (env: BusEnvelope) => void,
  onStatus?: (connected: boolean) => void,
  fetchFn: typeof fetch = fetch.bind(globalThis),
): StreamHandle {
  let stopped = false;
  let controller: AbortController | null = null;
  const nextDelay = backoffDelays();

  async function connect(): Promise<void> {
    while (!stopped) {
      controller = new AbortController();
      const url = pattern
        ? `${baseUrl}/events?pattern=${encodeURIComponent(pattern)}`
        : `${baseUrl}/events`;
      try {
        const resp = await fetchFn(url, {
          headers: { Authorization: `Bearer ${token}` },
          signal: controller.signal,
        });
        if (!resp.ok || !resp.body) throw new Error(`stream ${resp.status}`);
        onStatus?.(true);
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        const split = splitNdjsonChunks();
        for (;;) {
          const { done, value } = await reader.read();
          if (done || stopped) break;
          for (const env of split(decoder.decode(value, { stream: true }))) {
            onEnvelope(env);
          }
        }
      } catch {
        /* fall through to reconnect */
      }
      onStatus?.(false);
      if (stopped) return;
      await new Promise((r) => setTimeout(r, nextDelay()));
    }
  }

  void connect();
  return {
    stop() {
      stopped = true;
      controller?.abort();
    },
  };
}
