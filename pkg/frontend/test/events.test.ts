import { describe, expect, it, vi } from "vitest";

import { backoffDelays, openEventStream, splitNdjsonChunks } from "../src/events";
import type { BusEnvelope } from "../src/types";

describe("splitNdjsonChunks", () => {
  it("handles lines torn across chunks", () => {
    const split = splitNdjsonChunks();
    const a = split('{"topic":"t","seq":1,"st');
    expect(a).toHaveLength(0);
    const b = split('amp":0.5,"payload":{}}\n{"topic":"t","seq":2,"stamp":1,"payload":null}\n');
    expect(b.map((e) => e.seq)).toEqual([1, 2]);
  });

  it("skips unparseable lines without dying", () => {
    const split = splitNdjsonChunks();
    const out = split('garbage\n{"topic":"t","seq":3,"stamp":0,"payload":1}\n');
    expect(out).toHaveLength(1);
    expect(out[0].seq).toBe(3);
  });
});

describe("backoffDelays", () => {
  it("doubles and saturates", () => {
    const next = backoffDelays(500, 2, 4000);
    expect([next(), next(), next(), next(), next()]).toEqual(
      [500, 1000, 2000, 4000, 4000],
    );
  });
});

describe("openEventStream", () => {
  function streamResponse(lines: string[]): Response {
    const body = new ReadableStream<Uint8Array>({
      start(controller) {
        for (const line of lines) controller.enqueue(new TextEncoder().encode(line));
        controller.close();
      },
    });
    return new Response(body, { status: 200 });
  }

  it("delivers envelopes and reconnects after the stream ends", async () => {
    vi.useFakeTimers();
    const seen: BusEnvelope[] = [];
    const statuses: boolean[] = [];
    let calls = 0;
    const fetchFn = vi.fn(async () => {
      calls += 1;
      return streamResponse([
        `{"topic":"nav/pose","seq":${calls},"stamp":0,"payload":{}}\n`,
      ]);
    });
    const handle = openEventStream(
      "http://x",
      "t",
      null,
      (e) => seen.push(e),
      (ok) => statuses.push(ok),
      fetchFn as unknown as typeof fetch,
    );
    await vi.waitFor(() => expect(seen.length).toBeGreaterThanOrEqual(1));
    // first stream closed; advancing past the backoff triggers a reconnect
    await vi.advanceTimersByTimeAsync(600);
    await vi.waitFor(() => expect(seen.length).toBeGreaterThanOrEqual(2));
    expect(statuses[0]).toBe(true);
    expect(statuses).toContain(false);
    handle.stop();
    vi.useRealTimers();
  });
});
