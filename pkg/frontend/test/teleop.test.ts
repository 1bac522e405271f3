import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { DeadmanTeleop, RENEW_MS } from "../src/teleop";

describe("DeadmanTeleop", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("renews the command faster than the 500 ms deadman while held", async () => {
    const sent: [number, number][] = [];
    const t = new DeadmanTeleop(async (v, o) => {
      sent.push([v, o]);
    });
    t.hold(0.5, 0.1);
    expect(sent).toEqual([[0.5, 0.1]]);
    await vi.advanceTimersByTimeAsync(1000);
    // one immediate send plus renewals every RENEW_MS
    expect(sent.length).toBe(1 + Math.floor(1000 / RENEW_MS));
    expect(RENEW_MS).toBeLessThan(500);
    t.release();
  });

  it("release posts a single zero and stops renewing", async () => {
    const sent: [number, number][] = [];
    const t = new DeadmanTeleop(async (v, o) => {
      sent.push([v, o]);
    });
    t.hold(0.5, 0);
    await vi.advanceTimersByTimeAsync(500);
    t.release();
    const atRelease = sent.length;
    expect(sent[atRelease - 1]).toEqual([0, 0]);
    await vi.advanceTimersByTimeAsync(2000);
    expect(sent.length).toBe(atRelease);   // nothing after release
    expect(t.active).toBe(false);
  });

  it("disable blocks new holds until enabled (estop behavior)", async () => {
    const sent: [number, number][] = [];
    const t = new DeadmanTeleop(async (v, o) => {
      sent.push([v, o]);
    });
    t.disable();
    t.hold(0.5, 0);
    expect(sent.filter(([v]) => v !== 0)).toHaveLength(0);
    t.enable();
    t.hold(0.5, 0);
    expect(sent.filter(([v]) => v !== 0)).toHaveLength(1);
    t.release();
  });

  it("send failure forces a release", async () => {
    let fail = false;
    const sent: [number, number][] = [];
    const t = new DeadmanTeleop(async (v, o) => {
      if (fail && v !== 0) throw new Error("409 estop");
      sent.push([v, o]);
    });
    t.hold(0.4, 0);
    fail = true;
    await vi.advanceTimersByTimeAsync(RENEW_MS + 10);
    await vi.waitFor(() => expect(t.active).toBe(false));
  });
});
