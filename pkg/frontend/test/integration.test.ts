// End-to-end console checks against a live stack: calendar CRUD reflected in
// the sim, deadman teleop, no-go layers blocking planning, and estop.
// Spawns `carebot serve` (python) on an ephemeral port.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api";
import { PolygonEditor } from "../src/mapmodel";
import type { Pose, Status } from "../src/types";

const REPO_ROOT = resolve(__dirname, "..", "..");
const PORT = 18750 + Math.floor(Math.random() * 200);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let api: ApiClient;

function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

async function waitFor<T>(
  fn: () => Promise<T>,
  pred: (v: T) => boolean,
  timeoutMs: number,
  stepMs = 300,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  let last: T | undefined;
  for (;;) {
    try {
      last = await fn();
      if (pred(last)) return last;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting; last=${JSON.stringify(last)}`);
    }
    await sleep(stepMs);
  }
}

function dist(a: Pose, b: Pose): number {
  return Math.hypot(a.x - b.x, a.y - b.y);
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "carebot-ui-"));
  server = spawn(
    "python3",
    [
      "-m",
      "carebot.cli",
      "serve",
      join(REPO_ROOT, "scenarios", "integration.yaml"),
      "--port",
      String(PORT),
      "--data-dir",
      dataDir,
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  api = new ApiClient(BASE, "operator-token");
  await waitFor(() => api.status(), () => true, 30000);
}, 40000);

afterAll(async () => {
  server?.kill("SIGINT");
  await sleep(1000);
  server?.kill("SIGKILL");
});

describe("console against the live stack", () => {
  it("status reports a fresh robot", async () => {
    const s = await api.status();
    expect(s.battery).toBeGreaterThan(0.9);
    expect(s.estop).toBe(false);
  });

  it("teleop moves the robot and deadman release stops it within 600 ms", async () => {
    const before = (await api.status()).pose;
    // hold: renew faster than the 500 ms deadman, like the console does
    for (let i = 0; i < 8; i++) {
      await api.teleop(0.5, 0.0);
      await sleep(200);
    }
    const moving = (await api.status()).pose;
    expect(dist(moving, before)).toBeGreaterThan(0.3);

    await api.teleop(0, 0); // release posts one zero, then no renewals
    await sleep(700); // > 600 ms after release the platform must be stopped
    const p1 = (await api.status()).pose;
    await sleep(400);
    const p2 = (await api.status()).pose;
    expect(dist(p1, p2)).toBeLessThan(1e-6);
  }, 20000);

  it("calendar entry created in the console appears and fires in the sim", async () => {
    const now = (await api.status()).clock;
    await api.upsertCalendar({
      entry_id: "ui-test-entertain",
      action: "entertain(lounge)",
      once_at: Math.ceil(now + 3),
      daily_hhmm: null,
      weekdays: null,
      enabled: true,
      expiry_s: null,
    });
    const listed = await api.calendar();
    expect(listed.some((e) => e.entry_id === "ui-test-entertain")).toBe(true);

    const status = await waitFor(
      () => api.status(),
      (s: Status) => (s.current_action ?? "").startsWith("entertain"),
      30000,
    );
    expect(status.current_action).toContain("entertain");

    await api.deleteCalendar("ui-test-entertain");
    const after = await api.calendar();
    expect(after.some((e) => e.entry_id === "ui-test-entertain")).toBe(false);
  }, 45000);

  it("a no-go polygon drawn in the console blocks planning", async () => {
    const editor = new PolygonEditor();
    editor.label = "ui block";
    editor.addPoint(9.0, 5.5);
    editor.addPoint(11.5, 5.5);
    editor.addPoint(11.5, 7.5);
    editor.addPoint(9.0, 7.5);
    const existing = await api.layers();
    await api.putLayers([...existing, editor.toLayer()]);
    const got = await api.layers();
    expect(got.some((l) => l.label === "ui block")).toBe(true);

    // goal inside the active layer: the drive request must fail with no_path
    await api.triggerSkill("goto(10.0, 6.5)");
    await waitFor(
      async () => {
        const page = await api.logs(0, 2000);
        return page.entries.some(
          (r) =>
            r.skill === "goto" && r.state === "failed" && r.reason === "no_path",
        );
      },
      (found) => found,
      30000,
    );
  }, 45000);

  it("estop freezes the robot and motion endpoints report conflict", async () => {
    await api.estop(true);
    const s = await api.status();
    expect(s.estop).toBe(true);

    await expect(api.teleop(0.5, 0)).rejects.toThrowError(ApiError);
    await api.teleop(0.5, 0).catch((e: ApiError) => expect(e.status).toBe(409));
    await expect(api.triggerSkill("charge")).rejects.toThrowError(ApiError);

    const p1 = (await api.status()).pose;
    await sleep(800);
    const p2 = (await api.status()).pose;
    expect(dist(p1, p2)).toBeLessThan(1e-9);

    await api.estop(false);
    expect((await api.status()).estop).toBe(false);
  }, 20000);
});
