import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, nextRequestId } from "../src/api";

function mockFetch(status = 200, body: unknown = {}) {
  return vi.fn(async (_url: RequestInfo | URL, _init?: RequestInit) => {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  });
}

describe("ApiClient", () => {
  it("sends the bearer token on every call", async () => {
    const f = mockFetch(200, { battery: 1 });
    const api = new ApiClient("http://x", "tok-1", f as unknown as typeof fetch);
    await api.status();
    const init = f.mock.calls[0][1]!;
    expect((init.headers as Record<string, string>).Authorization).toBe("Bearer tok-1");
  });

  it("adds X-Request-Id to mutations but not reads", async () => {
    const f = mockFetch();
    const api = new ApiClient("http://x", "t", f as unknown as typeof fetch);
    await api.status();
    await api.teleop(0.5, 0);
    const readHeaders = f.mock.calls[0][1]!.headers as Record<string, string>;
    const writeHeaders = f.mock.calls[1][1]!.headers as Record<string, string>;
    expect(readHeaders["X-Request-Id"]).toBeUndefined();
    expect(writeHeaders["X-Request-Id"]).toMatch(/^ui-/);
  });

  it("request ids are unique", () => {
    const a = nextRequestId();
    const b = nextRequestId();
    expect(a).not.toBe(b);
  });

  it("throws ApiError carrying the server detail", async () => {
    const f = mockFetch(409, { detail: "estop active" });
    const api = new ApiClient("http://x", "t", f as unknown as typeof fetch);
    await expect(api.teleop(1, 0)).rejects.toThrowError(ApiError);
    await api.teleop(1, 0).catch((e: ApiError) => {
      expect(e.status).toBe(409);
      expect(e.message).toBe("estop active");
    });
  });

  it("builds node and calendar paths with encoding", async () => {
    const f = mockFetch();
    const api = new ApiClient("http://x", "t", f as unknown as typeof fetch);
    await api.nodeVerb("nav igation", "restart");
    expect(f.mock.calls[0][0]).toBe("http://x/nodes/nav%20igation/restart");
    await api.deleteCalendar("a/b");
    expect(f.mock.calls[1][0]).toBe("http://x/calendar/a%2Fb");
  });
});
