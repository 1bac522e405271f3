// Typed client for the gateway. Every mutation carries a fresh X-Request-Id
// so a retried call is idempotent server-side.

import type {
  CalendarEntry,
  EbtAlert,
  LayerDoc,
  LogPage,
  MapPayload,
  NodeSummary,
  Status,
} from "./types";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

let requestCounter = 0;

export function nextRequestId(): string {
  requestCounter += 1;
  return `ui-${Date.now()}-${requestCounter}`;
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    public token: string,
    private fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {
      Authorization: `Bearer ${this.token}`,
    };
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (method !== "GET") headers["X-Request-Id"] = nextRequestId();
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const doc = await resp.json();
        detail = (doc as { detail?: string }).detail ?? JSON.stringify(doc);
      } catch {
        /* keep statusText */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  status(): Promise<Status> {
    return this.call("GET", "/status");
  }

  map(): Promise<MapPayload> {
    return this.call("GET", "/map");
  }

  layers(): Promise<LayerDoc[]> {
    return this.call("GET", "/map/layers");
  }

  putLayers(layers: LayerDoc[]): Promise<{ count: number }> {
    return this.call("PUT", "/map/layers", layers);
  }

  teleop(v: number, omega: number): Promise<{ ok: boolean }> {
    return this.call("POST", "/teleop", { v, omega });
  }

  estop(on: boolean): Promise<{ estop: boolean }> {
    return on ? this.call("POST", "/estop") : this.call("DELETE", "/estop");
  }

  calendar(): Promise<CalendarEntry[]> {
    return this.call("GET", "/calendar");
  }

  upsertCalendar(entry: CalendarEntry): Promise<CalendarEntry> {
    return this.call("POST", "/calendar", entry);
  }

  deleteCalendar(entryId: string): Promise<{ deleted: string }> {
    return this.call("DELETE", `/calendar/${encodeURIComponent(entryId)}`);
  }

  nodes(): Promise<NodeSummary[]> {
    return this.call("GET", "/nodes");
  }

  nodeVerb(name: string, verb: "start" | "stop" | "restart"): Promise<NodeSummary> {
    return this.call("POST", `/nodes/${encodeURIComponent(name)}/${verb}`);
  }

  setParam(node: string, key: string, value: unknown): Promise<unknown> {
    return this.call("POST", `/nodes/${encodeURIComponent(node)}/params`, {
      key,
      value,
    });
  }

  logs(since: number, limit = 200): Promise<LogPage> {
    return this.call("GET", `/logs?since=${since}&limit=${limit}`);
  }

  ebtAlerts(): Promise<EbtAlert[]> {
    return this.call("GET", "/ebt/alerts");
  }

  ackEbtAlert(index: number): Promise<EbtAlert> {
    return this.call("POST", `/ebt/alerts/${index}/ack`);
  }

  triggerSkill(action: string): Promise<{ action: string; priority: number }> {
    return this.call("POST", "/skills", { action });
  }

  setHolderPlaced(placed: boolean): Promise<{ placed: boolean }> {
    return this.call("POST", "/holder", { placed });
  }
}
