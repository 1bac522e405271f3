// Operator console: status, live map with teleop and no-go editor, calendar,
// node monitor, logs, EBT alerts and skill triggers. All authority lives in
// the gateway; this page only calls the documented HTTP API.

import { ApiClient, ApiError } from "./api";
import { CalendarModel, parseEntryForm } from "./calendar";
import { openEventStream, StreamHandle } from "./events";
import { LogPager } from "./logs";
import {
  decodeRaster,
  ledColor,
  MapTransform,
  Overlays,
  PolygonEditor,
} from "./mapmodel";
import { DeadmanTeleop } from "./teleop";
import type { BusEnvelope, LayerDoc, MapPayload, Status } from "./types";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const state = {
  api: null as ApiClient | null,
  role: "operator",
  stream: null as StreamHandle | null,
  map: null as MapPayload | null,
  raster: null as Uint8Array | null,
  transform: null as MapTransform | null,
  overlays: { pose: null, path: [], people: [] } as Overlays,
  status: null as Status | null,
  editor: new PolygonEditor(),
  editing: false,
  layers: [] as LayerDoc[],
  calendar: null as CalendarModel | null,
  pager: null as LogPager | null,
  teleop: null as DeadmanTeleop | null,
};

function setText(id: string, text: string): void {
  el(id).textContent = text;
}

function flash(message: string, isError = true): void {
  const bar = el("flash");
  bar.textContent = message;
  bar.className = isError ? "flash error" : "flash ok";
  setTimeout(() => {
    bar.textContent = "";
    bar.className = "flash";
  }, 4000);
}

async function guarded<T>(op: () => Promise<T>): Promise<T | null> {
  try {
    return await op();
  } catch (e) {
    flash(e instanceof ApiError ? `${e.status}: ${e.message}` : String(e));
    return null;
  }
}

// ---------------------------------------------------------------- status --

function renderStatus(s: Status): void {
  state.status = s;
  setText("st-battery", `${(s.battery * 100).toFixed(1)}%`);
  setText("st-action", s.current_action ?? "idle");
  setText("st-pose", `(${s.pose.x.toFixed(2)}, ${s.pose.y.toFixed(2)})`);
  setText("st-clock", `${s.clock.toFixed(1)} s`);
  setText("st-loc", s.localization_health.toFixed(2));
  const led = el("st-led");
  led.style.background = ledColor(s.led);
  led.title = s.led;
  const estopBtn = el<HTMLButtonElement>("btn-estop");
  estopBtn.textContent = s.estop ? "release emergency stop" : "EMERGENCY STOP";
  estopBtn.className = s.estop ? "estop released" : "estop";
  const disabled = s.estop;
  document.querySelectorAll<HTMLButtonElement>(".motion").forEach((b) => {
    b.disabled = disabled;
  });
  if (state.teleop) {
    if (disabled) state.teleop.disable();
    else state.teleop.enable();
  }
}

// ------------------------------------------------------------------- map --

function paintMap(): void {
  const canvas = el<HTMLCanvasElement>("map-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx || !state.map || !state.raster || !state.transform) return;
  const t = state.transform;
  const [w, h] = t.canvasSize();
  canvas.width = w;
  canvas.height = h;
  const img = ctx.createImageData(state.map.width, state.map.height);
  for (let i = 0; i < state.raster.length; i++) {
    const v = state.raster[i];
    const shade = v === 0 ? 40 : v === 255 ? 245 : 160;
    img.data[i * 4] = shade;
    img.data[i * 4 + 1] = shade;
    img.data[i * 4 + 2] = shade;
    img.data[i * 4 + 3] = 255;
  }
  // raster row 0 is world-bottom: draw flipped via an offscreen canvas
  const off = document.createElement("canvas");
  off.width = state.map.width;
  off.height = state.map.height;
  off.getContext("2d")!.putImageData(img, 0, 0);
  ctx.save();
  ctx.scale(1, -1);
  ctx.drawImage(off, 0, -h, w, h);
  ctx.restore();

  ctx.lineWidth = 2;
  for (const layer of state.layers) {
    if (!layer.polygon.length) continue;
    ctx.beginPath();
    layer.polygon.forEach(([x, y], i) => {
      const [px, py] = t.worldToCanvas(x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.closePath();
    ctx.fillStyle = "rgba(220, 60, 60, 0.25)";
    ctx.strokeStyle = "rgba(220, 60, 60, 0.8)";
    ctx.fill();
    ctx.stroke();
  }

  if (state.overlays.path.length > 1) {
    ctx.beginPath();
    state.overlays.path.forEach(([x, y], i) => {
      const [px, py] = t.worldToCanvas(x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.strokeStyle = "#2a7";
    ctx.stroke();
  }

  for (const p of state.overlays.people) {
    const [px, py] = t.worldToCanvas(p.x, p.y);
    ctx.beginPath();
    ctx.arc(px, py, 6, 0, Math.PI * 2);
    ctx.fillStyle = "#c80";
    ctx.fill();
  }

  if (state.overlays.pose) {
    const { x, y, theta } = state.overlays.pose;
    const [px, py] = t.worldToCanvas(x, y);
    ctx.beginPath();
    ctx.arc(px, py, 8, 0, Math.PI * 2);
    ctx.fillStyle = "#36c";
    ctx.fill();
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(px + 14 * Math.cos(-theta), py + 14 * Math.sin(-theta));
    ctx.strokeStyle = "#36c";
    ctx.stroke();
  }

  if (state.editing && state.editor.points.length) {
    ctx.beginPath();
    state.editor.points.forEach(([x, y], i) => {
      const [px, py] = t.worldToCanvas(x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
      ctx.fillStyle = "#d33";
      ctx.fillRect(px - 3, py - 3, 6, 6);
    });
    ctx.strokeStyle = "#d33";
    ctx.stroke();
  }
}

async function loadMap(): Promise<void> {
  if (!state.api) return;
  const payload = await guarded(() => state.api!.map());
  if (!payload) return;
  state.map = payload;
  state.raster = decodeRaster(payload);
  const scale = Math.min(720 / (payload.width * payload.resolution), 60);
  state.transform = new MapTransform(
    payload.width,
    payload.height,
    payload.resolution,
    payload.origin[0],
    payload.origin[1],
    scale,
  );
  state.layers = (await guarded(() => state.api!.layers())) ?? [];
  paintMap();
}

function onMapClick(ev: MouseEvent): void {
  if (!state.transform || !state.api) return;
  const canvas = el<HTMLCanvasElement>("map-canvas");
  const rect = canvas.getBoundingClientRect();
  const [x, y] = state.transform.canvasToWorld(
    ev.clientX - rect.left,
    ev.clientY - rect.top,
  );
  if (state.editing) {
    state.editor.addPoint(Math.round(x * 100) / 100, Math.round(y * 100) / 100);
    paintMap();
    return;
  }
  // click-to-drive: a manual, calendar-free request through the normal API
  void guarded(() =>
    state.api!.triggerSkill(`goto(${x.toFixed(2)}, ${y.toFixed(2)})`),
  ).then((r) => {
    if (r) flash(`driving to (${x.toFixed(2)}, ${y.toFixed(2)})`, false);
  });
}

// -------------------------------------------------------------- calendar --

function renderCalendar(): void {
  const tbody = el("cal-rows");
  tbody.innerHTML = "";
  for (const e of state.calendar?.entries ?? []) {
    const tr = document.createElement("tr");
    const when = e.daily_hhmm ? `daily ${e.daily_hhmm}` : `once ${e.once_at}`;
    tr.innerHTML = `<td>${e.entry_id}</td><td>${e.action}</td><td>${when}</td>` +
      `<td>${e.enabled ? "on" : "off"}</td>`;
    const td = document.createElement("td");
    const del = document.createElement("button");
    del.textContent = "delete";
    del.onclick = () => {
      void state.calendar!.remove(e.entry_id).then((ok) => {
        if (!ok) flash(state.calendar!.error ?? "delete failed");
        renderCalendar();
      });
    };
    td.appendChild(del);
    tr.appendChild(td);
    tbody.appendChild(tr);
  }
}

// ----------------------------------------------------------------- nodes --

async function renderNodes(): Promise<void> {
  if (!state.api) return;
  const nodes = await guarded(() => state.api!.nodes());
  if (!nodes) return;
  const tbody = el("node-rows");
  tbody.innerHTML = "";
  for (const n of nodes) {
    const tr = document.createElement("tr");
    tr.innerHTML = `<td>${n.name}</td><td class="state-${n.state}">${n.state}</td>` +
      `<td>${n.restarts_used}</td>`;
    const td = document.createElement("td");
    for (const verb of ["start", "stop", "restart"] as const) {
      const b = document.createElement("button");
      b.textContent = verb;
      b.disabled = state.role !== "admin";
      b.onclick = () => {
        void guarded(() => state.api!.nodeVerb(n.name, verb)).then(() => renderNodes());
      };
      td.appendChild(b);
    }
    tr.appendChild(td);
    tbody.appendChild(tr);
  }
}

// --------------------------------------------------------------- ebt/logs --

async function renderEbt(): Promise<void> {
  if (!state.api) return;
  const alerts = await guarded(() => state.api!.ebtAlerts());
  if (!alerts) return;
  const banner = el("ebt-banner");
  const open = alerts.map((a, i) => ({ a, i })).filter(({ a }) => !a.ack);
  banner.style.display = open.length ? "block" : "none";
  banner.innerHTML = "";
  for (const { a, i } of open) {
    const row = document.createElement("div");
    row.textContent = `elevated temperature: ${a.person} ${a.temp_k.toFixed(1)} K ` +
      `(${a.point_used}, confidence ${(a.confidence * 100).toFixed(0)}%) `;
    const ack = document.createElement("button");
    ack.textContent = "acknowledge";
    ack.onclick = () => {
      void guarded(() => state.api!.ackEbtAlert(i)).then(() => renderEbt());
    };
    row.appendChild(ack);
    banner.appendChild(row);
  }
}

async function loadMoreLogs(): Promise<void> {
  if (!state.pager) return;
  await guarded(() => state.pager!.loadMore());
  const box = el("log-box");
  box.innerHTML = state.pager.rows
    .map((r) => `<div class="logrow">${JSON.stringify(r)}</div>`)
    .join("");
}

// --------------------------------------------------------------- wiring --

function onEnvelope(env: BusEnvelope): void {
  const payload = env.payload as Record<string, unknown>;
  if (env.topic === "nav/pose") {
    state.overlays.pose = {
      x: payload.x as number,
      y: payload.y as number,
      theta: payload.theta as number,
    };
    paintMap();
  } else if (env.topic === "nav/path") {
    state.overlays.path = (payload.points as [number, number][]) ?? [];
  } else if (env.topic === "world/people") {
    state.overlays.people = (payload.people as Overlays["people"]) ?? [];
  } else if (env.topic === "robot/status") {
    void guarded(() => state.api!.status()).then((s) => s && renderStatus(s));
  } else if (env.topic === "ebt/alerts") {
    void renderEbt();
  }
}

async function connect(): Promise<void> {
  const base = el<HTMLInputElement>("in-base").value.replace(/\/+$/, "");
  const token = el<HTMLInputElement>("in-token").value.trim();
  state.api = new ApiClient(base, token);
  try {
    const r = await fetch(`${base}/whoami`, {
      headers: { Authorization: `Bearer ${token}` },
    });
    if (!r.ok) throw new Error(`auth failed: ${r.status}`);
    state.role = ((await r.json()) as { role: string }).role;
  } catch (e) {
    flash(String(e));
    return;
  }
  localStorage.setItem("carebot-base", base);
  localStorage.setItem("carebot-token", token);
  setText("who", `connected as ${state.role}`);
  el("panels").style.display = "block";

  state.teleop = new DeadmanTeleop((v, omega) => state.api!.teleop(v, omega));
  state.calendar = new CalendarModel(state.api);
  state.pager = new LogPager(state.api);

  state.stream?.stop();
  state.stream = openEventStream(base, token, null, onEnvelope, (ok) => {
    setText("stream-state", ok ? "live" : "reconnecting...");
  });

  await loadMap();
  const s = await guarded(() => state.api!.status());
  if (s) renderStatus(s);
  await state.calendar.refresh();
  renderCalendar();
  await renderNodes();
  await renderEbt();
  await loadMoreLogs();
}

function bindTeleopButton(id: string, v: number, omega: number): void {
  const btn = el<HTMLButtonElement>(id);
  const down = () => state.teleop?.hold(v, omega);
  const up = () => state.teleop?.release();
  btn.addEventListener("mousedown", down);
  btn.addEventListener("touchstart", down);
  btn.addEventListener("mouseup", up);
  btn.addEventListener("mouseleave", up);
  btn.addEventListener("touchend", up);
}

export function initConsole(): void {
  el<HTMLInputElement>("in-base").value =
    localStorage.getItem("carebot-base") ?? "http://127.0.0.1:8080";
  el<HTMLInputElement>("in-token").value =
    localStorage.getItem("carebot-token") ?? "operator-token";
  el("btn-connect").onclick = () => void connect();

  bindTeleopButton("tp-fwd", 0.5, 0);
  bindTeleopButton("tp-back", -0.3, 0);
  bindTeleopButton("tp-left", 0.2, 0.8);
  bindTeleopButton("tp-right", 0.2, -0.8);

  el("btn-estop").onclick = () => {
    const on = !(state.status?.estop ?? false);
    void guarded(() => state.api!.estop(on)).then((r) => {
      if (r) void state.api!.status().then(renderStatus);
    });
  };

  el("map-canvas").addEventListener("click", (e) => onMapClick(e as MouseEvent));

  el("btn-edit-layer").onclick = () => {
    state.editing = !state.editing;
    state.editor.reset();
    setText("btn-edit-layer", state.editing ? "cancel polygon" : "draw no-go polygon");
    paintMap();
  };
  el("btn-save-layer").onclick = () => {
    try {
      state.editor.windowText = el<HTMLInputElement>("in-windows").value;
      state.editor.label = el<HTMLInputElement>("in-label").value || "no-go";
      const layer = state.editor.toLayer();
      const layers = [...state.layers, layer];
      void guarded(() => state.api!.putLayers(layers)).then((r) => {
        if (r) {
          state.layers = layers;
          state.editing = false;
          state.editor.reset();
          setText("btn-edit-layer", "draw no-go polygon");
          paintMap();
          flash("layer saved", false);
        }
      });
    } catch (e) {
      flash(String(e));
    }
  };

  el("btn-cal-add").onclick = () => {
    try {
      const entry = parseEntryForm({
        entry_id: el<HTMLInputElement>("cal-id").value,
        action: el<HTMLInputElement>("cal-action").value,
        when: el<HTMLInputElement>("cal-when").value,
      });
      void state.calendar!.upsert(entry).then((ok) => {
        if (!ok) flash(state.calendar!.error ?? "rejected");
        renderCalendar();
      });
    } catch (e) {
      flash(String(e));
    }
  };

  for (const [id, action] of [
    ["btn-entertain", "entertain(lounge)"],
    ["btn-deliver", "deliver(ward_a, reception, mail)"],
    ["btn-remind", "remind(room3, visit_time)"],
    ["btn-uvc", "uvc_disinfect(handrail)"],
  ] as const) {
    el(id).onclick = () => {
      void guarded(() => state.api!.triggerSkill(action)).then((r) => {
        if (r) flash(`queued ${r.action} @ ${r.priority}`, false);
      });
    };
  }

  el("btn-holder").onclick = () => {
    void guarded(() => state.api!.setHolderPlaced(true)).then((r) => {
      if (r) flash("holder confirmed", false);
    });
  };

  el("btn-more-logs").onclick = () => void loadMoreLogs();
  const logBox = el("log-box");
  logBox.addEventListener("scroll", () => {
    if (logBox.scrollTop + logBox.clientHeight >= logBox.scrollHeight - 4) {
      void loadMoreLogs();
    }
  });
}

if (typeof document !== "undefined" && document.getElementById("btn-connect")) {
  initConsole();
}
