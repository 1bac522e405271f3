export interface Pose {
  x: number;
  y: number;
  theta: number;
}

export interface Status {
  pose: Pose;
  battery: number;
  current_action: string | null;
  localization_health: number;
  nodes_summary: Record<string, string>;
  estop: boolean;
  docked: boolean;
  led: string;
  clock: number;
}

export interface MapPayload {
  width: number;
  height: number;
  resolution: number;
  origin: [number, number, number];
  encoding: string;
  data: string; // base64 uint8: 0 occupied, 255 free, 128 unknown
}

export interface LayerDoc {
  label: string;
  polygon: [number, number][];
  windows: string[]; // "HH:MM-HH:MM"
}

export interface CalendarEntry {
  entry_id: string;
  action: string;
  once_at: number | null;
  daily_hhmm: string | null;
  weekdays: number[] | null;
  enabled: boolean;
  expiry_s: number | null;
}

export interface NodeSummary {
  name: string;
  state: string;
  last_heartbeat: number;
  restarts_used: number;
  params: Record<string, unknown>;
}

export interface LogPage {
  entries: Record<string, unknown>[];
  next: number;
}

export interface EbtAlert {
  person: string;
  temp_k: number;
  point_used: string;
  confidence: number;
  stamp: number;
  ack: boolean;
}

export interface BusEnvelope {
  topic: string;
  seq: number;
  stamp: number;
  payload: unknown;
}
