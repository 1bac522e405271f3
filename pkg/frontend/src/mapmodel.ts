// Map view model: raster decoding, world/canvas transforms, live overlays
// and the no-go polygon editor. Pure logic; the canvas painter consumes it.

import type { LayerDoc, MapPayload, Pose } from "./types";

export function decodeRaster(payload: MapPayload): Uint8Array {
  const bin = atob(payload.data);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

export class MapTransform {
  constructor(
    public widthCells: number,
    public heightCells: number,
    public resolution: number,
    public originX: number,
    public originY: number,
    public scale: number, // canvas pixels per meter
  ) {}

  worldToCanvas(x: number, y: number): [number, number] {
    // canvas y grows downward; world y grows upward
    const px = (x - this.originX) * this.scale;
    const py = (this.heightCells * this.resolution - (y - this.originY)) * this.scale;
    return [px, py];
  }

  canvasToWorld(px: number, py: number): [number, number] {
    const x = px / this.scale + this.originX;
    const y = this.heightCells * this.resolution - py / this.scale + this.originY;
    return [x, y];
  }

  canvasSize(): [number, number] {
    return [
      this.widthCells * this.resolution * this.scale,
      this.heightCells * this.resolution * this.scale,
    ];
  }
}

export interface Overlays {
  pose: Pose | null;
  path: [number, number][];
  people: { name: string; x: number; y: number }[];
}

export class PolygonEditor {
  points: [number, number][] = [];
  windowText = "";
  label = "no-go";

  addPoint(x: number, y: number): void {
    this.points.push([x, y]);
  }

  reset(): void {
    this.points = [];
  }

  get closable(): boolean {
    return this.points.length >= 3;
  }

  windowsValid(): boolean {
    if (!this.windowText.trim()) return true;
    return this.windowText
      .split(",")
      .every((w) => /^\s*\d{2}:\d{2}-\d{2}:\d{2}\s*$/.test(w));
  }

  toLayer(): LayerDoc {
    if (!this.closable) throw new Error("polygon needs at least 3 points");
    if (!this.windowsValid()) throw new Error("windows must be HH:MM-HH:MM");
    const windows = this.windowText.trim()
      ? this.windowText.split(",").map((w) => w.trim())
      : [];
    return { label: this.label, polygon: [...this.points], windows };
  }
}

export function ledColor(led: string): string {
  switch (led) {
    case "driving_left":
    case "driving_right":
    case "driving_straight":
      return "#39c";
    case "warning":
      return "#e33";
    case "charging":
      return "#3a3";
    default:
      return "#999";
  }
}
