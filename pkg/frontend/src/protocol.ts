// Wire protocol shared with the teleop service (schema version 1).
// Hand-rolled validators keep the client dependency-free.

export const SCHEMA_VERSION = 1;
export const STOP_THRESHOLD = 0.2;

export interface GoalMessage {
  type: "goal";
  dir: [number, number];
  dist: number;
  dt: number;
}

export interface PauseMessage {
  type: "pause";
}

export type ClientMessage = GoalMessage | PauseMessage;

export interface Frame {
  type: "frame";
  version: number;
  timestamp: number;
  base_pos: [number, number, number];
  base_quat: [number, number, number, number];
  q: number[];
  contacts: number[];
  class_probs: number[];
  command: { delta_g: [number, number, number]; delta_t: number };
  reward_total: number;
  status: string;
}

export interface TrapJson {
  kind: number;
  shape: string;
  center: [number, number];
  label_id: number;
  height: number;
  width: number;
  depth: number;
  radius: number;
  axis: [number, number];
  half_length: number;
  base_z: number;
}

export interface TerrainDoc {
  version: number;
  cell_size: number;
  origin: [number, number];
  extents: [number, number, number, number];
  heightfield: number[][];
  traps: TrapJson[];
}

function isNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function isNumberArray(x: unknown, length?: number): x is number[] {
  return Array.isArray(x) && (length === undefined || x.length === length) && x.every(isNumber);
}

export function validateClientMessage(msg: unknown): msg is ClientMessage {
  if (typeof msg !== "object" || msg === null) return false;
  const m = msg as Record<string, unknown>;
  if (m.type === "pause") return true;
  if (m.type !== "goal") return false;
  return isNumberArray(m.dir, 2) && isNumber(m.dist) && m.dist >= 0 && isNumber(m.dt) && m.dt > 0;
}

export function parseFrame(raw: unknown): Frame | null {
  if (typeof raw !== "object" || raw === null) return null;
  const f = raw as Record<string, unknown>;
  if (f.type !== "frame" || f.version !== SCHEMA_VERSION) return null;
  if (!isNumber(f.timestamp) || !isNumberArray(f.base_pos, 3)) return null;
  if (!isNumberArray(f.base_quat, 4) || !isNumberArray(f.q, 12)) return null;
  if (!isNumberArray(f.contacts, 17) || !isNumberArray(f.class_probs, 4)) return null;
  const cmd = f.command as Record<string, unknown> | undefined;
  if (!cmd || !isNumberArray(cmd.delta_g, 3) || !isNumber(cmd.delta_t)) return null;
  if (!isNumber(f.reward_total) || typeof f.status !== "string") return null;
  return raw as Frame;
}

export function parseTerrain(raw: unknown): TerrainDoc | null {
  if (typeof raw !== "object" || raw === null) return null;
  const t = raw as Record<string, unknown>;
  if (t.version !== SCHEMA_VERSION) return null;
  if (!isNumber(t.cell_size) || !isNumberArray(t.origin, 2)) return null;
  if (!isNumberArray(t.extents, 4) || !Array.isArray(t.heightfield)) return null;
  if (!Array.isArray(t.traps)) return null;
  return raw as TerrainDoc;
}

export function yawFromQuat(q: [number, number, number, number]): number {
  const [w, x, y, z] = q;
  return Math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z));
}
