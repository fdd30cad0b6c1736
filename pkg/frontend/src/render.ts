// Top-down canvas rendering: terrain with color-coded traps, robot pose,
// command arrow, per-link contact bars and class-probability bars.

import { Frame, TerrainDoc, TrapJson, yawFromQuat } from "./protocol.js";

export const TRAP_COLORS: Record<number, string> = {
  1: "#e4572e", // bar
  2: "#2e86ab", // pit
  3: "#8e5572", // pole
};

export const CLASS_NAMES = ["None", "Bar", "Pit", "Pole"];
export const LINK_NAMES = [
  "B",
  "FLh", "FLt", "FLc", "FLf",
  "FRh", "FRt", "FRc", "FRf",
  "RLh", "RLt", "RLc", "RLf",
  "RRh", "RRt", "RRc", "RRf",
];

export interface Viewport {
  scale: number;       // px per meter
  offsetX: number;
  offsetY: number;
}

export function fitViewport(terrain: TerrainDoc, width: number, height: number,
                            focus?: [number, number], zoom = 0): Viewport {
  const [xmin, xmax, ymin, ymax] = terrain.extents;
  let scale = Math.min(width / (xmax - xmin), height / (ymax - ymin));
  if (zoom > 0) scale = zoom;
  const cx = focus ? focus[0] : (xmin + xmax) / 2;
  const cy = focus ? focus[1] : (ymin + ymax) / 2;
  return { scale, offsetX: width / 2 - cx * scale, offsetY: height / 2 + cy * scale };
}

export function toScreen(vp: Viewport, x: number, y: number): [number, number] {
  // World x right, y up; canvas y grows downward.
  return [vp.offsetX + x * vp.scale, vp.offsetY - y * vp.scale];
}

export function heightColor(h: number): string {
  const v = Math.max(0, Math.min(255, Math.round(128 + h * 400)));
  return `rgb(${v},${v},${v})`;
}

export function drawTerrain(ctx: CanvasRenderingContext2D, terrain: TerrainDoc,
                            vp: Viewport): void {
  const cell = terrain.cell_size;
  const [ox, oy] = terrain.origin;
  const hf = terrain.heightfield;
  for (let i = 0; i < hf.length - 1; i++) {
    for (let j = 0; j < hf[i].length - 1; j++) {
      const [sx, sy] = toScreen(vp, ox + i * cell, oy + (j + 1) * cell);
      ctx.fillStyle = heightColor(hf[i][j]);
      ctx.fillRect(sx, sy, cell * vp.scale + 1, cell * vp.scale + 1);
    }
  }
  for (const trap of terrain.traps) drawTrap(ctx, trap, vp);
}

export function drawTrap(ctx: CanvasRenderingContext2D, trap: TrapJson, vp: Viewport): void {
  ctx.strokeStyle = TRAP_COLORS[trap.kind] ?? "#444";
  ctx.fillStyle = ctx.strokeStyle;
  const [cx, cy] = trap.center;
  if (trap.shape === "ring") {
    ctx.lineWidth = Math.max(2, trap.width * vp.scale);
    ctx.beginPath();
    const [sx, sy] = toScreen(vp, cx, cy);
    ctx.arc(sx, sy, trap.radius * vp.scale, 0, 2 * Math.PI);
    ctx.stroke();
  } else if (trap.shape === "segment") {
    ctx.lineWidth = Math.max(2, trap.width * vp.scale);
    const [ax, ay] = trap.axis;
    const [x0, y0] = toScreen(vp, cx - ax * trap.half_length, cy - ay * trap.half_length);
    const [x1, y1] = toScreen(vp, cx + ax * trap.half_length, cy + ay * trap.half_length);
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
  } else {
    const [sx, sy] = toScreen(vp, cx, cy);
    ctx.beginPath();
    ctx.arc(sx, sy, Math.max(2, trap.radius * vp.scale), 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function drawRobot(ctx: CanvasRenderingContext2D, frame: Frame, vp: Viewport): void {
  const [x, y] = frame.base_pos;
  const yaw = yawFromQuat(frame.base_quat);
  const [sx, sy] = toScreen(vp, x, y);
  const len = 0.35 * vp.scale;
  ctx.fillStyle = frame.status === "running" ? "#222" : "#b3261e";
  ctx.beginPath();
  ctx.arc(sx, sy, 0.18 * vp.scale, 0, 2 * Math.PI);
  ctx.fill();
  ctx.strokeStyle = "#ffd23f";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(sx, sy);
  ctx.lineTo(sx + len * Math.cos(yaw), sy - len * Math.sin(yaw));
  ctx.stroke();

  // Commanded goal offset, drawn from the robot in its yaw frame.
  const [dx, dy] = frame.command.delta_g;
  const gx = x + dx * Math.cos(yaw) - dy * Math.sin(yaw);
  const gy = y + dx * Math.sin(yaw) + dy * Math.cos(yaw);
  const [gsx, gsy] = toScreen(vp, gx, gy);
  ctx.strokeStyle = "#06a77d";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(sx, sy);
  ctx.lineTo(gsx, gsy);
  ctx.stroke();
  ctx.beginPath();
  ctx.arc(gsx, gsy, 4, 0, 2 * Math.PI);
  ctx.stroke();
}

// Contact magnitudes arrive normalized to [-1, 1]; -1 means no contact.
export function contactBarHeights(contacts: number[], maxPx: number): number[] {
  return contacts.map((c) => ((c + 1) / 2) * maxPx);
}

export function drawBars(ctx: CanvasRenderingContext2D, x0: number, y0: number,
                         values: number[], labels: string[], width: number,
                         maxHeight: number, color: string): void {
  const bw = width / values.length;
  ctx.font = "9px monospace";
  values.forEach((v, i) => {
    const h = Math.max(1, v);
    ctx.fillStyle = color;
    ctx.fillRect(x0 + i * bw, y0 + maxHeight - h, bw - 2, h);
    ctx.fillStyle = "#555";
    ctx.fillText(labels[i] ?? "", x0 + i * bw, y0 + maxHeight + 10);
  });
}

export interface HudState {
  frame: Frame | null;
  stale: boolean;
  reward: number;
}

export function drawScene(ctx: CanvasRenderingContext2D, width: number, height: number,
                          terrain: TerrainDoc | null, hud: HudState): void {
  ctx.clearRect(0, 0, width, height);
  if (!terrain) {
    ctx.fillStyle = "#888";
    ctx.fillText("loading terrain...", 20, 20);
    return;
  }
  const focus = hud.frame ? [hud.frame.base_pos[0], hud.frame.base_pos[1]] as [number, number] : undefined;
  const vp = fitViewport(terrain, width, height - 120, focus, 60);
  drawTerrain(ctx, terrain, vp);
  if (hud.frame) {
    drawRobot(ctx, hud.frame, vp);
    drawBars(ctx, 10, height - 110, contactBarHeights(hud.frame.contacts, 60),
             LINK_NAMES, 340, 60, "#e4572e");
    drawBars(ctx, 380, height - 110, hud.frame.class_probs.map((p) => p * 60),
             CLASS_NAMES, 120, 60, "#2e86ab");
    ctx.fillStyle = "#222";
    ctx.font = "12px monospace";
    ctx.fillText(`reward ${hud.reward.toFixed(2)}  status ${hud.frame.status}`,
                 520, height - 60);
  }
  if (hud.stale) {
    ctx.fillStyle = "#b3261e";
    ctx.font = "bold 16px sans-serif";
    ctx.fillText("STALE CONNECTION", 20, 24);
  }
}
