// Entry point: wire joystick input, the teleop socket, and the canvas.

import { TeleopConnection, fetchTerrain } from "./connection.js";
import {
  DT_PRESETS, JoystickState, applyKey, commandFromState, initialState, sameCommand,
} from "./joystick.js";
import { ClientMessage, TerrainDoc } from "./protocol.js";
import { HudState, drawScene } from "./render.js";

const RENDER_HZ = 25;

function serverBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("server") ?? `http://${window.location.hostname}:8800`;
}

function wsUrl(base: string): string {
  return base.replace(/^http/, "ws") + "/teleop";
}

function setup(): void {
  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const statusEl = document.getElementById("status")!;
  const commandEl = document.getElementById("command")!;
  const stick = document.getElementById("stick") as HTMLCanvasElement;
  const stickCtx = stick.getContext("2d")!;

  let joystick: JoystickState = initialState();
  let terrain: TerrainDoc | null = null;
  let lastSent: ClientMessage | null = null;
  let reward = 0;

  const base = serverBase();
  const connection = new TeleopConnection(wsUrl(base), {
    onFrame: (frame) => {
      reward = frame.reward_total;
    },
    onStatus: (s) => {
      statusEl.textContent = s;
    },
  });
  connection.open();
  fetchTerrain(base).then((doc) => {
    terrain = doc;
  }).catch((err) => {
    statusEl.textContent = `terrain load failed: ${err}`;
  });

  function pushCommand(): void {
    const msg = commandFromState(joystick);
    if (lastSent === null || !sameCommand(msg, lastSent)) {
      connection.send(msg);
      lastSent = msg;
    }
    commandEl.textContent =
      `dir [${msg.dir[0].toFixed(2)}, ${msg.dir[1].toFixed(2)}] ` +
      `dist ${msg.dist.toFixed(2)} dt ${msg.dt}`;
  }

  window.addEventListener("keydown", (e) => {
    if (e.repeat) return;
    if (e.key === " ") {
      connection.send({ type: "pause" });
      return;
    }
    joystick = applyKey(joystick, e.key, true);
    pushCommand();
  });
  window.addEventListener("keyup", (e) => {
    joystick = applyKey(joystick, e.key, false);
    pushCommand();
  });

  // Pointer-driven virtual stick: drag sets direction, wheel sets distance.
  let dragging = false;
  function stickFromPointer(e: PointerEvent): void {
    const rect = stick.getBoundingClientRect();
    const px = (e.clientX - rect.left) / rect.width * 2 - 1;
    const py = (e.clientY - rect.top) / rect.height * 2 - 1;
    // screen up = +x (forward), screen left = +y (robot left)
    joystick = { ...joystick, left: { x: -py, y: -px } };
    pushCommand();
  }
  stick.addEventListener("pointerdown", (e) => { dragging = true; stickFromPointer(e); });
  stick.addEventListener("pointermove", (e) => { if (dragging) stickFromPointer(e); });
  window.addEventListener("pointerup", () => {
    dragging = false;
    joystick = { ...joystick, left: { x: 0, y: 0 } };
    pushCommand();
  });
  stick.addEventListener("wheel", (e) => {
    e.preventDefault();
    const delta = e.deltaY < 0 ? 0.25 : -0.25;
    joystick = { ...joystick, dist: Math.max(0, Math.min(2.5, joystick.dist + delta)) };
    pushCommand();
  });
  for (let i = 0; i < DT_PRESETS.length; i++) {
    document.getElementById(`dt${i}`)?.addEventListener("click", () => {
      joystick = { ...joystick, dtIndex: i };
      pushCommand();
    });
  }

  function drawStick(): void {
    const w = stick.width, h = stick.height;
    stickCtx.clearRect(0, 0, w, h);
    stickCtx.strokeStyle = "#999";
    stickCtx.beginPath();
    stickCtx.arc(w / 2, h / 2, w / 2 - 2, 0, 2 * Math.PI);
    stickCtx.stroke();
    const sx = w / 2 - joystick.left.y * (w / 2 - 10);
    const sy = h / 2 - joystick.left.x * (h / 2 - 10);
    stickCtx.fillStyle = "#06a77d";
    stickCtx.beginPath();
    stickCtx.arc(sx, sy, 10, 0, 2 * Math.PI);
    stickCtx.fill();
    stickCtx.fillStyle = "#333";
    stickCtx.font = "11px monospace";
    stickCtx.fillText(`dist ${joystick.dist.toFixed(2)}`, 6, h - 18);
    stickCtx.fillText(`dt ${DT_PRESETS[joystick.dtIndex]}s`, 6, h - 6);
  }

  setInterval(() => {
    const hud: HudState = {
      frame: connection.latest,
      stale: connection.isStale(),
      reward,
    };
    drawScene(ctx, canvas.width, canvas.height, terrain, hud);
    drawStick();
  }, 1000 / RENDER_HZ);
}

window.addEventListener("DOMContentLoaded", setup);
