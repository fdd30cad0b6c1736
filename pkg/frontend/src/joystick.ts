// Virtual joystick state -> goal command messages.
//
// The left stick sets the direction (the dx:dy ratio of the goal offset in
// the robot frame), the right control sets the offset magnitude, and preset
// buttons toggle the command deadline. A distance just above the 0.2 stop
// threshold translates; a full lateral offset turns in place; the deadzone
// commands a standstill.

import { ClientMessage, GoalMessage, STOP_THRESHOLD } from "./protocol.js";

export const DT_PRESETS = [3, 4, 5];
export const DEADZONE = 0.1;
export const MAX_DISTANCE = 2.5;

export interface JoystickState {
  left: { x: number; y: number };   // unit-square stick position
  dist: number;                     // commanded offset magnitude, m
  dtIndex: number;                  // index into DT_PRESETS
}

export function initialState(): JoystickState {
  return { left: { x: 0, y: 0 }, dist: 0.25, dtIndex: 1 };
}

export function mapJoystickInput(
  left: { x: number; y: number },
  dist: number,
  dtSetting: number,
): GoalMessage {
  const norm = Math.hypot(left.x, left.y);
  if (norm < DEADZONE || dist <= 0) {
    return { type: "goal", dir: [0, 0], dist: 0, dt: dtSetting };
  }
  const clamped = Math.min(Math.max(dist, 0), MAX_DISTANCE);
  return {
    type: "goal",
    dir: [left.x / norm, left.y / norm],
    dist: clamped,
    dt: dtSetting,
  };
}

export function commandFromState(state: JoystickState): GoalMessage {
  return mapJoystickInput(state.left, state.dist, DT_PRESETS[state.dtIndex]);
}

export function isStandstill(msg: GoalMessage): boolean {
  return msg.dist < STOP_THRESHOLD;
}

export function sameCommand(a: ClientMessage, b: ClientMessage): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}

// Keyboard fallback: WASD steers the direction, Q/E nudges the distance,
// number keys pick the deadline preset.
export function applyKey(state: JoystickState, key: string, down: boolean): JoystickState {
  const next: JoystickState = {
    left: { ...state.left },
    dist: state.dist,
    dtIndex: state.dtIndex,
  };
  const v = down ? 1 : 0;
  switch (key.toLowerCase()) {
    case "w": next.left.x = v; break;
    case "s": next.left.x = -v; break;
    case "a": next.left.y = v; break;
    case "d": next.left.y = -v; break;
    case "q": if (down) next.dist = Math.max(0, +(state.dist - 0.25).toFixed(2)); break;
    case "e": if (down) next.dist = Math.min(MAX_DISTANCE, +(state.dist + 0.25).toFixed(2)); break;
    case "1": case "2": case "3":
      if (down) next.dtIndex = Number(key) - 1;
      break;
  }
  return next;
}
