// Teleop socket wrapper with stale-connection tracking.

import { ClientMessage, Frame, TerrainDoc, parseFrame, parseTerrain } from "./protocol.js";

export const STALE_AFTER_MS = 1000;

export interface ConnectionEvents {
  onFrame?: (frame: Frame) => void;
  onStatus?: (status: string) => void;
}

export class TeleopConnection {
  private ws: WebSocket | null = null;
  private lastFrameAt = 0;
  latest: Frame | null = null;
  connected = false;

  constructor(
    private url: string,
    private events: ConnectionEvents = {},
    private now: () => number = () => Date.now(),
  ) {}

  open(socket?: WebSocket): void {
    this.ws = socket ?? new WebSocket(this.url);
    this.ws.onopen = () => {
      this.connected = true;
      this.events.onStatus?.("connected");
    };
    this.ws.onclose = () => {
      this.connected = false;
      this.events.onStatus?.("disconnected");
    };
    this.ws.onmessage = (event: MessageEvent) => {
      let data: unknown;
      try {
        data = JSON.parse(event.data as string);
      } catch {
        return;
      }
      const frame = parseFrame(data);
      if (frame) {
        this.latest = frame;
        this.lastFrameAt = this.now();
        this.events.onFrame?.(frame);
      }
    };
  }

  send(message: ClientMessage): void {
    if (this.ws && this.ws.readyState === 1) {
      this.ws.send(JSON.stringify(message));
    }
  }

  // True when connected but no frame arrived within the stale window.
  isStale(): boolean {
    if (!this.connected || this.lastFrameAt === 0) return !this.connected;
    return this.now() - this.lastFrameAt > STALE_AFTER_MS;
  }
}

export async function fetchTerrain(baseUrl: string): Promise<TerrainDoc> {
  const response = await fetch(`${baseUrl}/terrain`);
  const doc = parseTerrain(await response.json());
  if (!doc) throw new Error("terrain document failed validation");
  return doc;
}
