"""Teleoperation service: a 50 Hz simulation loop driving the deployed policy
from operator goal commands, broadcasting state frames over a websocket.

Wire protocol (JSON, schema version 1):
  client -> server  {"type": "goal", "dir": [x, y], "dist": d, "dt": t}
                    {"type": "pause"}            # toggles pause
  server -> client  {"type": "frame", "version": 1, ...}
                    {"type": "ack"|"error", ...}

The first connected client is the operator; later clients observe. The
simulation never skips control steps: when the wall clock runs ahead,
pending steps are executed back to back and frames batch up.
"""

import asyncio
import collections
import threading
import time

import numpy as np

from .env import EnvConfig, TrapEnv, stack_observations
from .nn.networks import PolicyBundle
from .observations import GoalCommand, joystick_to_fake_goal
from .physics import Termination
from .terrain import flat_terrain, gen_benchmark_runway, gen_trap_curriculum, terrain_to_json

FRAME_VERSION = 1


def standstill_command() -> GoalCommand:
    return joystick_to_fake_goal((0.0, 0.0), 0.0, 4.0)


class Subscriber:
    def __init__(self, maxlen=256):
        self.frames = collections.deque(maxlen=maxlen)

    def drain(self):
        out = []
        while self.frames:
            out.append(self.frames.popleft())
        return out


class TeleopSession:
    """Owns the env + policy; a single loop thread mutates them."""

    def __init__(self, bundle: PolicyBundle, terrain, model=None,
                 env_cfg: EnvConfig = None, tick_rate_hz: float = 25.0, seed: int = 0):
        from .robot import RobotModel

        self.bundle = bundle
        self.model = model or RobotModel()
        cfg = env_cfg or EnvConfig()
        cfg.episode_length_s = float("inf")
        self.env = TrapEnv(self.model, terrain, cfg, seed=seed)
        self.env.set_fake_command(standstill_command())
        self.env.reset()
        self.obs = self.env._observe()
        self.hidden = bundle.init_hidden(1)
        self.frame_every = max(1, int(round((1.0 / tick_rate_hz) / self.model.dt_control)))
        self.step_count = 0
        self.paused = False
        self.status = "running"
        self.latest_belief = np.zeros(12, dtype=np.float32)
        self.reward_total = 0.0
        self._commands = collections.deque()
        self._subscribers = []
        self._operator = None
        self._lock = threading.Lock()
        self._last_timestamp = -1.0

    # -- client management (called from server handlers) ---------------------

    def subscribe(self) -> Subscriber:
        sub = Subscriber()
        with self._lock:
            self._subscribers.append(sub)
            if self._operator is None:
                self._operator = sub
        return sub

    def unsubscribe(self, sub: Subscriber):
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)
            if self._operator is sub:
                self._operator = self._subscribers[0] if self._subscribers else None

    def is_operator(self, sub: Subscriber) -> bool:
        with self._lock:
            return self._operator is sub

    def queue_message(self, sub: Subscriber, message: dict) -> dict:
        """Validate and queue a client message; returns the ack/error reply."""
        kind = message.get("type")
        if kind == "goal":
            if not self.is_operator(sub):
                return {"type": "error", "reason": "observer-only connection"}
            try:
                direction = message["dir"]
                command = joystick_to_fake_goal(
                    (float(direction[0]), float(direction[1])),
                    float(message["dist"]), float(message.get("dt", 4.0)))
            except (KeyError, TypeError, ValueError, IndexError) as exc:
                return {"type": "error", "reason": f"bad goal message: {exc}"}
            with self._lock:
                self._commands.append(("goal", command))
            return {"type": "ack", "command": "goal",
                    "delta_g": command.delta_g.tolist(), "delta_t": command.delta_t}
        if kind == "pause":
            if not self.is_operator(sub):
                return {"type": "error", "reason": "observer-only connection"}
            with self._lock:
                self._commands.append(("pause", None))
            return {"type": "ack", "command": "pause"}
        return {"type": "error", "reason": f"unknown message type {kind!r}"}

    # -- simulation ------------------------------------------------------------

    def _apply_pending(self):
        with self._lock:
            pending = list(self._commands)
            self._commands.clear()
        for kind, payload in pending:
            if kind == "goal":
                self.env.set_fake_command(payload)
                self.obs = self.env._observe()
            elif kind == "pause":
                self.paused = not self.paused

    def tick(self):
        """One 0.02 s control step; returns a frame on frame ticks, else None."""
        self._apply_pending()
        if self.paused:
            frame = self.build_frame()
            self._broadcast(frame)
            return frame
        ob = stack_observations([self.obs])
        belief, self.hidden["estimator"] = self.bundle.estimate_belief_np(
            ob["p"], ob["g"], self.hidden["estimator"])
        mean, self.hidden["actor"] = self.bundle.actor_step_np(
            ob["p"], belief, ob["g"], self.hidden["actor"])
        self.latest_belief = belief[0]
        self.obs, breakdown, termination, info = self.env.step(mean[0])
        self.reward_total = breakdown.total
        self.step_count += 1
        if termination == Termination.Fell:
            self.status = "fell"
            held = self.env._external_command
            self.env.reset()
            self.env.set_fake_command(held)
            self.obs = self.env._observe()
        elif termination == Termination.OutOfBounds:
            self.status = "out_of_bounds"
            held = self.env._external_command
            self.env.reset()
            self.env.set_fake_command(held)
            self.obs = self.env._observe()
        else:
            self.status = "running"
        if self.step_count % self.frame_every == 0:
            frame = self.build_frame()
            self._broadcast(frame)
            return frame
        return None

    def build_frame(self) -> dict:
        env = self.env
        timestamp = self.step_count * self.model.dt_control
        if timestamp <= self._last_timestamp:
            timestamp = np.nextafter(self._last_timestamp, float("inf"))
        self._last_timestamp = timestamp
        probs = self.bundle.classify_np(self.latest_belief[None, :8])[0]
        return {
            "type": "frame",
            "version": FRAME_VERSION,
            "timestamp": float(timestamp),
            "base_pos": env.state.base_pos.tolist(),
            "base_quat": env.state.base_quat.tolist(),
            "q": env.state.q.tolist(),
            "contacts": self.obs.contacts.tolist(),
            "class_probs": probs.tolist(),
            "command": {
                "delta_g": env.command.delta_g.tolist(),
                "delta_t": env.command.delta_t,
            },
            "reward_total": float(self.reward_total),
            "status": "paused" if self.paused else self.status,
        }

    def _broadcast(self, frame: dict):
        with self._lock:
            for sub in self._subscribers:
                sub.frames.append(frame)

    def run_loop(self, stop_event: threading.Event):
        """Wall-clock paced loop; owed steps run back to back, never skipped."""
        dt = self.model.dt_control
        start = time.monotonic()
        done_steps = 0
        while not stop_event.is_set():
            owed = int((time.monotonic() - start) / dt) - done_steps
            if owed <= 0:
                time.sleep(dt / 4)
                continue
            for _ in range(owed):
                self.tick()
                done_steps += 1


def build_teleop_terrain(kind: str, seed: int = 0):
    if kind == "flat":
        return flat_terrain()
    if kind == "curriculum":
        return gen_trap_curriculum(seed)
    return gen_benchmark_runway(kind, seed)


def create_app(session: TeleopSession, autostart: bool = True):
    from contextlib import asynccontextmanager

    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    stop_event = threading.Event()
    state = {"thread": None}

    @asynccontextmanager
    async def lifespan(_app):
        if autostart and state["thread"] is None:
            state["thread"] = threading.Thread(
                target=session.run_loop, args=(stop_event,), daemon=True)
            state["thread"].start()
        yield
        stop_event.set()
        if state["thread"] is not None:
            state["thread"].join(timeout=2.0)

    app = FastAPI(title="trapwalker teleop", lifespan=lifespan)

    @app.get("/terrain")
    def terrain():
        return terrain_to_json(session.env.terrain)

    @app.websocket("/teleop")
    async def teleop(ws: WebSocket):
        await ws.accept()
        sub = session.subscribe()
        await ws.send_json({"type": "hello", "version": FRAME_VERSION,
                            "operator": session.is_operator(sub)})

        async def push_frames():
            while True:
                for frame in sub.drain():
                    await ws.send_json(frame)
                await asyncio.sleep(0.01)

        async def read_commands():
            while True:
                message = await ws.receive_json()
                await ws.send_json(session.queue_message(sub, message))

        pusher = asyncio.create_task(push_frames())
        try:
            await read_commands()
        except WebSocketDisconnect:
            pass
        finally:
            pusher.cancel()
            session.unsubscribe(sub)

    return app


def serve(bundle: PolicyBundle, cfg, port: int = None):
    import uvicorn

    terrain = build_teleop_terrain(cfg.teleop.terrain, cfg.benchmark.seed)
    session = TeleopSession(bundle, terrain, model=cfg.sim, env_cfg=cfg.env,
                            tick_rate_hz=cfg.teleop.tick_rate_hz)
    app = create_app(session)
    uvicorn.run(app, host="0.0.0.0", port=port or cfg.teleop.port, log_level="info")
