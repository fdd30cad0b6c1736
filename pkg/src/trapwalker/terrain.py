"""Procedural trap terrains: curriculum grid, benchmark runway, geometry queries.

Traps come in three kinds. Bars are thin walls the robot must step over,
pits are gaps carved into the ground, poles are upright cylinders. In
curriculum cells bars and pits are closed rings around the spawn so the
robot cannot detour around them.
"""

import json
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

TERRAIN_SCHEMA_VERSION = 1

# Trap/label classes. 0 is reserved for "no trap" in classification targets.
class TrapKind(IntEnum):
    Bar = 1
    Pit = 2
    Pole = 3


LABEL_NONE = 0
LABEL_NAMES = ("None", "Bar", "Pit", "Pole")
NUM_CLASSES = 4

CATEGORY_BAR = "Bar"
CATEGORY_PIT = "Pit"
CATEGORY_POLE = "Pole"
CATEGORY_PLANE = "Plane"

# Column layout of the 10-wide curriculum grid: 3 bar, 2 pit, 3 pole, 2 plane.
CURRICULUM_COLUMNS = (
    CATEGORY_BAR, CATEGORY_BAR, CATEGORY_BAR,
    CATEGORY_PIT, CATEGORY_PIT,
    CATEGORY_POLE, CATEGORY_POLE, CATEGORY_POLE,
    CATEGORY_PLANE, CATEGORY_PLANE,
)


@dataclass
class TrapPrimitive:
    kind: TrapKind
    shape: str                       # "ring", "segment" (bar/pit) or "cylinder" (pole)
    center: tuple                    # (x, y)
    label_id: int
    height: float = 0.0              # bar wall top / pole top above base_z
    width: float = 0.0               # bar thickness / pit gap width / pole diameter
    depth: float = 0.0               # pit only
    radius: float = 0.0              # ring radius / pole radius
    axis: tuple = (0.0, 1.0)         # segment direction in the plane
    half_length: float = 0.0         # segment only
    base_z: float = 0.0

    def bounding_radius(self) -> float:
        if self.shape == "ring":
            return self.radius + self.width + 0.5
        if self.shape == "segment":
            return self.half_length + self.width + 0.5
        return self.radius + 0.5


@dataclass
class CurriculumCell:
    row: int
    column: int
    category: str
    center: tuple                    # cell center (x, y)
    spawn_point: tuple               # nominal spawn (x, y)
    spawn_radius: float
    trap_ring_radius: float
    goal_ring_radius: float
    noise_amplitude: float


@dataclass
class Terrain:
    heightfield: np.ndarray          # (nx, ny) heights, m
    cell_size: float                 # grid resolution, m
    origin: tuple                    # world (x, y) of heightfield[0, 0]
    extents: tuple                   # (xmin, xmax, ymin, ymax)
    traps: list
    cells: list = field(default_factory=list)
    noise_amplitude: float = 0.0
    meta: dict = field(default_factory=dict)
    _buckets: dict = field(default_factory=dict, repr=False)
    _bucket_size: float = field(default=2.0, repr=False)
    _hf_flat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.heightfield)):
            raise ValueError("heightfield must be finite")
        self._hf_flat = np.ascontiguousarray(self.heightfield).ravel()
        self._rebuild_index()

    def _rebuild_index(self):
        self._buckets = {}
        bs = self._bucket_size
        for idx, trap in enumerate(self.traps):
            r = trap.bounding_radius()
            cx, cy = trap.center
            for bx in range(int((cx - r) // bs), int((cx + r) // bs) + 1):
                for by in range(int((cy - r) // bs), int((cy + r) // bs) + 1):
                    self._buckets.setdefault((bx, by), []).append(idx)

    def in_bounds(self, x: float, y: float) -> bool:
        xmin, xmax, ymin, ymax = self.extents
        return xmin <= x <= xmax and ymin <= y <= ymax

    def nearby_traps(self, x: float, y: float, radius: float = 1.0) -> list:
        bs = self._bucket_size
        seen, out = set(), []
        for bx in range(int((x - radius) // bs), int((x + radius) // bs) + 1):
            for by in range(int((y - radius) // bs), int((y + radius) // bs) + 1):
                for idx in self._buckets.get((bx, by), ()):
                    if idx not in seen:
                        seen.add(idx)
                        out.append(self.traps[idx])
        return out

    def base_heights(self, xy: np.ndarray) -> np.ndarray:
        """Bilinear heightfield lookup (pits not applied). xy: (N, 2)."""
        hf = self.heightfield
        inv = 1.0 / self.cell_size
        gx = np.clip((xy[:, 0] - self.origin[0]) * inv, 0.0, hf.shape[0] - 1.001)
        gy = np.clip((xy[:, 1] - self.origin[1]) * inv, 0.0, hf.shape[1] - 1.001)
        ix, iy = gx.astype(int), gy.astype(int)
        fx, fy = gx - ix, gy - iy
        flat = self._hf_flat
        ny = hf.shape[1]
        base = ix * ny + iy
        h00 = flat.take(base)
        h10 = flat.take(base + ny)
        h01 = flat.take(base + 1)
        h11 = flat.take(base + ny + 1)
        return (h00 * (1 - fx) * (1 - fy) + h10 * fx * (1 - fy)
                + h01 * (1 - fx) * fy + h11 * fx * fy)

    def base_height_single(self, x: float, y: float) -> float:
        """Scalar bilinear lookup, cheap path for per-robot queries."""
        hf = self.heightfield
        inv = 1.0 / self.cell_size
        gx = min(max((x - self.origin[0]) * inv, 0.0), hf.shape[0] - 1.001)
        gy = min(max((y - self.origin[1]) * inv, 0.0), hf.shape[1] - 1.001)
        ix, iy = int(gx), int(gy)
        fx, fy = gx - ix, gy - iy
        row0 = hf[ix]
        row1 = hf[ix + 1]
        return float((row0[iy] * (1 - fx) + row1[iy] * fx) * (1 - fy)
                     + (row0[iy + 1] * (1 - fx) + row1[iy + 1] * fx) * fy)

    def ground_heights(self, xy: np.ndarray, nearby=None) -> np.ndarray:
        """Ground height with pit gaps carved in. xy: (N, 2)."""
        h = self.base_heights(xy)
        if nearby is None:
            cx, cy = xy.mean(axis=0)
            span = float(np.max(np.linalg.norm(xy - [cx, cy], axis=1))) if len(xy) > 1 else 0.0
            nearby = self.nearby_traps(cx, cy, span + 1.0)
        for trap in nearby:
            if trap.kind == TrapKind.Pit:
                h = np.where(pit_contains(trap, xy), h - trap.depth, h)
        return h


def pit_contains(trap: TrapPrimitive, xy: np.ndarray) -> np.ndarray:
    """Boolean mask of points inside the pit gap. xy: (N, 2)."""
    rel = xy - np.asarray(trap.center)
    if trap.shape == "ring":
        rho = np.linalg.norm(rel, axis=1)
        return np.abs(rho - trap.radius) < 0.5 * trap.width
    ax = np.asarray(trap.axis)
    nrm = np.array([-ax[1], ax[0]])
    along = rel @ ax
    across = rel @ nrm
    return (np.abs(across) < 0.5 * trap.width) & (np.abs(along) <= trap.half_length)


def trap_penetrations(trap: TrapPrimitive, centers: np.ndarray, radii: np.ndarray):
    """Sphere-vs-trap penetration. Returns (depth (N,), normal (N,3), active (N,)).

    Solid traps (bars, poles) push along the smaller of the lateral and top
    penetrations. Pit walls push a submerged sphere back toward the gap.
    """
    n_pts = len(centers)
    depth = np.zeros(n_pts)
    normal = np.zeros((n_pts, 3))
    rel = centers[:, :2] - np.asarray(trap.center)

    if trap.kind == TrapKind.Pit:
        # Walls of the gap act on spheres below the surrounding ground level.
        below = centers[:, 2] - radii < trap.base_z
        if trap.shape == "ring":
            rho = np.linalg.norm(rel, axis=1)
            s = rho - trap.radius            # signed offset from gap midline
            radial = np.where(rho[:, None] > 1e-9, rel / np.maximum(rho, 1e-9)[:, None], 0.0)
            inward = np.where(s[:, None] > 0, -radial, radial)   # toward gap midline
            pen = (np.abs(s) + radii) - 0.5 * trap.width
            active = below & (np.abs(s) < 0.5 * trap.width) & (pen > 0)
            depth[active] = pen[active]
            normal[active, :2] = inward[active]
        else:
            ax = np.asarray(trap.axis)
            nrm = np.array([-ax[1], ax[0]])
            along = rel @ ax
            across = rel @ nrm
            pen = (np.abs(across) + radii) - 0.5 * trap.width
            active = below & (np.abs(across) < 0.5 * trap.width) & (pen > 0) & (np.abs(along) <= trap.half_length)
            sign = np.where(across > 0, -1.0, 1.0)
            depth[active] = pen[active]
            normal[active, 0] = sign[active] * nrm[0]
            normal[active, 1] = sign[active] * nrm[1]
        return depth, normal, depth > 0

    # Solid obstacle: lateral penetration against the wall/cylinder surface.
    if trap.shape == "ring":
        rho = np.linalg.norm(rel, axis=1)
        s = rho - trap.radius
        lat_pen = (0.5 * trap.width + radii) - np.abs(s)
        radial = np.where(rho[:, None] > 1e-9, rel / np.maximum(rho, 1e-9)[:, None], np.array([[1.0, 0.0]]))
        lat_dir = np.where(s[:, None] >= 0, radial, -radial)
        in_span = np.ones(n_pts, dtype=bool)
    elif trap.shape == "segment":
        ax = np.asarray(trap.axis)
        nrm = np.array([-ax[1], ax[0]])
        along = rel @ ax
        across = rel @ nrm
        lat_pen = (0.5 * trap.width + radii) - np.abs(across)
        sign = np.where(across >= 0, 1.0, -1.0)
        lat_dir = np.stack([sign * nrm[0], sign * nrm[1]], axis=1)
        in_span = np.abs(along) <= trap.half_length + radii
    else:  # cylinder
        rho = np.linalg.norm(rel, axis=1)
        lat_pen = (trap.radius + radii) - rho
        lat_dir = np.where(rho[:, None] > 1e-9, rel / np.maximum(rho, 1e-9)[:, None], np.array([[1.0, 0.0]]))
        in_span = np.ones(n_pts, dtype=bool)

    top = trap.base_z + trap.height
    top_pen = top - (centers[:, 2] - radii)
    active = in_span & (lat_pen > 0) & (top_pen > 0)
    use_top = active & (top_pen <= lat_pen)
    use_lat = active & ~use_top
    depth[use_top] = top_pen[use_top]
    normal[use_top, 2] = 1.0
    depth[use_lat] = lat_pen[use_lat]
    normal[use_lat, :2] = lat_dir[use_lat]
    return depth, normal, active


def perlin_field(seed: int, amplitude: float, frequency: float, shape: tuple, cell_size: float) -> np.ndarray:
    """Classic 2-D gradient noise sampled on a (nx, ny) grid.

    frequency is lattice points per meter; output magnitude <= amplitude.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    nx, ny = shape
    if amplitude == 0.0:
        return np.zeros(shape)
    rng = np.random.default_rng(seed)
    xs = np.arange(nx) * cell_size * frequency
    ys = np.arange(ny) * cell_size * frequency
    lx = int(np.floor(xs[-1])) + 2
    ly = int(np.floor(ys[-1])) + 2
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(lx, ly))
    gx, gy = np.cos(theta), np.sin(theta)

    xi = np.floor(xs).astype(int)[:, None]
    yi = np.floor(ys).astype(int)[None, :]
    xf = (xs[:, None] - xi).astype(float)
    yf = (ys[None, :] - yi).astype(float)

    def dot_corner(ox, oy):
        g1 = gx[xi + ox, yi + oy]
        g2 = gy[xi + ox, yi + oy]
        return g1 * (xf - ox) + g2 * (yf - oy)

    def fade(t):
        return t * t * t * (t * (t * 6 - 15) + 10)

    u, v = fade(xf), fade(yf)
    n0 = dot_corner(0, 0) * (1 - u) + dot_corner(1, 0) * u
    n1 = dot_corner(0, 1) * (1 - u) + dot_corner(1, 1) * u
    field_ = n0 * (1 - v) + n1 * v
    # Gradient noise lives in [-sqrt(2)/2, sqrt(2)/2]; rescale to +-amplitude.
    out = amplitude * field_ * np.sqrt(2.0)
    return np.clip(out, -amplitude, amplitude)


def _bar_height_for_row(row: int) -> float:
    return 0.05 + row * (0.25 - 0.05) / 9.0


def _pit_width_for_row(row: int) -> float:
    return 0.05 + row * (0.30 - 0.05) / 9.0


def _pole_count_for_row(row: int) -> int:
    return int(round(10 + row * (60 - 10) / 9.0))


def _scatter_poles(rng, n, cell_center, cell_half, spawn_clear, min_sep=0.3, max_tries=400):
    placed = []
    tries = 0
    while len(placed) < n and tries < max_tries * n:
        tries += 1
        p = cell_center + rng.uniform(-cell_half + 0.3, cell_half - 0.3, size=2)
        if np.linalg.norm(p - cell_center) < spawn_clear:
            continue
        if any(np.linalg.norm(p - q) < min_sep for q in placed):
            continue
        placed.append(p)
    return placed


def gen_trap_curriculum(seed: int, config=None) -> Terrain:
    """10x10 curriculum grid; row index sets difficulty, column sets category."""
    cfg = dict(
        cell_size_m=10.0,
        grid_resolution=0.1,
        trap_ring_radius=1.2,
        goal_ring_radius=2.5,
        spawn_radius=0.5,
        pit_depth=0.4,
        pole_height=1.0,
        noise_frequency=0.35,
        noise_amplitude_range=(0.05, 0.15),
    )
    cfg.update(config or {})
    cell_m = cfg["cell_size_m"]
    if cell_m < 2.0 * (cfg["trap_ring_radius"] + 1.0):
        raise ValueError("cell too small to enclose the trap ring")
    rng = np.random.default_rng(seed)
    res = cfg["grid_resolution"]
    n_rows = n_cols = 10
    world = cell_m * n_rows
    n_cells = int(round(world / res)) + 1
    hf = np.zeros((n_cells, n_cells))

    traps, cells = [], []
    cell_grid = int(round(cell_m / res))
    amp_lo, amp_hi = cfg["noise_amplitude_range"]
    for row in range(n_rows):
        for col in range(n_cols):
            category = CURRICULUM_COLUMNS[col]
            center = np.array([(col + 0.5) * cell_m, (row + 0.5) * cell_m])
            amp = rng.uniform(amp_lo, amp_hi)
            noise = perlin_field(
                int(rng.integers(2**31)), amp, cfg["noise_frequency"],
                (cell_grid, cell_grid), res,
            )
            x0, y0 = col * cell_grid, row * cell_grid
            hf[x0:x0 + cell_grid, y0:y0 + cell_grid] += noise

            label_id = len(traps)
            if category == CATEGORY_BAR:
                traps.append(TrapPrimitive(
                    kind=TrapKind.Bar, shape="ring", center=tuple(center), label_id=label_id,
                    height=_bar_height_for_row(row), width=rng.uniform(0.025, 0.1),
                    radius=cfg["trap_ring_radius"],
                ))
            elif category == CATEGORY_PIT:
                traps.append(TrapPrimitive(
                    kind=TrapKind.Pit, shape="ring", center=tuple(center), label_id=label_id,
                    width=_pit_width_for_row(row), depth=cfg["pit_depth"],
                    radius=cfg["trap_ring_radius"],
                ))
            elif category == CATEGORY_POLE:
                for p in _scatter_poles(rng, _pole_count_for_row(row), center,
                                        0.5 * cell_m, spawn_clear=cfg["spawn_radius"] + 0.3):
                    traps.append(TrapPrimitive(
                        kind=TrapKind.Pole, shape="cylinder", center=tuple(p),
                        label_id=len(traps), height=cfg["pole_height"],
                        width=(w := rng.uniform(0.025, 0.1)), radius=0.5 * w,
                    ))
            cells.append(CurriculumCell(
                row=row, column=col, category=category, center=tuple(center),
                spawn_point=tuple(center), spawn_radius=cfg["spawn_radius"],
                trap_ring_radius=cfg["trap_ring_radius"],
                goal_ring_radius=cfg["goal_ring_radius"], noise_amplitude=amp,
            ))

    return Terrain(
        heightfield=hf, cell_size=res, origin=(0.0, 0.0),
        extents=(0.0, world, 0.0, world), traps=traps, cells=cells,
        noise_amplitude=amp_hi, meta={"kind": "curriculum", "cell_size_m": cell_m},
    )


RUNWAY_WIDTH = 5.0
RUNWAY_LENGTH = 60.0
_RUNWAY_TRAP_SPAN = (4.0, 56.0)

BENCHMARK_VARIANTS = ("Mix", "Bar", "Pit", "Pole")


def _even_positions(rng, n, jitter=0.5):
    lo, hi = _RUNWAY_TRAP_SPAN
    base = np.linspace(lo, hi, n)
    return base + rng.uniform(-jitter, jitter, size=n)


def gen_benchmark_runway(variant: str, seed: int, config=None) -> Terrain:
    """5 x 60 m runway. Mix carries 10 bars, 10 pits, 50 poles; single-type
    variants carry triple that type's count."""
    if variant not in BENCHMARK_VARIANTS:
        raise ValueError(f"unknown benchmark variant {variant!r}")
    cfg = dict(grid_resolution=0.1, pit_depth=0.4, pole_height=1.0)
    cfg.update(config or {})
    rng = np.random.default_rng(seed)
    res = cfg["grid_resolution"]
    nx = int(round(RUNWAY_LENGTH / res)) + 1
    ny = int(round(RUNWAY_WIDTH / res)) + 1
    hf = np.zeros((nx, ny))
    mid_y = 0.5 * RUNWAY_WIDTH

    n_bars, n_pits, n_poles = {
        "Mix": (10, 10, 50),
        "Bar": (30, 0, 0),
        "Pit": (0, 30, 0),
        "Pole": (0, 0, 150),
    }[variant]

    traps = []
    for x, h in zip(_even_positions(rng, n_bars) if n_bars else [],
                    np.linspace(0.05, 0.2, max(n_bars, 1))):
        traps.append(TrapPrimitive(
            kind=TrapKind.Bar, shape="segment", center=(float(x), mid_y),
            label_id=len(traps), height=float(h), width=rng.uniform(0.025, 0.1),
            axis=(0.0, 1.0), half_length=0.5 * RUNWAY_WIDTH,
        ))
    for x, w in zip(_even_positions(rng, n_pits) if n_pits else [],
                    np.linspace(0.05, 0.2, max(n_pits, 1))):
        traps.append(TrapPrimitive(
            kind=TrapKind.Pit, shape="segment", center=(float(x), mid_y),
            label_id=len(traps), width=float(w), depth=cfg["pit_depth"],
            axis=(0.0, 1.0), half_length=0.5 * RUNWAY_WIDTH,
        ))
    placed = []
    while len(placed) < n_poles:
        p = np.array([rng.uniform(*_RUNWAY_TRAP_SPAN), rng.uniform(0.4, RUNWAY_WIDTH - 0.4)])
        if any(np.linalg.norm(p - q) < 0.3 for q in placed):
            continue
        placed.append(p)
        traps.append(TrapPrimitive(
            kind=TrapKind.Pole, shape="cylinder", center=tuple(p), label_id=len(traps),
            height=cfg["pole_height"], width=(w := rng.uniform(0.025, 0.1)), radius=0.5 * w,
        ))

    return Terrain(
        heightfield=hf, cell_size=res, origin=(0.0, 0.0),
        extents=(0.0, RUNWAY_LENGTH, 0.0, RUNWAY_WIDTH), traps=traps,
        meta={
            "kind": "runway", "variant": variant,
            "spawn": (1.0, mid_y), "target": (59.0, mid_y),
        },
    )


def terrain_query(terrain: Terrain, point, radius: float = 1.0):
    """Ground height under a point plus trap surfaces within the query radius."""
    x, y = float(point[0]), float(point[1])
    if not terrain.in_bounds(x, y):
        raise ValueError(f"query point ({x:.2f}, {y:.2f}) outside terrain extents")
    nearby = terrain.nearby_traps(x, y, radius)
    height = float(terrain.ground_heights(np.array([[x, y]]), nearby=nearby)[0])
    return height, nearby


def trap_label_at(terrain: Terrain, contacts, foot_positions) -> int:
    """Class of the trap the robot is engaging this step.

    A foot below ground level inside a pit gap wins outright; otherwise the
    non-ground contact with the largest force decides; ground-only contact
    maps to the background class.
    """
    feet = np.asarray(foot_positions)
    if len(feet):
        center = feet.mean(axis=0)
        for trap in terrain.nearby_traps(center[0], center[1], 1.5):
            if trap.kind != TrapKind.Pit:
                continue
            inside = pit_contains(trap, feet[:, :2])
            if np.any(inside & (feet[:, 2] < trap.base_z)):
                return int(TrapKind.Pit)
    best_kind, best_mag = LABEL_NONE, 0.0
    for rec in contacts:
        if rec.source_kind == 0:
            continue
        if rec.magnitude > best_mag:
            best_mag = rec.magnitude
            best_kind = rec.source_kind
    return int(best_kind)


def terrain_to_json(terrain: Terrain, max_cells: int = 250_000) -> dict:
    """Versioned JSON document for UI rendering and fixtures.

    The heightfield is downsampled when it exceeds max_cells; traps are
    exported exactly.
    """
    hf = terrain.heightfield
    step = 1
    while (hf.shape[0] // step + 1) * (hf.shape[1] // step + 1) > max_cells:
        step += 1
    sampled = hf[::step, ::step]
    return {
        "version": TERRAIN_SCHEMA_VERSION,
        "cell_size": terrain.cell_size * step,
        "origin": list(terrain.origin),
        "extents": list(terrain.extents),
        "noise_amplitude": terrain.noise_amplitude,
        "heightfield": [[round(float(v), 4) for v in row] for row in sampled],
        "traps": [
            {
                "kind": int(t.kind), "shape": t.shape, "center": list(t.center),
                "label_id": t.label_id, "height": t.height, "width": t.width,
                "depth": t.depth, "radius": t.radius, "axis": list(t.axis),
                "half_length": t.half_length, "base_z": t.base_z,
            }
            for t in terrain.traps
        ],
        "cells": [
            {
                "row": c.row, "column": c.column, "category": c.category,
                "center": list(c.center), "spawn_point": list(c.spawn_point),
                "spawn_radius": c.spawn_radius,
                "trap_ring_radius": c.trap_ring_radius,
                "goal_ring_radius": c.goal_ring_radius,
                "noise_amplitude": c.noise_amplitude,
            }
            for c in terrain.cells
        ],
        "meta": terrain.meta,
    }


def terrain_from_json(doc: dict) -> Terrain:
    if doc.get("version") != TERRAIN_SCHEMA_VERSION:
        raise ValueError(f"unsupported terrain schema version {doc.get('version')!r}")
    traps = [
        TrapPrimitive(
            kind=TrapKind(t["kind"]), shape=t["shape"], center=tuple(t["center"]),
            label_id=t["label_id"], height=t["height"], width=t["width"],
            depth=t["depth"], radius=t["radius"], axis=tuple(t["axis"]),
            half_length=t["half_length"], base_z=t["base_z"],
        )
        for t in doc["traps"]
    ]
    cells = [
        CurriculumCell(
            row=c["row"], column=c["column"], category=c["category"],
            center=tuple(c["center"]), spawn_point=tuple(c["spawn_point"]),
            spawn_radius=c["spawn_radius"], trap_ring_radius=c["trap_ring_radius"],
            goal_ring_radius=c["goal_ring_radius"], noise_amplitude=c["noise_amplitude"],
        )
        for c in doc.get("cells", [])
    ]
    return Terrain(
        heightfield=np.asarray(doc["heightfield"], dtype=float),
        cell_size=doc["cell_size"], origin=tuple(doc["origin"]),
        extents=tuple(doc["extents"]), traps=traps, cells=cells,
        noise_amplitude=doc.get("noise_amplitude", 0.0), meta=doc.get("meta", {}),
    )


def save_terrain(terrain: Terrain, path):
    with open(path, "w") as f:
        json.dump(terrain_to_json(terrain), f)


def load_terrain(path) -> Terrain:
    with open(path) as f:
        return terrain_from_json(json.load(f))


def flat_terrain(size_x: float = 20.0, size_y: float = 20.0, resolution: float = 0.1) -> Terrain:
    """Featureless plane, used for sanity training and velocity sweeps."""
    nx = int(round(size_x / resolution)) + 1
    ny = int(round(size_y / resolution)) + 1
    return Terrain(
        heightfield=np.zeros((nx, ny)), cell_size=resolution, origin=(0.0, 0.0),
        extents=(0.0, size_x, 0.0, size_y), traps=[], meta={"kind": "flat"},
    )
