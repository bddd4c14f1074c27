"""Synthetic swipe-trace generation.

Traces between keys follow minimum-jerk trajectories: single segments are the
classic quintic p(t) = p0 + (p1-p0)(10t^3 - 15t^4 + 6t^5), and noisy segments
pass through a sampled via point on a two-piece quintic spline solved with
position/velocity/acceleration (and higher-order) continuity at the junction.
Endpoints are jittered with a 2D Gaussian around key centers.

All functions are pure given their RNG; dataset generation derives one child
seed per (word, repeat) pair so words can be synthesized in parallel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .geometry import KeyboardLayout, Point, key_center, nearest_key

TRACE_SCHEMA_KEYS = ("word", "layout_name", "points")


@dataclass(frozen=True)
class SynthConfig:
    points_per_unit: float = 40.0
    endpoint_sigma: float = 0.15     # fraction of key width
    via_noise: bool = True
    rng_seed: int = 0
    repeat_loop_radius: float = 0.4  # fraction of key width
    dwell_points: int = 3            # cluster size for single-character words

    def __post_init__(self) -> None:
        if self.points_per_unit <= 0:
            raise ValueError("points_per_unit must be positive")
        if self.endpoint_sigma < 0:
            raise ValueError("endpoint_sigma must be >= 0")
        if self.repeat_loop_radius <= 0:
            raise ValueError("repeat_loop_radius must be positive")


@dataclass
class Trace:
    points: list[Point]
    word: str
    layout_name: str
    # sample index of each character's anchor point; synthesis bookkeeping,
    # never serialized (the record schema is {word, layout_name, points})
    anchor_indices: list[int] | None = None

    def __post_init__(self) -> None:
        if len(self.word) >= 2 and len(self.points) < 2:
            raise ValueError("trace for a multi-character word needs >= 2 points")

    def as_array(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.points], dtype=np.float64)

    def to_record(self) -> dict:
        return {
            "word": self.word,
            "layout_name": self.layout_name,
            "points": [[p.x, p.y] for p in self.points],
        }

    @classmethod
    def from_record(cls, record: dict) -> "Trace":
        return cls(
            points=[Point(float(x), float(y)) for x, y in record["points"]],
            word=record["word"],
            layout_name=record["layout_name"],
        )


@dataclass
class FeatureSequence:
    """Per-point feature rows: x, y, dx, dy, one-hot over layout characters."""

    rows: np.ndarray
    char_count: int

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def width(self) -> int:
        return self.rows.shape[1]


def _minjerk_shape(t: np.ndarray) -> np.ndarray:
    return 10 * t**3 - 15 * t**4 + 6 * t**5


def min_jerk_eval(p0: Point, p1: Point, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Position, velocity, acceleration of the single-segment quintic at t in [0,1]."""
    d = np.array([p1.x - p0.x, p1.y - p0.y])
    pos = np.array([p0.x, p0.y]) + d * (10 * t**3 - 15 * t**4 + 6 * t**5)
    vel = d * (30 * t**2 - 60 * t**3 + 30 * t**4)
    acc = d * (60 * t - 180 * t**2 + 120 * t**3)
    return pos, vel, acc


def min_jerk_segment(p0: Point, p1: Point, n: int) -> list[Point]:
    """Sample the quintic minimum-jerk path uniformly in normalized time.

    Uses the two-term lerp form so the endpoint samples equal p0 and p1
    exactly (p0 + (p1-p0)*1.0 can be off by one ulp).
    """
    if n < 2:
        raise ValueError("minimum-jerk segment needs n >= 2 samples")
    t = np.linspace(0.0, 1.0, n)
    s = _minjerk_shape(t)
    xs = p0.x * (1.0 - s) + p1.x * s
    ys = p0.y * (1.0 - s) + p1.y * s
    return [Point(float(x), float(y)) for x, y in zip(xs, ys)]


def _poly_deriv_row(t: float, order: int) -> np.ndarray:
    row = np.zeros(6)
    for i in range(order, 6):
        c = 1.0
        for k in range(order):
            c *= i - k
        row[i] = c * t ** (i - order)
    return row


def _via_quintic_coeffs(p0: float, pv: float, p1: float, tv: float) -> tuple[np.ndarray, np.ndarray]:
    """Local-time coefficients of the two-piece quintic through
    (0,p0)-(tv,pv)-(1,p1).

    Piece A is parameterized over s = t/tv in [0,1] and piece B over
    u = (t-tv)/(1-tv); the local parameterization keeps the linear system
    well conditioned even for extreme split times. Twelve conditions pin the
    12 unknowns: rest boundary conditions at both ends, interpolation of pv
    by both pieces at the junction, and continuity of the first four global
    derivatives there (the variational optimality conditions for an interior
    position constraint).
    """
    m = np.zeros((12, 12))
    rhs = np.zeros(12)
    # piece A boundary at s=0
    m[0, :6] = _poly_deriv_row(0.0, 0)
    rhs[0] = p0
    m[1, :6] = _poly_deriv_row(0.0, 1)
    m[2, :6] = _poly_deriv_row(0.0, 2)
    # piece B boundary at u=1
    m[3, 6:] = _poly_deriv_row(1.0, 0)
    rhs[3] = p1
    m[4, 6:] = _poly_deriv_row(1.0, 1)
    m[5, 6:] = _poly_deriv_row(1.0, 2)
    # via interpolation from both sides
    m[6, :6] = _poly_deriv_row(1.0, 0)
    rhs[6] = pv
    m[7, 6:] = _poly_deriv_row(0.0, 0)
    rhs[7] = pv
    # junction continuity of global derivatives, orders 1..4
    for j, order in enumerate((1, 2, 3, 4)):
        m[8 + j, :6] = _poly_deriv_row(1.0, order) / tv**order
        m[8 + j, 6:] = -_poly_deriv_row(0.0, order) / (1.0 - tv) ** order
    sol = np.linalg.solve(m, rhs)
    return sol[:6], sol[6:]


@dataclass(frozen=True)
class ViaQuintic:
    """Two-piece quintic with pieces stored in local time (see coeff solver)."""

    tv: float
    ax: np.ndarray
    bx: np.ndarray
    ay: np.ndarray
    by: np.ndarray

    def eval(self, t: float, order: int = 0, piece: str | None = None) -> np.ndarray:
        """Global-time value or derivative; ``piece`` forces one side at the
        junction ("first"/"second")."""
        use_first = t <= self.tv if piece is None else piece == "first"
        if use_first:
            local, scale, cx, cy = t / self.tv, 1.0 / self.tv, self.ax, self.ay
        else:
            local = (t - self.tv) / (1.0 - self.tv)
            scale, cx, cy = 1.0 / (1.0 - self.tv), self.bx, self.by
        row = _poly_deriv_row(local, order) * scale**order
        return np.array([row @ cx, row @ cy])


def via_split_time(p0: Point, pv: Point, p1: Point) -> float:
    """Arc-length-proportional via time, clamped away from the endpoints."""
    d0 = math.hypot(pv.x - p0.x, pv.y - p0.y)
    d1 = math.hypot(p1.x - pv.x, p1.y - pv.y)
    if d0 + d1 == 0.0:
        return 0.5
    return min(max(d0 / (d0 + d1), 0.05), 0.95)


def via_quintic(p0: Point, pv: Point, p1: Point) -> ViaQuintic:
    tv = via_split_time(p0, pv, p1)
    ax, bx = _via_quintic_coeffs(p0.x, pv.x, p1.x, tv)
    ay, by = _via_quintic_coeffs(p0.y, pv.y, p1.y, tv)
    return ViaQuintic(tv=tv, ax=ax, bx=bx, ay=ay, by=by)


def via_point_segment(p0: Point, pv: Point, p1: Point, n: int) -> list[Point]:
    """Two-piece quintic through the via point, sampled uniformly over time."""
    if n < 3:
        raise ValueError("via-point segment needs n >= 3 samples")
    spline = via_quintic(p0, pv, p1)
    pts = [spline.eval(t) for t in np.linspace(0.0, 1.0, n)]
    return [Point(float(x), float(y)) for x, y in pts]


def via_point_eval(p0: Point, pv: Point, p1: Point, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Position, velocity, acceleration of the via-point spline at time t."""
    spline = via_quintic(p0, pv, p1)
    return spline.eval(t, 0), spline.eval(t, 1), spline.eval(t, 2)


def perturb_endpoint(layout: KeyboardLayout, c: str, sigma: float,
                     rng: np.random.Generator) -> Point:
    """Key center plus isotropic Gaussian noise scaled by the key width."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    center = key_center(layout, c)
    if sigma == 0.0:
        return center
    std = sigma * layout.key_width(c)
    dx, dy = rng.normal(0.0, std, size=2)
    return Point(center.x + dx, center.y + dy)


def sample_via(p0: Point, p1: Point, rng: np.random.Generator) -> Point:
    """Uniform sample from the axis-aligned box spanned by the two endpoints."""
    lo_x, hi_x = sorted((p0.x, p1.x))
    lo_y, hi_y = sorted((p0.y, p1.y))
    x = rng.uniform(lo_x, hi_x) if hi_x > lo_x else lo_x
    y = rng.uniform(lo_y, hi_y) if hi_y > lo_y else lo_y
    return Point(x, y)


def _segment_samples(cfg: SynthConfig, length: float) -> int:
    return max(3, int(math.ceil(cfg.points_per_unit * length)))


def _repeat_loop(anchor: Point, radius: float, n: int) -> list[Point]:
    """Circle of the given radius tangent to the anchor, traversed once.

    The circle center sits ``radius`` above the anchor so the loop starts and
    ends at the anchor itself; direction is fixed for determinism.
    """
    cx, cy = anchor.x, anchor.y + radius
    start = math.atan2(anchor.y - cy, anchor.x - cx)
    thetas = start + np.linspace(0.0, 2 * math.pi, n)
    return [Point(cx + radius * math.cos(t), cy + radius * math.sin(t)) for t in thetas[1:]]


def synthesize_trace(layout: KeyboardLayout, word: str, cfg: SynthConfig,
                     rng: np.random.Generator) -> Trace:
    """Build one swipe trace for ``word`` by chaining noisy via-point segments."""
    if not word:
        raise ValueError("cannot synthesize a trace for an empty word")
    for c in word:
        if c not in layout:
            raise KeyError(f"character {c!r} not on layout {layout.name!r}")

    anchors = [perturb_endpoint(layout, c, cfg.endpoint_sigma, rng) for c in word]

    if len(word) == 1:
        jitter = 0.05 * layout.key_width(word[0])
        pts = [anchors[0]]
        for _ in range(max(2, cfg.dwell_points) - 1):
            dx, dy = rng.normal(0.0, jitter, size=2) if cfg.endpoint_sigma > 0 else (0.0, 0.0)
            pts.append(Point(anchors[0].x + dx, anchors[0].y + dy))
        return Trace(points=pts, word=word, layout_name=layout.name, anchor_indices=[0])

    points: list[Point] = [anchors[0]]
    anchor_indices = [0]
    pos = anchors[0]
    for prev, cur, target in zip(word, word[1:], anchors[1:]):
        if prev == cur:
            radius = cfg.repeat_loop_radius * layout.key_width(cur)
            n = max(6, int(math.ceil(cfg.points_per_unit * 2 * math.pi * radius)))
            loop = _repeat_loop(pos, radius, n)
            points.extend(loop)
            pos = points[-1]
            anchor_indices.append(len(points) - 1)
            continue
        if cfg.via_noise:
            pv = sample_via(pos, target, rng)
            length = (math.hypot(pv.x - pos.x, pv.y - pos.y)
                      + math.hypot(target.x - pv.x, target.y - pv.y))
            seg = via_point_segment(pos, pv, target, _segment_samples(cfg, length))
        else:
            length = math.hypot(target.x - pos.x, target.y - pos.y)
            seg = min_jerk_segment(pos, target, max(2, _segment_samples(cfg, length)))
        points.extend(seg[1:])
        pos = target
        anchor_indices.append(len(points) - 1)
    return Trace(points=points, word=word, layout_name=layout.name,
                 anchor_indices=anchor_indices)


def featurize(trace: Trace, layout: KeyboardLayout) -> FeatureSequence:
    """x, y, central-difference dx/dy over sample index, one-hot nearest key."""
    if not trace.points:
        raise ValueError("cannot featurize an empty trace")
    xy = trace.as_array()
    t = xy.shape[0]
    d = np.zeros_like(xy)
    if t >= 2:
        d[1:-1] = (xy[2:] - xy[:-2]) / 2.0
        d[0] = xy[1] - xy[0]
        d[-1] = xy[-1] - xy[-2]
    onehot = np.zeros((t, len(layout)), dtype=np.float64)
    for i, p in enumerate(trace.points):
        onehot[i, nearest_key(layout, p)] = 1.0
    rows = np.concatenate([xy, d, onehot], axis=1)
    return FeatureSequence(rows=rows, char_count=len(layout))


def trace_rng(master_seed: int, word_index: int, repeat_index: int = 0) -> np.random.Generator:
    """Independent generator for one (word, repeat) cell of a dataset."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, word_index, repeat_index]))


def synthesize_dataset(layout: KeyboardLayout, words: Sequence[str], cfg: SynthConfig,
                       traces_per_word: int = 1) -> Iterator[Trace]:
    """Deterministic trace stream: word-major order, seeded per (word, repeat)."""
    for i, word in enumerate(words):
        for j in range(traces_per_word):
            rng = trace_rng(cfg.rng_seed, i, j)
            yield synthesize_trace(layout, word, cfg, rng)


def write_traces(traces: Iterable[Trace], path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(json.dumps(trace.to_record(), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_traces(path) -> list[Trace]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(Trace.from_record(json.loads(line)))
    return out
