"""Figure rendering for analysis reports.

Every analysis table the CLI writes gets a matching PNG next to it. Rendering
is headless (Agg) so reports work in CI and containers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .geometry import KeyboardLayout
from .synth import Trace, min_jerk_segment
from .geometry import Point
from .pipeline import AnalysisTables


def save_length_accuracy_figure(tables: AnalysisTables, path) -> None:
    lengths = [r[0] for r in tables.length_rows]
    accs = [r[2] for r in tables.length_rows]
    counts = [r[1] for r in tables.length_rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(lengths, accs, color="#4878a8")
    for x, a, n in zip(lengths, accs, counts):
        ax.annotate(f"n={n}", (x, a), ha="center", va="bottom", fontsize=7)
    ax.set_xlabel("word length")
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 105)
    ax.set_title("Accuracy by word length")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_angle_figure(tables: AnalysisTables, path) -> None:
    mids = [(lo + hi) / 2 * 100 for lo, hi, _, _ in tables.angle_rows]
    angles = [ang for _, _, _, ang in tables.angle_rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(angles, [100 - m for m in mids], "o-", color="#a85548")
    ax.set_xlabel("mean subtended angle (deg)")
    ax.set_ylabel("trigram accuracy (%)")
    ax.set_title("Trigram accuracy vs subtended angle")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trace_figure(trace: Trace, layout: KeyboardLayout, path) -> None:
    """Trace overlaid on the keyboard; y axis flipped so row 0 is on top."""
    fig, ax = plt.subplots(figsize=(7, 7 * layout.aspect))
    for key in layout.keys:
        ax.add_patch(plt.Rectangle((key.cx - key.w / 2, key.cy - key.h / 2),
                                   key.w, key.h, fill=False, color="#888888"))
        ax.annotate(key.char, (key.cx, key.cy), ha="center", va="center", fontsize=9)
    xy = trace.as_array()
    ax.plot(xy[:, 0], xy[:, 1], "-", color="#4878a8", lw=2, alpha=0.8)
    ax.plot(xy[0, 0], xy[0, 1], "o", color="#48a868")
    ax.plot(xy[-1, 0], xy[-1, 1], "s", color="#a85548")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(layout.aspect + 0.02, -0.02)
    ax.set_aspect("equal")
    ax.set_title(f"{trace.word!r} on {layout.name}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_speed_profile_figure(path, n: int = 200) -> None:
    """Discrete speed along one zero-noise segment (bell-shaped by design)."""
    pts = min_jerk_segment(Point(0.0, 0.0), Point(1.0, 0.0), n)
    xy = np.array([[p.x, p.y] for p in pts])
    speed = np.hypot(*np.diff(xy, axis=0).T) * (n - 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.linspace(0, 1, n - 1), speed, color="#4878a8")
    ax.set_xlabel("normalized time")
    ax.set_ylabel("speed (units per unit time)")
    ax.set_title("Speed profile of a minimum-jerk segment")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
