"""Keyboard layouts: key geometry, character inventories, and point-to-key mapping.

Coordinates are abstract keyboard units: the board spans [0, 1] horizontally
and [0, aspect] vertically.  Key order in the layout document is significant:
it fixes the one-hot feature index and the emission-column order everywhere
downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable

LAYOUT_SCHEMA_VERSION = 1

_BOUNDS_EPS = 1e-9


class LayoutError(ValueError):
    """Raised when a layout document is malformed or violates geometry rules."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True)
class Key:
    char: str
    cx: float
    cy: float
    w: float
    h: float

    @property
    def center(self) -> Point:
        return Point(self.cx, self.cy)


class KeyboardLayout:
    """Immutable keyboard geometry for one script.

    ``chars`` is the ordered character inventory; the position of a character
    in this list is its one-hot index.
    """

    def __init__(self, name: str, aspect: float, keys: Iterable[Key]):
        self.name = name
        self.aspect = float(aspect)
        self.keys = tuple(keys)
        self.chars = tuple(k.char for k in self.keys)
        self._index = {c: i for i, c in enumerate(self.chars)}
        self._validate()
        # Flat center arrays for the nearest-key scan.
        self._cx = [k.cx for k in self.keys]
        self._cy = [k.cy for k in self.keys]

    def _validate(self) -> None:
        if not self.keys:
            raise LayoutError("layout has no keys")
        if self.aspect <= 0 or not math.isfinite(self.aspect):
            raise LayoutError(f"invalid aspect {self.aspect}")
        if len(self._index) != len(self.keys):
            seen: set[str] = set()
            for k in self.keys:
                if k.char in seen:
                    raise LayoutError(f"duplicate character {k.char!r}")
                seen.add(k.char)
        for k in self.keys:
            if len(k.char) != 1:
                raise LayoutError(f"key char must be a single character, got {k.char!r}")
            if k.w <= 0 or k.h <= 0:
                raise LayoutError(f"key {k.char!r} has non-positive size")
            if (k.cx - k.w / 2 < -_BOUNDS_EPS or k.cx + k.w / 2 > 1 + _BOUNDS_EPS
                    or k.cy - k.h / 2 < -_BOUNDS_EPS or k.cy + k.h / 2 > self.aspect + _BOUNDS_EPS):
                raise LayoutError(f"key {k.char!r} extends outside the board")

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, c: str) -> bool:
        return c in self._index

    def char_index(self, c: str) -> int:
        try:
            return self._index[c]
        except KeyError:
            raise KeyError(f"character {c!r} not on layout {self.name!r}") from None

    def key_for(self, c: str) -> Key:
        return self.keys[self.char_index(c)]

    def key_width(self, c: str) -> float:
        return self.key_for(c).w

    def to_document(self) -> dict:
        return {
            "schema_version": LAYOUT_SCHEMA_VERSION,
            "name": self.name,
            "aspect": self.aspect,
            "keys": [
                {"char": k.char, "cx": k.cx, "cy": k.cy, "w": k.w, "h": k.h}
                for k in self.keys
            ],
        }


def load_layout(document: dict) -> KeyboardLayout:
    """Validate a layout document (parsed JSON) and build a KeyboardLayout."""
    if not isinstance(document, dict):
        raise LayoutError("layout document must be a JSON object")
    version = document.get("schema_version")
    if version != LAYOUT_SCHEMA_VERSION:
        raise LayoutError(f"unsupported schema_version {version!r}")
    for field in ("name", "aspect", "keys"):
        if field not in document:
            raise LayoutError(f"layout document missing field {field!r}")
    keys = []
    for entry in document["keys"]:
        try:
            keys.append(Key(
                char=entry["char"],
                cx=float(entry["cx"]),
                cy=float(entry["cy"]),
                w=float(entry["w"]),
                h=float(entry["h"]),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise LayoutError(f"malformed key entry {entry!r}: {exc}") from exc
    return KeyboardLayout(document["name"], document["aspect"], keys)


def load_layout_file(path) -> KeyboardLayout:
    with open(path, encoding="utf-8") as fh:
        return load_layout(json.load(fh))


def bundled_layout_names() -> list[str]:
    base = resources.files("swipeforge.data.layouts")
    return sorted(p.name[:-5] for p in base.iterdir() if p.name.endswith(".json"))


def load_bundled_layout(name: str) -> KeyboardLayout:
    base = resources.files("swipeforge.data.layouts")
    ref = base / f"{name}.json"
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise LayoutError(f"no bundled layout named {name!r}") from None
    return load_layout(json.loads(text))


def key_center(layout: KeyboardLayout, c: str) -> Point:
    """Center of the key rectangle for character ``c``."""
    return layout.key_for(c).center


def nearest_key(layout: KeyboardLayout, p: Point) -> int:
    """Index of the key whose center is closest to ``p`` (Euclidean).

    Total over finite points; ties break to the lowest character index so the
    mapping is deterministic across platforms.
    """
    best = 0
    best_d = (layout._cx[0] - p.x) ** 2 + (layout._cy[0] - p.y) ** 2
    for i in range(1, len(layout._cx)):
        d = (layout._cx[i] - p.x) ** 2 + (layout._cy[i] - p.y) ** 2
        if d < best_d:
            best = i
            best_d = d
    return best
