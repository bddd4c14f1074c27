import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swipeforge.geometry import (
    Key,
    KeyboardLayout,
    LayoutError,
    Point,
    bundled_layout_names,
    key_center,
    load_bundled_layout,
    load_layout,
    nearest_key,
)


def brute_force_nearest(layout, p):
    dists = [(k.cx - p.x) ** 2 + (k.cy - p.y) ** 2 for k in layout.keys]
    return int(np.argmin(dists))


def test_bundled_qwerty_has_26_keys(qwerty):
    assert len(qwerty) == 26
    assert "".join(qwerty.chars) == "qwertyuiopasdfghjklzxcvbnm"


def test_bundled_layouts_all_load():
    names = bundled_layout_names()
    assert "qwerty_en" in names and "devanagari_hi" in names
    for name in names:
        layout = load_bundled_layout(name)
        assert len(layout) > 0


def test_duplicate_character_rejected():
    doc = {"schema_version": 1, "name": "bad", "aspect": 0.5, "keys": [
        {"char": "a", "cx": 0.2, "cy": 0.2, "w": 0.1, "h": 0.1},
        {"char": "a", "cx": 0.5, "cy": 0.2, "w": 0.1, "h": 0.1},
    ]}
    with pytest.raises(LayoutError, match="duplicate"):
        load_layout(doc)


def test_out_of_bounds_key_rejected():
    doc = {"schema_version": 1, "name": "bad", "aspect": 0.5, "keys": [
        {"char": "a", "cx": 1.5, "cy": 0.2, "w": 0.1, "h": 0.1},
    ]}
    with pytest.raises(LayoutError, match="outside"):
        load_layout(doc)


def test_schema_violations_rejected():
    with pytest.raises(LayoutError):
        load_layout({"schema_version": 99, "name": "x", "aspect": 0.5, "keys": []})
    with pytest.raises(LayoutError):
        load_layout({"schema_version": 1, "aspect": 0.5, "keys": []})
    with pytest.raises(LayoutError):
        load_layout({"schema_version": 1, "name": "x", "aspect": 0.5,
                     "keys": [{"char": "a", "cx": "oops", "cy": 0, "w": 0.1, "h": 0.1}]})


def test_key_center_reads_rectangle_center(qwerty):
    assert key_center(qwerty, "q") == Point(0.05, 0.065)


def test_key_center_unknown_character(qwerty):
    with pytest.raises(KeyError):
        key_center(qwerty, "ß")


def test_all_centers_pairwise_distinct_on_bundled_layouts():
    for name in bundled_layout_names():
        layout = load_bundled_layout(name)
        centers = [(k.cx, k.cy) for k in layout.keys]
        assert len(set(centers)) == len(centers)


def test_nearest_key_at_exact_center(qwerty):
    for c in qwerty.chars:
        assert nearest_key(qwerty, key_center(qwerty, c)) == qwerty.char_index(c)


def test_nearest_key_tie_breaks_to_lowest_index():
    # centers at binary-exact 0.25 and 0.75 make the midpoint an exact tie
    layout = KeyboardLayout("tie", 0.5, [
        Key("a", 0.25, 0.25, 0.25, 0.25),
        Key("b", 0.75, 0.25, 0.25, 0.25),
    ])
    assert nearest_key(layout, Point(0.5, 0.25)) == 0
    assert nearest_key(layout, Point(0.5, 0.0)) == 0


def test_nearest_key_matches_brute_force_scan(qwerty, devanagari):
    rng = np.random.default_rng(42)
    for layout in (qwerty, devanagari):
        for _ in range(1000):
            p = Point(rng.uniform(-0.2, 1.2), rng.uniform(-0.2, layout.aspect + 0.2))
            assert nearest_key(layout, p) == brute_force_nearest(layout, p)


def test_nearest_key_invariant_under_relabeling(qwerty):
    relabeled = KeyboardLayout(
        "relabeled", qwerty.aspect,
        [Key(chr(ord("A") + i), k.cx, k.cy, k.w, k.h) for i, k in enumerate(qwerty.keys)])
    rng = np.random.default_rng(7)
    for _ in range(200):
        p = Point(rng.uniform(0, 1), rng.uniform(0, qwerty.aspect))
        assert nearest_key(qwerty, p) == nearest_key(relabeled, p)


def test_layout_document_round_trip():
    for name in bundled_layout_names():
        layout = load_bundled_layout(name)
        doc = layout.to_document()
        again = load_layout(json.loads(json.dumps(doc)))
        assert again.to_document() == doc
        assert again.chars == layout.chars


@given(st.floats(-1, 2), st.floats(-1, 2))
@settings(max_examples=50, deadline=None)
def test_nearest_key_total_over_finite_points(x, y):
    layout = load_bundled_layout("qwerty_en")
    idx = nearest_key(layout, Point(x, y))
    assert 0 <= idx < len(layout)


def test_point_rejects_non_finite():
    with pytest.raises(ValueError):
        Point(float("nan"), 0.0)
    with pytest.raises(ValueError):
        Point(0.0, float("inf"))
