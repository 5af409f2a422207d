"""Procedural ground-truth label maps for desk-scale experiments.

Maps imitate the composition of oblique aerial scenes: large vegetation
and background areas, tree patches, building blocks, roads crossing the
frame, cars on or near the roads, and a few human-sized dots.  Every map
contains at least one unsafe and one safe region by construction.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.ndimage import gaussian_filter

from .categories import (
    BACKGROUND,
    BUILDING,
    CATEGORY_NAMES,
    HUMAN,
    LOW_VEGETATION,
    MOVING_CAR,
    N_CATEGORIES,
    ROAD,
    STATIC_CAR,
    TREE,
    is_unsafe_mask,
)
from .errors import ConfigError

log = logging.getLogger("elz.synth")

# Loose target bands for the long-run class mix of generated corpora,
# as fractions of all pixels.
DEFAULT_CLASS_BANDS = {
    "background": (0.05, 0.55),
    "building": (0.01, 0.25),
    "human": (0.0, 0.01),
    "low_vegetation": (0.15, 0.60),
    "moving_car": (0.0, 0.02),
    "road": (0.02, 0.25),
    "static_car": (0.0, 0.02),
    "tree": (0.03, 0.35),
}


def _segment_distance(h, w, p0, p1):
    """Distance of every pixel centre to the segment p0-p1."""
    ys, xs = np.mgrid[0:h, 0:w]
    px = xs - p0[0]
    py = ys - p0[1]
    vx = p1[0] - p0[0]
    vy = p1[1] - p0[1]
    vv = vx * vx + vy * vy
    t = np.clip((px * vx + py * vy) / vv, 0.0, 1.0) if vv > 0 else 0.0
    dx = px - t * vx
    dy = py - t * vy
    return np.hypot(dx, dy)


def _stamp_rect(labels, rng, cat, w_range, h_range):
    h, w = labels.shape
    rw = int(rng.integers(*w_range))
    rh = int(rng.integers(*h_range))
    x0 = int(rng.integers(0, max(1, w - rw)))
    y0 = int(rng.integers(0, max(1, h - rh)))
    labels[y0 : y0 + rh, x0 : x0 + rw] = cat


def generate_map(seed: int, width: int, height: int) -> np.ndarray:
    """One seeded label map of the requested native size."""
    if width < 16 or height < 16:
        raise ConfigError(f"maps must be at least 16x16, got {width}x{height}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), width, height, 5]))
    h, w = height, width
    labels = np.full((h, w), BACKGROUND, dtype=np.uint8)

    # vegetation carpet
    veg_field = gaussian_filter(rng.standard_normal((h, w)), sigma=max(2.0, w / 8))
    veg_frac = rng.uniform(0.35, 0.55)
    labels[veg_field > np.quantile(veg_field, 1.0 - veg_frac)] = LOW_VEGETATION

    # tree patches on top
    tree_field = gaussian_filter(rng.standard_normal((h, w)), sigma=max(1.5, w / 16))
    tree_frac = rng.uniform(0.08, 0.22)
    labels[tree_field > np.quantile(tree_field, 1.0 - tree_frac)] = TREE

    # building blocks
    for _ in range(int(rng.integers(2, 6))):
        _stamp_rect(
            labels,
            rng,
            BUILDING,
            (max(3, w // 25), max(4, w // 8)),
            (max(3, h // 25), max(4, h // 8)),
        )

    # roads crossing the frame; bias the first one through the lower half
    # so the bottom-centre area is not trivially safe
    n_roads = int(rng.integers(1, 4))
    road_mask = np.zeros((h, w), dtype=bool)
    for r in range(n_roads):
        if r == 0:
            y_left = int(rng.integers(h // 2, h))
            y_right = int(rng.integers(h // 2, h))
            p0, p1 = (0, y_left), (w - 1, y_right)
        else:
            if rng.random() < 0.5:
                p0 = (0, int(rng.integers(0, h)))
                p1 = (w - 1, int(rng.integers(0, h)))
            else:
                p0 = (int(rng.integers(0, w)), 0)
                p1 = (int(rng.integers(0, w)), h - 1)
        half = max(1.0, rng.uniform(0.008, 0.02) * w)
        road_mask |= _segment_distance(h, w, p0, p1) <= half
    labels[road_mask] = ROAD

    # cars on the roads
    road_ys, road_xs = np.nonzero(road_mask)
    if len(road_ys):
        car_w = max(2, round(0.006 * w))
        car_h = max(3, round(0.012 * w))
        for _ in range(int(rng.integers(2, 10))):
            i = int(rng.integers(len(road_ys)))
            cy, cx = int(road_ys[i]), int(road_xs[i])
            cat = MOVING_CAR if rng.random() < 0.5 else STATIC_CAR
            y0 = max(0, cy - car_h // 2)
            x0 = max(0, cx - car_w // 2)
            labels[y0 : y0 + car_h, x0 : x0 + car_w] = cat

    # a few humans on safe ground
    safe_ys, safe_xs = np.nonzero(~is_unsafe_mask(labels))
    for _ in range(int(rng.integers(0, 6))):
        if not len(safe_ys):
            break
        i = int(rng.integers(len(safe_ys)))
        y0, x0 = int(safe_ys[i]), int(safe_xs[i])
        labels[y0 : min(h, y0 + 2), x0 : min(w, x0 + 2)] = HUMAN

    # generator contract: at least one unsafe and one safe region
    if not is_unsafe_mask(labels).any():
        labels[h - 2 :, :] = ROAD
    if is_unsafe_mask(labels).all():
        labels[: max(1, h // 8), :] = LOW_VEGETATION
    return labels


def class_frequencies(maps) -> dict:
    """Mean per-class pixel fraction over an iterable of label maps."""
    counts = np.zeros(N_CATEGORIES, dtype=np.int64)
    total = 0
    for m in maps:
        counts += np.bincount(m.ravel(), minlength=N_CATEGORIES)
        total += m.size
    if total == 0:
        raise ConfigError("no maps given")
    return {CATEGORY_NAMES[i]: counts[i] / total for i in range(N_CATEGORIES)}


def generate_dataset(count: int, width: int, height: int, seed: int) -> list:
    """(name, labels) pairs for a seeded corpus."""
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    out = []
    for i in range(count):
        labels = generate_map(seed + i, width, height)
        out.append((f"synth_{i:04d}", labels))
    log.info("generated %d maps of %dx%d", count, width, height)
    return out
