"""Hazard scoring and ranking of candidate landing pixels.

A candidate's hazard mixes a semantic term (severity-weighted category
mix inside the safety square) and a distance term (proximity of the
nearest forbidden pixel in ground metres): h = alpha*h_s + (1-alpha)*h_d.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy.ndimage import distance_transform_edt

from .camera import CameraModel, SafetyRadiusConfig, ground_size_per_row, window_side_px
from .categories import (
    BACKGROUND,
    HUMAN,
    LOW_VEGETATION,
    N_CATEGORIES,
    TREE,
    UNSAFE_CATEGORIES,
    is_unsafe_mask,
)
from .errors import ConfigError, InconsistencyError
from .geometry import window_rect

DEFAULT_SEVERITY = {TREE: 3.0, BACKGROUND: 2.0, HUMAN: 1.0, LOW_VEGETATION: 0.0}


@dataclass(frozen=True)
class HazardWeights:
    """Weights of the hazard function.

    severity maps each authorized (safe) category id to a non-negative
    score; trees are worst, low vegetation ideal.  d_max_m is the ground
    distance beyond which the nearest forbidden pixel stops mattering;
    None means 3x the safety radius.
    """

    alpha: float = 0.5
    severity: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_SEVERITY))
    d_max_m: Optional[float] = None

    def validate(self) -> None:
        problems = []
        if not 0.0 <= self.alpha <= 1.0:
            problems.append(f"alpha must be in [0, 1], got {self.alpha}")
        for cat, s in self.severity.items():
            if cat in UNSAFE_CATEGORIES:
                problems.append(f"severity given for unsafe category {cat}")
            if s < 0:
                problems.append(f"severity must be >= 0, got {s} for category {cat}")
        if not self.severity or max(self.severity.values(), default=0.0) <= 0:
            problems.append("at least one severity must be > 0")
        if problems:
            raise ConfigError("; ".join(problems))

    def severity_array(self) -> np.ndarray:
        arr = np.zeros(N_CATEGORIES)
        for cat, s in self.severity.items():
            arr[cat] = s
        return arr

    def resolved_d_max(self, cfg: SafetyRadiusConfig) -> float:
        d_max = 3.0 * cfg.radius_m if self.d_max_m is None else self.d_max_m
        if not d_max > cfg.radius_m:
            raise ConfigError(
                f"d_max {d_max} must exceed the safety radius {cfg.radius_m}"
            )
        return d_max


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: object
    h_s: float
    h_d: float
    h: float
    rank: int


def semantic_hazard(c, labels: np.ndarray, w: HazardWeights, window_mode: str = "side") -> float:
    """Severity-weighted category mix of the safety square, in [0, 1].

    Averages the per-category severities over the window's pixel
    fractions and normalizes by the maximum severity.  The window must be
    in-bounds and free of unsafe categories; anything else means an
    upstream bug and raises InconsistencyError.
    """
    w.validate()
    h, wd = labels.shape
    r = window_rect(c.x, c.y, window_side_px(c.radius_px, window_mode))
    if not r.inside(wd, h):
        raise InconsistencyError(f"candidate window {r} leaves the {wd}x{h} frame")
    win = labels[r.slices()]
    if is_unsafe_mask(win).any():
        raise InconsistencyError(
            f"candidate at ({c.x}, {c.y}) has unsafe pixels inside its safety square"
        )
    counts = np.bincount(win.ravel(), minlength=N_CATEGORIES)
    sev = w.severity_array()
    m = counts / counts.sum()
    return float((m * sev).sum() / sev.max())


def distance_to_forbidden(fmap: np.ndarray) -> np.ndarray:
    """Euclidean pixel distance from every pixel to the nearest forbidden
    pixel; +inf everywhere when the map has none."""
    if not fmap.any():
        return np.full(fmap.shape, np.inf)
    return distance_transform_edt(~fmap)


def distance_hazard(
    c,
    fmap: np.ndarray,
    cam: CameraModel,
    cfg: SafetyRadiusConfig,
    w: HazardWeights,
    dist_px: Optional[np.ndarray] = None,
) -> float:
    """Closeness of the nearest forbidden pixel, linear in ground metres.

    The pixel distance to the nearest forbidden pixel is converted to
    metres with the ground size of the candidate's own row.  Distances at
    or beyond d_max score 0; at the safety radius the score is 1.  With
    window_mode "side" a valid candidate's nearest forbidden pixel can
    legitimately sit slightly inside the radius (half a window away), so
    sub-radius distances clamp to 1 rather than erroring; a forbidden
    pixel inside the window itself still raises InconsistencyError.
    """
    h, wd = fmap.shape
    r = window_rect(c.x, c.y, window_side_px(c.radius_px, cfg.window_mode))
    if not r.inside(wd, h):
        raise InconsistencyError(f"candidate window {r} leaves the {wd}x{h} frame")
    if fmap[r.slices()].any():
        raise InconsistencyError(
            f"candidate at ({c.x}, {c.y}) has forbidden pixels inside its safety square"
        )
    if dist_px is None:
        dist_px = distance_to_forbidden(fmap)
    delta, mappable = ground_size_per_row(cam)
    if not mappable[c.y]:
        raise InconsistencyError(f"candidate row {c.y} is not mappable to the ground")
    d_m = float(dist_px[c.y, c.x]) * float(delta[c.y])
    d_max = w.resolved_d_max(cfg)
    if not np.isfinite(d_m) or d_m >= d_max:
        return 0.0
    hd = (d_m - d_max) / (cfg.radius_m - d_max)
    return float(min(1.0, hd))


def rank_candidates(
    cands,
    labels: np.ndarray,
    fmap: np.ndarray,
    cam: CameraModel,
    cfg: SafetyRadiusConfig,
    w: HazardWeights,
) -> list:
    """Score every candidate and rank ascending by hazard.

    Ties break on (h_s, then lower y, then lower x) so ranks are
    reproducible.  Returns ScoredCandidates with 1-based ranks.
    """
    w.validate()
    if not cands:
        return []
    dist_px = distance_to_forbidden(fmap)
    rows = []
    for c in cands:
        h_s = semantic_hazard(c, labels, w, cfg.window_mode)
        h_d = distance_hazard(c, fmap, cam, cfg, w, dist_px)
        h = w.alpha * h_s + (1.0 - w.alpha) * h_d
        rows.append((h, h_s, c.y, c.x, h_d, c))
    rows.sort(key=lambda t: t[:4])
    return [
        ScoredCandidate(candidate=c, h_s=h_s, h_d=h_d, h=h, rank=i + 1)
        for i, (h, h_s, _, _, h_d, c) in enumerate(rows)
    ]
