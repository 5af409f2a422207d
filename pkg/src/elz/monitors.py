"""Runtime monitors that accept or reject candidate landing zones.

Three mechanisms, composable on top of a shared high-resolution re-check:

* LHD re-segments a full-resolution patch around the candidate and
  rejects on any unsafe pixel inside the safety square.
* CH thresholds the softmax with tau and under-classifies uncertain
  pixels to the closest common ancestor in a safe/unsafe/any tree,
  rejecting on any pixel that lands outside the safe subtree.
* MCD aggregates repeated stochastic passes into per-pixel scores
  S = mean + 3*std and uses S wherever the softmax was used.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional

import numpy as np

from .camera import window_side_px
from .categories import (
    CATEGORY_NAMES,
    N_CATEGORIES,
    SAFE_CATEGORIES,
    UNSAFE_CATEGORIES,
)
from .errors import ConfigError, DomainError
from .geometry import Rect, scale_rect, window_rect
from .segmentation import SegmenterSpec, mcd_passes, segment

MONITOR_KINDS = ("LHD", "LHD+CH", "LHD+MCD", "LHD+CH+MCD")

REASON_CLEAN = "clean"
REASON_UNSAFE = "unsafe_pixels"
REASON_UNDER_ANY = "underclassified_any"
REASON_UNDER_UNSAFE = "underclassified_unsafe"

# Node codes for the vectorised under-classification; 0..7 are leaves.
CODE_SAFE, CODE_UNSAFE, CODE_ANY = 8, 9, 10

_SAFE_COLS = sorted(SAFE_CATEGORIES)
_UNSAFE_COLS = sorted(UNSAFE_CATEGORIES)
_UNSAFE_LEAF_CODES = np.array(_UNSAFE_COLS)

# Modelled segmentation throughput used for the reported monitor cost.
# Costs are derived from pixel counts, not wall clocks, so readouts stay
# byte-identical across runs and machines.
SEGMENT_PX_PER_S = 140_000.0

# A dropout-rate analog maps linearly onto the segmenter jitter amplitude.
RHO_JITTER_SCALE = 0.5

DEFAULT_PATCH_MARGIN_FRAC = 0.25


@dataclass(frozen=True)
class Hierarchy:
    """Small category tree with safe / unsafe internal nodes over the
    leaves and a single root."""

    parent: Mapping[str, Optional[str]]

    def path_to_root(self, node: str) -> list:
        path = [node]
        while self.parent[path[-1]] is not None:
            path.append(self.parent[path[-1]])
        return path

    def closest_common_ancestor(self, category_ids) -> str:
        """Deepest node whose subtree contains every given category."""
        cats = sorted(set(int(c) for c in category_ids))
        if not cats:
            raise DomainError("closest_common_ancestor of an empty set")
        paths = [self.path_to_root(CATEGORY_NAMES[c]) for c in cats]
        common = set(paths[0])
        for p in paths[1:]:
            common &= set(p)
        for node in paths[0]:  # leaf-to-root order: first common hit is deepest
            if node in common:
                return node
        raise DomainError("hierarchy has no common root")


def default_hierarchy() -> Hierarchy:
    parent = {"any": None, "safe": "any", "unsafe": "any"}
    for c in _SAFE_COLS:
        parent[CATEGORY_NAMES[c]] = "safe"
    for c in _UNSAFE_COLS:
        parent[CATEGORY_NAMES[c]] = "unsafe"
    return Hierarchy(parent)


_DEFAULT_HIERARCHY = default_hierarchy()


def underclassify(probs, tau: float, hierarchy: Optional[Hierarchy] = None) -> str:
    """Resolve one probability vector to a leaf or an internal node.

    Categories with probability strictly greater than tau are the
    uncertainty set: at most one member means the argmax leaf, several
    members mean their closest common ancestor (safe, unsafe or any).
    """
    p = np.asarray(probs, dtype=float)
    if p.shape != (N_CATEGORIES,):
        raise DomainError(f"probs must have {N_CATEGORIES} entries, got {p.shape}")
    hierarchy = hierarchy or _DEFAULT_HIERARCHY
    over = np.flatnonzero(p > tau)
    if len(over) <= 1:
        return CATEGORY_NAMES[int(p.argmax())]
    return hierarchy.closest_common_ancestor(over)


def underclassify_codes(probs: np.ndarray, tau: float) -> np.ndarray:
    """Vectorised under-classification over an (..., 8) probability array.

    Returns per-pixel codes: 0..7 for leaves, 8 safe, 9 unsafe, 10 any.
    """
    over_safe = (probs[..., _SAFE_COLS] > tau).sum(axis=-1)
    over_unsafe = (probs[..., _UNSAFE_COLS] > tau).sum(axis=-1)
    am = probs.argmax(axis=-1).astype(np.int64)
    return np.where(
        over_safe + over_unsafe <= 1,
        am,
        np.where(
            over_unsafe == 0,
            CODE_SAFE,
            np.where(over_safe == 0, CODE_UNSAFE, CODE_ANY),
        ),
    )


def mcd_scores(passes) -> np.ndarray:
    """Per-pixel, per-category scores mean + 3*std over stochastic passes.

    The standard deviation is the population form (divide by the number
    of passes).  The result is used in place of a softmax and is not a
    distribution: its per-pixel sum is >= 1.
    """
    if len(passes) < 2:
        raise DomainError(f"need at least 2 passes, got {len(passes)}")
    arrs = [np.asarray(p, dtype=np.float64) for p in passes]
    shape = arrs[0].shape
    for a in arrs[1:]:
        if a.shape != shape:
            raise DomainError(f"pass shape {a.shape} differs from {shape}")
    stack = np.stack(arrs)
    return stack.mean(axis=0) + 3.0 * stack.std(axis=0)


@dataclass(frozen=True)
class MonitorConfig:
    """Which monitor composition to run and its knobs.

    tau is the softmax threshold in (0, 0.5]; n_mcd the stochastic pass
    count; rho an optional dropout-rate analog in (0, 1) that, when set,
    overrides the segmenter's jitter amplitude via a linear map.
    patch_margin is the high-resolution context border in pixels around
    the safety square; None means a quarter of the square's side.
    """

    kind: str = "LHD"
    tau: float = 0.25
    n_mcd: int = 10
    rho: Optional[float] = None
    patch_margin: Optional[int] = None

    def validate(self) -> None:
        problems = []
        if self.kind not in MONITOR_KINDS:
            problems.append(f"kind must be one of {MONITOR_KINDS}, got {self.kind!r}")
        if not 0.0 < self.tau <= 0.5:
            problems.append(f"tau must be in (0, 0.5], got {self.tau}")
        if self.n_mcd < 2:
            problems.append(f"n_mcd must be >= 2, got {self.n_mcd}")
        if self.rho is not None and not 0.0 < self.rho < 1.0:
            problems.append(f"rho must be in (0, 1), got {self.rho}")
        if self.patch_margin is not None and self.patch_margin < 0:
            problems.append(f"patch_margin must be >= 0, got {self.patch_margin}")
        if problems:
            raise ConfigError("; ".join(problems))

    def uses_mcd(self) -> bool:
        return "MCD" in self.kind

    def uses_ch(self) -> bool:
        return "CH" in self.kind


@dataclass(frozen=True)
class MonitorVerdict:
    accepted: bool
    reason: str
    elapsed_s: float

    def __post_init__(self):
        if self.accepted != (self.reason == REASON_CLEAN):
            raise DomainError("accepted must hold exactly when the reason is clean")


def _effective_spec(spec: SegmenterSpec, mcfg: MonitorConfig) -> SegmenterSpec:
    if mcfg.rho is None:
        return spec
    return replace(spec, mcd_jitter=mcfg.rho * RHO_JITTER_SCALE)


def _hd_patch(cand, low_size, native_size, window_mode, patch_margin):
    """High-res patch rectangle and the safety-square rectangle within it."""
    side = window_side_px(cand.radius_px, window_mode)
    low_rect = window_rect(cand.x, cand.y, side)
    square = scale_rect(low_rect, low_size, native_size)
    if patch_margin is None:
        patch_margin = int(round(DEFAULT_PATCH_MARGIN_FRAC * max(square.width, square.height)))
    patch = square.grown(patch_margin).clipped(*native_size)
    if patch.is_empty():
        raise DomainError(f"empty high-resolution patch for candidate {cand}")
    inner = Rect(
        square.x0 - patch.x0,
        square.y0 - patch.y0,
        square.x1 - patch.x0,
        square.y1 - patch.y0,
    )
    return patch, inner


def _segment_cached(cache, spec, gt, region, stochastic_pass):
    if cache is None:
        return segment(spec, gt, region, "high", stochastic_pass=stochastic_pass)
    key = (region.x0, region.y0, region.x1, region.y1, stochastic_pass, spec.mcd_jitter)
    hit = cache.get(key)
    if hit is None:
        hit = segment(spec, gt, region, "high", stochastic_pass=stochastic_pass)
        cache[key] = hit
    return hit


def run_monitor(
    cand,
    spec: SegmenterSpec,
    ground_truth: np.ndarray,
    low_size: tuple[int, int],
    mcfg: MonitorConfig,
    window_mode: str = "side",
    cache: Optional[dict] = None,
) -> MonitorVerdict:
    """Re-check one candidate at full resolution and accept or reject it.

    The candidate's safety square is mapped from the low-resolution frame
    into the native frame, grown by the context margin, re-segmented, and
    judged inside the square only.  Reported cost is the modelled
    segmentation time of the patch (times the pass count for MCD kinds).
    """
    mcfg.validate()
    gh, gw = ground_truth.shape
    patch, inner = _hd_patch(cand, low_size, (gw, gh), window_mode, mcfg.patch_margin)
    inner_slices = inner.slices()

    if mcfg.uses_mcd():
        eff = _effective_spec(spec, mcfg)
        passes = [
            _segment_cached(cache, eff, ground_truth, patch, p).probs
            for p in range(mcfg.n_mcd)
        ]
        scores = mcd_scores(passes)[inner_slices]
        elapsed = patch.area * mcfg.n_mcd / SEGMENT_PX_PER_S
        if mcfg.uses_ch():
            reason = _ch_reason(underclassify_codes(scores, mcfg.tau))
        else:
            reason = _lhd_reason(scores.argmax(axis=-1))
    else:
        seg = _segment_cached(cache, spec, ground_truth, patch, None)
        elapsed = patch.area / SEGMENT_PX_PER_S
        if mcfg.uses_ch():
            reason = _ch_reason(underclassify_codes(seg.probs[inner_slices], mcfg.tau))
        else:
            reason = _lhd_reason(seg.labels[inner_slices])

    return MonitorVerdict(accepted=(reason == REASON_CLEAN), reason=reason, elapsed_s=elapsed)


def _lhd_reason(labels_in_square) -> str:
    if np.isin(labels_in_square, _UNSAFE_LEAF_CODES).any():
        return REASON_UNSAFE
    return REASON_CLEAN


def _ch_reason(codes_in_square) -> str:
    """Rejection reason from under-classification codes, by precedence:
    confidently-unsafe pixels first, then unsafe-node, then any-node."""
    if np.isin(codes_in_square, _UNSAFE_LEAF_CODES).any():
        return REASON_UNSAFE
    if (codes_in_square == CODE_UNSAFE).any():
        return REASON_UNDER_UNSAFE
    if (codes_in_square == CODE_ANY).any():
        return REASON_UNDER_ANY
    return REASON_CLEAN
