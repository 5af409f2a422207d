"""Pluggable segmenter abstraction and the seeded synthetic segmenter.

The synthetic segmenter replaces a real per-pixel classifier with a
generative error model applied to ground-truth labels: a perfect-oracle
mode and a noisy-oracle mode driven by a row-stochastic confusion matrix,
plus a stochastic mode that jitters the softmax for repeated-inference
uncertainty estimation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from .categories import N_CATEGORIES
from .errors import ConfigError, DomainError
from .geometry import Rect

RESOLUTIONS = ("low", "high")

_RES_CODE = {"low": 0, "high": 1}
_TAG_LABELS, _TAG_PROBS, _TAG_JITTER = 1, 2, 3

ORACLE_EPSILON = 1e-6


class Segmentation(NamedTuple):
    """One segmenter answer: label map plus per-pixel class probabilities."""

    labels: np.ndarray  # (H, W) uint8
    probs: np.ndarray  # (H, W, 8) float32, rows sum to 1, argmax == labels


@dataclass(frozen=True)
class SegmenterSpec:
    """Configuration of the synthetic segmenter.

    kind is "ground_truth_oracle" (returns the truth unchanged, ignores
    every noise knob including mcd_jitter) or "noisy_oracle".  Noise is
    either a scalar error_rate spread uniformly over the other categories
    or an explicit 8x8 row-stochastic confusion matrix.  concentration
    shapes how peaked the synthesised softmax is around the emitted
    label.  hd_error_factor scales the confusion off-diagonals for
    high-resolution calls, making them strictly more accurate.
    mcd_jitter in [0, 0.95) sets the spread of stochastic passes; with
    blob_noise errors arrive in spatially correlated patches instead of
    independent pixels.
    """

    kind: str = "noisy_oracle"
    error_rate: Optional[float] = 0.1
    confusion: Optional[np.ndarray] = None
    concentration: float = 30.0
    seed: int = 0
    mcd_jitter: float = 0.0
    hd_error_factor: float = 0.5
    blob_noise: bool = False
    blob_scale: float = 8.0

    def validate(self) -> None:
        problems = []
        if self.kind not in ("ground_truth_oracle", "noisy_oracle"):
            problems.append(f"unknown segmenter kind {self.kind!r}")
        if self.confusion is None:
            if self.kind == "noisy_oracle":
                if self.error_rate is None or not 0.0 <= self.error_rate <= 0.95:
                    problems.append(f"error_rate must be in [0, 0.95], got {self.error_rate}")
        else:
            c = np.asarray(self.confusion, dtype=float)
            if c.shape != (N_CATEGORIES, N_CATEGORIES):
                problems.append(f"confusion must be 8x8, got {c.shape}")
            elif (c < 0).any() or not np.allclose(c.sum(axis=1), 1.0, atol=1e-8):
                problems.append("confusion rows must be non-negative and sum to 1")
        if not self.concentration > 0:
            problems.append(f"concentration must be > 0, got {self.concentration}")
        if not 0.0 <= self.mcd_jitter < 0.95:
            problems.append(f"mcd_jitter must be in [0, 0.95), got {self.mcd_jitter}")
        if not 0.0 <= self.hd_error_factor < 1.0:
            problems.append(f"hd_error_factor must be in [0, 1), got {self.hd_error_factor}")
        if not self.blob_scale > 0:
            problems.append(f"blob_scale must be > 0, got {self.blob_scale}")
        if int(self.seed) < 0:
            problems.append("seed must be non-negative")
        if problems:
            raise ConfigError("; ".join(problems))

    def confusion_matrix(self) -> np.ndarray:
        """Effective 8x8 confusion matrix at native resolution."""
        if self.confusion is not None:
            return np.asarray(self.confusion, dtype=float)
        return confusion_from_error(0.0 if self.error_rate is None else self.error_rate)


def confusion_from_error(error_rate: float) -> np.ndarray:
    """Row-stochastic matrix with a scalar error spread uniformly."""
    if not 0.0 <= error_rate <= 1.0:
        raise ConfigError(f"error_rate must be in [0, 1], got {error_rate}")
    c = np.full((N_CATEGORIES, N_CATEGORIES), error_rate / (N_CATEGORIES - 1))
    np.fill_diagonal(c, 1.0 - error_rate)
    return c


def scale_confusion(c: np.ndarray, factor: float) -> np.ndarray:
    """Shrink off-diagonal mass by a factor, keeping rows stochastic."""
    eye = np.eye(N_CATEGORIES)
    return eye + factor * (np.asarray(c, dtype=float) - eye)


def resize_nearest(labels: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Nearest-neighbour label resize using pixel-centre sampling."""
    h, w = labels.shape
    if (out_w, out_h) == (w, h):
        return labels.copy()
    ys = np.minimum(((np.arange(out_h) + 0.5) * h / out_h).astype(int), h - 1)
    xs = np.minimum(((np.arange(out_w) + 0.5) * w / out_w).astype(int), w - 1)
    return labels[np.ix_(ys, xs)]


def oracle_softmax(labels: np.ndarray) -> np.ndarray:
    """One-hot probabilities smoothed to (1 - 7*eps, eps, ..., eps)."""
    probs = np.full(labels.shape + (N_CATEGORIES,), ORACLE_EPSILON, dtype=np.float32)
    np.put_along_axis(
        probs,
        labels[..., None].astype(np.int64),
        np.float32(1.0 - (N_CATEGORIES - 1) * ORACLE_EPSILON),
        axis=-1,
    )
    return probs


def _rng_for(seed: int, region: Rect, res_code: int, tag: int, pass_code: int = 0):
    ss = np.random.SeedSequence(
        [int(seed), region.x0, region.y0, region.x1, region.y1, res_code, tag, pass_code]
    )
    return np.random.default_rng(ss)


def _apply_confusion(labels, confusion, rng):
    """Independent per-pixel label corruption following the confusion rows."""
    out = labels.copy()
    for c in range(N_CATEGORIES):
        pix = labels == c
        n = int(pix.sum())
        if n == 0 or confusion[c, c] >= 1.0:
            continue
        cum = np.cumsum(confusion[c])
        cum[-1] = 1.0
        draws = np.searchsorted(cum, rng.random(n), side="right")
        out[pix] = draws.astype(np.uint8)
    return out


def _apply_blob_confusion(labels, confusion, rng, blob_scale):
    """Spatially correlated corruption: errors cluster in smooth patches.

    A smoothed noise field picks, per ground-truth class, the pixels with
    the highest field values until the class error fraction is met, so the
    marginal error rate matches the confusion row while errors arrive in
    contiguous blobs.
    """
    field = gaussian_filter(rng.standard_normal(labels.shape), sigma=blob_scale)
    flat_field = field.ravel()
    flat_labels = labels.ravel()
    out = flat_labels.copy()
    for c in range(N_CATEGORIES):
        idx = np.flatnonzero(flat_labels == c)
        e = 1.0 - confusion[c, c]
        k = int(round(e * len(idx)))
        if k == 0:
            continue
        order = np.argsort(-flat_field[idx], kind="stable")
        err_idx = idx[order[:k]]
        row = confusion[c].copy()
        row[c] = 0.0
        row /= row.sum()
        cum = np.cumsum(row)
        cum[-1] = 1.0
        draws = np.searchsorted(cum, rng.random(k), side="right")
        out[err_idx] = draws.astype(np.uint8)
    return out.reshape(labels.shape)


def synth_softmax(labels: np.ndarray, concentration: float, rng) -> np.ndarray:
    """Graded probabilities peaked at each pixel's label.

    Per pixel the vector is a Dirichlet draw with concentration 1 on every
    category plus `concentration` extra on the label.  When a draw's
    argmax happens to land elsewhere the two entries are swapped, so the
    argmax-equals-label contract always holds.
    """
    shape = labels.shape + (N_CATEGORIES,)
    alpha = np.ones(shape)
    np.put_along_axis(alpha, labels[..., None].astype(np.int64), 1.0 + concentration, axis=-1)
    g = rng.standard_gamma(alpha)
    probs = g / g.sum(axis=-1, keepdims=True)
    _force_argmax(probs, labels)
    return probs.astype(np.float32)


def _force_argmax(probs, labels):
    am = probs.argmax(axis=-1)
    bad = am != labels
    if not bad.any():
        return
    flat = probs.reshape(-1, N_CATEGORIES)
    rows = np.flatnonzero(bad.ravel())
    lab = labels.ravel()[rows].astype(np.int64)
    top = am.ravel()[rows].astype(np.int64)
    tmp = flat[rows, lab].copy()
    flat[rows, lab] = flat[rows, top]
    flat[rows, top] = tmp


def _dirichlet_jitter(probs, jitter, rng):
    """Mean-preserving resample of each pixel's probability vector.

    Draws from Dirichlet(lam * p) with lam = 1/jitter^2 - 1, whose mean is
    exactly p and whose per-component standard deviation is
    jitter * sqrt(p * (1 - p)).
    """
    lam = 1.0 / (jitter * jitter) - 1.0
    g = rng.standard_gamma(lam * probs.astype(np.float64))
    s = g.sum(axis=-1, keepdims=True)
    s[s == 0.0] = 1.0
    return (g / s).astype(np.float32)


def segment(
    spec: SegmenterSpec,
    ground_truth: np.ndarray,
    region: Optional[Rect] = None,
    resolution: str = "low",
    low_size: Optional[tuple[int, int]] = None,
    stochastic_pass: Optional[int] = None,
) -> Segmentation:
    """Segment a region of the (native-resolution) ground truth.

    resolution "low" downsamples the full frame to low_size (width,
    height) before applying the error model and only accepts a region of
    None or the full frame.  resolution "high" crops the region (default
    full frame) and applies the error model with the off-diagonals shrunk
    by hd_error_factor.

    Outputs are deterministic in (spec.seed, region, resolution,
    stochastic_pass).  A stochastic pass resamples the softmax around the
    pass-independent base answer; its labels are re-derived as the argmax
    of the jittered probabilities, so the per-call argmax contract holds
    while the mean over many passes converges to the base softmax.
    """
    spec.validate()
    if resolution not in RESOLUTIONS:
        raise DomainError(f"resolution must be one of {RESOLUTIONS}, got {resolution!r}")
    if stochastic_pass is not None and stochastic_pass < 0:
        raise DomainError(f"stochastic_pass must be >= 0, got {stochastic_pass}")
    h, w = ground_truth.shape
    full = Rect(0, 0, w, h)

    if resolution == "low":
        if low_size is None:
            raise DomainError("low-resolution segmentation needs low_size=(width, height)")
        if region is not None and region != full:
            raise DomainError("low-resolution segmentation covers the full frame only")
        base = resize_nearest(ground_truth, int(low_size[0]), int(low_size[1]))
        key_region = full
        confusion = spec.confusion_matrix()
    else:
        key_region = full if region is None else region
        if key_region.is_empty() or not key_region.inside(w, h):
            raise DomainError(f"region {key_region} outside frame {w}x{h}")
        base = ground_truth[key_region.slices()]
        confusion = scale_confusion(spec.confusion_matrix(), spec.hd_error_factor)

    res_code = _RES_CODE[resolution]
    if spec.kind == "ground_truth_oracle":
        labels = base.copy()
        return Segmentation(labels, oracle_softmax(labels))

    rng_l = _rng_for(spec.seed, key_region, res_code, _TAG_LABELS)
    if spec.blob_noise:
        labels = _apply_blob_confusion(base, confusion, rng_l, spec.blob_scale)
    else:
        labels = _apply_confusion(base, confusion, rng_l)

    rng_p = _rng_for(spec.seed, key_region, res_code, _TAG_PROBS)
    probs = synth_softmax(labels, spec.concentration, rng_p)

    if stochastic_pass is not None and spec.mcd_jitter > 0.0:
        rng_j = _rng_for(
            spec.seed, key_region, res_code, _TAG_JITTER, int(stochastic_pass) + 1
        )
        probs = _dirichlet_jitter(probs, spec.mcd_jitter, rng_j)
        labels = probs.argmax(axis=-1).astype(np.uint8)

    return Segmentation(labels, probs)


def mcd_passes(
    spec: SegmenterSpec,
    ground_truth: np.ndarray,
    region: Optional[Rect],
    n_passes: int,
    resolution: str = "high",
    low_size: Optional[tuple[int, int]] = None,
) -> list[np.ndarray]:
    """Softmax maps from repeated stochastic inference over one region."""
    if n_passes < 2:
        raise DomainError(f"n_passes must be >= 2, got {n_passes}")
    return [
        segment(spec, ground_truth, region, resolution, low_size, stochastic_pass=p).probs
        for p in range(n_passes)
    ]
