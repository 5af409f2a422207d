"""Seeded input perturbations for stress-testing the pipeline.

Each perturbation exists in two coordinated forms so the evaluation
protocol works both with real imagery and with the synthetic segmenter:

* a raster transform on RGB images (apply_perturbation), and
* a documented degradation of the synthetic error model
  (degrade_segmenter / sensed_truth).

Ground-truth labels used for judging outcomes are never perturbed; the
perturbations model sensing faults, not changes of the world.  The
shifted-pixels kind deliberately desynchronises what the sensor chain
sees from the truth, which is exactly the fault being modelled.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
from scipy.ndimage import convolve

from .categories import LOW_VEGETATION, N_CATEGORIES
from .errors import ConfigError
from .segmentation import SegmenterSpec

KINDS = ("none", "brightness", "fog", "motion_blur", "shifted_pixels", "pixel_trap")

BLUR_LENGTHS = (5, 9, 15)
MAX_SHIFT_FRAC = 0.05
MAX_TRAP_STRIPES = 3
FOG_VEIL_VALUE = 200.0

# How each kind degrades the synthetic segmenter: scalar multiplier and
# additive bump applied to every per-category error rate.
_FOG_ERROR_GAIN = 0.25
_BRIGHTNESS_SCALE_GAIN = 1.5
_BRIGHTNESS_OFFSET_GAIN = 2.0
_BLUR_LENGTH_GAIN = 0.03


@dataclass(frozen=True)
class PerturbationSpec:
    """One perturbation kind plus its parameters and seed.

    Parameter keys by kind:
      brightness: scale in [0.3, 1.7] (default 1), offset in [-0.3, 0.3]
        (default 0, fraction of full intensity)
      fog: density in [0.2, 0.8]
      motion_blur: length in {5, 9, 15}, angle_deg (default 0)
      shifted_pixels: dx, dy integers, each at most 5% of the frame size
      pixel_trap: stripes in 1..3, band_px >= 1 (default ~1% of height),
        value 0..255 (raster stuck intensity), stuck_class 0..7 (label the
        trapped rows report, default low_vegetation)
    """

    kind: str = "none"
    params: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown perturbation kind {self.kind!r}")
        p = dict(self.params)
        problems = []
        known = {
            "none": set(),
            "brightness": {"scale", "offset"},
            "fog": {"density"},
            "motion_blur": {"length", "angle_deg"},
            "shifted_pixels": {"dx", "dy"},
            "pixel_trap": {"stripes", "band_px", "value", "stuck_class"},
        }[self.kind]
        for key in p:
            if key not in known:
                problems.append(f"{self.kind}: unknown parameter {key!r}")
        if self.kind == "brightness":
            scale = p.get("scale", 1.0)
            offset = p.get("offset", 0.0)
            if not 0.3 <= scale <= 1.7:
                problems.append(f"brightness scale must be in [0.3, 1.7], got {scale}")
            if not -0.3 <= offset <= 0.3:
                problems.append(f"brightness offset must be in [-0.3, 0.3], got {offset}")
        elif self.kind == "fog":
            density = p.get("density", 0.5)
            if not 0.2 <= density <= 0.8:
                problems.append(f"fog density must be in [0.2, 0.8], got {density}")
        elif self.kind == "motion_blur":
            length = p.get("length", 9)
            if int(length) not in BLUR_LENGTHS:
                problems.append(f"motion_blur length must be one of {BLUR_LENGTHS}, got {length}")
        elif self.kind == "pixel_trap":
            stripes = int(p.get("stripes", 1))
            if not 1 <= stripes <= MAX_TRAP_STRIPES:
                problems.append(f"pixel_trap stripes must be in 1..{MAX_TRAP_STRIPES}, got {stripes}")
            if "band_px" in p and int(p["band_px"]) < 1:
                problems.append("pixel_trap band_px must be >= 1")
            if "value" in p and not 0 <= int(p["value"]) <= 255:
                problems.append("pixel_trap value must be a byte")
            if "stuck_class" in p and not 0 <= int(p["stuck_class"]) < N_CATEGORIES:
                problems.append("pixel_trap stuck_class must be a category id")
        if int(self.seed) < 0:
            problems.append("seed must be non-negative")
        if problems:
            raise ConfigError("; ".join(problems))


def _check_shift(spec: PerturbationSpec, width: int, height: int) -> tuple[int, int]:
    dx = int(spec.params.get("dx", 0))
    dy = int(spec.params.get("dy", 0))
    if abs(dx) > MAX_SHIFT_FRAC * width or abs(dy) > MAX_SHIFT_FRAC * height:
        raise ConfigError(
            f"shift ({dx}, {dy}) exceeds {MAX_SHIFT_FRAC:.0%} of the {width}x{height} frame"
        )
    return dx, dy


def _shift_with_edge_fill(arr: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """out[y, x] = in[y - dy, x - dx], replicating edges."""
    h, w = arr.shape[:2]
    ys = np.clip(np.arange(h) - dy, 0, h - 1)
    xs = np.clip(np.arange(w) - dx, 0, w - 1)
    return arr[np.ix_(ys, xs)]


def _trap_rows(spec: PerturbationSpec, height: int) -> np.ndarray:
    stripes = int(spec.params.get("stripes", 1))
    band = int(spec.params.get("band_px", max(1, height // 100)))
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 17]))
    starts = rng.choice(max(1, height - band), size=stripes, replace=False)
    rows = np.zeros(height, dtype=bool)
    for s in starts:
        rows[int(s) : int(s) + band] = True
    return rows


def _blur_kernel(length: int, angle_deg: float) -> np.ndarray:
    """1-D box kernel of the given length rasterised at an angle."""
    theta = np.radians(angle_deg)
    t = np.arange(length) - (length - 1) / 2.0
    xs = np.rint(t * np.cos(theta)).astype(int)
    ys = np.rint(-t * np.sin(theta)).astype(int)
    r = max(abs(xs).max(), abs(ys).max())
    k = np.zeros((2 * r + 1, 2 * r + 1))
    for x, y in zip(xs, ys):
        k[r + y, r + x] += 1.0 / length
    return k


def apply_perturbation(img: np.ndarray, spec: PerturbationSpec) -> np.ndarray:
    """Apply the raster form of a perturbation to a uint8 image."""
    spec.validate()
    h, w = img.shape[:2]
    if spec.kind == "none":
        return img.copy()
    if spec.kind == "brightness":
        scale = float(spec.params.get("scale", 1.0))
        offset = float(spec.params.get("offset", 0.0))
        out = img.astype(float) * scale + offset * 255.0
        return np.clip(out, 0, 255).astype(np.uint8)
    if spec.kind == "fog":
        density = float(spec.params.get("density", 0.5))
        # farther rows (top of frame) sit deeper in the veil
        alpha = density * (1.0 - 0.5 * np.arange(h) / max(1, h - 1))
        alpha = alpha.reshape(h, *([1] * (img.ndim - 1)))
        out = (1.0 - alpha) * img.astype(float) + alpha * FOG_VEIL_VALUE
        return np.clip(out, 0, 255).astype(np.uint8)
    if spec.kind == "motion_blur":
        k = _blur_kernel(int(spec.params.get("length", 9)), float(spec.params.get("angle_deg", 0.0)))
        out = np.empty_like(img, dtype=float)
        if img.ndim == 2:
            out = convolve(img.astype(float), k, mode="nearest")
        else:
            for c in range(img.shape[2]):
                out[:, :, c] = convolve(img[:, :, c].astype(float), k, mode="nearest")
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    if spec.kind == "shifted_pixels":
        dx, dy = _check_shift(spec, w, h)
        return _shift_with_edge_fill(img, dx, dy).copy()
    # pixel_trap
    rows = _trap_rows(spec, h)
    out = img.copy()
    out[rows] = int(spec.params.get("value", 0))
    return out


def sensed_truth(gt_labels: np.ndarray, spec: PerturbationSpec) -> np.ndarray:
    """Label frame as delivered by the faulty sensor chain.

    Kinds that desynchronise geometry (shifted_pixels) or clamp sensor
    rows (pixel_trap) alter the frame the segmenter works from; the
    photometric kinds leave it unchanged and act through the error model
    instead.  The caller keeps judging outcomes against the unmodified
    ground truth.
    """
    spec.validate()
    h, w = gt_labels.shape
    if spec.kind == "shifted_pixels":
        dx, dy = _check_shift(spec, w, h)
        return _shift_with_edge_fill(gt_labels, dx, dy).copy()
    if spec.kind == "pixel_trap":
        rows = _trap_rows(spec, h)
        out = gt_labels.copy()
        out[rows] = np.uint8(int(spec.params.get("stuck_class", LOW_VEGETATION)))
        return out
    return gt_labels


def error_scaling(spec: PerturbationSpec) -> tuple[float, float]:
    """(multiplier, additive bump) applied to per-category error rates."""
    spec.validate()
    if spec.kind == "brightness":
        scale = float(spec.params.get("scale", 1.0))
        offset = float(spec.params.get("offset", 0.0))
        mult = 1.0 + _BRIGHTNESS_SCALE_GAIN * abs(scale - 1.0) + _BRIGHTNESS_OFFSET_GAIN * abs(offset)
        return mult, 0.0
    if spec.kind == "fog":
        return 1.0, _FOG_ERROR_GAIN * float(spec.params.get("density", 0.5))
    if spec.kind == "motion_blur":
        return 1.0 + _BLUR_LENGTH_GAIN * int(spec.params.get("length", 9)), 0.0
    return 1.0, 0.0


def degrade_segmenter(sspec: SegmenterSpec, pspec: PerturbationSpec) -> SegmenterSpec:
    """Segmenter spec with each class error rate at mult*e + add (capped).

    Off-diagonal confusion mass scales proportionally; a class with zero
    base error receives the bump spread uniformly.  Monotone by
    construction: a stronger perturbation never lowers any error rate.
    The perfect-oracle kind is returned unchanged.
    """
    mult, add = error_scaling(pspec)
    if (mult, add) == (1.0, 0.0) or sspec.kind == "ground_truth_oracle":
        return sspec
    c = sspec.confusion_matrix().copy()
    for i in range(N_CATEGORIES):
        e = 1.0 - c[i, i]
        e2 = min(0.95, mult * e + add)
        if e2 == e:
            continue
        if e > 0:
            c[i] *= e2 / e
        else:
            c[i] = e2 / (N_CATEGORIES - 1)
        c[i, i] = 1.0 - e2
    return replace(sspec, confusion=c, error_rate=None)
