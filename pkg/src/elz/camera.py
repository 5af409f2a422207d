"""Oblique pinhole ground geometry.

Converts the physical safety radius (metres) into per-row pixel radii
through a flat-ground pinhole model of a downward-tilted camera.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class CameraModel:
    """A pinhole camera mounted at a fixed height over flat ground.

    The tilt is measured from the vertical: 0 degrees would look straight
    down, 90 degrees straight at the horizon.  Image rows whose view ray
    points at or above the horizon have no ground intersection and are
    flagged unmappable by :func:`ground_size_per_row`.
    """

    height_m: float = 50.0
    tilt_deg: float = 45.0
    vfov_deg: float = 40.0
    image_width_px: int = 1024
    image_height_px: int = 576

    def validate(self) -> None:
        problems = []
        if not self.height_m > 0:
            problems.append(f"height_m must be > 0, got {self.height_m}")
        if not 0 < self.tilt_deg < 90:
            problems.append(f"tilt_deg must be in (0, 90), got {self.tilt_deg}")
        if not 0 < self.vfov_deg < 180:
            problems.append(f"vfov_deg must be in (0, 180), got {self.vfov_deg}")
        if self.image_width_px < 1 or self.image_height_px < 1:
            problems.append("image dimensions must be positive")
        if problems:
            raise ConfigError("; ".join(problems))

    def at_resolution(self, width_px: int, height_px: int) -> "CameraModel":
        """Same physical camera re-expressed at a different pixel grid."""
        return replace(self, image_width_px=int(width_px), image_height_px=int(height_px))


@dataclass(frozen=True)
class SafetyRadiusConfig:
    """Physical safety radius and the margin coefficient applied to it.

    window_mode controls how the pixel radius becomes a square window:
    "side" uses the radius directly as the window side, "double" uses
    2*radius+1 so the radius is a true half-width.  The default follows
    the narrower reading; beta absorbs margin either way.
    """

    radius_m: float = 2.0
    beta: float = 1.7
    window_mode: str = "side"

    def validate(self) -> None:
        problems = []
        if not self.radius_m > 0:
            problems.append(f"radius_m must be > 0, got {self.radius_m}")
        if not self.beta >= 1:
            problems.append(f"beta must be >= 1, got {self.beta}")
        if self.window_mode not in ("side", "double"):
            problems.append(f"window_mode must be 'side' or 'double', got {self.window_mode!r}")
        if problems:
            raise ConfigError("; ".join(problems))


def ground_size_per_row(cam: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    """Per-row ground size in metres per pixel, top row first.

    The ray through the centre of bottom-counted row i makes the angle
    tilt - vfov/2 + i * vfov / (H - 1) with the vertical, and meets the
    ground height * tan(angle) metres ahead.  A row's ground size is the
    distance difference to the row directly above it; the topmost usable
    row reuses the difference to the row below, so adjacent ground sizes
    stay defined for every mappable row.

    Returns (delta_m, mappable) where delta_m holds NaN and mappable is
    False for rows at or above the horizon (or without a mappable
    neighbour to difference against).
    """
    cam.validate()
    h = cam.image_height_px
    if h == 1:
        # A single row has no neighbour to difference against.
        return np.array([np.nan]), np.array([False])

    i = np.arange(h)  # bottom-counted row index
    angles = np.radians(cam.tilt_deg - cam.vfov_deg / 2.0 + i * cam.vfov_deg / (h - 1))
    below_horizon = angles < math.pi / 2.0

    ground = np.full(h, np.inf)
    ground[below_horizon] = cam.height_m * np.tan(angles[below_horizon])

    delta = np.full(h, np.nan)
    with np.errstate(invalid="ignore"):  # inf - inf above the horizon is discarded anyway
        diff = np.diff(ground)  # diff[i] = ground above row i minus ground at row i
    pair_ok = below_horizon[:-1] & below_horizon[1:]
    delta[:-1][pair_ok] = diff[pair_ok]
    if pair_ok.any():
        # topmost mappable row: fall back to the difference just below it
        top = int(np.flatnonzero(below_horizon).max())
        if np.isnan(delta[top]) and top >= 1 and pair_ok[top - 1]:
            delta[top] = diff[top - 1]

    mappable = np.isfinite(delta)
    delta[~mappable] = np.nan
    # flip from bottom-counted to top-first, matching image row order
    return delta[::-1].copy(), mappable[::-1].copy()


def pixel_radius(cfg: SafetyRadiusConfig, delta_i: float) -> int:
    """Safety radius in pixels for a row with ground size delta_i.

    Computes ceil(beta * radius / delta_i), never below one pixel.  The
    ceiling is conservative: rounding up protects at least the configured
    ground distance.  Quotients within 1e-9 of an integer are snapped to
    it first so float dust cannot inflate the radius by a full pixel.
    """
    cfg.validate()
    if not (isinstance(delta_i, (int, float)) and math.isfinite(delta_i) and delta_i > 0):
        raise DomainError(f"delta_i must be finite and > 0, got {delta_i}")
    q = cfg.beta * cfg.radius_m / delta_i
    nearest = round(q)
    if abs(q - nearest) < 1e-9:
        q = nearest
    return max(1, math.ceil(q))


def window_side_px(radius_px: int, window_mode: str = "side") -> int:
    """Side of the safety square for a pixel radius, per window_mode."""
    if radius_px < 1:
        raise DomainError(f"radius_px must be >= 1, got {radius_px}")
    if window_mode == "side":
        return radius_px
    if window_mode == "double":
        return 2 * radius_px + 1
    raise ConfigError(f"unknown window_mode {window_mode!r}")
