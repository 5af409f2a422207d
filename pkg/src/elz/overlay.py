"""Diagnostic overlays: label maps rendered to RGB with candidate markers."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .camera import window_side_px
from .fileio import PALETTE
from .geometry import Rect, window_rect

ACCEPT_COLOR = (0, 255, 0)
REJECT_COLOR = (255, 0, 0)
UNTRIED_COLOR = (255, 255, 0)
CHOSEN_COLOR = (0, 255, 255)
DEFAULT_REGION_COLOR = (255, 255, 255)


def render_labels(labels: np.ndarray) -> Image.Image:
    """Map category ids to their fixed display colours."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    lut = np.zeros((256, 3), dtype=np.uint8)
    for cid, rgb in PALETTE.items():
        lut[cid] = rgb
    return Image.fromarray(lut[labels])


def draw_overlay(
    labels: np.ndarray,
    scored: Sequence,
    attempts: Sequence = (),
    chosen_rank: Optional[int] = None,
    default_region: Optional[Rect] = None,
    window_mode: str = "side",
) -> Image.Image:
    """Render candidates over the label map.

    Circles are drawn at the touchdown radius: green for accepted,
    red for rejected, yellow for candidates the selector never reached.
    The chosen square gets a cyan outline; the fallback region, when
    given, a white one.
    """
    img = render_labels(labels).convert("RGB")
    draw = ImageDraw.Draw(img)

    verdicts = {a.rank: a.verdict.accepted for a in attempts}
    for sc in scored:
        c = sc.candidate
        r = c.radius_px
        if sc.rank in verdicts:
            color = ACCEPT_COLOR if verdicts[sc.rank] else REJECT_COLOR
        else:
            color = UNTRIED_COLOR
        draw.ellipse([c.x - r, c.y - r, c.x + r, c.y + r], outline=color, width=2)
        draw.text((c.x + r + 2, c.y - 5), str(sc.rank), fill=color)
        if chosen_rank is not None and sc.rank == chosen_rank:
            w = window_rect(c.x, c.y, window_side_px(c.radius_px, window_mode))
            draw.rectangle([w.x0, w.y0, w.x1 - 1, w.y1 - 1], outline=CHOSEN_COLOR, width=2)

    if default_region is not None:
        r = default_region
        draw.rectangle(
            [r.x0, r.y0, r.x1 - 1, r.y1 - 1], outline=DEFAULT_REGION_COLOR, width=2
        )
    return img
