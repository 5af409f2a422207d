"""Integer rectangle helpers for windows, patches and frame mapping."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class Rect:
    """Half-open pixel rectangle: x in [x0, x1), y in [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return max(0, self.width) * max(0, self.height)

    def is_empty(self) -> bool:
        return self.width <= 0 or self.height <= 0

    def slices(self):
        """(row, column) slices for indexing an (H, W) array."""
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def inside(self, width: int, height: int) -> bool:
        return 0 <= self.x0 and 0 <= self.y0 and self.x1 <= width and self.y1 <= height

    def clipped(self, width: int, height: int) -> "Rect":
        return Rect(
            max(0, self.x0), max(0, self.y0), min(width, self.x1), min(height, self.y1)
        )

    def grown(self, margin: int) -> "Rect":
        return Rect(self.x0 - margin, self.y0 - margin, self.x1 + margin, self.y1 + margin)

    def intersection(self, other: "Rect") -> "Rect":
        return Rect(
            max(self.x0, other.x0),
            max(self.y0, other.y0),
            min(self.x1, other.x1),
            min(self.y1, other.y1),
        )

    def contains(self, x: int, y: int) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1


def window_rect(x: int, y: int, side: int) -> Rect:
    """Square window of the given side centred on pixel (x, y).

    An even side has no exact centre pixel; the window then extends one
    pixel further right/down: columns [x-(side-1)//2, x+side//2], same
    for rows, both ends inclusive.
    """
    if side < 1:
        raise DomainError(f"window side must be >= 1, got {side}")
    lo = (side - 1) // 2
    hi = side // 2
    return Rect(x - lo, y - lo, x + hi + 1, y + hi + 1)


def scale_rect(r: Rect, from_size: tuple[int, int], to_size: tuple[int, int]) -> Rect:
    """Smallest rectangle in the target frame covering r's footprint.

    Sizes are (width, height).  Start edges scale with floor, end edges
    with ceiling, so the result covers exactly the pixels whose footprint
    intersects r.  Identical sizes return r unchanged.
    """
    fw, fh = from_size
    tw, th = to_size
    if (fw, fh) == (tw, th):
        return r
    x0 = (r.x0 * tw) // fw
    y0 = (r.y0 * th) // fh
    x1 = -((-r.x1 * tw) // fw)
    y1 = -((-r.y1 * th) // fh)
    return Rect(x0, y0, x1, y1)
