"""The eight ground categories and the fixed safe/unsafe split.

Category ids are assigned alphabetically by name, which is also the
palette order used by the label-map file format.
"""

from __future__ import annotations

import numpy as np

CATEGORY_NAMES = (
    "background",
    "building",
    "human",
    "low_vegetation",
    "moving_car",
    "road",
    "static_car",
    "tree",
)

N_CATEGORIES = len(CATEGORY_NAMES)

(
    BACKGROUND,
    BUILDING,
    HUMAN,
    LOW_VEGETATION,
    MOVING_CAR,
    ROAD,
    STATIC_CAR,
    TREE,
) = range(N_CATEGORIES)

NAME_TO_ID = {name: i for i, name in enumerate(CATEGORY_NAMES)}

# Categories that a landing square must never contain.
UNSAFE_CATEGORIES = frozenset({BUILDING, MOVING_CAR, ROAD, STATIC_CAR})
SAFE_CATEGORIES = frozenset(range(N_CATEGORIES)) - UNSAFE_CATEGORIES

_UNSAFE_ARRAY = np.array(sorted(UNSAFE_CATEGORIES), dtype=np.uint8)


def is_unsafe_mask(labels: np.ndarray) -> np.ndarray:
    """Boolean mask of pixels whose label is an unsafe category."""
    return np.isin(labels, _UNSAFE_ARRAY)
