"""Candidate landing-pixel detection and representative selection.

Pipeline: forbidden map -> stripe-wise valid-pixel mask (summed-area
table) -> density clustering of valid pixels -> proportional K-means
representatives per cluster -> overlap pruning.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.ndimage import convolve
from scipy.sparse.csgraph import connected_components
from sklearn.cluster import KMeans

from .camera import (
    CameraModel,
    SafetyRadiusConfig,
    ground_size_per_row,
    pixel_radius,
    window_side_px,
)
from .categories import is_unsafe_mask
from .errors import ConfigError, DomainError
from .geometry import window_rect

log = logging.getLogger("elz.candidates")

N_STRIPES = 10
DROPPED_TOP_STRIPES = 2

# Above this bounding-box area the dense-grid clustering path would waste
# memory; fall back to the generic library implementation.
_GRID_AREA_LIMIT = 64_000_000

DEFAULT_EPS = 3.0
DEFAULT_MIN_PTS = 4
DEFAULT_BUDGET = 20
DEFAULT_MAX_OVERLAP = 0.25


def forbidden_map(labels: np.ndarray) -> np.ndarray:
    """True where the label is a category excluded from landing."""
    return is_unsafe_mask(labels)


@dataclass(frozen=True)
class StripeLayout:
    """Ten equal-height row bands with a pixel radius per usable row.

    The top two bands are discarded (they look at or near the horizon).
    radius_by_row is zero and row_allowed False outside the usable bands.
    """

    bounds: tuple
    radius_by_row: np.ndarray
    row_allowed: np.ndarray


def stripe_layout(cam: CameraModel, cfg: SafetyRadiusConfig) -> StripeLayout:
    cam.validate()
    cfg.validate()
    h = cam.image_height_px
    if h < N_STRIPES:
        raise ConfigError(f"image height {h} is smaller than {N_STRIPES} stripes")
    delta, mappable = ground_size_per_row(cam)
    bounds = tuple(k * h // N_STRIPES for k in range(N_STRIPES + 1))
    radius = np.zeros(h, dtype=np.int64)
    allowed = np.zeros(h, dtype=bool)
    for s in range(DROPPED_TOP_STRIPES, N_STRIPES):
        y0, y1 = bounds[s], bounds[s + 1]
        centre = (y0 + y1 - 1) // 2
        if not mappable[centre]:
            log.debug("stripe %d centre row %d unmappable, skipped", s, centre)
            continue
        r = pixel_radius(cfg, float(delta[centre]))
        radius[y0:y1] = r
        allowed[y0:y1] = True
    return StripeLayout(bounds, radius, allowed)


def valid_pixels(
    fmap: np.ndarray, cam: CameraModel, cfg: SafetyRadiusConfig
) -> np.ndarray:
    """Mask of pixels whose safety window is in-bounds and forbidden-free.

    The window side comes from the pixel radius of the pixel's stripe
    (computed at the stripe's centre row).  Window sums are O(1) lookups
    in a summed-area table, so the whole pass is O(W*H).
    """
    h, w = fmap.shape
    if (cam.image_width_px, cam.image_height_px) != (w, h):
        raise DomainError(
            f"camera resolution {cam.image_width_px}x{cam.image_height_px} "
            f"does not match map {w}x{h}"
        )
    layout = stripe_layout(cam, cfg)
    sat = np.zeros((h + 1, w + 1), dtype=np.int64)
    sat[1:, 1:] = fmap.astype(np.int64).cumsum(axis=0).cumsum(axis=1)

    valid = np.zeros((h, w), dtype=bool)
    for s in range(DROPPED_TOP_STRIPES, N_STRIPES):
        y0, y1 = layout.bounds[s], layout.bounds[s + 1]
        if not layout.row_allowed[y0:y1].any():
            continue
        side = window_side_px(int(layout.radius_by_row[y0]), cfg.window_mode)
        lo = (side - 1) // 2
        hi = side // 2
        cy0 = max(y0, lo)
        cy1 = min(y1, h - hi)
        cx0 = lo
        cx1 = w - hi
        if cy0 >= cy1 or cx0 >= cx1:
            continue
        sums = (
            sat[cy0 + hi + 1 : cy1 + hi + 1, cx0 + hi + 1 : cx1 + hi + 1]
            - sat[cy0 - lo : cy1 - lo, cx0 + hi + 1 : cx1 + hi + 1]
            - sat[cy0 + hi + 1 : cy1 + hi + 1, cx0 - lo : cx1 - lo]
            + sat[cy0 - lo : cy1 - lo, cx0 - lo : cx1 - lo]
        )
        valid[cy0:cy1, cx0:cx1] = sums == 0
    return valid


def valid_points(valid: np.ndarray) -> np.ndarray:
    """(N, 2) array of (x, y) valid-pixel coordinates in row-major order."""
    ys, xs = np.nonzero(valid)
    return np.column_stack([xs, ys]).astype(np.int64)


def _eps_offsets(eps: float) -> list[tuple[int, int]]:
    r = int(math.floor(eps))
    e2 = eps * eps
    return [
        (dy, dx)
        for dy in range(-r, r + 1)
        for dx in range(-r, r + 1)
        if 0 < dy * dy + dx * dx <= e2
    ]


def cluster_candidates(
    points: np.ndarray, eps: float = DEFAULT_EPS, min_pts: int = DEFAULT_MIN_PTS
) -> np.ndarray:
    """Density clustering of integer pixel coordinates.

    Standard density-based semantics with Euclidean distance: a point is
    core when its eps-neighbourhood (itself included) holds at least
    min_pts points; clusters are maximal density-connected sets; border
    points claimed by several clusters join the one whose first core
    point comes earliest in (y, x) order, matching sequential cluster
    expansion.  Points left as noise become singleton clusters, since a
    lone valid pixel is still a legal landing spot.

    Returns one cluster id per input point, aligned with the input order.
    Ids are contiguous from 0, ordered by each cluster's first point in
    (y, x) order, with noise singletons numbered after real clusters.
    """
    pts = np.asarray(points)
    if pts.ndim != 2 or (len(pts) and pts.shape[1] != 2):
        raise DomainError(f"points must be an (N, 2) array, got shape {pts.shape}")
    if not np.issubdtype(pts.dtype, np.integer):
        raise DomainError("points must hold integer pixel coordinates")
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if eps <= 0 or min_pts < 1:
        raise ConfigError(f"eps must be > 0 and min_pts >= 1, got {eps}, {min_pts}")

    order = np.lexsort((pts[:, 0], pts[:, 1]))
    p = pts[order]

    ox = int(p[:, 0].min())
    oy = int(p[:, 1].min())
    gw = int(p[:, 0].max()) - ox + 1
    gh = int(p[:, 1].max()) - oy + 1
    if gw * gh <= _GRID_AREA_LIMIT:
        labels_sorted = _dbscan_grid(p, ox, oy, gw, gh, eps, min_pts)
    else:
        labels_sorted = _dbscan_sklearn(p, eps, min_pts)

    labels = np.empty(n, dtype=np.int64)
    labels[order] = labels_sorted
    return labels


def _dbscan_grid(p, ox, oy, gw, gh, eps, min_pts):
    """Grid-specialised clustering, identical to sequential expansion."""
    n = len(p)
    grid = np.full((gh, gw), -1, dtype=np.int64)
    gy = p[:, 1] - oy
    gx = p[:, 0] - ox
    grid[gy, gx] = np.arange(n)
    occupied = grid >= 0

    offsets = _eps_offsets(eps)
    r = int(math.floor(eps))
    kernel = np.zeros((2 * r + 1, 2 * r + 1), dtype=np.int32)
    kernel[r, r] = 1
    for dy, dx in offsets:
        kernel[r + dy, r + dx] = 1
    counts = convolve(occupied.astype(np.int32), kernel, mode="constant", cval=0)
    core = occupied & (counts >= min_pts)
    core_flat = core[gy, gx]

    # Components of the core points under eps-adjacency.
    half = [(dy, dx) for dy, dx in offsets if dy > 0 or (dy == 0 and dx > 0)]
    rows, cols = [], []
    for dy, dx in half:
        a = core.copy()
        src = a[max(0, -dy) : gh - max(0, dy), max(0, -dx) : gw - max(0, dx)]
        dst = core[max(0, dy) : gh + min(0, dy), max(0, dx) : gw + min(0, dx)]
        both = src & dst
        if not both.any():
            continue
        yy, xx = np.nonzero(both)
        rows.append(grid[yy + max(0, -dy), xx + max(0, -dx)])
        cols.append(grid[yy + max(0, dy), xx + max(0, dx)])
    if rows:
        i = np.concatenate(rows)
        j = np.concatenate(cols)
        graph = sparse.coo_matrix(
            (np.ones(len(i), dtype=np.int8), (i, j)), shape=(n, n)
        )
    else:
        graph = sparse.coo_matrix((n, n), dtype=np.int8)
    _, comp = connected_components(graph, directed=False)

    labels = np.full(n, -1, dtype=np.int64)
    core_ids = np.flatnonzero(core_flat)
    next_cluster = 0
    comp_to_cluster = {}
    seed_index = {}
    for idx in core_ids:  # ascending point index == scan order
        c = comp[idx]
        if c not in comp_to_cluster:
            comp_to_cluster[c] = next_cluster
            seed_index[next_cluster] = idx
            next_cluster += 1
        labels[idx] = comp_to_cluster[c]

    # Border points join the cluster that reaches them first, i.e. the one
    # with the earliest seed among the cores within eps.
    if next_cluster:
        seed_grid = np.full((gh, gw), n, dtype=np.int64)
        core_seed = np.array([seed_index[labels[idx]] for idx in core_ids])
        seed_grid[gy[core_ids], gx[core_ids]] = core_seed
        best = np.full((gh, gw), n, dtype=np.int64)
        for dy, dx in offsets:
            shifted = np.full((gh, gw), n, dtype=np.int64)
            shifted[max(0, dy) : gh + min(0, dy), max(0, dx) : gw + min(0, dx)] = seed_grid[
                max(0, -dy) : gh - max(0, dy), max(0, -dx) : gw - max(0, dx)
            ]
            np.minimum(best, shifted, out=best)
        border = occupied & ~core & (best < n)
        border_ids = grid[border]
        seed_to_cluster = {v: k for k, v in seed_index.items()}
        labels[border_ids] = np.array(
            [seed_to_cluster[s] for s in best[border]], dtype=np.int64
        )

    # Remaining noise points become singleton clusters in point order.
    for idx in np.flatnonzero(labels < 0):
        labels[idx] = next_cluster
        next_cluster += 1
    return labels


def _dbscan_sklearn(p, eps, min_pts):
    from sklearn.cluster import DBSCAN

    raw = DBSCAN(eps=eps, min_samples=min_pts).fit(p.astype(float)).labels_
    labels = raw.astype(np.int64).copy()
    next_cluster = int(raw.max()) + 1 if (raw >= 0).any() else 0
    for idx in np.flatnonzero(raw < 0):
        labels[idx] = next_cluster
        next_cluster += 1
    return labels


@dataclass(frozen=True)
class ClusterStats:
    """Cluster sizes and the proportional per-cluster candidate quotas."""

    sizes: tuple
    budget: int

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def quotas(self) -> list:
        """max(1, round(budget * size / total)) per cluster.

        Rounding is Python's round (banker's at .5).  Every cluster gets
        at least one slot, so small clusters are never dropped outright.
        """
        if self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        total = self.total
        if total == 0:
            return []
        return [max(1, round(self.budget * nk / total)) for nk in self.sizes]


def cluster_quotas(sizes, budget: int) -> list:
    return ClusterStats(tuple(int(s) for s in sizes), int(budget)).quotas()


@dataclass(frozen=True)
class Candidate:
    """A candidate landing pixel in the low-resolution frame."""

    x: int
    y: int
    radius_px: int
    cluster_id: int


def overlap_fraction(a: Candidate, b: Candidate, window_mode: str = "side") -> float:
    """Intersection area of the two safety squares over the smaller one."""
    ra = window_rect(a.x, a.y, window_side_px(a.radius_px, window_mode))
    rb = window_rect(b.x, b.y, window_side_px(b.radius_px, window_mode))
    inter = ra.intersection(rb).area
    return inter / min(ra.area, rb.area)


def _kmeans_seed(seed: int, cluster_id: int) -> int:
    ss = np.random.SeedSequence([int(seed), int(cluster_id), 71])
    return int(ss.generate_state(1)[0] % (2**31 - 1))


def select_representatives(
    points: np.ndarray,
    cluster_labels: np.ndarray,
    layout: StripeLayout,
    cfg: SafetyRadiusConfig,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    max_overlap: float = DEFAULT_MAX_OVERLAP,
) -> list:
    """Pick representative candidates from clustered valid pixels.

    Each cluster gets its proportional quota of K-means centroids
    (k-means++ init, 100 iterations max, tolerance 1e-4, seeded).  A
    centroid is snapped to the nearest pixel of its cluster so every
    candidate is a valid pixel; ties go to the first pixel in (y, x)
    order.  Candidate pairs whose squares overlap more than max_overlap
    of the smaller square are reduced to one, processing pairs by
    descending overlap and keeping the candidate whose K-means cell holds
    more points (ties: lower (y, x), then earlier construction order).
    """
    if not 0.0 <= max_overlap <= 1.0:
        raise ConfigError(f"max_overlap must be in [0, 1], got {max_overlap}")
    pts = np.asarray(points)
    if len(pts) == 0:
        return []
    labels = np.asarray(cluster_labels)
    if labels.shape != (len(pts),):
        raise DomainError("cluster_labels must align with points")

    k_clusters = int(labels.max()) + 1
    sizes = np.bincount(labels, minlength=k_clusters)
    quotas = cluster_quotas(sizes, budget)

    cands = []
    cell_sizes = []
    for k in range(k_clusters):
        members = pts[labels == k]
        members = members[np.lexsort((members[:, 0], members[:, 1]))]
        q = min(quotas[k], len(members))
        if q == 1:
            centres = members.astype(float).mean(axis=0, keepdims=True)
            cells = np.zeros(len(members), dtype=np.int64)
        else:
            km = KMeans(
                n_clusters=q,
                init="k-means++",
                n_init=1,
                max_iter=100,
                tol=1e-4,
                random_state=_kmeans_seed(seed, k),
            ).fit(members.astype(float))
            centres = km.cluster_centers_
            cells = km.labels_
        for j in range(len(centres)):
            size_j = int((cells == j).sum())
            if size_j == 0:
                continue
            d2 = ((members - centres[j]) ** 2).sum(axis=1)
            m = int(np.argmin(d2))
            x, y = int(members[m, 0]), int(members[m, 1])
            cands.append(Candidate(x, y, int(layout.radius_by_row[y]), k))
            cell_sizes.append(size_j)

    return _prune_overlaps(cands, cell_sizes, cfg.window_mode, max_overlap)


def _prune_overlaps(cands, cell_sizes, window_mode, max_overlap):
    n = len(cands)
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            ov = overlap_fraction(cands[i], cands[j], window_mode)
            if ov > max_overlap:
                pairs.append((ov, i, j))
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    alive = [True] * n
    for ov, i, j in pairs:
        if not (alive[i] and alive[j]):
            continue
        if cell_sizes[i] != cell_sizes[j]:
            loser = i if cell_sizes[i] < cell_sizes[j] else j
        elif (cands[i].y, cands[i].x) != (cands[j].y, cands[j].x):
            loser = i if (cands[i].y, cands[i].x) > (cands[j].y, cands[j].x) else j
        else:
            loser = j
        alive[loser] = False
    kept = [c for c, a in zip(cands, alive) if a]
    kept.sort(key=lambda c: (c.y, c.x))
    return kept


def detect_candidates(
    labels_low: np.ndarray,
    cam_low: CameraModel,
    cfg: SafetyRadiusConfig,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
    min_pts: int = DEFAULT_MIN_PTS,
    max_overlap: float = DEFAULT_MAX_OVERLAP,
):
    """Full candidate pipeline on a low-resolution label map.

    Returns (candidates, forbidden, valid_mask).
    """
    fmap = forbidden_map(labels_low)
    valid = valid_pixels(fmap, cam_low, cfg)
    pts = valid_points(valid)
    if len(pts) == 0:
        return [], fmap, valid
    labels = cluster_candidates(pts, eps=eps, min_pts=min_pts)
    layout = stripe_layout(cam_low, cfg)
    cands = select_representatives(
        pts, labels, layout, cfg, budget=budget, seed=seed, max_overlap=max_overlap
    )
    log.debug("detected %d candidates from %d valid pixels", len(cands), len(pts))
    return cands, fmap, valid
