"""Sequential candidate selection with a monitor in the loop.

Candidates are tried in rank order; the first one the monitor accepts is
chosen.  When every candidate is rejected (or none exists) the outcome
falls back to the default action: cut the motors and open the parachute
in place, whose ground truth is assessed on a bottom-centre proxy region.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .errors import ConfigError
from .geometry import Rect

DEFAULT_REGION_FRAC = 0.1


@dataclass(frozen=True)
class DefaultAction:
    region: Rect
    description: str = "cut motors and open the parachute in place"


@dataclass(frozen=True)
class SelectionOutcome:
    """Result of the monitored selection loop.

    chosen_rank is None when the default action was taken.
    cm_choice_rank is the pre-monitoring best (rank 1), or None when no
    candidates existed at all.  attempts holds (rank, verdict) in the
    order tried.
    """

    chosen_rank: Optional[int]
    cm_choice_rank: Optional[int]
    attempts: tuple
    total_monitor_s: float


def run_selection(
    ranked,
    monitor: Callable,
    max_attempts: Optional[int] = None,
) -> SelectionOutcome:
    """Try candidates in rank order until one is accepted.

    monitor maps a Candidate to a MonitorVerdict.  max_attempts caps how
    many candidates are tried before falling back to the default action;
    None tries them all.
    """
    attempts = []
    total = 0.0
    cm_choice = ranked[0].rank if ranked else None
    pool = ranked if max_attempts is None else ranked[:max_attempts]
    for sc in pool:
        verdict = monitor(sc.candidate)
        attempts.append((sc.rank, verdict))
        total += verdict.elapsed_s
        if verdict.accepted:
            return SelectionOutcome(sc.rank, cm_choice, tuple(attempts), total)
    return SelectionOutcome(None, cm_choice, tuple(attempts), total)


def default_region(width: int, height: int, size_frac: float = DEFAULT_REGION_FRAC) -> DefaultAction:
    """Bottom-centre proxy region standing in for landing in place.

    The rectangle is size_frac of each dimension (floored), centred
    horizontally and flush with the bottom edge.
    """
    if not 0.0 < size_frac <= 0.25:
        raise ConfigError(f"size_frac must be in (0, 0.25], got {size_frac}")
    w = int(size_frac * width)
    h = int(size_frac * height)
    if w < 1 or h < 1:
        raise ConfigError(
            f"default region would be empty for {width}x{height} at {size_frac}"
        )
    x0 = (width - w) // 2
    return DefaultAction(region=Rect(x0, height - h, x0 + w, height))
