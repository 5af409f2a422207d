"""Emergency landing-zone selection for UAVs over semantic maps.

The pipeline finds squares of safe ground big enough to land in, ranks
them by hazard, and re-checks the winner with runtime monitors before
committing.  Everything runs on dense category label maps; a synthetic
segmenter stands in for a real CNN so the full evaluation protocol is
executable on a laptop.
"""

from .camera import (
    CameraModel,
    SafetyRadiusConfig,
    ground_size_per_row,
    pixel_radius,
    window_side_px,
)
from .candidates import (
    Candidate,
    cluster_candidates,
    detect_candidates,
    forbidden_map,
    select_representatives,
    stripe_layout,
    valid_pixels,
    valid_points,
)
from .categories import (
    CATEGORY_NAMES,
    NAME_TO_ID,
    SAFE_CATEGORIES,
    UNSAFE_CATEGORIES,
    is_unsafe_mask,
)
from .config import RunConfig, config_from_dict, load_config
from .errors import ConfigError, DomainError, ElzError, FormatError, InconsistencyError
from .evaluation import (
    ConfusionCounts,
    TrueHazardConfig,
    aggregate_records,
    classification_metrics,
    evaluate_image,
    safety_gains,
    true_hazard,
)
from .geometry import Rect, scale_rect, window_rect
from .hazards import HazardWeights, ScoredCandidate, rank_candidates
from .monitors import MonitorConfig, MonitorVerdict, run_monitor
from .perturbations import PerturbationSpec, apply_perturbation, sensed_truth
from .segmentation import Segmentation, SegmenterSpec, mcd_passes, segment
from .selection import DefaultAction, SelectionOutcome, default_region, run_selection
from .synth import generate_dataset, generate_map

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "Candidate",
    "CATEGORY_NAMES",
    "ConfigError",
    "ConfusionCounts",
    "DefaultAction",
    "DomainError",
    "ElzError",
    "FormatError",
    "HazardWeights",
    "InconsistencyError",
    "MonitorConfig",
    "MonitorVerdict",
    "NAME_TO_ID",
    "PerturbationSpec",
    "Rect",
    "RunConfig",
    "SAFE_CATEGORIES",
    "SafetyRadiusConfig",
    "ScoredCandidate",
    "Segmentation",
    "SegmenterSpec",
    "SelectionOutcome",
    "TrueHazardConfig",
    "UNSAFE_CATEGORIES",
    "aggregate_records",
    "apply_perturbation",
    "classification_metrics",
    "cluster_candidates",
    "config_from_dict",
    "default_region",
    "detect_candidates",
    "evaluate_image",
    "forbidden_map",
    "generate_dataset",
    "generate_map",
    "ground_size_per_row",
    "is_unsafe_mask",
    "load_config",
    "mcd_passes",
    "pixel_radius",
    "rank_candidates",
    "run_monitor",
    "run_selection",
    "safety_gains",
    "scale_rect",
    "sensed_truth",
    "segment",
    "select_representatives",
    "stripe_layout",
    "true_hazard",
    "valid_pixels",
    "valid_points",
    "window_rect",
    "window_side_px",
]
