"""Run configuration: one YAML file validated into typed sections.

Every section mirrors a library dataclass; the whole file is validated
before any work starts and every violation is reported at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .camera import CameraModel, SafetyRadiusConfig
from .categories import NAME_TO_ID
from .errors import ConfigError
from .evaluation import TrueHazardConfig
from .hazards import HazardWeights
from .monitors import MonitorConfig
from .perturbations import PerturbationSpec
from .segmentation import SegmenterSpec


@dataclass(frozen=True)
class PipelineParams:
    low_width: int = 1024
    low_height: int = 576
    budget: int = 20
    eps: float = 3.0
    min_pts: int = 4
    max_overlap: float = 0.25
    default_region_frac: float = 0.1
    max_attempts: Optional[int] = None

    def validate(self) -> None:
        problems = []
        if self.low_width < 1 or self.low_height < 1:
            problems.append("low resolution must be positive")
        if self.budget < 1:
            problems.append(f"budget must be >= 1, got {self.budget}")
        if self.eps <= 0:
            problems.append(f"eps must be > 0, got {self.eps}")
        if self.min_pts < 1:
            problems.append(f"min_pts must be >= 1, got {self.min_pts}")
        if not 0.0 <= self.max_overlap <= 1.0:
            problems.append(f"max_overlap must be in [0, 1], got {self.max_overlap}")
        if not 0.0 < self.default_region_frac <= 0.25:
            problems.append("default_region_frac must be in (0, 0.25]")
        if self.max_attempts is not None and self.max_attempts < 1:
            problems.append("max_attempts must be >= 1 or null")
        if problems:
            raise ConfigError("; ".join(problems))


@dataclass(frozen=True)
class SynthParams:
    count: int = 10
    width: int = 1024
    height: int = 576

    def validate(self) -> None:
        if self.count < 1:
            raise ConfigError(f"synth count must be >= 1, got {self.count}")
        if self.width < 16 or self.height < 16:
            raise ConfigError("synth maps must be at least 16x16")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    dataset_dir: Optional[Path] = None
    output_dir: Path = Path("out")
    camera: CameraModel = field(default_factory=CameraModel)
    safety: SafetyRadiusConfig = field(default_factory=SafetyRadiusConfig)
    pipeline: PipelineParams = field(default_factory=PipelineParams)
    weights: HazardWeights = field(default_factory=HazardWeights)
    true_hazard: TrueHazardConfig = field(default_factory=TrueHazardConfig)
    macro_metrics: bool = False
    segmenter: SegmenterSpec = field(default_factory=SegmenterSpec)
    monitors: tuple = (MonitorConfig(),)
    perturbations: tuple = (PerturbationSpec(),)
    synth: SynthParams = field(default_factory=SynthParams)

    @property
    def low_size(self) -> tuple[int, int]:
        return (self.pipeline.low_width, self.pipeline.low_height)


_SECTIONS = (
    "seed",
    "paths",
    "camera",
    "safety",
    "pipeline",
    "hazard",
    "evaluation",
    "segmenter",
    "monitors",
    "perturbations",
    "synth",
)


def _build(cls, data: dict, problems: list, section: str):
    try:
        obj = cls(**data)
        obj.validate()
        return obj
    except TypeError as exc:
        problems.append(f"{section}: {exc}")
    except ConfigError as exc:
        problems.append(f"{section}: {exc}")
    return cls()


def _severity_ids(raw: dict, problems: list) -> dict:
    out = {}
    for key, value in raw.items():
        if isinstance(key, str):
            if key not in NAME_TO_ID:
                problems.append(f"hazard: unknown category name {key!r}")
                continue
            out[NAME_TO_ID[key]] = float(value)
        else:
            out[int(key)] = float(value)
    return out


def config_from_dict(data: dict) -> RunConfig:
    """Build and fully validate a RunConfig, reporting all violations."""
    problems: list[str] = []
    data = dict(data or {})
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        problems.append(f"unknown config sections: {sorted(unknown)}")

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        problems.append(f"seed must be a non-negative integer, got {seed!r}")
        seed = 0

    paths = data.get("paths") or {}
    dataset_dir = paths.get("dataset_dir")
    if dataset_dir is not None:
        dataset_dir = Path(dataset_dir)
        if not dataset_dir.exists():
            problems.append(f"paths.dataset_dir does not exist: {dataset_dir}")
    output_dir = Path(paths.get("output_dir", "out"))

    camera = _build(CameraModel, data.get("camera") or {}, problems, "camera")
    safety = _build(SafetyRadiusConfig, data.get("safety") or {}, problems, "safety")
    pipeline = _build(PipelineParams, data.get("pipeline") or {}, problems, "pipeline")

    hazard_raw = dict(data.get("hazard") or {})
    if "severity" in hazard_raw:
        hazard_raw["severity"] = _severity_ids(hazard_raw["severity"] or {}, problems)
    weights = _build(HazardWeights, hazard_raw, problems, "hazard")

    eval_raw = dict(data.get("evaluation") or {})
    macro = bool(eval_raw.pop("macro", False))
    thc = _build(TrueHazardConfig, eval_raw, problems, "evaluation")

    seg_raw = dict(data.get("segmenter") or {})
    if seg_raw.get("confusion") is not None:
        seg_raw["confusion"] = np.asarray(seg_raw["confusion"], dtype=float)
    segmenter = _build(SegmenterSpec, seg_raw, problems, "segmenter")

    monitors = []
    for i, m in enumerate(data.get("monitors") or [{}]):
        monitors.append(_build(MonitorConfig, dict(m or {}), problems, f"monitors[{i}]"))
    perturbations = []
    for i, p in enumerate(data.get("perturbations") or [{}]):
        p = dict(p or {})
        if "params" in p and p["params"] is None:
            p["params"] = {}
        perturbations.append(_build(PerturbationSpec, p, problems, f"perturbations[{i}]"))

    synth = _build(SynthParams, data.get("synth") or {}, problems, "synth")

    if problems:
        raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(problems))
    return RunConfig(
        seed=seed,
        dataset_dir=dataset_dir,
        output_dir=output_dir,
        camera=camera,
        safety=safety,
        pipeline=pipeline,
        weights=weights,
        true_hazard=thc,
        macro_metrics=macro,
        segmenter=segmenter,
        monitors=tuple(monitors),
        perturbations=tuple(perturbations),
        synth=synth,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path) as f:
        data = yaml.safe_load(f)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data)
