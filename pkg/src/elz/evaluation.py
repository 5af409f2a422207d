"""System-level evaluation: readouts, metrics and safety gains.

For every image and perturbation the candidate pipeline runs once on the
sensed frame; each configured monitor then drives the selection loop.
Outcomes are judged against the unmodified ground truth: a region's true
hazard is 1 as soon as it contains an unsafe pixel, otherwise the
severity mix scaled by (1 - kappa).  Verdicts are counted as a binary
classifier (positive = rejection of an unsafe candidate) and the hazard
improvements of the pipeline over the default action are aggregated.

Gains are stored as the literal hazard differences (final minus
reference), which are negative when the pipeline helps; reports negate
them uniformly so that positive numbers mean a safer outcome.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraModel, SafetyRadiusConfig, window_side_px
from .candidates import detect_candidates
from .categories import N_CATEGORIES, is_unsafe_mask
from .errors import ConfigError, DomainError
from .geometry import Rect, scale_rect, window_rect
from .hazards import HazardWeights, rank_candidates
from .monitors import MonitorConfig, run_monitor
from .perturbations import PerturbationSpec, degrade_segmenter, sensed_truth
from .segmentation import SegmenterSpec, segment
from .selection import DEFAULT_REGION_FRAC, default_region, run_selection

log = logging.getLogger("elz.evaluation")


@dataclass(frozen=True)
class TrueHazardConfig:
    """kappa in (0, 1) separates unsafe regions (hazard 1) from the safe
    band [0, 1 - kappa]."""

    kappa: float = 0.5

    def validate(self) -> None:
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError(f"kappa must be in (0, 1), got {self.kappa}")


@dataclass(frozen=True)
class ConfusionCounts:
    """Verdict outcomes: positives are rejections of unsafe candidates."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    fp_rate: float
    f1: float
    mcc: float


def true_hazard(region_labels: np.ndarray, w: HazardWeights, thc: TrueHazardConfig) -> float:
    """Ground-truth hazard of a region: 1 with any unsafe pixel inside,
    otherwise (1 - kappa) times the severity mix."""
    thc.validate()
    w.validate()
    if region_labels.size == 0:
        raise DomainError("true_hazard of an empty region")
    if is_unsafe_mask(region_labels).any():
        return 1.0
    counts = np.bincount(region_labels.ravel(), minlength=N_CATEGORIES)
    sev = w.severity_array()
    m = counts / counts.sum()
    return float((1.0 - thc.kappa) * (m * sev).sum() / sev.max())


def classification_metrics(cc: ConfusionCounts) -> Metrics:
    """Precision, recall, FP rate, F1 and MCC with pinned conventions.

    Degenerate denominators do not error: precision (recall) is 1 when
    its denominator is 0 and fn (fp) is also 0, else 0; the FP rate is 0
    when nothing safe was monitored; F1 is 0 when P + R = 0; MCC is 0
    when its denominator vanishes.
    """
    tp, fp, tn, fn = cc.tp, cc.fp, cc.tn, cc.fn
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 1.0 if fn == 0 else 0.0
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 1.0 if fp == 0 else 0.0
    fp_rate = fp / (fp + tn) if fp + tn > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    denom = math.sqrt(float(tp + fp) * float(tp + fn) * float(tn + fp) * float(tn + fn))
    mcc = (tp * tn - fp * fn) / denom if denom > 0 else 0.0
    return Metrics(precision, recall, fp_rate, f1, mcc)


def safety_gains(h_default: float, h_cm_choice: float, h_final: float) -> tuple[float, float, float]:
    """Literal hazard differences (negative = improvement).

    g_cm compares the unmonitored choice to the default action, g_rm the
    monitored outcome to the unmonitored choice, and g_star is their sum,
    exactly.  Reports negate all three so positive means safer.
    """
    for v in (h_default, h_cm_choice, h_final):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"hazards must be in [0, 1], got {v}")
    g_cm = h_cm_choice - h_default
    g_rm = h_final - h_cm_choice
    return g_cm, g_rm, g_cm + g_rm


def region_truth_unsafe(gt_labels: np.ndarray, region: Rect) -> bool:
    return bool(is_unsafe_mask(gt_labels[region.slices()]).any())


def candidate_native_rect(cand, low_size, native_size, window_mode) -> Rect:
    side = window_side_px(cand.radius_px, window_mode)
    return scale_rect(window_rect(cand.x, cand.y, side), low_size, native_size)


def classify_verdicts(attempt_rows) -> ConfusionCounts:
    """Pool verdicts into confusion counts.

    attempt_rows is an iterable of (truth_unsafe, accepted) pairs; only
    candidates actually submitted to the monitor belong here.
    """
    tp = fp = tn = fn = 0
    for truth_unsafe, accepted in attempt_rows:
        if accepted:
            if truth_unsafe:
                fn += 1
            else:
                tn += 1
        else:
            if truth_unsafe:
                tp += 1
            else:
                fp += 1
    return ConfusionCounts(tp, fp, tn, fn)


def evaluate_image(
    name: str,
    gt_labels: np.ndarray,
    *,
    seg_spec: SegmenterSpec,
    cam_native: CameraModel,
    safety: SafetyRadiusConfig,
    weights: HazardWeights,
    thc: TrueHazardConfig,
    low_size: tuple[int, int],
    monitors,
    perturbations,
    budget: int = 20,
    eps: float = 3.0,
    min_pts: int = 4,
    max_overlap: float = 0.25,
    default_frac: float = DEFAULT_REGION_FRAC,
    pipeline_seed: int = 0,
    max_attempts=None,
) -> list:
    """Run the full perturbation x monitor grid on one image.

    Returns readout records (plain dicts): one "attempt" record per
    monitored candidate and one "image" record per grid cell.
    """
    gh, gw = gt_labels.shape
    native_size = (gw, gh)
    cam_low = cam_native.at_resolution(*low_size)
    d_region = default_region(gw, gh, default_frac).region
    h_default = true_hazard(gt_labels[d_region.slices()], weights, thc)

    records = []
    for pspec in perturbations:
        sensed = sensed_truth(gt_labels, pspec)
        eff_spec = degrade_segmenter(seg_spec, pspec)
        low = segment(eff_spec, sensed, None, "low", low_size)
        cands, fmap, _ = detect_candidates(
            low.labels,
            cam_low,
            safety,
            budget=budget,
            seed=pipeline_seed,
            eps=eps,
            min_pts=min_pts,
            max_overlap=max_overlap,
        )
        ranked = rank_candidates(cands, low.labels, fmap, cam_low, safety, weights)

        truths = {}
        hazards = {}
        for sc in ranked:
            rect = candidate_native_rect(sc.candidate, low_size, native_size, safety.window_mode)
            truths[sc.rank] = region_truth_unsafe(gt_labels, rect)
            hazards[sc.rank] = true_hazard(gt_labels[rect.slices()], weights, thc)
        h_cm = hazards[ranked[0].rank] if ranked else h_default

        seg_cache: dict = {}
        for mcfg in monitors:
            outcome = run_selection(
                ranked,
                lambda cand: run_monitor(
                    cand, eff_spec, sensed, low_size, mcfg, safety.window_mode, seg_cache
                ),
                max_attempts=max_attempts,
            )
            by_rank = {sc.rank: sc for sc in ranked}
            for rank, verdict in outcome.attempts:
                sc = by_rank[rank]
                records.append(
                    {
                        "type": "attempt",
                        "image": name,
                        "perturbation": pspec.kind,
                        "monitor": mcfg.kind,
                        "rank": rank,
                        "x": sc.candidate.x,
                        "y": sc.candidate.y,
                        "radius_px": sc.candidate.radius_px,
                        "h": sc.h,
                        "h_s": sc.h_s,
                        "h_d": sc.h_d,
                        "true_hazard": hazards[rank],
                        "truth_unsafe": truths[rank],
                        "accepted": verdict.accepted,
                        "reason": verdict.reason,
                        "elapsed_s": verdict.elapsed_s,
                    }
                )
            h_final = hazards[outcome.chosen_rank] if outcome.chosen_rank else h_default
            g_cm, g_rm, g_star = safety_gains(h_default, h_cm, h_final)
            counts = classify_verdicts(
                (truths[rank], verdict.accepted) for rank, verdict in outcome.attempts
            )
            records.append(
                {
                    "type": "image",
                    "image": name,
                    "perturbation": pspec.kind,
                    "monitor": mcfg.kind,
                    "n_candidates": len(ranked),
                    "chosen": outcome.chosen_rank if outcome.chosen_rank else "default",
                    "h_default": h_default,
                    "h_cm": h_cm,
                    "h_final": h_final,
                    "g_cm": g_cm,
                    "g_rm": g_rm,
                    "g_star": g_star,
                    "overhead_s": outcome.total_monitor_s,
                    **counts.as_dict(),
                }
            )
    log.debug("evaluated %s: %d records", name, len(records))
    return records


def aggregate_records(records, macro: bool = False) -> list:
    """Aggregate readouts into one report row per perturbation x monitor.

    Classification metrics pool confusion counts across images by
    default (micro-averaging); macro=True averages per-image metrics
    instead.  Gains and overhead are arithmetic means of the per-image
    values, with the sign flipped so positive = safer; the row identity
    g_star = g_cm + g_rm is preserved exactly by construction.  Cells
    without any image record are absent from the result.
    """
    cells: dict = {}
    for rec in records:
        if rec.get("type") != "image":
            continue
        key = (rec["perturbation"], rec["monitor"])
        cells.setdefault(key, []).append(rec)

    rows = []
    for (pert, monitor) in sorted(cells):
        recs = cells[(pert, monitor)]
        pooled = ConfusionCounts()
        for r in recs:
            pooled = pooled + ConfusionCounts(r["tp"], r["fp"], r["tn"], r["fn"])
        if macro:
            per = [
                classification_metrics(ConfusionCounts(r["tp"], r["fp"], r["tn"], r["fn"]))
                for r in recs
            ]
            metrics = Metrics(
                *(float(np.mean([getattr(m, f) for m in per]))
                  for f in ("precision", "recall", "fp_rate", "f1", "mcc"))
            )
        else:
            metrics = classification_metrics(pooled)
        # 0.0 - x rather than -x so an exactly-zero mean prints as 0, not -0
        g_cm = float(0.0 - np.mean([r["g_cm"] for r in recs]))
        g_rm = float(0.0 - np.mean([r["g_rm"] for r in recs]))
        rows.append(
            {
                "perturbation": pert,
                "monitor": monitor,
                "n_images": len(recs),
                "precision": metrics.precision,
                "recall": metrics.recall,
                "fp_rate": metrics.fp_rate,
                "f1": metrics.f1,
                "mcc": metrics.mcc,
                "g_cm": g_cm,
                "g_rm": g_rm,
                "g_star": g_cm + g_rm,
                "overhead_s": float(np.mean([r["overhead_s"] for r in recs])),
                **pooled.as_dict(),
            }
        )
    return rows
