"""Command-line front end.

Subcommands cover the pipeline stages individually (synth, perturb,
candidates, rank, monitor) and end to end (evaluate, report).  Every
run is reproducible under a fixed seed and records its inputs and
outputs, with hashes, in a manifest next to the artifacts.  The ELZ_LOG
environment variable sets the log level (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from .candidates import detect_candidates
from .config import RunConfig, config_from_dict, load_config
from .errors import ConfigError, ElzError
from .evaluation import aggregate_records, evaluate_image
from .fileio import (
    read_label_map,
    read_readouts,
    render_report_table,
    sha256_file,
    write_candidates_csv,
    write_label_map,
    write_manifest,
    write_ranked_csv,
    write_readouts,
    write_report_csv,
)
from .hazards import rank_candidates
from .overlay import draw_overlay
from .perturbations import apply_perturbation
from .segmentation import segment
from .selection import default_region
from .synth import generate_dataset

log = logging.getLogger("elz.cli")

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_PARTIAL = 3


def _setup_logging() -> None:
    name = os.environ.get("ELZ_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _outdir(args, cfg: RunConfig) -> Path:
    out = args.out if args.out is not None else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _eval_kwargs(cfg: RunConfig) -> dict:
    return dict(
        seg_spec=cfg.segmenter,
        cam_native=cfg.camera,
        safety=cfg.safety,
        weights=cfg.weights,
        thc=cfg.true_hazard,
        low_size=cfg.low_size,
        monitors=cfg.monitors,
        perturbations=cfg.perturbations,
        budget=cfg.pipeline.budget,
        eps=cfg.pipeline.eps,
        min_pts=cfg.pipeline.min_pts,
        max_overlap=cfg.pipeline.max_overlap,
        default_frac=cfg.pipeline.default_region_frac,
        pipeline_seed=cfg.seed,
        max_attempts=cfg.pipeline.max_attempts,
    )


def _detect(cfg: RunConfig, gt_labels: np.ndarray):
    """Run the low-resolution segmenter and candidate stages once."""
    low = segment(cfg.segmenter, gt_labels, None, "low", cfg.low_size)
    cam_low = cfg.camera.at_resolution(*cfg.low_size)
    cands, fmap, _ = detect_candidates(
        low.labels,
        cam_low,
        cfg.safety,
        budget=cfg.pipeline.budget,
        seed=cfg.seed,
        eps=cfg.pipeline.eps,
        min_pts=cfg.pipeline.min_pts,
        max_overlap=cfg.pipeline.max_overlap,
    )
    return low, cam_low, cands, fmap


def _save_overlay(path, labels, scored, cfg: RunConfig) -> None:
    h, w = labels.shape
    region = default_region(w, h, cfg.pipeline.default_region_frac).region
    img = draw_overlay(
        labels, scored, default_region=region, window_mode=cfg.safety.window_mode
    )
    img.save(path)


_Numbered = namedtuple("_Numbered", ["candidate", "rank"])


def _cmd_synth(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg) / "maps"
    out.mkdir(parents=True, exist_ok=True)
    pairs = generate_dataset(cfg.synth.count, cfg.synth.width, cfg.synth.height, cfg.seed)
    files = {}
    for name, labels in pairs:
        path = out / f"{name}.png"
        write_label_map(path, labels)
        files[path.name] = sha256_file(path)
    write_manifest(
        out / "manifest.json",
        {
            "command": "synth",
            "seed": cfg.seed,
            "count": cfg.synth.count,
            "width": cfg.synth.width,
            "height": cfg.synth.height,
            "outputs": files,
        },
    )
    print(f"wrote {len(pairs)} label maps to {out}")
    return EXIT_OK


def _cmd_perturb(args) -> int:
    cfg = _load_config(args)
    if not 0 <= args.index < len(cfg.perturbations):
        raise ConfigError(
            f"--index {args.index} out of range; config lists "
            f"{len(cfg.perturbations)} perturbation(s)"
        )
    spec = cfg.perturbations[args.index]
    src = Path(args.input)
    if not src.exists():
        raise ConfigError(f"input image not found: {src}")
    dst = Path(args.output)
    dst.parent.mkdir(parents=True, exist_ok=True)
    img = np.asarray(Image.open(src).convert("RGB"))
    Image.fromarray(apply_perturbation(img, spec)).save(dst)
    write_manifest(
        dst.with_suffix(dst.suffix + ".manifest.json"),
        {
            "command": "perturb",
            "kind": spec.kind,
            "params": {k: spec.params[k] for k in sorted(spec.params)},
            "seed": spec.seed,
            "inputs": {src.name: sha256_file(src)},
            "outputs": {dst.name: sha256_file(dst)},
        },
    )
    print(f"wrote {dst}")
    return EXIT_OK


def _cmd_candidates(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    path = Path(args.image)
    gt = read_label_map(path)
    low, _, cands, _ = _detect(cfg, gt)
    csv_path = out / f"{path.stem}.candidates.csv"
    write_candidates_csv(csv_path, cands)
    outputs = {csv_path.name: sha256_file(csv_path)}
    if args.overlay:
        overlay_path = out / f"{path.stem}.candidates.png"
        numbered = [_Numbered(c, i + 1) for i, c in enumerate(cands)]
        _save_overlay(overlay_path, low.labels, numbered, cfg)
        outputs[overlay_path.name] = sha256_file(overlay_path)
    write_manifest(
        out / f"{path.stem}.candidates.manifest.json",
        {
            "command": "candidates",
            "seed": cfg.seed,
            "inputs": {path.name: sha256_file(path)},
            "outputs": outputs,
        },
    )
    print(f"{len(cands)} candidates -> {csv_path}")
    return EXIT_OK


def _cmd_rank(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    path = Path(args.image)
    gt = read_label_map(path)
    low, cam_low, cands, fmap = _detect(cfg, gt)
    ranked = rank_candidates(cands, low.labels, fmap, cam_low, cfg.safety, cfg.weights)
    csv_path = out / f"{path.stem}.ranked.csv"
    write_ranked_csv(csv_path, ranked)
    outputs = {csv_path.name: sha256_file(csv_path)}
    if args.overlay:
        overlay_path = out / f"{path.stem}.ranked.png"
        _save_overlay(overlay_path, low.labels, ranked, cfg)
        outputs[overlay_path.name] = sha256_file(overlay_path)
    write_manifest(
        out / f"{path.stem}.ranked.manifest.json",
        {
            "command": "rank",
            "seed": cfg.seed,
            "inputs": {path.name: sha256_file(path)},
            "outputs": outputs,
        },
    )
    print(f"{len(ranked)} ranked candidates -> {csv_path}")
    return EXIT_OK


def _cmd_monitor(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    path = Path(args.image)
    gt = read_label_map(path)
    records = evaluate_image(path.stem, gt, **_eval_kwargs(cfg))
    readouts_path = out / f"{path.stem}.readouts.jsonl"
    write_readouts(readouts_path, records)
    write_manifest(
        out / f"{path.stem}.readouts.manifest.json",
        {
            "command": "monitor",
            "seed": cfg.seed,
            "inputs": {path.name: sha256_file(path)},
            "outputs": {readouts_path.name: sha256_file(readouts_path)},
        },
    )
    n_attempts = sum(1 for r in records if r["type"] == "attempt")
    print(f"{n_attempts} monitored attempts -> {readouts_path}")
    return EXIT_OK


def _eval_worker(name: str, path_str: str, cfg: RunConfig) -> list:
    gt = read_label_map(path_str)
    return evaluate_image(name, gt, **_eval_kwargs(cfg))


def _write_report(out: Path, records, macro: bool) -> dict:
    rows = aggregate_records(records, macro=macro)
    csv_path = out / "report.csv"
    write_report_csv(csv_path, rows)
    table = render_report_table(rows)
    txt_path = out / "report.txt"
    txt_path.write_text(table + "\n")
    print(table)
    return {csv_path.name: sha256_file(csv_path), txt_path.name: sha256_file(txt_path)}


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    readouts_path = out / "readouts.jsonl"

    if args.report_only:
        if not readouts_path.exists():
            raise ConfigError(f"--report-only needs an existing {readouts_path}")
        records = read_readouts(readouts_path)
        _write_report(out, records, cfg.macro_metrics)
        return EXIT_OK

    if cfg.dataset_dir is None:
        raise ConfigError(
            "evaluate needs paths.dataset_dir in the config "
            "(run `elz synth` first and point at its maps directory)"
        )
    images = sorted(cfg.dataset_dir.glob("*.png"))
    if not images:
        raise ConfigError(f"no label maps (*.png) in {cfg.dataset_dir}")

    per_dir = out / "readouts"
    per_dir.mkdir(parents=True, exist_ok=True)
    results = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(_eval_worker, p.stem, str(p), cfg) for p in images
            ]
            for p, fut in zip(images, futures):
                try:
                    results.append((p.stem, fut.result(), None))
                except Exception as exc:
                    results.append((p.stem, None, f"{type(exc).__name__}: {exc}"))
    else:
        for p in images:
            try:
                results.append((p.stem, _eval_worker(p.stem, str(p), cfg), None))
            except Exception as exc:
                results.append((p.stem, None, f"{type(exc).__name__}: {exc}"))

    failures = []
    all_records = []
    for name, recs, err in results:
        if err is not None:
            log.error("image %s failed: %s", name, err)
            failures.append(name)
            all_records.append({"type": "error", "image": name, "error": err})
            continue
        write_readouts(per_dir / f"{name}.jsonl", recs)
        all_records.extend(recs)

    write_readouts(readouts_path, all_records)
    report_hashes = _write_report(out, all_records, cfg.macro_metrics)
    write_manifest(
        out / "manifest.json",
        {
            "command": "evaluate",
            "seed": cfg.seed,
            "dataset_dir": str(cfg.dataset_dir),
            "inputs": {p.name: sha256_file(p) for p in images},
            "outputs": {readouts_path.name: sha256_file(readouts_path), **report_hashes},
            "failed_images": failures,
        },
    )
    if failures:
        print(f"WARNING: {len(failures)} image(s) failed: {', '.join(failures)}")
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_report(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    readouts_path = Path(args.readouts) if args.readouts else out / "readouts.jsonl"
    if not readouts_path.exists():
        raise ConfigError(f"readouts file not found: {readouts_path}")
    records = read_readouts(readouts_path)
    _write_report(out, records, cfg.macro_metrics)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elz",
        description="Emergency landing-zone pipeline: candidate generation, "
        "hazard ranking, runtime monitoring, and evaluation over label maps.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument(
        "-o", "--out", type=Path, help="output directory (default: config output_dir)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic label maps")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("perturb", parents=[common], help="apply a raster perturbation")
    p.add_argument("input", help="input RGB image")
    p.add_argument("output", help="output image path")
    p.add_argument(
        "--index", type=int, default=0, help="which config perturbation to apply"
    )
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser(
        "candidates", parents=[common], help="detect landing candidates in a label map"
    )
    p.add_argument("image", help="label map (indexed-palette PNG)")
    p.add_argument("--overlay", action="store_true", help="also write a diagnostic PNG")
    p.set_defaults(func=_cmd_candidates)

    p = sub.add_parser("rank", parents=[common], help="rank candidates by hazard")
    p.add_argument("image", help="label map (indexed-palette PNG)")
    p.add_argument("--overlay", action="store_true", help="also write a diagnostic PNG")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser(
        "monitor", parents=[common], help="run the monitor grid on one label map"
    )
    p.add_argument("image", help="label map (indexed-palette PNG)")
    p.set_defaults(func=_cmd_monitor)

    p = sub.add_parser(
        "evaluate", parents=[common], help="run the full grid over a dataset"
    )
    p.add_argument("--jobs", type=int, default=1, help="parallel image workers")
    p.add_argument(
        "--report-only",
        action="store_true",
        help="recompute the report from existing readouts",
    )
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", parents=[common], help="aggregate a readouts file")
    p.add_argument("readouts", nargs="?", help="readouts file (default: OUT/readouts.jsonl)")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ElzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
