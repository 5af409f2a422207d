"""
Perturbation gallery: the camera feed when things go wrong
==========================================================

Applies every supported raster perturbation to one rendered scene and
writes the results next to this script, then shows how each one feeds
back into the evaluation's segmenter error model.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from elz.overlay import render_labels
from elz.perturbations import (
    PerturbationSpec,
    apply_perturbation,
    degrade_segmenter,
    error_scaling,
    sensed_truth,
)
from elz.segmentation import SegmenterSpec
from elz.synth import generate_map

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

gt = generate_map(21, 512, 288)
rgb = np.asarray(render_labels(gt))

SPECS = (
    PerturbationSpec(kind="none"),
    PerturbationSpec(kind="brightness", params={"scale": 1.5, "offset": 0.1}),
    PerturbationSpec(kind="fog", params={"density": 0.6}),
    PerturbationSpec(kind="motion_blur", params={"length": 9, "angle_deg": 30.0}),
    PerturbationSpec(kind="shifted_pixels", params={"dx": 12, "dy": 4}),
    PerturbationSpec(kind="pixel_trap", params={"stripes": 3}, seed=5),
)

for spec in SPECS:
    out = apply_perturbation(rgb, spec)
    path = OUT / f"03_{spec.kind}.png"
    Image.fromarray(out).save(path)
    changed = 100.0 * float((out != rgb).any(axis=-1).mean())
    print(f"{spec.kind:15s} -> {path.name}  ({changed:5.1f}% of pixels changed)")

# Photometric corruptions do not move the scene, they just make the
# segmenter worse; the evaluation models that by scaling its error
# rates.  Geometric ones instead desynchronise what the pipeline senses
# from where things really are.
base = SegmenterSpec(kind="noisy_oracle", error_rate=0.1, seed=0)
print("\neffect on a segmenter with 10% base error:")
for spec in SPECS:
    mult, add = error_scaling(spec)
    degraded = degrade_segmenter(base, spec)
    err = 1.0 - float(np.diag(degraded.confusion_matrix()).mean())
    moved = sensed_truth(gt, spec) is not gt
    note = "senses a displaced scene" if moved else f"mean error {err:.3f}"
    print(f"  {spec.kind:15s} multiplier {mult:.2f}, bump {add:.2f}: {note}")
