"""
Quickstart: from a synthetic scene to a monitored landing choice
================================================================

Generates one synthetic label map, detects and ranks candidate landing
squares on a downscaled noisy segmentation, then lets a patch re-check
monitor pick the first candidate it trusts.  Diagnostic images land in
out/ next to this script.
"""

from collections import namedtuple
from pathlib import Path

from elz.camera import CameraModel, SafetyRadiusConfig
from elz.candidates import detect_candidates
from elz.hazards import HazardWeights, rank_candidates
from elz.monitors import MonitorConfig, run_monitor
from elz.overlay import draw_overlay, render_labels
from elz.segmentation import SegmenterSpec, segment
from elz.selection import default_region, run_selection
from elz.synth import generate_map

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

# A 512x288 scene: vegetation and trees criss-crossed by roads, with
# buildings, parked and moving cars, and the odd pedestrian.
W, H = 512, 288
gt = generate_map(7, W, H)
render_labels(gt).save(OUT / "01_scene.png")
print(f"scene -> {OUT / '01_scene.png'}")

# The airborne pipeline never sees the truth: it works on a
# half-resolution segmentation with 10% pixel noise.
spec = SegmenterSpec(kind="noisy_oracle", error_rate=0.10, seed=1)
LOW = (256, 144)
low = segment(spec, gt, None, "low", LOW)

# Candidate squares: every pixel whose safety window clears the
# forbidden classes, clustered and thinned to a handful of
# representatives.
cam_low = CameraModel(image_width_px=W, image_height_px=H).at_resolution(*LOW)
safety = SafetyRadiusConfig()
cands, fmap, valid = detect_candidates(low.labels, cam_low, safety, budget=10, seed=7)
print(f"{int(valid.sum())} valid pixels -> {len(cands)} candidate squares")

# Rank them by blended hazard, least hazardous first.
ranked = rank_candidates(cands, low.labels, fmap, cam_low, safety, HazardWeights())
for sc in ranked[:8]:
    c = sc.candidate
    print(f"  rank {sc.rank}: ({c.x:3d},{c.y:3d}) r={c.radius_px}px  h={sc.h:.3f}")
if len(ranked) > 8:
    print(f"  ... and {len(ranked) - 8} more")

# The monitor re-segments a full-resolution patch around each candidate
# before trusting it; selection walks the ranking until one passes.
mcfg = MonitorConfig(kind="LHD")
outcome = run_selection(
    ranked, lambda c: run_monitor(c, spec, gt, LOW, mcfg, safety.window_mode, {})
)
for rank, verdict in outcome.attempts:
    word = "accepted" if verdict.accepted else f"rejected: {verdict.reason}"
    print(f"  attempt on rank {rank}: {word}")
if outcome.chosen_rank is None:
    print("no candidate trusted; falling back to the bottom-centre parachute region")
else:
    print(
        f"chosen rank {outcome.chosen_rank} after {len(outcome.attempts)} attempt(s),"
        f" {outcome.total_monitor_s * 1000:.1f} ms of modelled monitor time"
    )

# Overlay: green accepted, red rejected, yellow never tried, cyan the
# chosen square, white the parachute fallback region.
Attempt = namedtuple("Attempt", ["rank", "verdict"])
img = draw_overlay(
    low.labels,
    ranked,
    [Attempt(r, v) for r, v in outcome.attempts],
    chosen_rank=outcome.chosen_rank,
    default_region=default_region(*LOW).region,
)
img.save(OUT / "01_overlay.png")
print(f"overlay -> {OUT / '01_overlay.png'}")
