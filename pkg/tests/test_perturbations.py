import numpy as np
import pytest

from elz.categories import LOW_VEGETATION, TREE
from elz.errors import ConfigError
from elz.perturbations import (
    BLUR_LENGTHS,
    FOG_VEIL_VALUE,
    KINDS,
    PerturbationSpec,
    apply_perturbation,
    degrade_segmenter,
    error_scaling,
    sensed_truth,
)
from elz.segmentation import SegmenterSpec


def grad_image(h=40, w=60):
    row = np.linspace(0, 255, w)
    return np.tile(row, (h, 1)).astype(np.uint8)


def test_none_returns_copy():
    img = grad_image()
    out = apply_perturbation(img, PerturbationSpec())
    assert np.array_equal(out, img)
    assert out is not img


def test_brightness_arithmetic_and_clipping():
    img = np.full((4, 4), 100, dtype=np.uint8)
    spec = PerturbationSpec("brightness", {"scale": 1.5, "offset": 0.1})
    out = apply_perturbation(img, spec)
    assert (out == int(100 * 1.5 + 25.5)).all()
    dark = apply_perturbation(img, PerturbationSpec("brightness", {"scale": 0.3, "offset": -0.3}))
    assert (dark == 0).all()  # 30 - 76.5 clips at zero
    bright = apply_perturbation(
        np.full((2, 2), 250, dtype=np.uint8), PerturbationSpec("brightness", {"scale": 1.7})
    )
    assert (bright == 255).all()


def test_fog_pulls_towards_veil_top_first():
    img = np.zeros((40, 8), dtype=np.uint8)
    out = apply_perturbation(img, PerturbationSpec("fog", {"density": 0.6}))
    assert out[0, 0] == round(0.6 * FOG_VEIL_VALUE)
    assert out[-1, 0] == round(0.3 * FOG_VEIL_VALUE)
    assert (out[0] >= out[-1]).all()
    thicker = apply_perturbation(img, PerturbationSpec("fog", {"density": 0.8}))
    assert thicker.mean() > out.mean()


def test_motion_blur_impulse_response_horizontal():
    img = np.zeros((21, 21), dtype=np.uint8)
    img[10, 10] = 255
    out = apply_perturbation(img, PerturbationSpec("motion_blur", {"length": 9, "angle_deg": 0}))
    ys, xs = np.nonzero(out)
    assert set(ys) == {10}
    assert sorted(xs) == list(range(6, 15))  # 9 pixels centred on the impulse
    assert set(out[10, 6:15]) == {np.uint8(round(255 / 9))}
    assert abs(int(out.sum()) - 255) <= 5  # mass preserved up to rounding


def test_motion_blur_impulse_response_vertical():
    img = np.zeros((21, 21), dtype=np.uint8)
    img[10, 10] = 255
    out = apply_perturbation(img, PerturbationSpec("motion_blur", {"length": 5, "angle_deg": 90}))
    ys, xs = np.nonzero(out)
    assert set(xs) == {10}
    assert sorted(ys) == list(range(8, 13))


def test_motion_blur_rejects_unknown_length():
    with pytest.raises(ConfigError):
        apply_perturbation(grad_image(), PerturbationSpec("motion_blur", {"length": 7}))
    assert BLUR_LENGTHS == (5, 9, 15)


def test_shifted_pixels_moves_and_replicates_edges():
    img = grad_image(10, 20)
    out = apply_perturbation(img, PerturbationSpec("shifted_pixels", {"dx": 1, "dy": 0}))
    assert np.array_equal(out[:, 1:], img[:, :-1])
    assert np.array_equal(out[:, 0], img[:, 0])


def test_shifted_pixels_caps_at_five_percent():
    img = grad_image(10, 20)
    with pytest.raises(ConfigError):
        apply_perturbation(img, PerturbationSpec("shifted_pixels", {"dx": 2}))  # 2 > 5% of 20
    ok = apply_perturbation(img, PerturbationSpec("shifted_pixels", {"dx": 1}))
    assert ok.shape == img.shape


def test_pixel_trap_clamps_seeded_rows():
    img = grad_image(50, 30)
    spec = PerturbationSpec("pixel_trap", {"stripes": 2, "band_px": 3, "value": 7}, seed=5)
    out = apply_perturbation(img, spec)
    trapped = (out == 7).all(axis=1)
    assert trapped.sum() == 6
    again = apply_perturbation(img, spec)
    assert np.array_equal(out, again)
    other = apply_perturbation(img, PerturbationSpec("pixel_trap", {"stripes": 2, "band_px": 3, "value": 7}, seed=6))
    assert not np.array_equal(out, other)


def test_pixel_trap_stripe_limit():
    with pytest.raises(ConfigError):
        PerturbationSpec("pixel_trap", {"stripes": 4}).validate()


def test_sensed_truth_photometric_kinds_pass_through():
    gt = np.full((30, 40), TREE, dtype=np.uint8)
    for kind, params in [("none", {}), ("brightness", {"scale": 1.3}), ("fog", {"density": 0.4}), ("motion_blur", {"length": 5})]:
        out = sensed_truth(gt, PerturbationSpec(kind, params))
        assert out is gt


def test_sensed_truth_shift_desynchronises():
    gt = np.zeros((30, 40), dtype=np.uint8)
    gt[:, 20:] = TREE
    out = sensed_truth(gt, PerturbationSpec("shifted_pixels", {"dx": 2}))
    assert out is not gt
    assert np.array_equal(out[:, 2:], gt[:, :-2])
    assert (gt == np.where(np.arange(40) >= 20, TREE, 0)).all()  # truth untouched


def test_sensed_truth_pixel_trap_reports_stuck_class():
    gt = np.full((60, 20), TREE, dtype=np.uint8)
    spec = PerturbationSpec("pixel_trap", {"stripes": 1, "band_px": 4}, seed=1)
    out = sensed_truth(gt, spec)
    stuck = (out == LOW_VEGETATION).all(axis=1)
    assert stuck.sum() == 4
    custom = sensed_truth(gt, PerturbationSpec("pixel_trap", {"stripes": 1, "band_px": 4, "stuck_class": 0}, seed=1))
    assert ((custom == 0).all(axis=1)).sum() == 4


def test_validate_unknown_kind_and_params():
    with pytest.raises(ConfigError):
        PerturbationSpec("rain").validate()
    with pytest.raises(ConfigError):
        PerturbationSpec("fog", {"densty": 0.5}).validate()
    with pytest.raises(ConfigError):
        PerturbationSpec("brightness", {"scale": 2.0}).validate()
    with pytest.raises(ConfigError):
        PerturbationSpec("fog", {"density": 0.9}).validate()
    assert KINDS[0] == "none"


def test_error_scaling_pinned_values():
    assert error_scaling(PerturbationSpec()) == (1.0, 0.0)
    mult, add = error_scaling(PerturbationSpec("brightness", {"scale": 1.7}))
    assert mult == pytest.approx(1.0 + 1.5 * 0.7)
    assert add == 0.0
    mult, add = error_scaling(PerturbationSpec("brightness", {"offset": -0.2}))
    assert mult == pytest.approx(1.4)
    mult, add = error_scaling(PerturbationSpec("fog", {"density": 0.8}))
    assert (mult, add) == (1.0, pytest.approx(0.2))
    mult, add = error_scaling(PerturbationSpec("motion_blur", {"length": 15}))
    assert mult == pytest.approx(1.45)
    assert error_scaling(PerturbationSpec("shifted_pixels", {"dx": 1})) == (1.0, 0.0)


def test_degrade_segmenter_raises_every_error_rate():
    base = SegmenterSpec(error_rate=0.1)
    worse = degrade_segmenter(base, PerturbationSpec("fog", {"density": 0.8}))
    c0 = base.confusion_matrix()
    c1 = worse.confusion_matrix()
    assert np.allclose(c1.sum(axis=1), 1.0)
    for i in range(8):
        assert 1.0 - c1[i, i] == pytest.approx((1.0 - c0[i, i]) + 0.2)


def test_degrade_segmenter_monotone_in_strength():
    base = SegmenterSpec(error_rate=0.15)
    prev = base.confusion_matrix()
    for scale in (1.0, 1.2, 1.4, 1.7):
        spec = degrade_segmenter(base, PerturbationSpec("brightness", {"scale": scale}))
        c = spec.confusion_matrix()
        assert (np.diag(c) <= np.diag(prev) + 1e-12).all()
        prev = c


def test_degrade_segmenter_identity_cases():
    base = SegmenterSpec(error_rate=0.1)
    assert degrade_segmenter(base, PerturbationSpec()) is base
    assert degrade_segmenter(base, PerturbationSpec("pixel_trap", {"stripes": 1})) is base
    oracle = SegmenterSpec(kind="ground_truth_oracle")
    assert degrade_segmenter(oracle, PerturbationSpec("fog", {"density": 0.8})) is oracle


def test_degrade_segmenter_caps_at_095():
    base = SegmenterSpec(error_rate=0.9)
    worse = degrade_segmenter(base, PerturbationSpec("brightness", {"scale": 1.7, "offset": 0.3}))
    c = worse.confusion_matrix()
    assert np.diag(c).min() >= 1.0 - 0.95 - 1e-12


def test_degrade_segmenter_bumps_zero_error_classes():
    c = np.eye(8)
    base = SegmenterSpec(error_rate=None, confusion=c)
    worse = degrade_segmenter(base, PerturbationSpec("fog", {"density": 0.4}))
    cw = worse.confusion_matrix()
    assert np.allclose(np.diag(cw), 0.9)
    off = cw[0, 1:]
    assert np.allclose(off, 0.1 / 7)
