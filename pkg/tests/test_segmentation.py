import numpy as np
import pytest

from elz.categories import N_CATEGORIES, LOW_VEGETATION, ROAD, TREE
from elz.errors import ConfigError, DomainError
from elz.geometry import Rect
from elz.segmentation import (
    ORACLE_EPSILON,
    SegmenterSpec,
    confusion_from_error,
    mcd_passes,
    oracle_softmax,
    resize_nearest,
    scale_confusion,
    segment,
)


def checker_map(h=100, w=100):
    labels = np.full((h, w), LOW_VEGETATION, dtype=np.uint8)
    labels[h // 2 :, :] = ROAD
    return labels


def banded_map(h=160, w=256):
    """Vertical band per category so every class is well represented."""
    labels = np.zeros((h, w), dtype=np.uint8)
    band = w // N_CATEGORIES
    for c in range(N_CATEGORIES):
        labels[:, c * band : (c + 1) * band] = c
    return labels


def test_oracle_returns_truth_low():
    gt = checker_map()
    spec = SegmenterSpec(kind="ground_truth_oracle")
    seg = segment(spec, gt, low_size=(50, 50))
    assert seg.labels.shape == (50, 50)
    assert np.array_equal(seg.labels, resize_nearest(gt, 50, 50))
    assert seg.probs.shape == (50, 50, 8)
    assert np.array_equal(seg.probs.argmax(-1), seg.labels)
    assert seg.probs.max() == np.float32(1.0 - 7 * ORACLE_EPSILON)
    assert seg.probs.min() == np.float32(ORACLE_EPSILON)
    assert np.allclose(seg.probs.sum(-1), 1.0, atol=1e-5)


def test_oracle_high_crops_region():
    gt = checker_map()
    spec = SegmenterSpec(kind="ground_truth_oracle")
    r = Rect(10, 20, 30, 44)
    seg = segment(spec, gt, region=r, resolution="high")
    assert seg.labels.shape == (24, 20)
    assert np.array_equal(seg.labels, gt[20:44, 10:30])


def test_oracle_ignores_jitter():
    gt = checker_map(20, 20)
    spec = SegmenterSpec(kind="ground_truth_oracle", mcd_jitter=0.5)
    passes = mcd_passes(spec, gt, Rect(0, 0, 20, 20), 4)
    for p in passes[1:]:
        assert np.array_equal(p, passes[0])


def test_resize_nearest_picks_pixel_centres():
    a = np.arange(16, dtype=np.uint8).reshape(4, 4)
    out = resize_nearest(a, 2, 2)
    assert out.tolist() == [[5, 7], [13, 15]]
    up = resize_nearest(np.array([[1, 2], [3, 4]], dtype=np.uint8), 4, 4)
    assert up.tolist() == [
        [1, 1, 2, 2],
        [1, 1, 2, 2],
        [3, 3, 4, 4],
        [3, 3, 4, 4],
    ]


def test_resize_nearest_identity_copies():
    a = np.arange(16, dtype=np.uint8).reshape(4, 4)
    out = resize_nearest(a, 4, 4)
    assert np.array_equal(out, a)
    assert out is not a


def test_confusion_from_error_rows():
    c = confusion_from_error(0.21)
    assert c.shape == (8, 8)
    assert np.allclose(c.sum(axis=1), 1.0)
    assert np.allclose(np.diag(c), 0.79)
    off = c[~np.eye(8, dtype=bool)]
    assert np.allclose(off, 0.21 / 7)


def test_scale_confusion_endpoints():
    c = confusion_from_error(0.4)
    assert np.allclose(scale_confusion(c, 1.0), c)
    assert np.allclose(scale_confusion(c, 0.0), np.eye(8))
    half = scale_confusion(c, 0.5)
    assert np.allclose(np.diag(half), 0.8)


def test_noisy_error_rate_matches_configuration():
    gt = checker_map(100, 100)
    rates = []
    for seed in range(10):
        spec = SegmenterSpec(error_rate=0.1, seed=seed)
        seg = segment(spec, gt, low_size=(100, 100))
        rates.append(float((seg.labels != gt).mean()))
    assert abs(np.mean(rates) - 0.1) < 0.02


def test_noisy_respects_confusion_rows():
    # trees mistaken only for road, 30% of the time
    c = np.eye(8)
    c[TREE, TREE] = 0.7
    c[TREE, ROAD] = 0.3
    gt = np.full((80, 80), TREE, dtype=np.uint8)
    fracs = []
    for seed in range(5):
        spec = SegmenterSpec(error_rate=None, confusion=c, seed=seed)
        seg = segment(spec, gt, low_size=(80, 80))
        assert set(np.unique(seg.labels)) <= {ROAD, TREE}
        fracs.append(float((seg.labels == ROAD).mean()))
    assert abs(np.mean(fracs) - 0.3) < 0.03


def test_high_resolution_is_more_accurate_per_category():
    gt = banded_map()
    h, w = gt.shape
    low_err = np.zeros(N_CATEGORIES)
    high_err = np.zeros(N_CATEGORIES)
    for seed in range(5):
        spec = SegmenterSpec(error_rate=0.2, seed=seed, hd_error_factor=0.5)
        low = segment(spec, gt, low_size=(w, h))
        high = segment(spec, gt, resolution="high")
        for c in range(N_CATEGORIES):
            pix = gt == c
            low_err[c] += (low.labels[pix] != c).mean()
            high_err[c] += (high.labels[pix] != c).mean()
    assert (high_err < low_err).all()


def test_argmax_contract_holds_for_noisy_probs():
    gt = checker_map(40, 40)
    spec = SegmenterSpec(error_rate=0.3, seed=3, concentration=2.0, mcd_jitter=0.4)
    seg = segment(spec, gt, low_size=(40, 40))
    assert np.array_equal(seg.probs.argmax(-1), seg.labels)
    jittered = segment(spec, gt, low_size=(40, 40), stochastic_pass=2)
    assert np.array_equal(jittered.probs.argmax(-1), jittered.labels)


def test_segment_is_deterministic():
    gt = checker_map(50, 50)
    spec = SegmenterSpec(error_rate=0.25, seed=11)
    a = segment(spec, gt, low_size=(25, 25))
    b = segment(spec, gt, low_size=(25, 25))
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.probs, b.probs)
    other = segment(SegmenterSpec(error_rate=0.25, seed=12), gt, low_size=(25, 25))
    assert not np.array_equal(a.labels, other.labels)


def test_noise_is_keyed_by_region():
    gt = checker_map(80, 80)
    spec = SegmenterSpec(error_rate=0.3, seed=0)
    full = segment(spec, gt, resolution="high")
    sub = segment(spec, gt, region=Rect(10, 10, 50, 50), resolution="high")
    assert not np.array_equal(sub.labels, full.labels[10:50, 10:50])


def test_zero_jitter_pass_equals_base():
    gt = checker_map(30, 30)
    spec = SegmenterSpec(error_rate=0.2, seed=1, mcd_jitter=0.0)
    base = segment(spec, gt, low_size=(30, 30))
    p = segment(spec, gt, low_size=(30, 30), stochastic_pass=5)
    assert np.array_equal(base.labels, p.labels)
    assert np.array_equal(base.probs, p.probs)


def test_jittered_passes_differ_and_are_reproducible():
    gt = checker_map(20, 20)
    spec = SegmenterSpec(error_rate=0.2, seed=4, mcd_jitter=0.3)
    r = Rect(0, 0, 20, 20)
    p0 = segment(spec, gt, r, "high", stochastic_pass=0)
    p1 = segment(spec, gt, r, "high", stochastic_pass=1)
    again = segment(spec, gt, r, "high", stochastic_pass=0)
    assert not np.array_equal(p0.probs, p1.probs)
    assert np.array_equal(p0.probs, again.probs)


def test_pass_mean_converges_to_base_probs():
    gt = checker_map(16, 16)
    spec = SegmenterSpec(error_rate=0.2, seed=7, concentration=5.0, mcd_jitter=0.3)
    r = Rect(4, 4, 12, 12)
    base = segment(spec, gt, r, "high").probs.astype(np.float64)
    passes = mcd_passes(spec, gt, r, 1000)
    mean = np.mean([p.astype(np.float64) for p in passes], axis=0)
    sigma = spec.mcd_jitter * np.sqrt(base * (1.0 - base))
    tol = 4.0 * sigma / np.sqrt(1000) + 1e-3
    assert (np.abs(mean - base) <= tol).all()


def test_mcd_passes_needs_two():
    gt = checker_map(10, 10)
    spec = SegmenterSpec(mcd_jitter=0.2)
    with pytest.raises(DomainError):
        mcd_passes(spec, gt, Rect(0, 0, 10, 10), 1)


def test_blob_noise_keeps_marginal_rate_and_clusters():
    gt = np.full((200, 200), LOW_VEGETATION, dtype=np.uint8)
    spec = SegmenterSpec(error_rate=0.15, seed=2, blob_noise=True)
    seg = segment(spec, gt, low_size=(200, 200))
    err = seg.labels != gt
    assert abs(err.mean() - 0.15) < 0.001
    # errors should be spatially clumped, unlike independent flips
    pair = err[:, :-1] & err[:, 1:]
    neighbour_rate = pair.sum() / max(1, err[:, :-1].sum())
    assert neighbour_rate > 0.4


def test_low_resolution_requires_full_frame():
    gt = checker_map(40, 40)
    spec = SegmenterSpec()
    with pytest.raises(DomainError):
        segment(spec, gt, region=Rect(0, 0, 10, 10), low_size=(20, 20))
    with pytest.raises(DomainError):
        segment(spec, gt)  # low_size missing
    # the explicit full frame is allowed
    seg = segment(spec, gt, region=Rect(0, 0, 40, 40), low_size=(20, 20))
    assert seg.labels.shape == (20, 20)


def test_high_resolution_rejects_out_of_frame_region():
    gt = checker_map(40, 40)
    spec = SegmenterSpec()
    with pytest.raises(DomainError):
        segment(spec, gt, region=Rect(30, 30, 50, 50), resolution="high")
    with pytest.raises(DomainError):
        segment(spec, gt, region=Rect(5, 5, 5, 9), resolution="high")


def test_spec_validation_collects_problems():
    spec = SegmenterSpec(kind="resnet", concentration=-1.0, mcd_jitter=2.0)
    with pytest.raises(ConfigError) as exc:
        spec.validate()
    msg = str(exc.value)
    assert "kind" in msg
    assert "concentration" in msg
    assert "mcd_jitter" in msg


def test_oracle_softmax_shape_and_sums():
    labels = np.array([[0, 7], [3, 5]], dtype=np.uint8)
    probs = oracle_softmax(labels)
    assert probs.shape == (2, 2, 8)
    assert np.array_equal(probs.argmax(-1), labels)
    assert np.allclose(probs.sum(-1), 1.0, atol=1e-6)
