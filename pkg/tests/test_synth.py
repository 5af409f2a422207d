import numpy as np
import pytest

from elz.categories import CATEGORY_NAMES, is_unsafe_mask
from elz.errors import ConfigError
from elz.synth import DEFAULT_CLASS_BANDS, class_frequencies, generate_dataset, generate_map


def test_generate_map_shape_and_dtype():
    m = generate_map(0, 96, 64)
    assert m.shape == (64, 96)
    assert m.dtype == np.uint8
    assert m.max() < 8


def test_generate_map_reproducible():
    a = generate_map(7, 64, 48)
    b = generate_map(7, 64, 48)
    c = generate_map(8, 64, 48)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_generate_map_has_safe_and_unsafe_ground():
    for seed in range(10):
        m = generate_map(seed, 80, 60)
        unsafe = is_unsafe_mask(m)
        assert unsafe.any()
        assert not unsafe.all()


def test_generate_map_rejects_tiny_frames():
    with pytest.raises(ConfigError):
        generate_map(0, 8, 64)
    with pytest.raises(ConfigError):
        generate_map(0, 64, 15)


def test_dataset_names_and_count():
    ds = generate_dataset(3, 32, 32, seed=5)
    assert [name for name, _ in ds] == ["synth_0000", "synth_0001", "synth_0002"]
    assert all(m.shape == (32, 32) for _, m in ds)
    # consecutive seeds, so the first map matches a direct call
    assert np.array_equal(ds[0][1], generate_map(5, 32, 32))
    with pytest.raises(ConfigError):
        generate_dataset(0, 32, 32, seed=0)


def test_corpus_class_mix_stays_in_declared_bands():
    maps = [m for _, m in generate_dataset(100, 128, 72, seed=100)]
    freq = class_frequencies(maps)
    assert set(freq) == set(CATEGORY_NAMES)
    assert abs(sum(freq.values()) - 1.0) < 1e-12
    for name, (lo, hi) in DEFAULT_CLASS_BANDS.items():
        assert lo - 0.05 <= freq[name] <= hi + 0.05, (name, freq[name])


def test_class_frequencies_rejects_empty():
    with pytest.raises(ConfigError):
        class_frequencies([])
