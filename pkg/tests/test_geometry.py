import random

import pytest

from elz.errors import DomainError
from elz.geometry import Rect, scale_rect, window_rect

from oracles import scale_rect_oracle


def test_rect_basics():
    r = Rect(2, 3, 10, 7)
    assert r.width == 8
    assert r.height == 4
    assert r.area == 32
    assert not r.is_empty()
    assert r.contains(2, 3)
    assert r.contains(9, 6)
    assert not r.contains(10, 6)
    assert not r.contains(9, 7)


def test_rect_empty_and_intersection():
    a = Rect(0, 0, 4, 4)
    b = Rect(2, 2, 6, 6)
    assert a.intersection(b) == Rect(2, 2, 4, 4)
    c = Rect(4, 4, 8, 8)
    assert a.intersection(c).is_empty()
    assert a.intersection(c).area == 0


def test_rect_clipped_grown_inside():
    r = Rect(-2, 1, 5, 9)
    assert r.clipped(4, 6) == Rect(0, 1, 4, 6)
    assert not r.inside(4, 6)
    assert Rect(0, 1, 4, 6).inside(4, 6)
    g = Rect(3, 3, 5, 5).grown(2)
    assert g == Rect(1, 1, 7, 7)


def test_rect_slices_round_trip():
    import numpy as np

    a = np.arange(30).reshape(5, 6)
    r = Rect(1, 2, 4, 5)
    sub = a[r.slices()]
    assert sub.shape == (r.height, r.width)
    assert sub[0, 0] == a[2, 1]


def test_window_rect_odd_side_is_centred():
    w = window_rect(10, 20, 5)
    assert w == Rect(8, 18, 13, 23)
    assert w.width == 5 and w.height == 5


def test_window_rect_even_side_leans_right_and_down():
    w = window_rect(10, 20, 4)
    assert w == Rect(9, 19, 13, 23)


def test_window_rect_side_one():
    assert window_rect(3, 4, 1) == Rect(3, 4, 4, 5)


def test_window_rect_rejects_bad_side():
    with pytest.raises(DomainError):
        window_rect(0, 0, 0)


def test_scale_rect_identity():
    r = Rect(3, 4, 9, 11)
    assert scale_rect(r, (64, 36), (64, 36)) == r


def test_scale_rect_doubling():
    r = Rect(1, 1, 3, 3)
    assert scale_rect(r, (10, 10), (20, 20)) == Rect(2, 2, 6, 6)


def test_scale_rect_downscale_keeps_cover():
    assert scale_rect(Rect(0, 0, 1, 1), (10, 10), (5, 5)) == Rect(0, 0, 1, 1)
    assert scale_rect(Rect(9, 9, 10, 10), (10, 10), (5, 5)) == Rect(4, 4, 5, 5)


def test_scale_rect_matches_footprint_oracle():
    rng = random.Random(7)
    for _ in range(300):
        fw, fh = rng.randint(1, 40), rng.randint(1, 40)
        tw, th = rng.randint(1, 40), rng.randint(1, 40)
        x0 = rng.randrange(fw)
        y0 = rng.randrange(fh)
        x1 = rng.randint(x0 + 1, fw)
        y1 = rng.randint(y0 + 1, fh)
        got = scale_rect(Rect(x0, y0, x1, y1), (fw, fh), (tw, th))
        want = scale_rect_oracle(x0, y0, x1, y1, (fw, fh), (tw, th))
        assert want is not None
        assert (got.x0, got.y0, got.x1, got.y1) == want
