import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqlatent.wavelet import (
    HIGH_FILTER,
    LABELS,
    LOW_FILTER,
    DimensionError,
    MultiWTSet,
    SubbandSet,
    analysis,
    haar_analysis_axis,
    haar_synthesis_axis,
    iwt3d,
    multi_iwt,
    multi_wt,
    wt3d,
)
from oracles import brute_multi_wt, brute_wt3d

even = st.integers(1, 4).map(lambda k: 2 * k)


def energy(x):
    return float(np.sum(np.square(x, dtype=np.float64)))


def set_energy(s):
    return sum(energy(b) for b in s.bands.values())


def test_filters_orthonormal():
    assert np.isclose(LOW_FILTER @ LOW_FILTER, 1)
    assert np.isclose(HIGH_FILTER @ HIGH_FILTER, 1)
    assert np.isclose(LOW_FILTER @ HIGH_FILTER, 0)


def test_analysis_pair():
    t = np.array([2.0, 4.0]).reshape(1, 2, 1, 1)
    lo, hi = haar_analysis_axis(t, "time")
    assert lo.item() == pytest.approx(4.242640687)
    assert hi.item() == pytest.approx(-1.414213562)


@pytest.mark.parametrize("axis", ["time", "height", "width"])
def test_constant_annihilated(axis):
    t = np.full((2, 4, 4, 4), 3.0)
    lo, hi = haar_analysis_axis(t, axis)
    assert np.all(hi == 0)
    assert np.allclose(lo, 3 * math.sqrt(2))
    assert lo.shape[{"time": 1, "height": 2, "width": 3}[axis]] == 2


@pytest.mark.parametrize("axis", ["time", "height", "width"])
def test_axis_round_trip(rng, axis):
    t = rng.standard_normal((3, 4, 4, 4)).astype(np.float32)
    back = haar_synthesis_axis(*haar_analysis_axis(t, axis), axis)
    np.testing.assert_allclose(back, t, atol=1e-6)
    t = rng.standard_normal((2, 8, 8, 8)).astype(np.float32)
    back = haar_synthesis_axis(*haar_analysis_axis(t, axis), axis)
    np.testing.assert_allclose(back, t, atol=1e-6)


def test_synthesis_examples():
    lo = np.full((1, 1, 1, 1), math.sqrt(2))
    hi = np.zeros((1, 1, 1, 1))
    np.testing.assert_allclose(haar_synthesis_axis(lo, hi, "width").ravel(), [1, 1])
    np.testing.assert_allclose(haar_synthesis_axis(hi, lo, "width").ravel(), [1, -1])


def test_synthesis_shape_mismatch():
    with pytest.raises(ValueError):
        haar_synthesis_axis(np.zeros((1, 1, 1, 2)), np.zeros((1, 1, 1, 1)), "width")


@pytest.mark.parametrize("shape,axis", [((1, 3, 2, 2), "time"), ((1, 2, 2, 1), "width")])
def test_odd_extent_names_axis(shape, axis):
    with pytest.raises(DimensionError) as exc:
        haar_analysis_axis(np.zeros(shape), axis)
    assert exc.value.axis == axis
    with pytest.raises(DimensionError, match=axis):
        wt3d(np.zeros(shape))


def test_wt3d_constant():
    s = wt3d(np.full((1, 2, 2, 2), 0.5))
    assert s.bands["LLL"].item() == pytest.approx(0.5 * 2**1.5)
    for lab in LABELS[1:]:
        assert np.all(s.bands[lab] == 0)


def test_wt3d_matches_filter_bank(rng):
    x = rng.standard_normal((3, 4, 6, 8))
    s = wt3d(x)
    ref = brute_wt3d(x)
    for lab in LABELS:
        np.testing.assert_allclose(s.bands[lab], ref[lab], atol=1e-12)


def test_wt3d_axis_order_independent(rng):
    x = rng.standard_normal((2, 4, 4, 4))
    ref = wt3d(x).bands
    for order in itertools.permutations(["time", "height", "width"]):
        bands = {"": x}
        for ax in order:
            nxt = {}
            for lab, b in bands.items():
                lo, hi = analysis(b, ax)
                nxt[lab + ax[0] + "L"] = lo
                nxt[lab + ax[0] + "H"] = hi
            bands = nxt
        for key, b in bands.items():
            letters = dict(zip(key[0::2], key[1::2]))
            lab = letters["t"] + letters["h"] + letters["w"]
            np.testing.assert_allclose(b, ref[lab], atol=1e-6)


def test_wt3d_linearity(rng):
    a, b = rng.standard_normal((2, 2, 4, 4, 4))
    sa, sb, sab = wt3d(a), wt3d(b), wt3d(2.5 * a - 0.5 * b)
    for lab in LABELS:
        np.testing.assert_allclose(sab.bands[lab], 2.5 * sa.bands[lab] - 0.5 * sb.bands[lab], atol=1e-5)


def test_wt3d_parseval_and_round_trip(rng):
    x = rng.standard_normal((4, 8, 16, 16)).astype(np.float32)
    s = wt3d(x)
    assert abs(set_energy(s) - energy(x)) / energy(x) <= 1e-6
    np.testing.assert_allclose(iwt3d(s), x, atol=1e-5)
    assert sum(b.size for b in s.bands.values()) == x.size


def test_iwt3d_zero_and_projection():
    shape = (2, 4, 4, 4)
    zero = SubbandSet({lab: np.zeros((2, 2, 2, 2)) for lab in LABELS}, shape)
    assert np.all(iwt3d(zero) == 0)
    bands = dict(zero.bands)
    bands["LLL"] = np.random.default_rng(0).standard_normal((2, 2, 2, 2))
    smooth = iwt3d(SubbandSet(bands, shape))
    again = wt3d(smooth)
    for lab in LABELS[1:]:
        np.testing.assert_allclose(again.bands[lab], 0, atol=1e-12)
    np.testing.assert_allclose(again.bands["LLL"], bands["LLL"], atol=1e-12)


def test_iwt3d_missing_label():
    s = wt3d(np.zeros((1, 2, 2, 2)))
    del s.bands["HHH"]
    with pytest.raises(ValueError, match="HHH"):
        iwt3d(s)


def test_multi_wt_matches_brute(rng):
    x = rng.standard_normal((2, 8, 4, 4))
    m = multi_wt(x)
    ref = brute_multi_wt(x)
    for lab in LABELS:
        np.testing.assert_allclose(m.bands[lab], ref[lab], atol=1e-12)
        assert m.bands[lab].shape == (8, 1, 2, 2)


def test_multi_wt_constant_only_stage1_lll_channels():
    c = 3
    m = multi_wt(np.full((c, 8, 4, 4), 2.0))
    for lab in LABELS[1:]:
        assert np.all(m.bands[lab] == 0)
    lll = m.bands["LLL"]
    assert np.all(lll[c:] == 0)
    assert np.all(lll[:c] != 0)


def test_multi_wt_energy_and_round_trip(rng):
    z = rng.standard_normal((8, 8, 16, 16)).astype(np.float32)
    m = multi_wt(z)
    assert abs(set_energy(m) - energy(z)) / energy(z) <= 1e-6
    np.testing.assert_allclose(multi_iwt(m), z, atol=1e-5)
    assert sum(b.size for b in m.bands.values()) == z.size


def test_multi_wt_requires_t_mod_8():
    with pytest.raises(DimensionError, match="T_z ≡ 0 mod 8"):
        multi_wt(np.zeros((1, 4, 2, 2)))


def test_multi_iwt_zero_and_delta():
    shape = (2, 8, 4, 4)
    zero = MultiWTSet({lab: np.zeros((8, 1, 2, 2)) for lab in LABELS}, shape)
    assert np.all(multi_iwt(zero) == 0)
    delta = np.zeros(shape)
    delta[1, 5, 2, 3] = 1.0
    np.testing.assert_allclose(multi_iwt(multi_wt(delta)), delta, atol=1e-6)


def test_multi_iwt_wrong_shape():
    m = multi_wt(np.zeros((1, 8, 2, 2)))
    m.bands["LHL"] = np.zeros((4, 2, 1, 1))
    with pytest.raises(ValueError):
        multi_iwt(m)


def test_custom_group_order_round_trip(rng):
    order = ("LHH", "LLL", "LHL", "LLH", "HHH", "HLL", "HHL", "HLH")
    z = rng.standard_normal((2, 8, 4, 4))
    m = multi_wt(z, order)
    assert m.group_order == order
    np.testing.assert_allclose(multi_iwt(m), z, atol=1e-12)
    with pytest.raises(ValueError):
        multi_wt(z, ("HLL",) + order[1:4] + ("LLL",) + order[5:])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2).map(lambda k: 8 * k), even, even,
       st.sampled_from([np.float32, np.float64]))
def test_property_perfect_reconstruction(c, t, h, w, dtype):
    x = np.random.default_rng(c * t * h * w).standard_normal((c, t, h, w)).astype(dtype)
    tol = 1e-5 if dtype == np.float32 else 1e-10
    np.testing.assert_allclose(iwt3d(wt3d(x)), x, atol=tol)
    np.testing.assert_allclose(multi_iwt(multi_wt(x)), x, atol=tol)
    e = energy(x)
    assert abs(set_energy(wt3d(x)) - e) <= 1e-6 * e
    assert abs(set_energy(multi_wt(x)) - e) <= 1e-6 * e


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5, allow_nan=False), even, even)
def test_property_constant_annihilation(v, h, w):
    x = np.full((2, 8, h, w), v)
    s = wt3d(x)
    for lab in LABELS:
        if "H" in lab:
            assert np.all(s.bands[lab] == 0)
    m = multi_wt(x)
    for lab in LABELS:
        if "H" in lab:
            assert np.all(m.bands[lab] == 0)
