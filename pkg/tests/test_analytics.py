import csv
import io
import json
import math

import numpy as np
import pytest

from freqlatent.analytics import (
    channel_overlap,
    lag1_autocorr,
    psnr,
    subband_autocorr,
    subband_energy,
)
from freqlatent.compression import SubbandMask, adaptive_select, fixed_mask, label_mask
from freqlatent.wavelet import LABELS, MultiWTSet, multi_wt, wt3d
from oracles import brute_lag1


def test_energy_zero_set():
    rep = subband_energy(multi_wt(np.zeros((1, 8, 2, 2))))
    assert rep.is_zero
    assert np.all(rep.label_fraction == 0)
    assert np.all(rep.channel_energy == 0)


def test_energy_single_label():
    bands = {lab: np.zeros((4, 1, 1, 1)) for lab in LABELS}
    bands["LHL"] = np.ones((4, 1, 1, 1))
    rep = subband_energy(MultiWTSet(bands, (1, 8, 2, 2)))
    assert rep.fraction_of(["LHL"]) == 1.0
    assert rep.label_fraction.sum() == pytest.approx(1.0, abs=1e-9)


def test_energy_parseval(rng):
    z = rng.standard_normal((3, 8, 4, 6)).astype(np.float32)
    rep = subband_energy(multi_wt(z))
    total = float(np.sum(rep.label_energy * rep.elements_per_label))
    ref = float(np.sum(z.astype(np.float64) ** 2))
    assert abs(total - ref) / ref <= 1e-6
    assert rep.grand_total == pytest.approx(ref, rel=1e-6)
    assert rep.label_fraction.sum() == pytest.approx(1.0, abs=1e-9)


def test_energy_channel_permutation(rng):
    z = rng.standard_normal((3, 4, 4, 4))
    perm = [2, 0, 1]
    a = subband_energy(wt3d(z))
    b = subband_energy(wt3d(z[perm]))
    np.testing.assert_allclose(b.channel_energy, a.channel_energy[:, perm], rtol=1e-12)


def test_energy_csv_schema():
    rep = subband_energy(wt3d(np.ones((2, 2, 2, 2))))
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["label", "channel", "energy", "label_energy", "label_fraction"]
    assert len(rows) == 1 + 8 * 2
    assert rows[1][:2] == ["LLL", "0"]
    assert float(rows[1][4]) == 1.0
    doc = json.loads(json.dumps(rep.to_dict()))
    assert doc["labels"] == list(LABELS)


def test_lag1_ramp_vs_brute():
    t = np.arange(8, dtype=np.float64)
    x = np.broadcast_to(t[None, :, None, None], (1, 8, 3, 3)).copy()
    rho = lag1_autocorr(x).rho[""][0]
    assert abs(rho - brute_lag1(x)[0]) < 0.05
    assert rho > 0.5


def test_lag1_alternating_negative():
    t = np.array([1.0, -1.0] * 4)
    x = np.broadcast_to(t[None, :, None, None], (1, 8, 2, 2)).copy()
    rho = lag1_autocorr(x).rho[""][0]
    assert rho == pytest.approx(brute_lag1(x)[0], abs=1e-12)
    assert rho < 0


def test_lag1_constant_degenerate():
    rep = lag1_autocorr(np.full((2, 4, 2, 2), 3.3))
    assert rep.degenerate[""].all()
    assert np.all(rep.rho[""] == 0)


def test_lag1_requires_two_frames():
    with pytest.raises(ValueError):
        lag1_autocorr(np.zeros((1, 1, 2, 2)))


def test_lag1_matches_brute_random(rng):
    for shape in [(1, 2, 1, 1), (4, 16, 8, 8), (2, 5, 3, 7)]:
        x = rng.standard_normal(shape)
        np.testing.assert_allclose(lag1_autocorr(x).rho[""], brute_lag1(x), atol=1e-10)


def test_subband_autocorr_keys(rng):
    rep = subband_autocorr(wt3d(rng.standard_normal((2, 8, 4, 4))))
    assert list(rep.rho) == list(LABELS)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["label", "channel", "rho", "degenerate"]
    assert len(rows) == 1 + 16


def test_overlap_identical_and_disjoint():
    a = label_mask(["LLL", "LLH"])
    assert channel_overlap(a, a) == 1.0
    assert channel_overlap(a, label_mask(["HHH"])) == 0.0


def test_overlap_symmetric_and_geometry(rng):
    m = multi_wt(rng.standard_normal((2, 8, 4, 4)))
    a = adaptive_select(m, 0.5)
    b = fixed_mask()
    assert channel_overlap(a, b) == channel_overlap(b, a)
    assert 0 <= channel_overlap(a, b) <= 1
    other = SubbandMask.from_bitmap(np.ones((8, 3), dtype=bool))
    with pytest.raises(ValueError):
        channel_overlap(a, other)
    with pytest.raises(ValueError):
        channel_overlap(fixed_mask("single"), fixed_mask("multi"))


def test_overlap_dominance_equals_one():
    rng = np.random.default_rng(3)
    bands = {lab: np.zeros((8, 1, 2, 2)) for lab in LABELS}
    for lab in fixed_mask().retained:
        bands[lab] = 5 + rng.random((8, 1, 2, 2))
    m = MultiWTSet(bands, (2, 8, 4, 4))
    assert channel_overlap(adaptive_select(m, 0.5), fixed_mask()) == 1.0


def test_overlap_is_one_iff_equal(rng):
    m = multi_wt(rng.standard_normal((1, 8, 2, 2)))
    a = adaptive_select(m, 0.5)
    bits = a.channels.copy()
    bits[np.argwhere(bits)[0][0], np.argwhere(bits)[0][1]] = False
    assert channel_overlap(a, SubbandMask.from_bitmap(bits)) < 1.0


def test_psnr_values(rng):
    x = rng.random((1, 2, 4, 4))
    assert psnr(x, x) == math.inf
    y = x + 0.1
    assert psnr(x, y, 1.0) == pytest.approx(20.0)
    assert psnr(x, y, 255.0) - psnr(x, y, 1.0) == pytest.approx(20 * math.log10(255), abs=1e-9)
    assert 20 * math.log10(255) == pytest.approx(48.13, abs=0.01)


def test_psnr_errors():
    with pytest.raises(ValueError):
        psnr(np.zeros((1, 1, 1, 2)), np.zeros((1, 1, 1, 3)))
    with pytest.raises(ValueError):
        psnr(np.zeros(3), np.zeros(3), peak=0)
