import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polarqkd import rates
from polarqkd.codec import compute_frozen_count

# Reference entropies, evaluated independently at 50 decimal digits.
H_011 = 0.49991595816452799564
H_004 = 0.24229218908241476155
H_001 = 0.080793135895911172825
H_0005 = 0.045414692333794101376


def test_entropy_reference_points():
    assert rates.binary_entropy(0.0) == 0.0
    assert rates.binary_entropy(1.0) == 0.0
    assert rates.binary_entropy(0.5) == 1.0
    assert rates.binary_entropy(0.11) == pytest.approx(H_011, abs=1e-12)
    assert rates.binary_entropy(0.04) == pytest.approx(H_004, abs=1e-12)
    assert rates.binary_entropy(0.01) == pytest.approx(H_001, abs=1e-12)
    assert rates.binary_entropy(0.005) == pytest.approx(H_0005, abs=1e-12)
    assert 0.4999 <= rates.binary_entropy(0.11) < 0.5000


@pytest.mark.parametrize("bad", [-0.1, 1.1, 2.0])
def test_entropy_domain(bad):
    with pytest.raises(ValueError):
        rates.binary_entropy(bad)
    with pytest.raises(ValueError):
        rates.binary_entropy(np.array([0.1, bad]))


def test_entropy_array_matches_scalar():
    xs = np.array([0.0, 0.005, 0.04, 0.11, 0.5, 1.0])
    arr = rates.binary_entropy(xs)
    assert arr.shape == xs.shape
    for x, h in zip(xs, arr):
        assert h == pytest.approx(rates.binary_entropy(float(x)), abs=1e-15)


@given(st.floats(min_value=1e-9, max_value=1.0 - 1e-9))
def test_entropy_symmetry(x):
    assert rates.binary_entropy(x) == pytest.approx(
        rates.binary_entropy(1.0 - x), rel=1e-12, abs=1e-12)


def test_entropy_concave_midpoints():
    grid = np.linspace(0.01, 0.99, 25)
    for a in grid:
        for b in grid:
            if a >= b:
                continue
            mid = rates.binary_entropy((a + b) / 2.0)
            chord = (rates.binary_entropy(a) + rates.binary_entropy(b)) / 2.0
            assert mid >= chord - 1e-12


def test_entropy_maximal_at_half():
    for x in np.linspace(0.0, 1.0, 101):
        assert rates.binary_entropy(float(x)) <= 1.0


def test_frozen_count_reference_points():
    assert compute_frozen_count(0.11, 8) == 4
    assert compute_frozen_count(0.0, 8) == 0
    # ceil(H(0.04) * N), checked against the 50-digit evaluation
    assert compute_frozen_count(0.04, 4096) == 993
    assert compute_frozen_count(0.04, 2**16) == 15879
    assert compute_frozen_count(0.04, 2**17) == 31758
    for n_exp in (16, 17):
        ratio = compute_frozen_count(0.04, 2**n_exp) / 2**n_exp
        assert 0.242 <= ratio <= 0.243


def test_frozen_count_monotone_and_complement():
    prev = -1
    for e in np.linspace(0.0, 0.5, 41):
        f = compute_frozen_count(float(e), 1024)
        assert f >= prev
        assert 0 <= f <= 1024
        prev = f
    assert compute_frozen_count(0.5, 1024) == 1024


def test_frozen_count_domain():
    with pytest.raises(ValueError):
        compute_frozen_count(0.6, 8)
    with pytest.raises(ValueError):
        compute_frozen_count(0.1, 12)  # not a power of two


def test_rate_asymptotic():
    assert rates.rate_asymptotic(1.0, 0.0, 1.1) == 1.0
    assert rates.rate_asymptotic(0.5, 0.05, 1.1) == pytest.approx(
        0.5 * (1.0 - 2.1 * rates.binary_entropy(0.05)), abs=1e-15)
    assert rates.rate_asymptotic(1.0, 0.5, 1.0) == pytest.approx(-1.0, abs=1e-12)


def test_rate_finite():
    assert rates.rate_finite(0.5, 0.0, 1.1, 0.08) == pytest.approx(0.46, abs=1e-12)
    assert rates.rate_finite(0.5, 0.0, 1.1, 0.04) == pytest.approx(0.48, abs=1e-12)
    for e in (0.0, 0.01, 0.1):
        assert rates.rate_finite(0.7, e, 1.2, 0.0) == pytest.approx(
            rates.rate_asymptotic(0.7, e, 1.2), abs=1e-15)


def test_rate_polar_round():
    assert rates.rate_polar_round(0.0, 0.04) == pytest.approx(
        1.0 - 2.0 * H_004, abs=1e-12)
    assert rates.rate_polar_round(0.04, 0.04) == pytest.approx(
        1.0 - 3.0 * H_004, abs=1e-12)
    assert math.isnan(rates.rate_polar_round(0.05, 0.04))


def test_rate_polar_round_decreasing():
    es = np.linspace(0.0, 0.04, 9)
    vals = [rates.rate_polar_round(float(e), 0.04) for e in es]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    ths = [0.01, 0.02, 0.03, 0.04]
    vals = [rates.rate_polar_round(0.005, t) for t in ths]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_rate_polar_process():
    r_round = rates.rate_polar_round(0.0, 0.04)
    assert rates.rate_polar_process(0.0, 0.04, 2, 0.46) == pytest.approx(
        (-0.46 + r_round) / 2.0, abs=1e-15)
    # handing the per-round rate back as the init rate cancels one round
    for m in (2, 5, 100):
        assert rates.rate_polar_process(0.01, 0.04, m, rates.rate_polar_round(
            0.01, 0.04)) == pytest.approx(
                rates.rate_polar_round(0.01, 0.04) * (m - 2) / m, abs=1e-12)
    with pytest.raises(ValueError):
        rates.rate_polar_process(0.0, 0.04, 1, 0.4)
    assert math.isnan(rates.rate_polar_process(0.05, 0.04, 8, 0.4))


@pytest.mark.parametrize("m", [10, 100, 1000])
def test_rate_polar_process_limit(m):
    r1 = 0.46
    r_round = rates.rate_polar_round(0.005, 0.04)
    r = rates.rate_polar_process(0.005, 0.04, m, r1)
    assert abs(r - r_round) <= (abs(r1) + abs(r_round)) / m + 1e-15


def test_rate_bb84():
    assert rates.rate_bb84(0.0, 1.1, 0.08) == pytest.approx(0.46, abs=1e-12)
    assert rates.rate_bb84(0.0, 1.1, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert rates.rate_bb84(0.11, 1.0, 0.0) == pytest.approx(
        0.5 * (1.0 - 2.0 * H_011), abs=1e-12)


def test_rate_ebb84():
    assert rates.rate_ebb84(0.0, 1.1, 1e-12) == pytest.approx(1.0, abs=1e-9)
    assert rates.rate_ebb84(0.0, 1.1, 0.2) == pytest.approx(0.6528, abs=1e-12)
    # p = sqrt(0.08): s = 1 - 2p(1-p) is ~0.594, nowhere near 0.7
    p = math.sqrt(0.08)
    assert rates.rate_ebb84(0.0, 1.1, p) == pytest.approx(
        (1.0 - 2.0 * p * (1.0 - p)) * 0.92, abs=1e-12)
    assert rates.rate_ebb84(0.0, 1.1, p) == pytest.approx(0.54676941, abs=1e-7)


def _sweep_16():
    return rates.sweep(np.linspace(0.0, 0.12, 25), [0.04, 0.03, 0.02, 0.01],
                       2**16)


def test_sweep_beta_modes():
    curve = _sweep_16()
    assert curve.beta == pytest.approx(0.08)
    assert curve.p == pytest.approx(math.sqrt(0.08))
    exact = rates.sweep([0.0, 0.01], [0.04], 2**16, beta_mode="exact")
    assert exact.beta == pytest.approx(5000 / 65536)
    exact17 = rates.sweep([0.0, 0.01], [0.04], 2**17, beta_mode="exact")
    assert exact17.beta == pytest.approx(5000 / 131072)
    rounded17 = rates.sweep([0.0, 0.01], [0.04], 2**17)
    assert rounded17.beta == pytest.approx(0.04)


def test_sweep_csv_schema_and_determinism():
    curve = _sweep_16()
    text = curve.to_csv()
    lines = text.splitlines()
    assert lines[0] == "e,r_bb84,r_ebb84,r_polar_E0.04,r_polar_E0.03,r_polar_E0.02,r_polar_E0.01"
    assert len(lines) == 26
    assert text == _sweep_16().to_csv()
    # not-operating cells are empty, never zero
    last = lines[-1].split(",")
    assert last[3] == "" and last[4] == "" and last[5] == "" and last[6] == ""
    first = lines[1].split(",")
    assert first[0] == "0" and all(cell != "" for cell in first[1:])


def test_sweep_orderings_on_operating_range():
    # With the parameter-estimation budget folded in, the polar curve beats
    # plain BB84 everywhere it operates; biased BB84 beats plain BB84 while
    # the shared bracket 1-(1+f)H(e)-beta stays positive (both subtract the
    # same beta because p^2 = beta); the polar curve overtakes biased BB84
    # only above a crossover (about e = 0.0174 for N = 2^16 with beta 0.08).
    curve = _sweep_16()
    polar = curve.polar[0.04]
    for i, e in enumerate(curve.e_grid):
        if curve.r_bb84[i] > 0.0:
            assert curve.r_ebb84[i] > curve.r_bb84[i]
        if e <= 0.04:
            assert polar[i] > curve.r_bb84[i]
    by_e = dict(zip(np.round(curve.e_grid, 6), range(curve.e_grid.size)))
    assert polar[by_e[0.005]] < curve.r_ebb84[by_e[0.005]]
    assert polar[by_e[0.02]] > curve.r_ebb84[by_e[0.02]]
    assert polar[by_e[0.0]] == pytest.approx(1.0 - 2.0 * H_004, abs=1e-12)


def test_sweep_validation():
    with pytest.raises(ValueError):
        rates.sweep([], [0.04], 2**16)
    with pytest.raises(ValueError):
        rates.sweep([0.01, 0.01], [0.04], 2**16)
    with pytest.raises(ValueError):
        rates.sweep([0.02, 0.01], [0.04], 2**16)
    with pytest.raises(ValueError):
        rates.sweep([0.0, 0.01], [], 2**16)
    with pytest.raises(ValueError):
        rates.sweep([0.0, 0.01], [0.04], 1000)
    with pytest.raises(ValueError):
        rates.sweep([0.0, 0.01], [0.04], 2**16, beta_mode="fancy")
