import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from billiard_zeta.analysis import (
    TailModel,
    counting_points,
    estimate_h,
    estimate_sigma_a,
    estimate_sigma_c,
    eval_eta,
    fitted_onset,
    kuniyeda_sweep,
    remainder_Rk,
    remainder_step_identity,
    tail_sum,
    tail_sums,
    typical_mean,
    window_count,
)
from billiard_zeta.errors import CoverageError, DomainError, InsufficientData
from billiard_zeta.spectrum import Spectrum
from oracles import random_spectrum_arrays

H_R6_M8 = 0.15729595601491794  # regression value, 18 distinct lengths in the upper half


def test_telescoping(spec10):
    T = tail_sums(spec10)
    a = spec10.coeffs
    scale = np.abs(a).max()
    for m in range(len(a) - 1):
        assert abs(T[m] - (a[m] + T[m + 1])) <= 1e-15 * scale
    assert T[-1] == a[-1]
    assert tail_sum(spec10, 1) == T[0]
    with pytest.raises(IndexError):
        tail_sum(spec10, len(a) + 1)


def test_remainder_is_continuous(spec10):
    lam = spec10.lambdas
    scale = float(np.abs(spec10.coeffs).sum() * lam[-1])
    for x in lam[:-1]:
        left = remainder_Rk(spec10, math.nextafter(x, -math.inf)).value
        right = remainder_Rk(spec10, x).value
        assert abs(left - right) <= 1e-12 * scale


def test_remainder_truncation_flag(spec10):
    assert remainder_Rk(spec10, spec10.lambdas[-1]) == (0.0, True)
    assert not remainder_Rk(spec10, 0.0).truncated


def test_step_identity_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        lam, a = random_spectrum_arrays(rng)
        spec = Spectrum.from_arrays(lam, a)
        m = int(rng.integers(2, len(lam)))
        ul = lam[m - 2] + rng.uniform(0.01, 0.99) * (lam[m - 1] - lam[m - 2])
        ur = lam[m - 1] + rng.uniform(0.01, 0.99) * (lam[m] - lam[m - 1])
        lhs, rhs = remainder_step_identity(spec, m, ul, ur)
        scale = np.abs(a).sum() * lam[-1]
        assert abs(lhs - rhs) <= 1e-13 * scale


def test_step_identity_requires_straddle():
    spec = Spectrum.from_arrays([1.0, 2.0, 3.0], [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        remainder_step_identity(spec, 2, 2.1, 2.5)


def test_sweep_normalizations(spec10):
    us = np.array([10.0, 20.0])
    one = kuniyeda_sweep(spec10, us, k=1)
    assert np.array_equal(one["log_over_uk"], one["log_over_u"])
    two = kuniyeda_sweep(spec10, us, k=2)
    assert np.allclose(two["log_over_uk"] * us, two["log_over_u"])


def test_typical_means():
    spec = Spectrum.from_arrays([1.0, 2.0, 4.0], [3.0, -1.0, 5.0])
    assert typical_mean(spec, 3.0, 0) == 2.0
    assert typical_mean(spec, 3.0, 1) == pytest.approx((3.0 * 2 - 1.0 * 1) / 3)
    s = 0.5 + 1j
    # lambda = 4 sits on the cut and is excluded
    assert typical_mean(spec, 4.0, 2, s) == pytest.approx(
        (3 * 9 * cmath.exp(-s) - 4 * cmath.exp(-2 * s)) / 16)


def test_entropy_regression(db8):
    est = estimate_h(db8)
    assert est.h == pytest.approx(H_R6_M8, rel=1e-9)
    assert est.n_points == 18
    with pytest.raises(InsufficientData):
        estimate_h(db8, min_count=10_000)


def test_entropy_synthetic():
    # lengths with N(x) = e^x / x exactly at the jumps
    xs = np.linspace(3, 14, 4000)
    target = np.floor(np.exp(xs) / xs)
    lengths = []
    prev = 0
    for x, n in zip(xs, target):
        lengths.extend([x] * int(n - prev))
        prev = n
    est = estimate_h(np.array(lengths), x_min=8.0)
    assert est.h == pytest.approx(1.0, abs=0.01)


def test_onset_regression(spec8):
    assert fitted_onset(spec8.ray_lengths, H_R6_M8, x_max=spec8.x_max) == 8.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1.0, 20.0), min_size=1, max_size=80), st.floats(0.05, 1.5))
def test_onset_band_holds_above(lengths, h):
    x_max = 21.0
    b = fitted_onset(lengths, h, eps=0.3, x_max=x_max)
    if math.isinf(b):
        return
    srt = np.sort(lengths)
    for x in np.linspace(b, x_max, 400):
        n = np.searchsorted(srt, x, side="right")
        assert n <= math.exp((h + 0.3) * x) * (1 + 1e-12)
        if h > 0.3:
            assert n >= math.exp((h - 0.3) * x) * (1 - 1e-12)


def test_counting_points():
    xs, n = counting_points([3.0, 1.0, 3.0, 2.0])
    assert xs.tolist() == [1.0, 2.0, 3.0]
    assert n.tolist() == [1, 2, 4]


def test_window_count():
    lengths = np.array([10.0, 10.1, 10.2, 10.35, 12.0])
    w = window_count(lengths, 10.0, 0.3, 0.01, 0.4, b0=5.0, horizon=20.0)
    assert w.count == 3
    assert w.bound == pytest.approx(0.3 * 0.99 * math.exp(4.0) / (3 * 10.3))
    assert w.verdict == "pass"
    assert window_count(lengths, 10.0, 0.3, 0.01, 0.4, b0=11.0, horizon=20.0).verdict == "out-of-range"
    # below 3 / h
    assert window_count(lengths, 10.0, 0.3, 0.01, 0.2, b0=5.0, horizon=20.0).verdict == "out-of-range"
    assert window_count(lengths, 10.0, 0.3, 0.01, 0.6, b0=5.0, horizon=20.0).verdict == "fail"
    with pytest.raises(ValueError):
        window_count(lengths, 10.0, 0.6, 0.01, 0.2)
    with pytest.raises(ValueError):
        window_count(lengths, 10.0, 0.3, 0.05, 0.2)
    with pytest.raises(CoverageError):
        window_count(lengths, 19.9, 0.3, 0.01, 0.2, horizon=20.0)


def test_eval_eta_single_line():
    spec = Spectrum.from_arrays([2.0], [3.0])
    s = 0.7 - 2j
    assert eval_eta(spec, s).value == pytest.approx(3 * cmath.exp(-2 * s), rel=1e-15)
    assert math.isnan(eval_eta(spec, s).tail_bound)


def test_eval_eta_order_independent():
    rng = np.random.default_rng(3)
    lam, a = random_spectrum_arrays(rng, 50)
    s = 0.3 + 4j
    v = eval_eta(Spectrum.from_arrays(lam, a), s).value
    z = a[::-1] * np.exp(-lam[::-1] * s)
    assert v == pytest.approx(complex(math.fsum(z.real), math.fsum(z.imag)), abs=1e-14 * np.abs(a).sum())


def test_eval_eta_domain():
    spec = Spectrum.from_arrays([2.0, 3.0], [1.0, 1.0])
    model = TailModel(growth=0.5, prefactor=1.0, C1=1.0, d1=0.4, x=3.0)
    assert model.abscissa == pytest.approx(0.3)
    with pytest.raises(DomainError):
        eval_eta(spec, 0.3, model)
    val = eval_eta(spec, 2.0, model)
    assert 0 < val.tail_bound < math.inf


@pytest.mark.parametrize("sigma", [0.3, -0.2])
def test_sigma_a_synthetic(sigma):
    lam = 0.5 * np.arange(1, 201)
    spec = Spectrum.from_arrays(lam, np.exp(sigma * lam) * (-1) ** np.arange(200))
    est = estimate_sigma_a(spec, width=1.0)
    assert est.value == pytest.approx(sigma, abs=0.05)
    assert not est.degenerate


def test_sigma_c_synthetic():
    lam = np.arange(1, 401, dtype=float)
    spec = Spectrum.from_arrays(lam, (-1.0) ** np.arange(400) * np.exp(-0.2 * lam))
    est = estimate_sigma_c(spec)
    assert est.valid
    assert est.value == pytest.approx(-0.2, abs=0.05)


def test_sigma_c_skips_zero_tails():
    spec = Spectrum.from_arrays([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, -1.0, 1.0])
    est = estimate_sigma_c(spec)
    assert est.skipped == (3,)


def test_sigma_a_needs_nonzero():
    with pytest.raises(InsufficientData):
        estimate_sigma_a(Spectrum.from_arrays([1.0, 2.0], [0.0, 0.0]))


def test_report_on_sweep(db8, spec8):
    from billiard_zeta.analysis import analysis_report
    from billiard_zeta.linearization import fit_det_bounds

    rep = analysis_report(spec8, db8, fit_det_bounds(db8.records))
    assert rep.h_used == pytest.approx(H_R6_M8, rel=1e-9)
    assert rep.onset == 8.0
    assert rep.relation_ok
    assert rep.sigma_c_est.value >= rep.sigma_a_est.value - rep.h_used - rep.slack
    assert set(rep.sigma_k_diag) == {1, 2}
    assert all(w.alpha >= rep.onset for w in rep.window_checks)
