import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from billiard_zeta.database import build_database
from billiard_zeta.errors import CoverageError
from billiard_zeta.geometry import Configuration, Disk
from billiard_zeta.spectrum import ProbeParams, Spectrum, build_spectrum, probe_fd, rho

SQRT3 = math.sqrt(3.0)
A_8 = 2.449489742783178  # 3 * 8 / sqrt(96)
A_TRIANGLE = -0.6336640797397353  # two orientations of the triangle ray


@pytest.fixture(scope="module")
def db4(r6):
    return build_database(r6, 4)


def test_first_lines(spec10):
    first = spec10.lines[0]
    assert first.lam == pytest.approx(8.0, abs=1e-12)
    assert first.a == pytest.approx(A_8, rel=1e-12)
    assert first.a == pytest.approx(3 * 8 / math.sqrt(96), rel=1e-12)
    assert first.n_contributors == 3
    second = spec10.lines[1]
    assert second.lam == pytest.approx(3 * (6 - SQRT3), abs=1e-12)
    assert second.a == pytest.approx(A_TRIANGLE, rel=1e-10)
    assert {c.word for c in second.contributors} == {"123", "132"}


def test_horizon_below_first_length(db4):
    assert len(build_spectrum(db4, 7.5)) == 0
    assert len(build_spectrum(db4, 8.0)) == 1


def test_coverage_refused(db4):
    with pytest.raises(CoverageError):
        build_spectrum(db4, db4.horizon + 1.0)
    spec = build_spectrum(db4, db4.horizon)
    with pytest.raises(CoverageError):
        spec.truncated(db4.horizon + 1.0)


def test_coefficient_bounded_by_mass(spec10):
    for ln in spec10.lines:
        assert abs(ln.a) <= ln.abs_mass * (1 + 1e-15)
        assert ln.a == pytest.approx(math.fsum(c.term for c in ln.contributors), rel=1e-15)
        assert all(abs(c.tau - ln.lam) <= spec10.group_tol for c in ln.contributors)


def test_lines_strictly_increasing(spec10):
    lam = spec10.lambdas
    assert np.all(np.diff(lam) > spec10.group_tol)
    assert lam[-1] <= spec10.x_max


def test_repetitions_included(spec10):
    reps = {(r.word, r.repetition) for r in spec10.rays}
    assert ("12", 2) in reps and ("12", 5) in reps
    assert ("1212", 1) not in reps  # the same ray as ("12", 2)
    line16 = min(spec10.lines, key=lambda ln: abs(ln.lam - 16.0))
    assert {(c.word, c.repetition) for c in line16.contributors} >= {("12", 2), ("13", 2), ("23", 2)}


def test_truncation_matches_smaller_sweep(db8, spec10):
    small = build_spectrum(db8, db8.horizon)
    cut = spec10.truncated(db8.horizon)
    assert len(small) == len(cut)
    assert np.allclose(small.lambdas, cut.lambdas, rtol=0, atol=1e-10)
    assert np.allclose(small.coeffs, cut.coeffs, rtol=1e-9, atol=1e-15)


def test_from_arrays_validation():
    Spectrum.from_arrays([1.0, 2.0], [1.0, -1.0])
    with pytest.raises(ValueError):
        Spectrum.from_arrays([2.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        Spectrum.from_arrays([0.0, 1.0], [1.0, 1.0])


def test_rho_shape():
    assert rho(0.0) == pytest.approx(math.e)
    assert rho(1.0) == 0.0 and rho(-1.3) == 0.0
    t = np.linspace(-0.5, 0.5, 101)
    assert np.all(rho(t) > 1.0)
    assert np.allclose(rho(t), rho(-t))


def test_probe_on_first_line(db8):
    res = probe_fd(db8, ProbeParams(8.0, 10.0))
    assert res.value == pytest.approx(24 / math.sqrt(96) * math.e, rel=1e-12)
    assert res.n_rays == 3


def test_probe_in_gap_is_zero(db8):
    assert probe_fd(db8, ProbeParams(10.0, 10.0)).value == 0.0


def test_probe_preconditions(db8):
    with pytest.raises(ValueError):
        probe_fd(db8, ProbeParams(2.0, 10.0))
    with pytest.raises(ValueError):
        probe_fd(db8, ProbeParams(8.0, 0.5))
    with pytest.raises(CoverageError):
        probe_fd(db8, ProbeParams(db8.horizon, 10.0))


def test_relabelling_invariance(r6):
    perm = r6.permuted([2, 0, 1])
    a = build_spectrum(build_database(r6, 6), 28.0)
    b = build_spectrum(build_database(perm, 6), 28.0)
    assert np.allclose(a.lambdas, b.lambdas, atol=1e-10)
    assert np.allclose(a.coeffs, b.coeffs, rtol=1e-9)


@settings(max_examples=5, deadline=None)
@given(rot=st.floats(0, 2 * math.pi), dx=st.floats(-30, 30), dy=st.floats(-30, 30))
def test_coefficients_invariant_under_rigid_motion(rot, dx, dy):
    base = Configuration((Disk((0, 0), 1.0), Disk((7, 0.5), 1.4), Disk((3, 6), 0.7)))
    moved = base.transformed(rot, (dx, dy))
    x = 5 * base.d0
    a = build_spectrum(build_database(base, 4), x)
    b = build_spectrum(build_database(moved, 4), x)
    assert len(a) == len(b)
    assert np.allclose(a.lambdas, b.lambdas, atol=1e-9)
    assert np.allclose(a.coeffs, b.coeffs, rtol=1e-8)
