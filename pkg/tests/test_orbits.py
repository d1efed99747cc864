import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from billiard_zeta.errors import GrazingError, InvalidConfiguration, SolverFailure
from billiard_zeta.geometry import equilateral
from billiard_zeta.orbits import (
    locate_orbit,
    orbit_from_angles,
    orbit_length,
    reflection_residual,
    solve_all,
)
from billiard_zeta.symbolic import Word, enumerate_words
from oracles import mp_orbit_length

SQRT3 = math.sqrt(3.0)
TAU_1213 = 16.633058970336606  # frozen; mpmath coordinate descent agrees to 4e-15


def test_bounce_orbit(r6):
    o = locate_orbit(r6, Word.parse("12"))
    assert o.tau == pytest.approx(8.0, abs=1e-12)
    assert np.allclose(o.points, [[1, 0], [5, 0]], atol=1e-12)
    assert o.m == 2 and o.is_primitive
    assert np.allclose(o.incidence_cosines, 1.0)


def test_triangle_orbit(r6):
    o = locate_orbit(r6, Word.parse("123"))
    assert o.tau == pytest.approx(3 * (6 - SQRT3), abs=1e-12)
    centroid = r6.centers.mean(axis=0)
    unit = (centroid - r6.centers) / np.linalg.norm(centroid - r6.centers, axis=1)[:, None]
    assert np.allclose(o.points, r6.centers + unit, atol=1e-10)


def test_analytic_triangle_points_have_zero_residual(r6):
    centroid = r6.centers.mean(axis=0)
    d = centroid - r6.centers
    pts = r6.centers + d / np.linalg.norm(d, axis=1)[:, None]
    assert np.linalg.norm(reflection_residual(r6, pts, (1, 2, 3))) <= 1e-12
    assert orbit_length(pts) == pytest.approx(3 * (6 - SQRT3), abs=1e-12)


def test_1213_against_high_precision_descent(r6):
    o = locate_orbit(r6, Word.parse("1213"))
    ref = mp_orbit_length([tuple(c) for c in r6.centers], list(r6.radii), (1, 2, 1, 3))
    assert o.tau == pytest.approx(ref, abs=1e-9)
    assert o.tau == pytest.approx(TAU_1213, abs=1e-12)


def test_orbit_length_examples():
    assert orbit_length(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)) == pytest.approx(4.0)
    assert orbit_length(np.array([[0, 0], [4, 0]], float)) == pytest.approx(8.0)


def test_residual_detects_perturbation(r6):
    o = locate_orbit(r6, Word.parse("12"))
    assert o.residual <= 1e-10
    bad = orbit_from_angles(r6, o.word, o.angles + np.array([1e-3, 0.0]))
    assert bad.residual > 1e-5


def test_every_word_up_to_8_solves(db8, r6):
    assert len(db8) == len(enumerate_words(3, 8))
    for rec in db8:
        o = rec.orbit
        assert o.residual <= 1e-12
        assert o.tau >= o.m * r6.d0
        assert np.all(o.incidence_cosines >= 1e-8)
        radii = np.linalg.norm(o.points - r6.centers[np.array(o.word.symbols) - 1], axis=1)
        assert np.allclose(radii, 1.0, atol=1e-12)
        assert o.tau_primitive * o.repetition == pytest.approx(o.tau, rel=1e-15)


def test_reversal_and_rotation(r6):
    for text in ("1213", "12123", "121323"):
        w = Word.parse(text)
        o = locate_orbit(r6, w)
        rev = locate_orbit(r6, w.reversed())
        assert rev.tau == pytest.approx(o.tau, abs=1e-9)
        # the reversed orbit visits the same point set
        assert sorted(map(tuple, np.round(rev.points, 9))) == sorted(map(tuple, np.round(o.points, 9)))
        rot = locate_orbit(r6, w.symbols[1:] + w.symbols[:1])
        assert rot.tau == o.tau
        assert np.array_equal(rot.points, o.points)


def test_repetition_length(r6):
    for prim in ("12", "123", "1213"):
        w = Word.parse(prim)
        o = locate_orbit(r6, w)
        for k in (2, 3):
            ok = locate_orbit(r6, w.symbols * k)
            assert ok.tau == pytest.approx(k * o.tau, abs=1e-9)
            assert ok.tau_primitive == pytest.approx(o.tau, abs=1e-9)
            assert ok.repetition == k


def test_eclipsed_configuration_rejected():
    with pytest.raises(InvalidConfiguration):
        locate_orbit(equilateral(2.2), Word.parse("12"))


def test_symbol_out_of_range(r6):
    with pytest.raises(ValueError):
        locate_orbit(r6, Word.parse("14"))


def test_iteration_cap_reports_residual(r6):
    with pytest.raises(SolverFailure) as info:
        locate_orbit(r6, Word.parse("12123"), max_iter=1)
    assert info.value.residual > 0


def test_inward_polygon_is_grazing_error(r6):
    with pytest.raises(GrazingError):
        orbit_from_angles(r6, "12", [math.pi, 0.0])


def test_parallel_sweep_matches_serial(r6):
    words = enumerate_words(3, 6)
    serial = solve_all(r6, words)
    parallel = solve_all(r6, words, workers=2)
    assert [o.tau for o in serial] == [o.tau for o in parallel]


@settings(max_examples=10, deadline=None)
@given(rot=st.floats(0, 2 * math.pi), dx=st.floats(-50, 50), dy=st.floats(-50, 50),
       word=st.sampled_from(["12", "123", "1213", "12123", "121323"]))
def test_length_invariant_under_rigid_motion(rot, dx, dy, word):
    base = equilateral(6.0)
    moved = base.transformed(rot, (dx, dy))
    a = locate_orbit(base, Word.parse(word)).tau
    b = locate_orbit(moved, Word.parse(word)).tau
    assert b == pytest.approx(a, rel=1e-11)
