"""Periodic billiard rays located as critical points of the polygonal length.

Each reflection point is parametrized by its polar angle on the obstacle,
``p_i = c_i + a_i (cos t_i, sin t_i)``, so the cyclic length
``L(t_1, ..., t_m) = sum |p_{i+1} - p_i|`` is a smooth function on the torus.
Its gradient vanishes exactly at billiard trajectories (equal angles of
incidence and reflection), and for dispersing scatterers the critical point
with a given itinerary is a nondegenerate minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GrazingError, InvalidConfiguration, OcclusionError, SolverFailure
from .geometry import Configuration
from .symbolic import Word, primitive_decomposition

DEFAULT_TOL = 1e-12
DESCENT_TOL = 1e-4
MAX_ITER = 200
GRAZING_COS = 1e-8


@dataclass(frozen=True)
class PeriodicOrbit:
    word: Word
    points: np.ndarray = field(repr=False)
    angles: np.ndarray = field(repr=False)
    tau: float
    tau_primitive: float
    m: int
    incidence_cosines: np.ndarray = field(repr=False)
    residual: float = 0.0
    iterations: int = 0

    @property
    def repetition(self) -> int:
        return self.m // len(primitive_decomposition(self.word).primitive)

    @property
    def is_primitive(self) -> bool:
        return self.repetition == 1


def _points(config: Configuration, word, angles) -> np.ndarray:
    idx = np.asarray(word, dtype=int) - 1
    c = config.centers[idx]
    a = config.radii[idx]
    return c + a[:, None] * np.column_stack([np.cos(angles), np.sin(angles)])


def orbit_length(points) -> float:
    """Cyclic polygonal length through ``points`` (closing segment included)."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    seg = np.roll(pts, -1, axis=0) - pts
    return math.fsum(np.hypot(seg[:, 0], seg[:, 1]))


def _segments(pts):
    d = np.roll(pts, -1, axis=0) - pts  # d[i] = p[i+1] - p[i]
    ell = np.hypot(d[:, 0], d[:, 1])
    return d / ell[:, None], ell


def _tangents(config, word, angles):
    idx = np.asarray(word, dtype=int) - 1
    a = config.radii[idx]
    return a[:, None] * np.column_stack([-np.sin(angles), np.cos(angles)])


def _gradient(config, word, angles):
    pts = _points(config, word, angles)
    u, _ = _segments(pts)
    t = _tangents(config, word, angles)
    # dL/dt_i = t_i . (u_{i-1} - u_i)
    return np.einsum("ij,ij->i", t, np.roll(u, 1, axis=0) - u)


def reflection_residual(config: Configuration, points, word) -> np.ndarray:
    """Tangential derivative of the total length at each reflection point.

    ``points`` must lie on the obstacles named by ``word`` (in order).  The
    result is zero exactly for billiard trajectories.
    """
    word = tuple(word)
    pts = np.asarray(points, dtype=float)
    idx = np.asarray(word, dtype=int) - 1
    rel = pts - config.centers[idx]
    angles = np.arctan2(rel[:, 1], rel[:, 0])
    u, _ = _segments(pts)
    t = _tangents(config, word, angles)
    return np.einsum("ij,ij->i", t, np.roll(u, 1, axis=0) - u)


def _hessian(config, word, angles):
    m = len(word)
    pts = _points(config, word, angles)
    idx = np.asarray(word, dtype=int) - 1
    u, ell = _segments(pts)
    t = _tangents(config, word, angles)
    radial = pts - config.centers[idx]  # second derivative of p_i is -radial_i
    eye = np.eye(2)
    H = np.zeros((m, m))
    g_prev = np.roll(u, 1, axis=0) - u
    for i in range(m):
        H[i, i] -= radial[i] @ g_prev[i]
    for i in range(m):
        j = (i + 1) % m
        Q = (eye - np.outer(u[i], u[i])) / ell[i]
        H[i, i] += t[i] @ Q @ t[i]
        H[j, j] += t[j] @ Q @ t[j]
        off = -(t[i] @ Q @ t[j])
        H[i, j] += off
        H[j, i] += off
    return H


def initial_angles(config: Configuration, word) -> np.ndarray:
    """Aim each reflection point at the midpoint of its neighbours' centres."""
    word = tuple(word)
    m = len(word)
    out = np.empty(m)
    for i, sym in enumerate(word):
        c = config.disk(sym).c
        target = 0.5 * (config.disk(word[i - 1]).c + config.disk(word[(i + 1) % m]).c)
        d = target - c
        out[i] = math.atan2(d[1], d[0])
    return out


def _coordinate_sweep(config, word, angles):
    """One cyclic pass of 1-D Newton steps on each angle."""
    m = len(word)
    idx = np.asarray(word, dtype=int) - 1
    centers = config.centers[idx]
    radii = config.radii[idx]
    for i in range(m):
        prev_p = centers[i - 1] + radii[i - 1] * np.array([math.cos(angles[i - 1]), math.sin(angles[i - 1])])
        j = (i + 1) % m
        next_p = centers[j] + radii[j] * np.array([math.cos(angles[j]), math.sin(angles[j])])
        for _ in range(2):
            th = angles[i]
            radial = radii[i] * np.array([math.cos(th), math.sin(th)])
            p = centers[i] + radial
            tan = np.array([-radial[1], radial[0]])
            a_vec = p - prev_p
            b_vec = next_p - p
            la, lb = math.hypot(*a_vec), math.hypot(*b_vec)
            ua, ub = a_vec / la, b_vec / lb
            g = tan @ (ua - ub)
            h = ((tan @ tan) - (tan @ ua) ** 2) / la + ((tan @ tan) - (tan @ ub) ** 2) / lb - radial @ (ua - ub)
            step = -g / h if h > 0 else -g / (radii[i] ** 2)
            angles[i] = th + max(-0.5, min(0.5, step))
    return angles


def _validate_orbit(config, word, pts):
    m = len(word)
    u, ell = _segments(pts)
    idx = np.asarray(word, dtype=int) - 1
    normals = (pts - config.centers[idx]) / config.radii[idx][:, None]
    cosines = np.einsum("ij,ij->i", normals, u)  # outgoing direction vs outward normal
    incoming = -np.einsum("ij,ij->i", normals, np.roll(u, 1, axis=0))
    if np.any(cosines < GRAZING_COS) or np.any(incoming < GRAZING_COS):
        raise GrazingError(f"grazing or inward reflection on {word}: min cos {min(cosines.min(), incoming.min()):.3g}")
    for i in range(m):
        a, b = pts[i], pts[(i + 1) % m]
        for k, disk in enumerate(config.disks):
            if k == idx[i] or k == idx[(i + 1) % m]:
                continue
            if _segment_point_distance(a, b, disk.c) <= disk.radius:
                raise OcclusionError(f"segment {i} of {word} crosses obstacle {k + 1}")
    return cosines


def _segment_point_distance(a, b, p) -> float:
    ab = b - a
    denom = ab @ ab
    s = 0.0 if denom == 0 else min(1.0, max(0.0, ((p - a) @ ab) / denom))
    q = a + s * ab
    return math.hypot(*(p - q))


def locate_orbit(config: Configuration, w, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER) -> PeriodicOrbit:
    """Find the periodic ray with itinerary ``w``.

    Cyclic coordinate descent from :func:`initial_angles` until the gradient
    norm drops below ``1e-4``, then full Newton steps on the length
    functional until it drops below ``tol``.  At most ``max_iter`` iterations
    (descent sweeps plus Newton steps) are spent.

    Raises
    ------
    SolverFailure
        No convergence within ``max_iter``; carries the last residual.
    GrazingError, OcclusionError
        The converged polygon is not an admissible billiard trajectory.
    """
    if not config.non_eclipse_ok:
        raise InvalidConfiguration("configuration violates the non-eclipse condition")
    word = w if isinstance(w, Word) else Word(w)
    if max(word.symbols) > config.r:
        raise ValueError(f"itinerary {word} uses more than {config.r} obstacles")
    sym = word.symbols
    angles = initial_angles(config, sym)
    it = 0
    res = float(np.linalg.norm(_gradient(config, sym, angles)))
    while res >= DESCENT_TOL and it < max_iter:
        angles = _coordinate_sweep(config, sym, angles)
        res = float(np.linalg.norm(_gradient(config, sym, angles)))
        it += 1
    while res > tol and it < max_iter:
        g = _gradient(config, sym, angles)
        H = _hessian(config, sym, angles)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError as exc:
            raise SolverFailure(f"singular Hessian for {word}", res) from exc
        trial = angles + step
        new_res = float(np.linalg.norm(_gradient(config, sym, trial)))
        it += 1
        if new_res >= res and res < 1e3 * tol:
            # at the rounding floor; further steps only shuffle noise
            break
        angles, res = trial, new_res
    if res <= tol and it < max_iter:
        # one polishing step; kept only if it helps
        trial = angles + np.linalg.solve(_hessian(config, sym, angles), -_gradient(config, sym, angles))
        trial_res = float(np.linalg.norm(_gradient(config, sym, trial)))
        if trial_res < res:
            angles, res = trial, trial_res
            it += 1
    if res > tol:
        raise SolverFailure(f"no convergence for {word} after {it} iterations (residual {res:.3e})", res)
    angles = np.mod(angles + math.pi, 2 * math.pi) - math.pi
    pts = _points(config, sym, angles)
    cosines = _validate_orbit(config, sym, pts)
    tau = orbit_length(pts)
    k = primitive_decomposition(word).repetition
    return PeriodicOrbit(word=word, points=pts, angles=angles, tau=tau, tau_primitive=tau / k,
                         m=len(sym), incidence_cosines=cosines, residual=res, iterations=it)


def orbit_from_angles(config: Configuration, word, angles, residual=None, iterations: int = 0) -> PeriodicOrbit:
    """Rebuild an orbit record from stored boundary angles (no solving)."""
    word = word if isinstance(word, Word) else Word.parse(word) if isinstance(word, str) else Word(word)
    angles = np.asarray(angles, dtype=float)
    pts = _points(config, word.symbols, angles)
    cosines = _validate_orbit(config, word.symbols, pts)
    tau = orbit_length(pts)
    k = primitive_decomposition(word).repetition
    if residual is None:
        residual = float(np.linalg.norm(reflection_residual(config, pts, word.symbols)))
    return PeriodicOrbit(word=word, points=pts, angles=angles, tau=tau, tau_primitive=tau / k,
                         m=len(word), incidence_cosines=cosines, residual=residual, iterations=iterations)


def solve_all(config: Configuration, words, tol: float = DEFAULT_TOL, workers: int = 1) -> list[PeriodicOrbit]:
    """Locate every word; results follow the input order."""
    words = list(words)
    if workers <= 1 or len(words) < 2:
        return [locate_orbit(config, w, tol) for w in words]
    from concurrent.futures import ProcessPoolExecutor
    from functools import partial

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(partial(locate_orbit, config, tol=tol), words, chunksize=8))
