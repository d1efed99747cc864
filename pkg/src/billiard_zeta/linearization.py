"""Linearized Poincare maps of periodic rays and their exponential envelope.

Transverse Jacobi coordinates ``(xi, xi')`` are carried along the ray.  A
free flight of length ``L`` acts by ``[[1, L], [0, 1]]``; a reflection off a
disk of curvature ``k`` at incidence ``phi`` acts by
``-[[1, 0], [2 k / cos phi, 1]]``.  The overall minus sign records that a
mirror reverses the orientation of the transverse frame, so a ray with an odd
number of reflections has negative multipliers.  Only ``|det(Id - P)|``
enters the zeta function, and it does depend on that sign when ``m`` is odd
(``|tr P| + 2`` instead of ``|tr P| - 2``); the ray-traced oracle below
settles it independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData, InternalConsistencyError, OracleFailure
from .geometry import Configuration
from .orbits import PeriodicOrbit

SYMPLECTIC_RTOL = 1e-8


@dataclass(frozen=True)
class Monodromy:
    matrix: np.ndarray
    trace: float
    det_id_minus: float

    @property
    def eigenvalue(self) -> float:
        """Expanding multiplier (signed, ``|value| > 1``)."""
        tr = self.trace
        root = math.sqrt(tr * tr - 4.0)
        return 0.5 * (tr + math.copysign(root, tr))

    @classmethod
    def from_matrix(cls, matrix) -> Monodromy:
        matrix = np.asarray(matrix, dtype=float)
        tr = float(np.trace(matrix))
        ad = matrix[0, 0] * matrix[1, 1]
        bc = matrix[0, 1] * matrix[1, 0]
        det = float(ad - bc)
        # relative to the size of the cancelling products
        if abs(det - 1.0) > SYMPLECTIC_RTOL * max(1.0, abs(ad), abs(bc)):
            raise InternalConsistencyError(f"monodromy is not symplectic: det = {det!r}")
        if not abs(tr) > 2.0:
            raise InternalConsistencyError(f"monodromy is not hyperbolic: trace = {tr!r}")
        return cls(matrix, tr, abs(2.0 - tr))

    def power(self, k: int) -> Monodromy:
        """Monodromy of the ``k``-fold repetition (matrix power)."""
        return Monodromy.from_matrix(np.linalg.matrix_power(self.matrix, k))


def flight(length: float) -> np.ndarray:
    return np.array([[1.0, length], [0.0, 1.0]])


def reflection(curvature: float, cos_phi: float, sign: float = -1.0) -> np.ndarray:
    return sign * np.array([[1.0, 0.0], [2.0 * curvature / cos_phi, 1.0]])


def poincare_map(config: Configuration, orbit: PeriodicOrbit) -> Monodromy:
    """Monodromy matrix of ``orbit`` starting just after reflection 0.

    ``P = R_0 F_{m-1} ... R_2 F_1 R_1 F_0`` where ``F_i`` is the flight from
    reflection ``i`` to ``i + 1``.
    """
    pts = orbit.points
    m = len(pts)
    seg = np.roll(pts, -1, axis=0) - pts
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    P = np.eye(2)
    for i in range(m):
        j = (i + 1) % m
        kappa = config.disk(orbit.word[j]).curvature
        P = reflection(kappa, orbit.incidence_cosines[j]) @ flight(lengths[i]) @ P
    return Monodromy.from_matrix(P)


# ----------------------------------------------------------------------------
# Finite-difference oracle: differentiate the ray-traced billiard map.


def _unit(theta):
    return np.array([math.cos(theta), math.sin(theta)])


def _bounce(config: Configuration, src: int, dst: int, s: float, p: float):
    """Billiard map in Birkhoff coordinates from obstacle ``src`` to ``dst``.

    ``s`` is counter-clockwise arclength on ``src`` and ``p`` the sine of the
    outgoing angle measured from the outward normal (positive towards the
    counter-clockwise tangent).
    """
    d_src = config.disk(src)
    theta = s / d_src.radius
    n = _unit(theta)
    t = np.array([-n[1], n[0]])
    if not -1.0 < p < 1.0:
        raise OracleFailure("perturbed direction leaves the obstacle tangentially")
    v = math.sqrt(1.0 - p * p) * n + p * t
    q = d_src.c + d_src.radius * n
    hit = _first_hit(config, q, v, exclude=src)
    if hit is None or hit[0] != dst:
        raise OracleFailure(f"perturbed ray from {src} misses obstacle {dst}")
    _, dist = hit
    q2 = q + dist * v
    d_dst = config.disk(dst)
    n2 = (q2 - d_dst.c) / d_dst.radius
    v2 = v - 2.0 * (v @ n2) * n2
    theta2 = math.atan2(n2[1], n2[0])
    t2 = np.array([-n2[1], n2[0]])
    return d_dst.radius * theta2, float(v2 @ t2)


def _first_hit(config, q, v, exclude):
    best = None
    for k, disk in enumerate(config.disks, start=1):
        if k == exclude:
            continue
        w = q - disk.c
        b = w @ v
        c = w @ w - disk.radius ** 2
        disc = b * b - c
        if disc <= 0:
            continue
        dist = -b - math.sqrt(disc)
        if dist > 0 and (best is None or dist < best[1]):
            best = (k, dist)
    return best


def _wrap_s(ds: float, radius: float) -> float:
    period = 2.0 * math.pi * radius
    return (ds + 0.5 * period) % period - 0.5 * period


def _birkhoff_state(orbit: PeriodicOrbit, i: int):
    m = orbit.m
    pts = orbit.points
    d = pts[(i + 1) % m] - pts[i]
    v = d / math.hypot(*d)
    theta = float(orbit.angles[i])
    n = _unit(theta)
    t = np.array([-n[1], n[0]])
    return theta, float(v @ t)


def _central_jacobian(fn, x0, step, scales):
    J = np.empty((2, 2))
    base = np.asarray(x0, dtype=float)
    for col in range(2):
        h = step * scales[col]
        e = np.zeros(2)
        e[col] = h
        plus = np.asarray(fn(base + e))
        minus = np.asarray(fn(base - e))
        J[:, col] = (plus - minus) / (2.0 * h)
    return J


def _richardson(fn, x0, step, scales, richardson):
    coarse = _central_jacobian(fn, x0, step, scales)
    if not richardson:
        return coarse
    fine = _central_jacobian(fn, x0, step / 2.0, scales)
    return (4.0 * fine - coarse) / 3.0


def fd_jacobian_oracle(config: Configuration, orbit: PeriodicOrbit, step: float = 1e-6,
                       richardson: bool = True, per_bounce: bool = True) -> np.ndarray:
    """Return-map Jacobian in Birkhoff coordinates by central differences.

    With ``per_bounce`` (default) each single-bounce map is differentiated at
    its point of the orbit and the factors are multiplied; otherwise the full
    ``m``-bounce return map is differentiated at once, which loses accuracy
    for strongly unstable rays.  Steps are ``step * radius`` in arclength and
    ``step`` in ``p``.

    Raises
    ------
    OracleFailure
        A perturbed ray escaped the itinerary; retry with a smaller step.
    """
    word = orbit.word.symbols
    m = len(word)
    states = [_birkhoff_state(orbit, i) for i in range(m)]

    def one(i):
        src, dst = word[i], word[(i + 1) % m]
        r_src = config.disk(src).radius
        r_dst = config.disk(dst).radius
        s_ref = r_dst * states[(i + 1) % m][0]

        def fn(x):
            s2, p2 = _bounce(config, src, dst, x[0], x[1])
            return np.array([s_ref + _wrap_s(s2 - s_ref, r_dst), p2])

        x0 = np.array([r_src * states[i][0], states[i][1]])
        return fn, x0, (r_src, 1.0)

    if per_bounce:
        J = np.eye(2)
        for i in range(m):
            fn, x0, scales = one(i)
            J = _richardson(fn, x0, step, scales, richardson) @ J
        return J

    r0 = config.disk(word[0]).radius
    s_ref = r0 * states[0][0]

    def full(x):
        s, p = x
        for i in range(m):
            s, p = _bounce(config, word[i], word[(i + 1) % m], s, p)
        return np.array([s_ref + _wrap_s(s - s_ref, r0), p])

    x0 = np.array([s_ref, states[0][1]])
    return _richardson(full, x0, step, (r0, 1.0), richardson)


# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class DetBoundsFit:
    C1: float
    d1: float
    d2: float
    lower_attained_by: str = ""
    upper_attained_by: str = ""

    def lower(self, tau):
        return self.C1 * np.exp(self.d1 * np.asarray(tau))

    def upper(self, tau):
        return np.exp(self.d2 * np.asarray(tau))

    def holds(self, tau: float, det: float) -> bool:
        # log space; the fit is tight so allow a rounding ulp
        ld = math.log(det)
        return (math.log(self.C1) + self.d1 * tau <= ld * (1 + 1e-14) + 1e-14
                and ld <= self.d2 * tau * (1 + 1e-14) + 1e-14)


def lower_hull(x, y, xtol: float | None = None):
    """Indices of the lower convex hull of points sorted by ``x``.

    Abscissae within ``xtol`` (default ``1e-9 max|x|``) count as equal and
    only the lowest such point is kept.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if xtol is None:
        xtol = 1e-9 * float(np.max(np.abs(x))) if len(x) else 0.0
    order = np.lexsort((y, x))
    kept: list[int] = []
    for i in order:
        if kept and x[i] - x[kept[-1]] <= xtol:
            if y[i] < y[kept[-1]]:
                kept[-1] = i
            continue
        kept.append(i)
    hull: list[int] = []
    for i in kept:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _fit_row(rec):
    if hasattr(rec, "det_id_minus"):
        return rec.tau, rec.det_id_minus, rec.m, f"{rec.word}^{getattr(rec, 'repetition', 1)}"
    orbit, mono = rec
    return orbit.tau, mono.det_id_minus, orbit.m, str(orbit.word)


def fit_det_bounds(records, min_orbits: int = 10, min_lengths: int = 3) -> DetBoundsFit:
    """Fit ``C1 exp(d1 tau) <= |det(Id - P)| <= exp(d2 tau)`` to a set of rays.

    ``records`` holds ``(orbit, monodromy)`` pairs or ray objects carrying
    ``tau``, ``det_id_minus``, ``m`` and ``word``.  ``d2`` is the
    largest ``log|det| / tau`` (tight upper bound).  ``d1`` is the smallest
    positive edge slope of the lower convex envelope of ``(tau, log|det|)``
    and ``C1`` makes the lower bound tight.  A tiny ``C1`` is reported, not
    rejected.
    """
    rows = [_fit_row(rec) for rec in records]
    if len(rows) < min_orbits:
        raise InsufficientData(f"need at least {min_orbits} orbits, got {len(rows)}")
    if len({m for _, _, m, _ in rows}) < min_lengths:
        raise InsufficientData(f"need at least {min_lengths} distinct word lengths")
    tau = np.array([t for t, _, _, _ in rows])
    logdet = np.log(np.array([d for _, d, _, _ in rows]))
    labels = [w for _, _, _, w in rows]
    rates = logdet / tau
    iu = int(np.argmax(rates))
    d2 = float(rates[iu])
    hull = lower_hull(tau, logdet)
    slopes = [(logdet[b] - logdet[a]) / (tau[b] - tau[a]) for a, b in zip(hull, hull[1:])]
    positive = [s for s in slopes if s > 0]
    d1 = float(min(positive)) if positive else float(rates.min())
    if not d1 > 0:
        raise InternalConsistencyError("no positive lower growth rate; rays are not hyperbolic")
    gap = logdet - d1 * tau
    il = int(np.argmin(gap))
    return DetBoundsFit(C1=float(math.exp(gap[il])), d1=d1, d2=d2,
                        lower_attained_by=labels[il], upper_attained_by=labels[iu])
