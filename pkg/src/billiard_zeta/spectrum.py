"""Dirichlet-series data of the zeta function and the bump-function probe.

Every oriented ray ``g`` contributes ``(-1)^m(g) tau#(g) / |det(Id - P_g)|^(1/2)``
at frequency ``tau(g)``.  Rays of equal length are merged into one line, so
a line's coefficient is the sum of its contributors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CoverageError

#: default grouping tolerance, in units of ``d0``
GROUP_RTOL = 1e-9


@dataclass(frozen=True)
class Contributor:
    word: str
    repetition: int
    tau: float
    term: float


@dataclass(frozen=True)
class SpectrumLine:
    lam: float
    a: float
    contributors: tuple[Contributor, ...] = ()

    @property
    def n_contributors(self) -> int:
        return len(self.contributors)

    @property
    def abs_mass(self) -> float:
        """``sum |term|`` over contributors, an upper bound for ``|a|``."""
        return math.fsum(abs(c.term) for c in self.contributors) if self.contributors else abs(self.a)


@dataclass(frozen=True)
class Ray:
    """One oriented ray (primitive or a repetition) inside the horizon."""

    word: str
    repetition: int
    tau: float
    tau_primitive: float
    m: int
    det_id_minus: float

    @property
    def term(self) -> float:
        sign = -1.0 if self.m % 2 else 1.0
        return sign * self.tau_primitive / math.sqrt(self.det_id_minus)


@dataclass(frozen=True, eq=False)
class Spectrum:
    lines: tuple[SpectrumLine, ...]
    x_max: float
    group_tol: float
    rays: tuple[Ray, ...] = ()
    warnings: tuple[str, ...] = ()
    d0: float | None = None

    def __post_init__(self):
        lam = [ln.lam for ln in self.lines]
        if any(b <= a for a, b in zip(lam, lam[1:])):
            raise ValueError("frequencies must be strictly increasing")
        if lam and lam[0] <= 0:
            raise ValueError("frequencies must be positive")

    @classmethod
    def from_arrays(cls, lambdas, coeffs, x_max=None, group_tol=0.0) -> Spectrum:
        """Synthetic spectrum from bare ``(lambda_n, a_n)`` arrays."""
        lam = np.asarray(lambdas, dtype=float)
        a = np.asarray(coeffs, dtype=float)
        lines = tuple(SpectrumLine(float(x), float(y)) for x, y in zip(lam, a))
        xm = float(lam[-1]) if x_max is None and len(lam) else x_max
        return cls(lines, xm, group_tol)

    def __len__(self) -> int:
        return len(self.lines)

    @cached_property
    def lambdas(self) -> np.ndarray:
        return np.array([ln.lam for ln in self.lines])

    @cached_property
    def coeffs(self) -> np.ndarray:
        return np.array([ln.a for ln in self.lines])

    @cached_property
    def ray_lengths(self) -> np.ndarray:
        return np.sort(np.array([r.tau for r in self.rays]))

    def with_lines(self, lines) -> Spectrum:
        return Spectrum(tuple(lines), self.x_max, self.group_tol, self.rays, self.warnings, self.d0)

    def truncated(self, x: float) -> Spectrum:
        """The same data with horizon ``x <= x_max``."""
        if x > self.x_max:
            raise CoverageError(f"cannot extend a spectrum from {self.x_max} to {x}")
        return Spectrum(tuple(ln for ln in self.lines if ln.lam <= x), x, self.group_tol,
                        tuple(r for r in self.rays if r.tau <= x), self.warnings, self.d0)


def expand_rays(records, x_max: float) -> list[Ray]:
    """Primitive rays and all their repetitions with ``tau <= x_max``.

    Repetition monodromies are matrix powers of the primitive one; records of
    non-primitive words are skipped (they are the same rays).
    """
    rays = []
    for orbit, mono in records:
        if not orbit.is_primitive:
            continue
        word = str(orbit.word)
        k = 1
        while k * orbit.tau_primitive <= x_max:
            det = mono.det_id_minus if k == 1 else mono.power(k).det_id_minus
            rays.append(Ray(word, k, k * orbit.tau_primitive, orbit.tau_primitive, k * orbit.m, det))
            k += 1
    rays.sort(key=lambda r: (r.tau, r.word, r.repetition))
    return rays


def build_spectrum(db, x_max: float, group_tol: float | None = None) -> Spectrum:
    """Assemble frequencies ``lambda_n`` and coefficients ``a_n`` up to ``x_max``.

    ``db`` is an :class:`~billiard_zeta.database.OrbitDatabase`.  Rays whose
    lengths differ by at most ``group_tol`` (default ``1e-9 d0``) share a
    line, placed at the ``|term|``-weighted mean length.  Neighbouring lines
    closer than ``10 group_tol`` are recorded in ``warnings``.
    """
    if x_max > db.horizon:
        raise CoverageError(f"x_max = {x_max} exceeds the complete horizon {db.horizon} "
                            f"of an m_max = {db.m_max} sweep")
    d0 = db.config.d0
    if group_tol is None:
        group_tol = GROUP_RTOL * d0
    rays = expand_rays(db.records, x_max)
    groups: list[list[Ray]] = []
    for ray in rays:
        if groups and ray.tau - groups[-1][-1].tau <= group_tol:
            groups[-1].append(ray)
        else:
            groups.append([ray])
    lines = []
    warnings = []
    for g in groups:
        terms = [r.term for r in g]
        weights = [abs(t) for t in terms]
        wsum = math.fsum(weights)
        if wsum > 0:
            lam = math.fsum(w * r.tau for w, r in zip(weights, g)) / wsum
        else:
            lam = math.fsum(r.tau for r in g) / len(g)
        contributors = tuple(Contributor(r.word, r.repetition, r.tau, t) for r, t in zip(g, terms))
        lines.append(SpectrumLine(lam, math.fsum(terms), contributors))
    for prev, nxt in zip(lines, lines[1:]):
        gap = nxt.lam - prev.lam
        if gap < 10 * group_tol:
            warnings.append(f"ambiguous grouping: lines at {prev.lam!r} and {nxt.lam!r} differ by {gap:.3e}")
    return Spectrum(tuple(lines), float(x_max), float(group_tol), tuple(rays), tuple(warnings), d0)


# ----------------------------------------------------------------------------
# Bump-function probe


def rho(t):
    """Even bump supported in ``[-1, 1]``: ``e^2 exp(-1 / (1 - t^2))``.

    ``rho(0) = e`` and ``rho(t) > 1`` for ``|t| <= 1/2``.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(2.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ProbeParams:
    ell: float
    m_scale: float

    def validate(self, d0: float) -> None:
        if self.ell < d0:
            raise ValueError(f"probe centre {self.ell} must be at least d0 = {d0}")
        if self.m_scale < max(1.0, 1.0 / d0):
            raise ValueError(f"probe scale {self.m_scale} must be at least max(1, 1/d0)")


@dataclass(frozen=True)
class ProbeResult:
    value: float
    n_rays: int
    support: tuple[float, float] = field(default=(0.0, 0.0))


def probe_fd(db, params: ProbeParams) -> ProbeResult:
    """Pair the ray distribution with ``rho(m_scale (t - ell))``.

    Sums ``(-1)^m tau# |det(Id - P)|^(-1/2) rho(m_scale (tau - ell))`` over
    every ray, repetitions included.
    """
    params.validate(db.config.d0)
    lo = params.ell - 1.0 / params.m_scale
    hi = params.ell + 1.0 / params.m_scale
    if hi >= db.horizon:
        raise CoverageError(f"probe support [{lo}, {hi}] reaches past the horizon {db.horizon}")
    rays = [r for r in expand_rays(db.records, hi) if r.tau > lo]
    terms = [r.term * rho(params.m_scale * (r.tau - params.ell)) for r in rays]
    return ProbeResult(math.fsum(terms), sum(1 for t in terms if t != 0.0), (lo, hi))
