"""Planar disk configurations and the non-eclipse test.

The convex hull of two disks is the union of the interpolated disks
``(1 - t) D_i + t D_j``, so the distance from a point to the hull is the
minimum over ``t`` of ``|p - c(t)| - r(t)``.  That function is convex in ``t``
and its minimizer has a closed form, which reduces to the point-segment
distance when both radii agree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfiguration

#: Configurations with a hull clearance below ``CLEARANCE_RTOL * d0`` fail.
CLEARANCE_RTOL = 1e-9


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        cx, cy = (float(v) for v in self.center)
        object.__setattr__(self, "center", (cx, cy))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise InvalidConfiguration(f"disk radius must be positive, got {self.radius}")

    @property
    def c(self) -> np.ndarray:
        return np.array(self.center)

    @property
    def curvature(self) -> float:
        return 1.0 / self.radius

    def point(self, theta: float) -> np.ndarray:
        return np.array([self.center[0] + self.radius * math.cos(theta),
                         self.center[1] + self.radius * math.sin(theta)])


def boundary_distance(a: Disk, b: Disk) -> float:
    return math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1]) - a.radius - b.radius


def min_separation(disks) -> float:
    """Smallest boundary distance over all pairs of disks.

    Accepts a :class:`Configuration` or a sequence of :class:`Disk`.
    Raises :class:`InvalidConfiguration` if two disks touch or overlap.
    """
    disks = getattr(disks, "disks", disks)
    if len(disks) < 2:
        raise InvalidConfiguration("need at least two disks")
    best = math.inf
    for (i, a), (j, b) in itertools.combinations(enumerate(disks), 2):
        d = boundary_distance(a, b)
        if not d > 0:
            raise InvalidConfiguration(f"disks {i + 1} and {j + 1} overlap or touch (distance {d:g})")
        best = min(best, d)
    return best


def hull_distance(p, a: Disk, b: Disk) -> float:
    """Signed distance from point ``p`` to ``convex hull(a U b)``.

    Negative values mean ``p`` lies inside the hull.
    """
    p = np.asarray(p, dtype=float)
    ca, cb = a.c, b.c
    e = cb - ca
    length = float(np.hypot(*e))
    if length == 0.0:
        return float(np.hypot(*(p - ca))) - max(a.radius, b.radius)
    axis = e / length
    rel = p - ca
    s = float(rel @ axis)
    rho = abs(float(rel[0] * axis[1] - rel[1] * axis[0]))
    beta = (b.radius - a.radius) / length
    # stationary point of |p - c(x)| - r(x) along the axis, clamped to the segment
    if abs(beta) < 1.0:
        x = s + beta * rho / math.sqrt(1.0 - beta * beta)
    else:
        x = length if beta > 0 else 0.0
    x = min(max(x, 0.0), length)
    t = x / length
    return math.hypot(s - x, rho) - ((1.0 - t) * a.radius + t * b.radius)


@dataclass(frozen=True)
class TripleClearance:
    i: int
    j: int
    k: int
    clearance: float

    @property
    def ok(self) -> bool:
        return self.clearance > 0


@dataclass(frozen=True)
class ValidationReport:
    triples: tuple[TripleClearance, ...]
    d0: float
    passed: bool

    @property
    def min_clearance(self) -> float:
        return min(t.clearance for t in self.triples)

    def failures(self):
        return [t for t in self.triples if t.clearance <= CLEARANCE_RTOL * self.d0]


def validate_non_eclipse(config) -> ValidationReport:
    """Check that no disk meets the convex hull of two others.

    Every ordered triple ``(i, j, k)`` with ``i != k`` and ``j != k`` is
    reported with the clearance ``dist(D_k, hull(D_i U D_j))`` (1-based
    labels).  The configuration passes when every clearance exceeds
    ``CLEARANCE_RTOL * d0``.
    """
    disks = getattr(config, "disks", config)
    if len(disks) < 3:
        raise InvalidConfiguration(f"need at least 3 disks, got {len(disks)}")
    d0 = min_separation(disks)
    n = len(disks)
    triples = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if k == i or k == j:
                    continue
                c = hull_distance(disks[k].c, disks[i], disks[j]) - disks[k].radius
                triples.append(TripleClearance(i + 1, j + 1, k + 1, c))
    passed = all(t.clearance > CLEARANCE_RTOL * d0 for t in triples)
    return ValidationReport(tuple(triples), d0, passed)


@dataclass(frozen=True)
class Configuration:
    """An ordered system of ``r >= 3`` disjoint disks.

    ``d0`` and ``non_eclipse_ok`` are derived on construction.
    """

    disks: tuple[Disk, ...]
    d0: float = field(init=False)
    non_eclipse_ok: bool = field(init=False)

    def __post_init__(self):
        disks = tuple(d if isinstance(d, Disk) else Disk(d[0], d[1]) for d in self.disks)
        object.__setattr__(self, "disks", disks)
        if len(disks) < 3:
            raise InvalidConfiguration(f"need at least 3 disks, got {len(disks)}")
        report = validate_non_eclipse(disks)
        object.__setattr__(self, "d0", report.d0)
        object.__setattr__(self, "non_eclipse_ok", report.passed)

    @property
    def r(self) -> int:
        return len(self.disks)

    @property
    def centers(self) -> np.ndarray:
        return np.array([d.center for d in self.disks])

    @property
    def radii(self) -> np.ndarray:
        return np.array([d.radius for d in self.disks])

    def disk(self, symbol: int) -> Disk:
        """Disk named by a 1-based itinerary symbol."""
        return self.disks[symbol - 1]

    def transformed(self, rotation: float = 0.0, shift=(0.0, 0.0), scale: float = 1.0) -> Configuration:
        c, s = math.cos(rotation), math.sin(rotation)
        out = []
        for d in self.disks:
            x, y = d.center
            out.append(Disk((scale * (c * x - s * y) + shift[0], scale * (s * x + c * y) + shift[1]),
                            scale * d.radius))
        return Configuration(tuple(out))

    def permuted(self, order) -> Configuration:
        return Configuration(tuple(self.disks[i] for i in order))


def equilateral(side: float, radius: float = 1.0) -> Configuration:
    """Three equal disks centred on an equilateral triangle of the given side."""
    h = side * math.sqrt(3.0) / 2.0
    centers = [(0.0, 0.0), (side, 0.0), (side / 2.0, h)]
    return Configuration(tuple(Disk(c, radius) for c in centers))
