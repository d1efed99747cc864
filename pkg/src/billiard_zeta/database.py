"""Solved rays of a configuration together with their monodromy data."""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import Configuration
from .linearization import Monodromy, poincare_map
from .orbits import DEFAULT_TOL, PeriodicOrbit, locate_orbit, solve_all
from .symbolic import enumerate_words


@dataclass(frozen=True)
class OrbitRecord:
    orbit: PeriodicOrbit
    monodromy: Monodromy

    def __iter__(self):
        return iter((self.orbit, self.monodromy))


@dataclass(frozen=True)
class OrbitDatabase:
    """Every admissible class with ``2 <= m <= m_max``, solved and linearized.

    A ray with ``m`` reflections has length at least ``m * d0``, so every
    ray shorter than :attr:`horizon` is present.
    """

    config: Configuration
    m_max: int
    records: tuple[OrbitRecord, ...]

    @property
    def horizon(self) -> float:
        return (self.m_max + 1) * self.config.d0

    def primitives(self) -> list[OrbitRecord]:
        return [rec for rec in self.records if rec.orbit.is_primitive]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def _record(config, orbit):
    return OrbitRecord(orbit, poincare_map(config, orbit))


def build_database(config: Configuration, m_max: int, tol: float = DEFAULT_TOL, workers: int = 1) -> OrbitDatabase:
    words = enumerate_words(config.r, m_max)
    orbits = solve_all(config, words, tol=tol, workers=workers)
    return OrbitDatabase(config, m_max, tuple(_record(config, o) for o in orbits))


def solve_record(config: Configuration, word, tol: float = DEFAULT_TOL) -> OrbitRecord:
    return _record(config, locate_orbit(config, word, tol))
