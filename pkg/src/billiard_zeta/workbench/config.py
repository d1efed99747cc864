"""Run configuration: a line-oriented ``[section]`` / ``key = value`` file.

Example::

    [geometry]
    disk 0 0 1
    disk 6 0 1
    disk 3 5.196152422706632 1

    [sweep]
    m_max = 8

    [output]
    dir = out

Instead of ``disk`` lines the geometry section may give ``equilateral = R``
(and optionally ``radius``).  Blank lines and ``#`` comments are ignored.
Values given as ``section.key=value`` overrides replace file values.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..errors import InvalidConfiguration, ParseError
from ..geometry import Configuration, Disk, equilateral

WORKERS_ENV = "BZETA_WORKERS"


@dataclass(frozen=True)
class SweepSection:
    m_max: int = 8
    x_max: float | None = None
    group_tol: float | None = None
    tol: float = 1e-12


@dataclass(frozen=True)
class AnalysisSection:
    eps: float = 0.3
    eta: float = 0.01
    delta: float | None = None
    gamma: float | None = None
    C: float = 1.0
    b_windows: tuple[float, ...] = ()
    cluster_eps: float = 0.25
    q_max: int = 1000
    tol_rational: float = 1e-9
    probe_ell: float | None = None
    probe_scale: float = 10.0


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    geometry: Configuration
    sweep: SweepSection = field(default_factory=SweepSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output: OutputSection = field(default_factory=OutputSection)
    workers: int = 1

    def canonical_text(self) -> str:
        """Everything that affects computed numbers, in a fixed layout."""
        lines = ["[geometry]"]
        for d in self.geometry.disks:
            lines.append(f"disk {d.center[0]!r} {d.center[1]!r} {d.radius!r}")
        for name, section in (("sweep", self.sweep), ("analysis", self.analysis)):
            lines.append(f"[{name}]")
            for f in fields(section):
                lines.append(f"{f.name} = {_render(getattr(section, f.name))}")
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()


def _render(v) -> str:
    if v is None:
        return ""
    if isinstance(v, tuple):
        return ", ".join(_render(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


# ----------------------------------------------------------------------------
# parsing

_SECTIONS = {"geometry", "sweep", "analysis", "output"}


def parse_text(text: str) -> tuple[dict, list]:
    """Raw ``{section: {key: (value, line)}}`` plus ``disk`` lines ``(values, line)``."""
    raw = {s: {} for s in _SECTIONS}
    disks = []
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ParseError(f"unknown section [{section}]", lineno)
            continue
        if section is None:
            raise ParseError("entry outside any section", lineno)
        if "=" in line:
            key, value = (s.strip() for s in line.split("=", 1))
            if not key:
                raise ParseError("missing key", lineno)
            if key in raw[section]:
                raise ParseError(f"duplicate key {section}.{key}", lineno)
            raw[section][key] = (value, lineno)
        elif section == "geometry" and line.split()[0] == "disk":
            parts = line.split()[1:]
            if len(parts) != 3:
                raise ParseError("disk lines need 'disk cx cy r'", lineno)
            try:
                disks.append((tuple(float(p) for p in parts), lineno))
            except ValueError:
                raise ParseError(f"non-numeric disk entry {line!r}", lineno) from None
        else:
            raise ParseError(f"cannot parse {line!r}", lineno)
    return raw, disks


def apply_overrides(raw: dict, overrides) -> dict:
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ParseError(f"override {item!r} is not section.key=value", None)
        dotted, value = item.split("=", 1)
        section, key = dotted.strip().split(".", 1)
        if section not in _SECTIONS:
            raise ParseError(f"unknown section in override {item!r}", None)
        raw[section][key.strip()] = (value.strip(), None)
    return raw


def _convert(cls, entries: dict, section: str):
    kwargs = {}
    known = {f.name: f for f in fields(cls)}
    for key, (value, lineno) in entries.items():
        if key not in known:
            raise ParseError(f"unknown key {section}.{key}", lineno)
        default = getattr(cls(), key)
        try:
            kwargs[key] = _coerce(key, value, default)
        except ValueError:
            raise ParseError(f"bad value for {section}.{key}: {value!r}", lineno) from None
    return cls(**kwargs)


def _coerce(key, value: str, default):
    if value == "":
        return None
    if isinstance(default, tuple):
        items = [v.strip() for v in value.split(",") if v.strip()]
        if key == "b_windows":
            return tuple(float(v) for v in items)
        return tuple(items)
    if isinstance(default, str):
        return value
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(value)
    return float(value)


def _geometry(raw_geo: dict, disks) -> Configuration:
    if disks and "equilateral" in raw_geo:
        raise InvalidConfiguration("give either disk lines or equilateral, not both")
    if disks:
        if raw_geo:
            key = sorted(raw_geo)[0]
            raise ParseError(f"unknown geometry key {key}", raw_geo[key][1])
        return Configuration(tuple(Disk((cx, cy), r) for (cx, cy, r), _ in disks))
    if "equilateral" not in raw_geo:
        raise InvalidConfiguration("geometry section defines no disks")
    extra = set(raw_geo) - {"equilateral", "radius"}
    if extra:
        key = sorted(extra)[0]
        raise ParseError(f"unknown geometry key {key}", raw_geo[key][1])
    try:
        side = float(raw_geo["equilateral"][0])
        radius = float(raw_geo.get("radius", ("1.0", None))[0])
    except ValueError:
        raise ParseError("non-numeric equilateral geometry", raw_geo["equilateral"][1]) from None
    return equilateral(side, radius)


def workers_from_env(env=None) -> int:
    env = os.environ if env is None else env
    value = env.get(WORKERS_ENV, "1")
    try:
        n = int(value)
    except ValueError:
        raise InvalidConfiguration(f"{WORKERS_ENV}={value!r} is not an integer") from None
    return max(n, 1)


def check_config(cfg: RunConfig) -> RunConfig:
    s, a = cfg.sweep, cfg.analysis
    if s.m_max < 2:
        raise InvalidConfiguration("m_max must be at least 2")
    for name, v in (("sweep.tol", s.tol), ("sweep.group_tol", s.group_tol), ("sweep.x_max", s.x_max),
                    ("analysis.eps", a.eps), ("analysis.eta", a.eta), ("analysis.C", a.C),
                    ("analysis.cluster_eps", a.cluster_eps), ("analysis.tol_rational", a.tol_rational),
                    ("analysis.delta", a.delta), ("analysis.gamma", a.gamma),
                    ("analysis.probe_scale", a.probe_scale)):
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise InvalidConfiguration(f"{name} must be positive, got {v}")
    if a.q_max < 1:
        raise InvalidConfiguration("analysis.q_max must be positive")
    bad = set(cfg.output.formats) - {"csv", "json"}
    if bad:
        raise InvalidConfiguration(f"unknown output formats {sorted(bad)}")
    return cfg


def parse_config(text: str, overrides=None, env=None) -> RunConfig:
    raw, disks = parse_text(text)
    raw = apply_overrides(raw, overrides)
    geometry = _geometry(raw["geometry"], disks)
    cfg = RunConfig(
        geometry=geometry,
        sweep=_convert(SweepSection, raw["sweep"], "sweep"),
        analysis=_convert(AnalysisSection, raw["analysis"], "analysis"),
        output=_convert(OutputSection, raw["output"], "output"),
        workers=workers_from_env(env),
    )
    return check_config(cfg)


def load_config(path, overrides=None, env=None) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), overrides, env)
