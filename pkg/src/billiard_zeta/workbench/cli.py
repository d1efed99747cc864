"""Command-line front end: ``bzeta <subcommand> CONFIG [--set section.key=value ...]``.

Exit status is 0 on success, 1 when a pipeline stage fails and 2 for
configuration errors.  The worker count comes from ``BZETA_WORKERS``.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import BilliardZetaError, InvalidConfiguration, ParseError
from ..geometry import validate_non_eclipse
from ..spectrum import ProbeParams, probe_fd
from .config import load_config
from .pipeline import ALL_STAGES, Run, StageError

_STAGES = {
    "sweep": ("sweep",),
    "spectrum": ("spectrum",),
    "analyze": ("analysis",),
    "criteria": ("criteria",),
    "report": ALL_STAGES,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bzeta", description="Periodic-ray spectra of planar disk billiards.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="run configuration file")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a configuration key (repeatable)")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--fresh", action="store_true", help="ignore a cached orbit database")
        return sp

    add("validate", "check the non-eclipse condition and print the clearance table")
    add("sweep", "enumerate, solve and linearize; write orbits.jsonl")
    add("spectrum", "write spectrum.csv / spectrum.json")
    add("analyze", "write analysis.json and the diagnostic sweeps")
    add("criteria", "write criteria.json and intervals.csv")
    sp = add("probe", "print the bump-function pairing at a frequency")
    sp.add_argument("--ell", type=float, required=True, help="centre of the probe")
    sp.add_argument("--scale", type=float, default=10.0, help="inverse half-width of the probe")
    add("report", "run every stage")
    return p


def _validate(cfg) -> int:
    rep = validate_non_eclipse(cfg.geometry)
    print(f"d0 = {rep.d0:.17g}")
    print("i j k clearance")
    for t in rep.triples:
        print(f"{t.i} {t.j} {t.k} {t.clearance:.17g}")
    print("non-eclipse: " + ("pass" if rep.passed else "FAIL"))
    return 0 if rep.passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"output.dir={args.out}")
    try:
        cfg = load_config(args.config, overrides)
    except (ParseError, InvalidConfiguration, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        return _validate(cfg)
    run = Run(cfg, reuse_orbits=not args.fresh)
    try:
        if args.command == "probe":
            res = probe_fd(run.database, ProbeParams(args.ell, args.scale))
            print(f"probe(ell={args.ell:.17g}, scale={args.scale:.17g}) = {res.value:.17g} ({res.n_rays} rays)")
            return 0
        paths = run.write(_STAGES[args.command])
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BilliardZetaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for note in run.notes:
        print(f"note: {note}")
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
