"""End-to-end orchestration with stage attribution.

Stages run lazily and are cached on the :class:`Run`, so each CLI subcommand
computes only what it needs.  Nothing is written until every requested stage
has finished; a failing run leaves no partial outputs.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .. import analysis as an
from .. import criteria as cr
from ..database import OrbitDatabase, OrbitRecord
from ..errors import BilliardZetaError, InsufficientData
from ..geometry import validate_non_eclipse
from ..linearization import fit_det_bounds, poincare_map
from ..orbits import solve_all
from ..spectrum import ProbeParams, build_spectrum, probe_fd
from ..symbolic import enumerate_words
from . import reports
from .config import RunConfig
from .store import load_orbits, read_header, save_orbits

ORBITS_FILE = "orbits.jsonl"


class StageError(BilliardZetaError):
    """A module error tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class _stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, (BilliardZetaError, ValueError)):
            raise StageError(self.name, exc) from exc
        return False


@dataclass
class Run:
    cfg: RunConfig
    reuse_orbits: bool = True
    notes: list[str] = field(default_factory=list)

    @property
    def out_dir(self) -> Path:
        return Path(self.cfg.output.dir)

    # -- geometry and orbits ---------------------------------------------------

    @cached_property
    def validation(self):
        with _stage("geometry"):
            report = validate_non_eclipse(self.cfg.geometry)
            if not report.passed:
                worst = min(report.failures(), key=lambda t: t.clearance)
                raise ValueError(f"non-eclipse condition fails: disk {worst.k} meets the hull of "
                                 f"disks {worst.i}, {worst.j} (clearance {worst.clearance:.3e})")
            return report

    def _cached_database(self):
        path = self.out_dir / ORBITS_FILE
        if not (self.reuse_orbits and path.exists()):
            return None
        try:
            head = read_header(path)
        except BilliardZetaError:
            return None
        if head.get("config_hash") != self.sweep_hash:
            return None
        with _stage("load"):
            db = load_orbits(path, self.cfg.geometry)
        self.notes.append(f"orbit database reused from {ORBITS_FILE}")
        return db

    @property
    def sweep_hash(self) -> str:
        """Hash of what the orbit database depends on (disks, m_max, tol)."""
        g = self.cfg.geometry
        s = self.cfg.sweep
        text = "".join(f"{d.center[0]!r} {d.center[1]!r} {d.radius!r}\n" for d in g.disks)
        text += f"{s.m_max} {s.tol!r}\n"
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    @cached_property
    def database(self) -> OrbitDatabase:
        self.validation
        cached = self._cached_database()
        if cached is not None:
            return cached
        cfg = self.cfg
        with _stage("enumerate"):
            words = enumerate_words(cfg.geometry.r, cfg.sweep.m_max)
        with _stage("solve"):
            orbits = solve_all(cfg.geometry, words, tol=cfg.sweep.tol, workers=cfg.workers)
        with _stage("linearize"):
            records = tuple(OrbitRecord(o, poincare_map(cfg.geometry, o)) for o in orbits)
        return OrbitDatabase(cfg.geometry, cfg.sweep.m_max, records)

    # -- spectrum ------------------------------------------------------------------

    @cached_property
    def spectrum(self):
        db = self.database
        with _stage("spectrum"):
            x_max = self.cfg.sweep.x_max if self.cfg.sweep.x_max is not None else db.horizon
            return build_spectrum(db, x_max, self.cfg.sweep.group_tol)

    # -- analysis ------------------------------------------------------------------

    @cached_property
    def entropy(self):
        with _stage("analysis"):
            try:
                return an.estimate_h(self.database)
            except InsufficientData as exc:
                self.notes.append(f"entropy fit on fewer than 50 primitive rays: {exc}")
                try:
                    return an.estimate_h(self.database, min_count=3)
                except InsufficientData:
                    return None

    @property
    def h(self) -> float:
        est = self.entropy
        return est.h if est is not None else an.counting_exponent(self.spectrum)

    @cached_property
    def onset(self) -> float:
        with _stage("analysis"):
            return an.fitted_onset(self.spectrum.ray_lengths, self.h, self.cfg.analysis.eps, self.spectrum.x_max)

    @cached_property
    def det_fit(self):
        with _stage("analysis"):
            return fit_det_bounds(self.database.records, min_orbits=3, min_lengths=2)

    @cached_property
    def ray_det_fit(self):
        """Envelope over every ray in the spectrum, repetitions included."""
        with _stage("analysis"):
            return fit_det_bounds(self.spectrum.rays, min_orbits=3, min_lengths=2)

    @cached_property
    def analysis(self) -> dict:
        spec, a = self.spectrum, self.cfg.analysis
        h = self.h
        with _stage("analysis"):
            rep = an.analysis_report(spec, self.database, self.det_fit, a.eps, a.eta, h_est=self.entropy)
            model, sig_a, sig_c, slack = rep.model, rep.sigma_a_est, rep.sigma_c_est, rep.slack
            eta_values = []
            for s in (model.abscissa + 0.1, 1.0):
                if s > model.abscissa + 0.05:
                    val = an.eval_eta(spec, s, model)
                    eta_values.append({"s": s, "value": val.value.real, "tail_bound": val.tail_bound})
            windows = rep.window_checks
            if not (0 < a.eps < 0.5 and 0 < a.eta < a.eps / (12 * (1 + a.eps))):
                self.notes.append("window counts skipped: eta or eps outside the admissible range")
            ell = a.probe_ell if a.probe_ell is not None else 2.0 * self.cfg.geometry.d0
            try:
                probe = probe_fd(self.database, ProbeParams(ell, a.probe_scale))
                probe_doc = {"ell": ell, "m_scale": a.probe_scale, "value": probe.value, "n_rays": probe.n_rays}
            except BilliardZetaError as exc:
                probe_doc = {"ell": ell, "m_scale": a.probe_scale, "error": str(exc)}
        est = self.entropy
        return {
            "config_hash": self.cfg.config_hash,
            "n_lines": len(spec),
            "n_rays": len(spec.rays),
            "x_max": spec.x_max,
            "d0": self.cfg.geometry.d0,
            "entropy": None if est is None else {
                "h": est.h, "intercept": est.intercept, "stderr": est.stderr, "ci": est.ci,
                "x_min": est.x_min, "x_max": est.x_max, "n_points": est.n_points},
            "h_used": h,
            "band": {"eps": a.eps, "onset": self.onset},
            "det_bounds": {"C1": self.det_fit.C1, "d1": self.det_fit.d1, "d2": self.det_fit.d2,
                           "lower_attained_by": self.det_fit.lower_attained_by,
                           "upper_attained_by": self.det_fit.upper_attained_by},
            "tail_model": {"growth": model.growth, "prefactor": model.prefactor, "abscissa": model.abscissa},
            "sigma_a": {"value": sig_a.value, "degenerate": sig_a.degenerate, "valid": sig_a.valid},
            "sigma_c": {"value": sig_c.value, "degenerate": sig_c.degenerate, "valid": sig_c.valid,
                        "skipped": sig_c.skipped, "truncation_bound": sig_c.truncation_bound},
            "relation": {"slack": slack, "holds": rep.relation_ok},
            "summability": {str(k): v for k, v in rep.sigma_k_diag.items()},
            "eta": eta_values,
            "window_counts": [{"alpha": w.alpha, "count": w.count, "bound": w.bound, "verdict": w.verdict}
                              for w in windows],
            "probe": probe_doc,
            "warnings": list(spec.warnings),
        }

    @cached_property
    def sweeps(self) -> dict[str, str]:
        spec = self.spectrum
        with _stage("analysis"):
            us = np.arange(math.floor(spec.lambdas[0]), spec.x_max + 1e-12, 0.25)
            kun = an.kuniyeda_sweep(spec, us, 1)
            rem = reports.csv_text(("u", "R1", "log_abs_R1_over_u", "truncated"),
                                   zip(kun["u"], kun["R"], kun["log_over_u"], kun["truncated"]))
            xs, counts = an.counting_points(spec.ray_lengths)
            a = self.cfg.analysis
            cnt = reports.csv_text(("x", "N", "band_lower", "band_upper"),
                                   ((x, int(n), math.exp((self.h - a.eps) * x), math.exp((self.h + a.eps) * x))
                                    for x, n in zip(xs, counts)))
        return {"remainder_sweep.csv": rem, "counting_sweep.csv": cnt}

    # -- criteria ------------------------------------------------------------------

    def default_b_windows(self) -> list[float]:
        spec, a = self.spectrum, self.cfg.analysis
        lo = max(self.onset, self.cfg.geometry.d0, -math.log(a.cluster_eps))
        if not math.isfinite(lo):
            return []
        b = float(math.ceil(lo))
        out = []
        while b + 1 <= spec.x_max:
            out.append(b)
            b += 1.0
        return out[-3:]

    @cached_property
    def criteria(self) -> tuple[dict, list]:
        spec, a = self.spectrum, self.cfg.analysis
        h = self.h
        ana = self.analysis
        with _stage("criteria"):
            tails = an.tail_sums(spec)
            lfit = cr.check_condition_L(spec, self.ray_det_fit)
            delta = a.delta if a.delta is not None else h + 2.5
            gamma = a.gamma if a.gamma is not None else cr.default_gamma(lfit.candidate.c2, ana["sigma_c"]["value"])
            params = cr.CriteriaParams(delta, gamma, a.C)
            witnesses = cr.find_gap_tail_witnesses(spec, params, tails)
            horizons = [x for x in (spec.x_max - 2 * self.cfg.geometry.d0, spec.x_max - self.cfg.geometry.d0,
                                    spec.x_max) if x > spec.lambdas[0]]
            growth = cr.witness_growth(spec, params, horizons)
            bohr = cr.check_bohr(spec)
            liminf = cr.liminf_tail_exponent(spec, tails)
            cond_l = None if lfit.refuted else lfit.empirical
            triple = cr.triple_separation_scan(spec, delta, a.C, lfit)
            rational = self._rational()
            windows, rows = [], []
            for b in (a.b_windows or self.default_b_windows()):
                windows.append(self._window(b, params, tails, cond_l, rows))
        doc = {
            "config_hash": self.cfg.config_hash,
            "params": {"delta": delta, "gamma": gamma, "C": a.C,
                       "flags_gap_tail": params.check(h), "flags_clusters": params.check(h, clusters=True)},
            "witnesses": {"indices": witnesses, "lambdas": [spec.lambdas[m - 1] for m in witnesses],
                          "growth": [{"x_max": x, "count": n} for x, n in growth],
                          "grows": len(growth) > 1 and growth[-1][1] > growth[0][1]},
            "bohr": {"ell": bohr.ell, "C1": bohr.C1, "tightest": bohr.tightest, "refuted": bohr.refuted,
                     "offending": bohr.offending},
            "liminf_tail_exponent": {"value": liminf.value, "skipped": liminf.skipped},
            "condition_L": {
                "candidate": {"c1": lfit.candidate.c1, "c2": lfit.candidate.c2},
                "candidate_single_ok": lfit.candidate_single_ok, "candidate_all_ok": lfit.candidate_all_ok,
                "candidate_failures": lfit.candidate_failures,
                "empirical": None if lfit.empirical is None else {"c1": lfit.empirical.c1, "c2": lfit.empirical.c2},
                "zero_lines": lfit.zero_lines, "n_single": lfit.n_single, "n_multi": lfit.n_multi,
                "refuted": lfit.refuted},
            "triple_separation": {"indices": triple.indices, "condition_L_ok": triple.condition_l_ok},
            "rational": rational,
            "onset": self.onset,
            "cluster_windows": windows,
        }
        return doc, rows

    def _rational(self) -> dict:
        a = self.cfg.analysis
        lengths = sorted(rec.orbit.tau for rec in self.database.primitives())
        tol = self.spectrum.group_tol
        distinct = []
        coincident = 0
        for x in lengths:
            if distinct and x - distinct[-1] <= tol:
                coincident += 1
            else:
                distinct.append(x)
        doc = {"n_primitive": len(lengths), "n_distinct": len(distinct), "n_coincident": coincident,
               "q_max": a.q_max, "tol": a.tol_rational}
        if len(distinct) < 2:
            doc.update(flagged=[], strongest=None)
            return doc
        rep = cr.rational_independence_test(distinct, a.q_max, a.tol_rational)
        s = rep.strongest

        def row(r):
            return {"L_i": distinct[r.i], "L_j": distinct[r.j], "p": r.p, "q": r.q, "distance": r.distance}

        doc.update(flagged=[row(r) for r in rep.flagged], strongest=row(s))
        return doc

    def _window(self, b, params, tails, cond_l, rows) -> dict:
        spec, a = self.spectrum, self.cfg.analysis
        intervals = cr.build_cluster_intervals(spec, params.delta, b)
        violations = cr.cluster_width_violations(intervals, b)
        try:
            census = cr.count_cluster_sets(spec, a.cluster_eps, params.delta, b, self.onset)
            census_doc = {"eps": a.cluster_eps, "M": census.M, "bound": census.bound,
                          "asymptotic_bound": census.asymptotic_bound, "slack": census.slack,
                          "verdict": census.verdict, "flags": census.flags}
        except ValueError as exc:
            census_doc = {"eps": a.cluster_eps, "error": str(exc)}
        labels = {}
        triangle_failures = []
        for iv in intervals:
            cls = cr.classify_interval(spec, iv, params.gamma, tails, cond_l)
            labels[cls.label] = labels.get(cls.label, 0) + 1
            if not cls.triangle_ok:
                triangle_failures.append(iv.k_center)
            w = cls.witness or (None, None)
            rows.append((b, iv.k_center, iv.p, iv.q, iv.lo, iv.hi, iv.left_gap, iv.right_gap,
                         iv.block_sum, cls.label, w[0], w[1], cls.triangle_ok))
        return {"b": b, "threshold": math.exp(-params.delta * b), "past_onset": b >= self.onset,
                "n_intervals": len(intervals),
                "width_violations": [iv.k_center for iv in violations],
                "census": census_doc, "labels": dict(sorted(labels.items())),
                "triangle_failures": triangle_failures}

    # -- outputs -------------------------------------------------------------------

    def texts(self, stages) -> dict[str, str]:
        """File name to contents for the requested stages (computes them)."""
        fmts = set(self.cfg.output.formats)
        out = {}
        if "sweep" in stages:
            from .store import header_line, record_line
            db = self.database
            lines = [header_line(db.config, db.m_max, len(db.records), self.cfg.sweep.tol, self.sweep_hash)]
            lines.extend(record_line(r) for r in db.records)
            out[ORBITS_FILE] = "\n".join(lines) + "\n"
        if "spectrum" in stages:
            if "csv" in fmts:
                out["spectrum.csv"] = reports.spectrum_csv(self.spectrum)
            if "json" in fmts:
                out["spectrum.json"] = reports.json_text(reports.spectrum_document(self.spectrum, self.cfg.config_hash))
        if "analysis" in stages:
            out["analysis.json"] = reports.json_text(self.analysis)
            if "csv" in fmts:
                out.update(self.sweeps)
        if "criteria" in stages:
            doc, rows = self.criteria
            out["criteria.json"] = reports.json_text(doc)
            if "csv" in fmts:
                out["intervals.csv"] = reports.intervals_csv(rows)
        return out

    def write(self, stages) -> dict[str, Path]:
        texts = self.texts(stages)
        with _stage("output"):
            paths = {name: reports.write_text(self.out_dir / name, text) for name, text in texts.items()}
            if len(stages) > 1:
                manifest = {"config_hash": self.cfg.config_hash,
                            "files": {n: hashlib.sha256(t.encode("utf-8")).hexdigest()
                                      for n, t in sorted(texts.items())}}
                paths["manifest.json"] = reports.write_text(self.out_dir / "manifest.json",
                                                            reports.json_text(manifest))
        return paths


ALL_STAGES = ("sweep", "spectrum", "analysis", "criteria")


def run_pipeline(cfg: RunConfig, stages=ALL_STAGES, reuse_orbits: bool = True) -> tuple[Run, dict[str, Path]]:
    """Run the requested stages and write their outputs under ``cfg.output.dir``."""
    run = Run(cfg, reuse_orbits=reuse_orbits)
    return run, run.write(tuple(stages))


__all__ = ["Run", "StageError", "run_pipeline", "ALL_STAGES", "save_orbits", "load_orbits"]
