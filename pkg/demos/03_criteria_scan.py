"""Scanning a spectrum for the non-entirety criteria.

The criteria ask for separated frequencies whose tails stay large, for a
gap condition on the frequencies, and for clusters of nearby frequencies.
None of them can be proved from finite data; the scanners report
witnesses and verdicts on the available lines, plus whether they persist as
the horizon grows.

    python3 demos/03_criteria_scan.py
"""

import math

from billiard_zeta import build_database, build_spectrum, equilateral
from billiard_zeta.analysis import estimate_h, tail_sums
from billiard_zeta.criteria import (
    CriteriaParams,
    build_cluster_intervals,
    check_bohr,
    check_condition_L,
    classify_interval,
    count_cluster_sets,
    find_gap_tail_witnesses,
    liminf_tail_exponent,
    rational_independence_test,
    triple_separation_scan,
    witness_growth,
)
from billiard_zeta.linearization import fit_det_bounds

config = equilateral(6.0)
db = build_database(config, m_max=10)
spec = build_spectrum(db, db.horizon)
h = estimate_h(db).h
params = CriteriaParams(delta=h + 1.5, gamma=10.0)
print(f"h = {h:.5f}, delta = {params.delta:.5f}, gamma = {params.gamma}")
print()

w = find_gap_tail_witnesses(spec, params)
print(f"{len(w)} separated frequencies with large tails, first ones: {w[:10]}")
for x, n in witness_growth(spec, params, [20, 28, 36, 44]):
    print(f"  horizon {x:4.0f}: {n} witnesses")
print()

bohr = check_bohr(spec)
print(f"gap fit lambda_(n+1) - lambda_n >= {bohr.C1:.3g} e^(-{bohr.ell:.3f} lambda_n), "
      f"tightest pair {bohr.tightest}")
te = liminf_tail_exponent(spec)
print(f"min log|T_m| / lambda_m over the upper half: {te.value:+.4f}")
print()

cond = check_condition_L(spec, fit_det_bounds(db.records))
print(f"|a_n| >= d0 e^(-d2/2 lambda_n): single-contributor lines {cond.candidate_single_ok}, "
      f"all lines {cond.candidate_all_ok} ({cond.n_single} single, {cond.n_multi} merged)")
print(f"separated on both sides (delta = h + 2.5): {len(triple_separation_scan(spec, h + 2.5, 1.0).indices)} indices")
print()

# clusters of frequencies closer than e^(-delta b), seeded in [b + e^-b, b + 1 - e^-b]
tails = tail_sums(spec)
delta = h + 2.5
for b in (30.0, 36.0, 42.0):
    ivs = build_cluster_intervals(spec, delta, b)
    labels = [classify_interval(spec, iv, 10.0, tails).label for iv in ivs]
    census = count_cluster_sets(spec, 0.25, delta, b)
    print(f"b = {b:4.0f}: {len(ivs):3d} intervals, largest size {max((iv.size for iv in ivs), default=0)}, "
          f"census M = {census.M} vs bound {census.bound:.2f} -> {census.verdict}")
    print("         labels: " + (", ".join(f"{lab} x{labels.count(lab)}" for lab in sorted(set(labels))) or "none"))
print()

# symmetric tables produce exactly equal lengths; the test runs on distinct ones
lengths = sorted({round(r.orbit.tau_primitive, 9) for r in db.primitives()})[:12]
rat = rational_independence_test(lengths)
s = rat.strongest
print(f"{len(rat.pairs)} length ratios, strongest near-resonance "
      f"{lengths[s.j]:.6f} / {lengths[s.i]:.6f} ~ {s.p}/{s.q} at distance {s.distance:.2e}")
print(f"tau(123) / tau(12) = 3 (6 - sqrt 3) / 8 lies {abs(3 * (6 - math.sqrt(3)) / 8 - 1.6):.3e} from 8/5")
