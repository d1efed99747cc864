"""Scanners for sufficient conditions that the zeta function is not entire.

All functions are pure in ``(spectrum, parameters)``; indices are 1-based
as in ``lambda_1 < lambda_2 < ...``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .analysis import tail_sums
from .errors import CoverageError
from .linearization import lower_hull


@dataclass(frozen=True)
class CriteriaParams:
    delta: float
    gamma: float
    C: float = 1.0

    def check(self, h: float, clusters: bool = False) -> list[str]:
        """Constraint violations (empty when the parameters are admissible).

        The cluster construction needs ``delta > h + 2``, the separated-gap
        scan only ``delta > h + 1``.
        """
        flags = []
        need = h + (2.0 if clusters else 1.0)
        if not self.delta > need:
            flags.append(f"delta = {self.delta} does not exceed h + {need - h:g} = {need}")
        if not self.gamma > 0:
            flags.append("gamma must be positive")
        if not self.C > 0:
            flags.append("C must be positive")
        return flags


def default_gamma(c2: float, sigma_c: float) -> float:
    return max(c2 + 2.0, 10.0 * abs(sigma_c))


# ----------------------------------------------------------------------------
# Separated frequencies with large tails


def find_gap_tail_witnesses(spec, params: CriteriaParams, tails=None) -> list[int]:
    """Indices ``m`` with ``lambda_m - lambda_{m-1} >= C e^{-delta lambda_m}``
    and ``|sum_{n >= m} a_n| >= e^{-gamma lambda_m}``."""
    lam = spec.lambdas
    t = tail_sums(spec) if tails is None else tails
    out = []
    for m in range(2, len(lam) + 1):
        gap = lam[m - 1] - lam[m - 2]
        if gap >= params.C * math.exp(-params.delta * lam[m - 1]) and \
                abs(t[m - 1]) >= math.exp(-params.gamma * lam[m - 1]):
            out.append(m)
    return out


def witness_growth(spec, params: CriteriaParams, horizons) -> list[tuple[float, int]]:
    """Witness counts when the same data are cut at each horizon."""
    return [(float(x), len(find_gap_tail_witnesses(spec.truncated(x), params))) for x in horizons]


@dataclass(frozen=True)
class BohrFit:
    ell: float
    C1: float
    tightest: tuple[int, int]
    refuted: bool = False
    offending: tuple[int, int] | None = None


def check_bohr(spec, group_tol: float | None = None) -> BohrFit:
    """Fit ``lambda_{n+1} - lambda_n >= C1 e^{-ell lambda_n}``.

    Any ``ell`` fits finitely many gaps with a small enough ``C1``, so
    ``ell`` is read off the lower convex envelope of ``(lambda_n, log gap_n)``:
    minus the slope of the envelope edge above the median frequency, clipped
    at zero.  ``C1`` then makes the bound tight.  A gap not exceeding
    ``group_tol`` refutes the condition.
    """
    lam = spec.lambdas
    if group_tol is None:
        group_tol = spec.group_tol
    gaps = np.diff(lam)
    i_min = int(np.argmin(gaps))
    tightest = (i_min + 1, i_min + 2)
    if gaps[i_min] <= group_tol:
        return BohrFit(math.nan, 0.0, tightest, refuted=True, offending=tightest)
    x = lam[:-1]
    y = np.log(gaps)
    hull = lower_hull(x, y)
    ell = 0.0
    if len(hull) >= 2:
        median = float(np.median(x))
        for a, b in zip(hull, hull[1:]):
            if x[b] >= median:
                ell = max(0.0, float(-(y[b] - y[a]) / (x[b] - x[a])))
                break
    C1 = float(np.min(gaps * np.exp(ell * x)))
    return BohrFit(ell, C1, tightest)


@dataclass(frozen=True)
class TailExponent:
    value: float
    proxies: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    skipped: tuple[int, ...] = ()


def liminf_tail_exponent(spec, tails=None) -> TailExponent:
    """``log|sum_{n >= m} a_n| / lambda_m`` and its minimum over the upper half.

    Vanishing tails are skipped and listed; if every tail in the upper half
    vanishes the value is ``-inf``.
    """
    t = tail_sums(spec) if tails is None else tails
    n = len(t)
    idx = np.arange(max(n // 2, 1), n + 1)
    vals = t[idx - 1]
    nz = vals != 0
    proxies = np.log(np.abs(vals[nz])) / spec.lambdas[idx[nz] - 1]
    value = float(proxies.min()) if len(proxies) else -math.inf
    return TailExponent(value, proxies, idx[nz], tuple(int(i) for i in idx[~nz]))


# ----------------------------------------------------------------------------
# Clustering intervals


@dataclass(frozen=True)
class ClusterInterval:
    k_center: int
    p: int
    q: int
    lo: float
    hi: float
    left_gap: float
    right_gap: float
    block_sum: float
    left_edge: bool = False
    right_edge: bool = False

    @property
    def start(self) -> int:
        return self.k_center - self.p

    @property
    def end(self) -> int:
        return self.k_center + self.q

    @property
    def size(self) -> int:
        return self.p + self.q + 1

    @property
    def at_edge(self) -> bool:
        return self.left_edge or self.right_edge


def cluster_intervals(lambdas, threshold: float, seeds, coeffs=None) -> list[ClusterInterval]:
    """Grow a cluster around each seed index while neighbours are closer than
    ``threshold``; coinciding intervals are reported once (first seed wins).

    Extension uses the open windows ``(mu, mu + threshold)`` to the right and
    ``(mu - threshold, mu)`` to the left.
    """
    lam = np.asarray(lambdas, dtype=float)
    a = np.zeros_like(lam) if coeffs is None else np.asarray(coeffs, dtype=float)
    n = len(lam)
    # maximal runs with every internal gap below the threshold
    breaks = np.nonzero(np.diff(lam) >= threshold)[0] + 1
    run_start = np.concatenate([[0], breaks])
    run_end = np.concatenate([breaks - 1, [n - 1]])
    run_of = np.repeat(np.arange(len(run_start)), run_end - run_start + 1)
    seen = {}
    for k in seeds:
        i = k - 1
        r = int(run_of[i])
        lo, hi = int(run_start[r]), int(run_end[r])
        key = (lo, hi)
        if key in seen:
            continue
        left_gap = lam[lo] - lam[lo - 1] if lo > 0 else math.inf
        right_gap = lam[hi + 1] - lam[hi] if hi + 1 < n else math.inf
        seen[key] = ClusterInterval(
            k_center=k, p=i - lo, q=hi - i, lo=float(lam[lo]), hi=float(lam[hi]),
            left_gap=float(left_gap), right_gap=float(right_gap),
            block_sum=math.fsum(a[lo:hi + 1].tolist()),
            left_edge=lo == 0, right_edge=hi == n - 1)
    return sorted(seen.values(), key=lambda iv: iv.start)


def seed_indices(spec, b: float) -> list[int]:
    """Indices with ``lambda_k`` in ``[b + e^{-b}, b + 1 - e^{-b}]``."""
    lam = spec.lambdas
    lo, hi = b + math.exp(-b), b + 1 - math.exp(-b)
    return [int(i) + 1 for i in np.nonzero((lam >= lo) & (lam <= hi))[0]]


def build_cluster_intervals(spec, delta: float, b: float) -> list[ClusterInterval]:
    """Clustering intervals seeded in ``[b + e^{-b}, b + 1 - e^{-b}]`` with
    gap threshold ``e^{-delta b}``."""
    if b + 1 > spec.x_max:
        raise CoverageError(f"spectrum horizon {spec.x_max} does not cover [{b}, {b + 1}]")
    return cluster_intervals(spec.lambdas, math.exp(-delta * b), seed_indices(spec, b), spec.coeffs)


def cluster_width_violations(intervals, b: float) -> list[ClusterInterval]:
    """Intervals wider than ``e^{-b}``."""
    return [iv for iv in intervals if not iv.hi - iv.lo < math.exp(-b)]


@dataclass(frozen=True)
class ClusterCensus:
    M: int
    bound: float
    asymptotic_bound: float
    slack: float
    verdict: str
    flags: tuple[str, ...] = ()
    intervals: tuple[ClusterInterval, ...] = field(default=(), repr=False)


def count_cluster_sets(spec, eps: float, delta: float, b: float, b0: float | None = None) -> ClusterCensus:
    """Count clustering intervals whose right gap lies in ``[e^{-delta b}, eps)``.

    The verdict compares ``M`` with ``(1 - 2 eps - 2e^{-b}) / (eps + e^{-b})``,
    which differs from ``1/eps - 2`` by the reported ``slack``; it is
    ``empty`` when no frequency lies in the seed window.
    """
    eb = math.exp(-b)
    if not eps > eb:
        raise ValueError(f"need eps > e^-b = {eb}")
    intervals = build_cluster_intervals(spec, delta, b)
    threshold = math.exp(-delta * b)
    chosen = [iv for iv in intervals if threshold <= iv.right_gap < eps]
    bound = (1 - 2 * eps - 2 * eb) / (eps + eb)
    asym = 1 / eps - 2
    M = len(chosen)
    flags = []
    if not seed_indices(spec, b):
        verdict = "empty"
        flags.append("no frequencies in the seed window")
    elif M >= bound:
        verdict = "pass"
    else:
        verdict = "fail"
        flags.append("cluster count below the lower bound: h/delta inconsistent at this b")
    if b0 is not None and b < b0:
        flags.append(f"b = {b} is below the fitted onset {b0}")
    return ClusterCensus(M, bound, asym, asym - bound, verdict, tuple(flags), tuple(chosen))


@dataclass(frozen=True)
class Classification:
    label: str
    left: str | None
    right: str | None
    witness: tuple[int, int] | None = None
    reason: str = ""
    triangle_ok: bool = True


def classify_interval(spec, iv: ClusterInterval, gamma: float, tails=None, condition_l=None) -> Classification:
    """Place ``iv`` in one of the four cases ``(i)/(ii) x (iii)/(iv)``.

    ``(i)``: ``|T_{k-p}| >= e^{-gamma lambda_{k-p}}``, ``(iii)``:
    ``|T_{k+q}| >= e^{-gamma lambda_{k+q}}``.  The witness is
    ``(k-p-1, k-p)`` under (i), or ``(k+q, k+q+1)`` under (ii) with
    ``|block| >= 2 e^{-gamma lambda_{k-p}}``, or under (ii)-(iv) when a
    condition-(L) fit with ``gamma > c2 + 1`` is supplied.  Under (ii) with
    a small tail at ``k+q+1`` the block sum must obey the triangle bound;
    a violation means the stored block sum disagrees with the tails.
    Intervals touching the first or last frequency are indeterminate.
    """
    if iv.at_edge:
        return Classification("indeterminate", None, None, reason="interval touches the spectrum edge")
    t = tail_sums(spec) if tails is None else tails
    lam = spec.lambdas
    s, e = iv.start, iv.end
    left = "i" if abs(t[s - 1]) >= math.exp(-gamma * lam[s - 1]) else "ii"
    right = "iii" if abs(t[e - 1]) >= math.exp(-gamma * lam[e - 1]) else "iv"
    label = f"({left})-({right})"
    witness, reason = None, ""
    triangle_ok = True
    if left == "i":
        witness, reason = (s - 1, s), "(i)"
    else:
        t_next = t[e]
        small_next = abs(t_next) < math.exp(-gamma * lam[e])
        if small_next:
            limit = math.exp(-gamma * lam[s - 1]) + math.exp(-gamma * lam[e])
            rounding = 4 * np.finfo(float).eps * max(abs(t[s - 1]), abs(t_next), abs(iv.block_sum))
            triangle_ok = abs(iv.block_sum) <= limit + rounding
        if abs(iv.block_sum) >= 2 * math.exp(-gamma * lam[s - 1]):
            witness, reason = (e, e + 1), "(ii) with large block sum"
        elif right == "iv" and condition_l is not None and gamma > condition_l.c2 + 1:
            witness, reason = (e, e + 1), "(ii)-(iv) under (L)"
    return Classification(label, left, right, witness, reason, triangle_ok)


# ----------------------------------------------------------------------------
# Coefficient lower bounds and triple separation


@dataclass(frozen=True)
class ConditionLFit:
    c1: float
    c2: float
    n0: int = 1


@dataclass(frozen=True)
class ConditionLReport:
    candidate: ConditionLFit
    candidate_single_ok: bool
    candidate_all_ok: bool
    candidate_failures: tuple[int, ...]
    empirical: ConditionLFit | None
    zero_lines: tuple[int, ...]
    n_single: int
    n_multi: int

    @property
    def refuted(self) -> bool:
        return bool(self.zero_lines)


def check_condition_L(spec, det_fit, d0: float | None = None) -> ConditionLReport:
    """Test ``|a_n| >= c1 e^{-c2 lambda_n}``.

    The candidate ``c1 = d0``, ``c2 = d2 / 2`` is checked on single-contributor
    lines (where it follows from the determinant envelope) and on all lines.
    The empirical fit takes ``c2`` as the steepest descent of the lower
    envelope of ``(lambda_n, log|a_n|)`` and a tight ``c1``.  Lines with
    ``a_n = 0`` refute the condition.
    """
    d0 = spec.d0 if d0 is None else d0
    cand = ConditionLFit(d0, det_fit.d2 / 2.0)
    lam, a = spec.lambdas, spec.coeffs
    floor = cand.c1 * np.exp(-cand.c2 * lam)
    ok = np.abs(a) >= floor
    single = np.array([ln.n_contributors <= 1 for ln in spec.lines])
    failures = tuple(int(i) + 1 for i in np.nonzero(~ok)[0])
    zero = tuple(int(i) + 1 for i in np.nonzero(a == 0)[0])
    nz = a != 0
    empirical = None
    if np.count_nonzero(nz) >= 1:
        x, y = lam[nz], np.log(np.abs(a[nz]))
        hull = lower_hull(x, y)
        slopes = [(y[j] - y[i]) / (x[j] - x[i]) for i, j in zip(hull, hull[1:])]
        c2 = max([0.0] + [-s for s in slopes])
        empirical = ConditionLFit(float(np.min(np.abs(a[nz]) * np.exp(c2 * x))), float(c2))
    return ConditionLReport(cand, bool(np.all(ok[single])), bool(np.all(ok)), failures, empirical,
                            zero, int(single.sum()), int((~single).sum()))


@dataclass(frozen=True)
class TripleScan:
    indices: tuple[int, ...]
    condition_l_ok: bool | None


def triple_separation_scan(spec, delta: float, C: float, condition_l: ConditionLReport | None = None) -> TripleScan:
    """Indices separated on both sides: ``lambda_m - lambda_{m-1} > C e^{-delta lambda_m}``
    and ``lambda_{m+1} - lambda_m > C e^{-delta lambda_{m+1}}``."""
    lam = spec.lambdas
    out = []
    for m in range(2, len(lam)):
        left = lam[m - 1] - lam[m - 2] > C * math.exp(-delta * lam[m - 1])
        right = lam[m] - lam[m - 1] > C * math.exp(-delta * lam[m])
        if left and right:
            out.append(m)
    status = None
    if condition_l is not None:
        status = not condition_l.refuted and condition_l.candidate_all_ok
    return TripleScan(tuple(out), status)


# ----------------------------------------------------------------------------
# Rational relations between lengths


def convergents(x: Fraction, q_max: int):
    """Continued-fraction convergents ``p/q`` of ``x`` with ``q <= q_max``."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    rest = Fraction(x)
    while True:
        a = math.floor(rest)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > q_max:
            return
        yield Fraction(p1, q1)
        frac = rest - a
        if frac == 0:
            return
        rest = 1 / frac


@dataclass(frozen=True)
class NearResonance:
    i: int
    j: int
    ratio: float
    p: int
    q: int
    distance: float
    flagged: bool


@dataclass(frozen=True)
class RationalReport:
    pairs: tuple[NearResonance, ...]
    strongest: NearResonance | None

    @property
    def flagged(self) -> list[NearResonance]:
        return [r for r in self.pairs if r.flagged]


def rational_independence_test(lengths, q_max: int = 1000, tol: float = 1e-9) -> RationalReport:
    """Closest continued-fraction convergent (denominator ``<= q_max``) of every
    length ratio ``L_j / L_i >= 1``; pairs within ``tol`` are flagged."""
    L = [Fraction(float(x)) for x in lengths]
    if len(L) < 2:
        raise ValueError("need at least two lengths")
    out = []
    for i in range(len(L)):
        for j in range(i + 1, len(L)):
            a, b = (L[i], L[j]) if L[j] >= L[i] else (L[j], L[i])
            ratio = b / a
            best = None
            for c in convergents(ratio, q_max):
                best = c
            dist = float(abs(ratio - best))
            out.append(NearResonance(i, j, float(ratio), best.numerator, best.denominator, dist, dist <= tol))
    strongest = min(out, key=lambda r: (r.distance, r.q))
    return RationalReport(tuple(out), strongest)
