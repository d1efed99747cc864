"""Series-theoretic diagnostics on a truncated Dirichlet series.

Asymptotic quantities (``limsup``/``liminf``) cannot be decided from finite
data, so every estimate here returns the finite-index proxy sequence it was
derived from together with a scalar summary.  Sums with cancellation are
evaluated with :func:`math.fsum`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import CoverageError, DomainError, InsufficientData

BAND_EPS = 0.3


# ----------------------------------------------------------------------------
# Tails and remainders


def tail_sums(spec) -> np.ndarray:
    """``T[m-1] = sum_{n >= m} a_n`` for ``m = 1..N`` (correctly rounded)."""
    a = spec.coeffs.tolist()
    return np.array([math.fsum(a[i:]) for i in range(len(a))])


def tail_sum(spec, m: int) -> float:
    """Exact tail ``sum_{n = m}^{N} a_n`` of the truncated series (1-based ``m``)."""
    n = len(spec)
    if not 1 <= m <= n:
        raise IndexError(f"tail index {m} outside 1..{n}")
    return math.fsum(spec.coeffs[m - 1:].tolist())


class Remainder(NamedTuple):
    value: float
    truncated: bool


def remainder_Rk(spec, u: float, k: int = 1) -> Remainder:
    """``R^k(u) = sum_{lambda_n > u} a_n (lambda_n - u)^k``.

    For ``u >= lambda_N`` the truncated sum is empty: ``0`` with the
    truncation flag set.
    """
    lam = spec.lambdas
    if len(lam) == 0 or u >= lam[-1]:
        return Remainder(0.0, True)
    i = int(np.searchsorted(lam, u, side="right"))
    terms = spec.coeffs[i:] * (lam[i:] - u) ** k
    return Remainder(math.fsum(terms.tolist()), False)


def remainder_step_identity(spec, m: int, u_left: float, u_right: float) -> tuple[float, float]:
    """Both sides of ``R(u') - R(u) = a_m (lambda_m - u') + (u - u') T_{m+1}``.

    Requires ``lambda_{m-1} < u' < lambda_m < u < lambda_{m+1}`` (1-based
    ``m``); returns ``(lhs, rhs)``.
    """
    lam = spec.lambdas
    n = len(lam)
    lo = lam[m - 2] if m >= 2 else -math.inf
    hi = lam[m] if m < n else math.inf
    if not (lo < u_left < lam[m - 1] < u_right < hi):
        raise ValueError("abscissae must straddle lambda_m only")
    lhs = math.fsum([remainder_Rk(spec, u_left).value, -remainder_Rk(spec, u_right).value])
    t_next = tail_sum(spec, m + 1) if m < n else 0.0
    rhs = math.fsum([spec.coeffs[m - 1] * (lam[m - 1] - u_left), (u_right - u_left) * t_next])
    return lhs, rhs


def kuniyeda_sweep(spec, us, k: int = 1) -> dict:
    """``R^k(u)`` on a grid with both normalizations of ``log|R^k(u)|``.

    ``log_over_uk`` divides by ``u^k``, ``log_over_u`` by ``u``; for ``k = 1``
    they coincide.  Zero remainders give ``-inf``.
    """
    us = np.asarray(us, dtype=float)
    vals = np.empty_like(us)
    trunc = np.zeros(us.shape, dtype=bool)
    for i, u in enumerate(us):
        vals[i], trunc[i] = remainder_Rk(spec, float(u), k)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(vals))
    return {"u": us, "R": vals, "truncated": trunc,
            "log_over_uk": logs / us ** k, "log_over_u": logs / us}


def typical_mean(spec, u: float, k: int, s: complex = 0.0) -> complex:
    """Normalized typical mean ``C^k(u) / u^k`` with
    ``C^k(u) = sum_{lambda_n < u} (u - lambda_n)^k a_n exp(-lambda_n s)``.

    ``k = 0`` gives the partial sum of the series at ``s``.
    """
    lam = spec.lambdas
    i = int(np.searchsorted(lam, u, side="left"))
    w = (u - lam[:i]) ** k / u ** k if k else np.ones(i)
    z = spec.coeffs[:i] * w * np.exp(-lam[:i] * complex(s))
    return complex(math.fsum(z.real.tolist()), math.fsum(z.imag.tolist()))


def typical_mean_sweep(spec, us, k: int, s: complex = 0.0) -> np.ndarray:
    return np.array([typical_mean(spec, float(u), k, s) for u in us])


# ----------------------------------------------------------------------------
# Counting and the entropy


@dataclass(frozen=True)
class EntropyEstimate:
    h: float
    intercept: float
    x_min: float
    x_max: float
    residual: float
    stderr: float
    n_points: int

    @property
    def ci(self) -> float:
        return 2.0 * self.stderr


def counting_points(lengths):
    """Distinct lengths and the counts ``N(x) = #{tau <= x}`` there."""
    x = np.sort(np.asarray(lengths, dtype=float))
    xs, idx = np.unique(x, return_index=True)
    counts = np.append(idx[1:], len(x))
    return xs, counts


def _primitive_lengths(source):
    if hasattr(source, "records"):
        return np.array([rec.orbit.tau_primitive for rec in source.records if rec.orbit.is_primitive])
    return np.asarray(source, dtype=float)


def estimate_h(source, x_min: float | None = None, x_max: float | None = None,
               min_count: int = 50, max_iter: int = 100) -> EntropyEstimate:
    """Fit ``log N#(x) = h x - log(h x) + c`` to the primitive counting function.

    ``source`` is an orbit database or a sequence of primitive lengths.  The
    fit is linear in ``(h, c)`` once ``log(h x)`` is frozen, so ``h`` is
    iterated to a fixed point.  The default range is the upper half of the
    covered lengths.
    """
    lengths = _primitive_lengths(source)
    if len(lengths) < min_count:
        raise InsufficientData(f"need at least {min_count} primitive rays, got {len(lengths)}")
    horizon = getattr(source, "horizon", None)
    xs, counts = counting_points(lengths)
    if x_max is None:
        x_max = float(xs[-1]) if horizon is None else min(float(horizon), float(xs[-1]))
    if x_min is None:
        x_min = 0.5 * x_max
    sel = (xs >= x_min) & (xs <= x_max)
    x, n = xs[sel], counts[sel].astype(float)
    if len(x) < 3:
        raise InsufficientData("fewer than three distinct lengths in the fit range")
    logn = np.log(n)
    h = float(np.polyfit(x, logn, 1)[0])
    if not h > 0:
        h = 1.0 / float(np.mean(x))
    for _ in range(max_iter):
        y = logn + np.log(h * x)
        (h_new, c), *_ = np.linalg.lstsq(np.column_stack([x, np.ones_like(x)]), y, rcond=None)
        h_new = float(h_new)
        if not h_new > 0:
            raise InsufficientData("counting data show no exponential growth")
        done = abs(h_new - h) < 1e-14 * h_new
        h = h_new
        if done:
            break
    y = logn + np.log(h * x)
    resid = y - (h * x + c)
    dof = max(len(x) - 2, 1)
    s2 = float(resid @ resid) / dof
    sxx = float(((x - x.mean()) ** 2).sum())
    stderr = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    return EntropyEstimate(h=h, intercept=float(c), x_min=float(x_min), x_max=float(x_max),
                           residual=math.sqrt(s2), stderr=stderr, n_points=int(len(x)))


def fitted_onset(lengths, h: float, eps: float = BAND_EPS, x_max: float | None = None) -> float:
    """Smallest ``b`` such that ``e^{(h-eps)x} <= N(x) <= e^{(h+eps)x}`` on ``[b, x_max]``.

    ``N`` is the step counting function of ``lengths``; the band is checked
    exactly between jumps.  Returns ``inf`` if the band fails at ``x_max``.
    """
    xs, counts = counting_points(lengths)
    if x_max is None:
        x_max = float(xs[-1])
    keep = xs <= x_max
    xs, counts = xs[keep], counts[keep]
    if len(xs) == 0:
        return math.inf
    b0 = float(xs[0])
    ends = np.append(xs[1:], x_max)
    for x_lo, x_hi, c in zip(xs, ends, counts):
        logc = math.log(c)
        # upper bound fails on [x_lo, logc / (h + eps))
        if h + eps > 0:
            cross = logc / (h + eps)
            if cross > x_lo:
                b0 = max(b0, cross)
        # lower bound fails on (logc / (h - eps), x_hi)
        if h - eps > 0:
            cross = logc / (h - eps)
            if cross < x_hi:
                b0 = max(b0, x_hi if x_hi < x_max else math.inf)
    return b0 if b0 <= x_max else math.inf


def ray_count(lengths, x: float) -> int:
    return int(np.searchsorted(np.sort(np.asarray(lengths, dtype=float)), x, side="right"))


def counting_exponent(spec) -> float:
    """``max log n / lambda_n`` over the upper half of the indices."""
    n = len(spec)
    idx = np.arange(max(n // 2, 1), n + 1)
    return float(np.max(np.log(idx) / spec.lambdas[idx - 1]))


@dataclass(frozen=True)
class WindowCount:
    alpha: float
    eps: float
    count: int
    bound: float
    verdict: str  # "pass", "fail" or "out-of-range"


def window_count(source, alpha: float, eps: float, eta: float, h: float,
                 b0: float | None = None, horizon: float | None = None) -> WindowCount:
    """Primitive rays with ``alpha <= tau# <= alpha + eps`` against the lower bound
    ``eps (1 - eta) e^{alpha h} / (3 (alpha + eps))``.

    The verdict is ``out-of-range`` when ``alpha`` lies below the asymptotic
    onset ``max(b0, 3/h, 1)``.
    """
    if not 0 < eps < 0.5:
        raise ValueError("need 0 < eps < 1/2")
    if not 0 < eta < eps / (12 * (1 + eps)):
        raise ValueError("need 0 < eta < eps / (12 (1 + eps))")
    lengths = _primitive_lengths(source)
    if horizon is None:
        horizon = getattr(source, "horizon", None)
    if horizon is not None and alpha + eps >= horizon:
        raise CoverageError(f"window [{alpha}, {alpha + eps}] is not covered (horizon {horizon})")
    count = int(np.count_nonzero((lengths >= alpha) & (lengths <= alpha + eps)))
    bound = eps * (1 - eta) * math.exp(alpha * h) / (3 * (alpha + eps))
    onset = max(b0 if b0 is not None else math.inf, 3.0 / h, 1.0)
    if alpha < onset:
        verdict = "out-of-range"
    else:
        verdict = "pass" if count > bound else "fail"
    return WindowCount(alpha, eps, count, bound, verdict)


# ----------------------------------------------------------------------------
# Truncation model and evaluation of the series


@dataclass(frozen=True)
class TailModel:
    """Bound for the rays beyond the truncation horizon ``x``.

    Uses ``N(y) <= A e^{g y}`` for the ray count and
    ``|det(Id - P)| >= C1 e^{d1 tau}`` for the weights, so a ray of length
    ``tau`` contributes at most ``tau C1^(-1/2) e^{-(sigma + d1/2) tau}``.
    """

    growth: float
    prefactor: float
    C1: float
    d1: float
    x: float

    @property
    def abscissa(self) -> float:
        """Real part above which the bound converges."""
        return self.growth - 0.5 * self.d1

    def bound(self, sigma: float) -> float:
        beta = sigma + 0.5 * self.d1
        if beta <= self.growth:
            return math.inf
        q = math.exp(self.growth - beta)
        x = self.x
        if x * beta < 1.0:
            return math.inf
        # sum over unit shells [x + j, x + j + 1) of f(x + j) * count bound
        series = q ** x * (x / (1 - q) + q / (1 - q) ** 2)
        return self.prefactor * math.exp(self.growth) * series / math.sqrt(self.C1)


def tail_model(spec, det_fit, h: float, eps: float = BAND_EPS) -> TailModel:
    growth = h + eps
    lengths = spec.ray_lengths
    xs, counts = counting_points(lengths)
    prefactor = float(np.max(counts * np.exp(-growth * xs))) if len(xs) else 1.0
    return TailModel(growth, max(prefactor, 1.0), det_fit.C1, det_fit.d1, spec.x_max)


class EtaValue(NamedTuple):
    value: complex
    tail_bound: float


def eval_eta(spec, s: complex, model: TailModel | None = None, margin: float = 0.05) -> EtaValue:
    """Truncated ``sum a_n exp(-lambda_n s)`` with a bound for the omitted rays.

    Without a ``model`` the bound is ``nan``.  With one, ``Re s`` must exceed
    ``model.abscissa + margin``.
    """
    s = complex(s)
    bound = math.nan
    if model is not None:
        if s.real <= model.abscissa + margin:
            raise DomainError(f"Re s = {s.real} is below the validity abscissa {model.abscissa + margin}")
        bound = model.bound(s.real)
    z = [a * cmath.exp(-lam * s) for lam, a in zip(spec.lambdas.tolist(), spec.coeffs.tolist())]
    return EtaValue(complex(math.fsum(w.real for w in z), math.fsum(w.imag for w in z)), bound)


# ----------------------------------------------------------------------------
# Abscissae


@dataclass(frozen=True)
class AbscissaEstimate:
    value: float
    proxies: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)
    degenerate: bool = False
    valid: bool = True
    skipped: tuple[int, ...] = ()
    truncation_bound: float = math.nan


def _ls_slope(x, y):
    xm = x.mean()
    return float(((x - xm) * (y - y.mean())).sum() / ((x - xm) ** 2).sum())


def block_masses(spec, width: float | None = None):
    """``log sum |a_n|`` over consecutive windows ``[x, x + width)``; empty windows dropped."""
    lam = spec.lambdas
    if width is None:
        gaps = np.diff(lam)
        width = float(max(gaps.max(), 1e-12)) if len(gaps) else 1.0
    start = lam[0]
    nblocks = int(math.floor((lam[-1] - start) / width)) + 1
    which = np.minimum(((lam - start) / width).astype(int), nblocks - 1)
    absval = np.abs(spec.coeffs)
    xs, logs = [], []
    for j in range(nblocks):
        mass = math.fsum(absval[which == j].tolist())
        if mass > 0:
            xs.append(start + j * width)
            logs.append(math.log(mass))
    return np.array(xs), np.array(logs), width


def estimate_sigma_a(spec, width: float | None = None) -> AbscissaEstimate:
    """Growth rate of the absolute mass per window.

    The absolute mass in ``[x, x + w)`` behaves like ``e^{sigma_a x}`` on both
    sides of ``sigma_a = 0``.  Least-squares slopes of ``log mass`` are taken
    over every trailing run of windows starting in the upper half; the
    estimate is their maximum.  Fewer than three non-empty windows give ``0``
    flagged as degenerate.
    """
    if not np.any(spec.coeffs != 0):
        raise InsufficientData("all coefficients vanish; the abscissa is undefined")
    xs, logs, _ = block_masses(spec, width)
    if len(xs) < 3:
        return AbscissaEstimate(0.0, np.array([0.0]), xs[:1], degenerate=True)
    n = len(xs)
    starts = range(n // 2 if n >= 6 else 0, n - 2)
    proxies = np.array([_ls_slope(xs[j:], logs[j:]) for j in starts])
    positions = np.array([xs[j] for j in starts])
    return AbscissaEstimate(float(proxies.max()), proxies, positions, degenerate=len(spec) < 20)


def estimate_sigma_c(spec, model: TailModel | None = None) -> AbscissaEstimate:
    """``max log|T_m| / lambda_m`` over the upper half of the indices.

    Vanishing tails are skipped and listed.  The value is a valid proxy only
    when negative.  With a ``model`` the bound for the omitted rays at
    ``s = 0`` is attached.
    """
    tails = tail_sums(spec)
    n = len(tails)
    idx = np.arange(max(n // 2, 1), n + 1)
    t = tails[idx - 1]
    nz = t != 0
    skipped = tuple(int(i) for i in idx[~nz])
    proxies = np.log(np.abs(t[nz])) / spec.lambdas[idx[nz] - 1]
    if len(proxies) == 0:
        return AbscissaEstimate(-math.inf, proxies, idx[nz], degenerate=True, valid=False, skipped=skipped)
    value = float(proxies.max())
    bound = model.bound(0.0) if model is not None else math.nan
    return AbscissaEstimate(value, proxies, idx[nz], valid=value < 0, skipped=skipped, truncation_bound=bound)


def abscissa_relation(sigma_a: AbscissaEstimate, sigma_c: AbscissaEstimate, h: float, slack: float) -> bool:
    """``sigma_c >= sigma_a - h`` up to ``slack``."""
    return sigma_c.value >= sigma_a.value - h - slack


def proxy_slack(sigma_a: AbscissaEstimate, sigma_c: AbscissaEstimate, h_err: float = 0.0) -> float:
    """Spread of the proxy traces plus the entropy uncertainty."""
    spread_a = float(np.ptp(sigma_a.proxies)) if len(sigma_a.proxies) else 0.0
    spread_c = float(np.ptp(sigma_c.proxies)) if len(sigma_c.proxies) else 0.0
    return spread_a + spread_c + h_err


@dataclass(frozen=True)
class AnalysisReport:
    h_est: EntropyEstimate | None
    sigma_a_est: AbscissaEstimate
    sigma_c_est: AbscissaEstimate
    h_used: float
    slack: float
    relation_ok: bool
    sigma_k_diag: dict = field(default_factory=dict, repr=False)
    window_checks: tuple[WindowCount, ...] = ()
    onset: float = math.inf
    model: TailModel | None = None


def summability_diag(spec, ks=(1, 2), n_points: int = 64) -> dict:
    """For each ``k``, the last finite ``log|R^k(u)| / u`` on a grid below ``lambda_N``."""
    lam = spec.lambdas
    us = np.linspace(lam[0], lam[-1], n_points, endpoint=False)
    out = {}
    for k in ks:
        sweep = kuniyeda_sweep(spec, us, k)
        vals = sweep["log_over_u"][np.isfinite(sweep["log_over_u"])]
        out[k] = float(vals[-1]) if len(vals) else -math.inf
    return out


def analysis_report(spec, source, det_fit, eps: float = BAND_EPS, eta: float = 0.01,
                    h_est: EntropyEstimate | None = None) -> AnalysisReport:
    """Entropy, abscissae, their relation and the window counts in one pass.

    ``source`` supplies the primitive lengths (an orbit database or a
    sequence).  Without ``h_est`` the entropy is fitted here, falling back to
    :func:`counting_exponent` when there are too few rays.
    """
    if h_est is None:
        try:
            h_est = estimate_h(source)
        except InsufficientData:
            h_est = None
    h = h_est.h if h_est is not None else counting_exponent(spec)
    onset = fitted_onset(spec.ray_lengths, h, eps, spec.x_max)
    model = tail_model(spec, det_fit, h, eps)
    sig_a = estimate_sigma_a(spec)
    sig_c = estimate_sigma_c(spec, model)
    slack = proxy_slack(sig_a, sig_c, h_est.ci if h_est is not None else 0.0)
    windows = []
    horizon = getattr(source, "horizon", spec.x_max)
    if 0 < eps < 0.5 and 0 < eta < eps / (12 * (1 + eps)) and math.isfinite(onset):
        alpha = math.ceil(max(onset, 1.0))
        while alpha + eps < horizon:
            windows.append(window_count(source, alpha, eps, eta, h, onset, horizon))
            alpha += 1
    return AnalysisReport(h_est, sig_a, sig_c, h, slack, abscissa_relation(sig_a, sig_c, h, slack),
                          summability_diag(spec), tuple(windows), onset, model)

