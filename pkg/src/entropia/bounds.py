"""Quantitative bounds for analytic maps: Cauchy envelopes, reparametrization counts,
the local-entropy bound chain and the scale schedule ``delta(n), s(n), a(t)``.

Everything that involves ``L0^n`` is evaluated in log space so sweeps to
``n = 10^6`` stay finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .core import AnalyticSystem, RescaledMap, jet_norms
from .errors import ParameterError, PreconditionError, ScaleTooSmall

__all__ = [
    "MuNuModel",
    "SRule",
    "BoundSchedule",
    "CauchyEnvelope",
    "cauchy_derivative_bound",
    "q_function",
    "log_q",
    "q_max",
    "compute_C0",
    "check_rescaled_bound",
    "kappa",
    "hloc_bound",
    "delta_of_n",
    "log_delta",
    "s_bar",
    "a_of_t",
    "a_of_log_t",
    "a_at_step",
    "large_n_check",
    "large_n_threshold",
    "schedule_conditions_check",
    "small_lipschitz_bound",
    "small_lipschitz_threshold",
    "suspension_reduction_bound",
    "c3_ratio_bound",
    "shift_inequality_holds",
    "certify_envelopes",
    "bound_curve_rows",
    "MODELS",
    "S_RULES",
]

# relative slack for comparisons between quantities computed along different log paths
_TOL = 1e-12


# ----------------------------------------------------------------------------
# mu / nu models and smoothness-order rules

@dataclass(frozen=True)
class MuNuModel:
    """Reparametrization-count constants as functions of (order s, dimension m).

    ``log_mu`` and ``nu`` accept numpy arrays of ``s``.
    """

    label: str
    log_mu: Callable[[np.ndarray, int], np.ndarray]
    nu: Callable[[np.ndarray, int], np.ndarray]

    def mu(self, s, m: int):
        return np.exp(self.log_mu(np.asarray(s, dtype=float), m))

    @classmethod
    def constant(cls, mu: float, nu: float) -> "MuNuModel":
        if mu < 1 or nu < 0:
            raise ParameterError("need mu >= 1 and nu >= 0")
        lm = math.log(mu)
        return cls(f"constant({mu:g},{nu:g})",
                   lambda s, m: np.full(np.shape(s), lm), lambda s, m: np.full(np.shape(s), float(nu)))


def _log_model_mu(s, m):
    return np.log(m * (1.0 + np.log(np.asarray(s, dtype=float))))


def _log_model_nu(s, m):
    return m * (1.0 + np.log(np.asarray(s, dtype=float)))


MODELS = {
    # mu = nu = m (1 + ln s): grows slowly enough for the slow/converging limits
    "log": MuNuModel("log", _log_model_mu, _log_model_nu),
    # mu = (8 s)^(m s), nu = m s
    "yomdin": MuNuModel("yomdin", lambda s, m: m * s * np.log(8.0 * s), lambda s, m: m * np.asarray(s, float)),
    # mu = 2^(m s), nu = m s; too fast for the slow limit once s grows linearly
    "power": MuNuModel("power", lambda s, m: m * s * math.log(2.0), lambda s, m: m * np.asarray(s, float)),
}


@dataclass(frozen=True)
class SRule:
    """Raw smoothness order as a function of ``n`` (vectorized); smoothed by the schedule."""

    label: str
    raw: Callable[[np.ndarray], np.ndarray]


S_RULES = {
    "log3": SRule("log3", lambda n: 1 + np.floor(np.log(n) / 3.0)),
    "sqrt-log": SRule("sqrt-log", lambda n: np.maximum(1, np.floor(np.sqrt(np.log(n))))),
    "ceil-sqrt": SRule("ceil-sqrt", lambda n: np.ceil(np.sqrt(n))),
    "linear": SRule("linear", lambda n: np.asarray(n, dtype=float)),
    "constant": SRule("constant", lambda n: np.ones(np.shape(n))),
}

DEFAULT_MODEL = MODELS["log"]
DEFAULT_S_RULE = S_RULES["log3"]


def compute_C0(m: int, M0: float, rho: float) -> float:
    """Uniform constant bounding the rescaled derivatives.

    ``2^(m+1) sqrt(m) M0 / rho`` times ``sup_{n>=3} max(1, n^1.5 / 2^(n-1))``;
    the sup is located by a sweep over ``3..100`` and the sequence is checked
    to decrease from ``n = 3`` on.
    """
    if m < 1 or not M0 > 0 or not rho > 0:
        raise ParameterError("compute_C0 needs m >= 1, M0 > 0, rho > 0")
    n = np.arange(3, 101, dtype=float)
    seq = 1.5 * np.log(n) - (n - 1) * math.log(2.0)
    if not np.all(np.diff(seq) < 0):
        raise AssertionError("n^1.5 / 2^(n-1) is not decreasing past n = 3")
    factor = max(1.0, math.exp(seq.max()))
    return 2 ** (m + 1) * math.sqrt(m) * M0 / rho * factor


@dataclass
class BoundSchedule:
    """The scale schedule ``delta(n) = (L0^n n^2)^-1`` with its smoothness orders.

    ``s(n)`` is the raw rule made monotone with unit increments,
    ``s(n) = n + min_{k<=n} (raw(k) - k)``, then clamped to ``[1, n]``.
    """

    L0: float
    m: int
    model: MuNuModel = DEFAULT_MODEL
    C0: float | None = None
    rho: float = 0.5
    s_rule: SRule = DEFAULT_S_RULE
    _s: np.ndarray = field(default=None, init=False, repr=False)
    _threshold: int | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not self.L0 > 1:
            raise ParameterError(f"L0 must exceed 1, got {self.L0}")
        if self.m < 1:
            raise ParameterError("m must be at least 1")
        if not 0 < self.rho:
            raise ParameterError("rho must be positive")
        if self.C0 is not None and not self.C0 > 0:
            raise ParameterError("C0 must be positive")

    @classmethod
    def for_system(cls, sys: AnalyticSystem, L0: float | None = None, **kw) -> "BoundSchedule":
        """Schedule with ``C0`` and ``rho`` taken from a system; ``L0`` defaults to the system's."""
        return cls(L0=sys.L0 if L0 is None else L0, m=sys.m,
                   C0=compute_C0(sys.m, sys.M0, sys.rho), rho=sys.rho, **kw)

    @property
    def log_L0(self) -> float:
        return math.log(self.L0)

    def _grow(self, n: int):
        have = 0 if self._s is None else self._s.size - 1
        if n <= have:
            return
        size = max(n, 2 * have, 1024)
        k = np.arange(1, size + 1, dtype=float)
        raw = np.asarray(self.s_rule.raw(k), dtype=float)
        smooth = np.minimum.accumulate(raw - k) + k
        s = np.clip(np.floor(smooth + 1e-9), 1, k).astype(np.int64)
        self._s = np.concatenate([[0], s])

    def s(self, n):
        """Smoothness order ``s(n)``; accepts ints or integer arrays."""
        arr = np.asarray(n, dtype=np.int64)
        if np.any(arr < 1):
            raise ParameterError("n must be at least 1")
        self._grow(int(arr.max()))
        out = self._s[arr]
        return int(out) if np.ndim(out) == 0 else out

    @property
    def N_threshold(self) -> int:
        if self._threshold is None:
            self._threshold = large_n_threshold(self)
        return self._threshold

    def log_C(self, n) -> np.ndarray:
        """``ln C_n = ln C0 + n ln L0``."""
        if self.C0 is None:
            raise ParameterError("schedule has no C0")
        return math.log(self.C0) + np.asarray(n, dtype=float) * self.log_L0


# ----------------------------------------------------------------------------
# Cauchy envelopes and the q(k) / C0 analysis

@dataclass(frozen=True)
class CauchyEnvelope:
    """Derivative envelope of ``f^n`` from Cauchy's formula on polydiscs of radius ``rho / (2 sqrt(m) L0^n)``."""

    m: int
    M0: float
    rho: float
    L0: float
    n: int

    @property
    def log_ratio(self) -> float:
        """``ln(2 sqrt(m) L0^n / rho)``."""
        return math.log(2 * math.sqrt(self.m)) + self.n * math.log(self.L0) - math.log(self.rho)

    def _check(self, alpha) -> np.ndarray:
        a = np.atleast_1d(np.asarray(alpha, dtype=np.int64))
        if a.size != self.m or np.any(a < 0):
            raise ParameterError(f"multi-index must have {self.m} non-negative entries")
        if a.sum() < 1:
            raise ParameterError("|alpha| must be at least 1")
        return a

    def log_pre(self, alpha) -> float:
        """``ln(alpha! 2^m M0 ratio^|alpha|)`` (before Stirling)."""
        a = self._check(alpha)
        k = int(a.sum())
        return float(np.sum(gammaln(a + 1.0))) + self.m * math.log(2) + math.log(self.M0) + k * self.log_ratio

    def log_post(self, alpha) -> float:
        """``ln(|alpha|^(|alpha|+1/2) 2^m M0 ratio^|alpha|)`` (after Stirling)."""
        k = int(self._check(alpha).sum())
        return (k + 0.5) * math.log(k) + self.m * math.log(2) + math.log(self.M0) + k * self.log_ratio

    def log_post_order(self, k: int) -> float:
        """Post-Stirling envelope for any multi-index of order ``k``."""
        alpha = np.zeros(self.m, dtype=np.int64)
        alpha[0] = k
        return self.log_post(alpha)


def cauchy_derivative_bound(env: CauchyEnvelope, alpha) -> float:
    """Log of the post-Stirling derivative envelope; checks that it dominates the pre-Stirling form."""
    pre, post = env.log_pre(alpha), env.log_post(alpha)
    if pre > post + _TOL * max(1.0, abs(post)):
        raise AssertionError(f"pre-Stirling envelope exceeds post-Stirling at {alpha}")
    return post


def log_q(n: int, k) -> np.ndarray:
    """``ln q(k) = (1 - k) ln(2n) + (k + 1/2) ln k``."""
    k = np.asarray(k, dtype=float)
    if n < 1 or np.any(k < 1) or np.any(k > n):
        raise ParameterError("need 1 <= k <= n")
    return (1.0 - k) * math.log(2 * n) + (k + 0.5) * np.log(k)


def q_function(n: int, k: int) -> float:
    """``q(k) = (2n)^(1-k) k^(k+1/2)`` (evaluated through its logarithm)."""
    return float(np.exp(log_q(n, k)))


def q_max(n: int) -> tuple[int, float]:
    """Brute-force maximum of ``q`` over ``1..n`` as ``(argmax, value)``, smallest k on ties.

    Also certifies that the maximum sits at an endpoint and that ``ln q`` is
    convex on the integer range.
    """
    if n < 3:
        raise ParameterError("q_max needs n >= 3")
    k = np.arange(1, n + 1)
    lq = log_q(n, k)
    top = lq.max()
    arg = int(k[np.flatnonzero(lq >= top - _TOL * max(1.0, abs(top)))[0]])
    ends = max(lq[0], lq[-1])
    if abs(top - ends) > _TOL * max(1.0, abs(top)):
        raise AssertionError(f"q maximum for n={n} is interior")
    second = lq[2:] - 2 * lq[1:-1] + lq[:-2]
    if np.any(second < -1e-10):
        raise AssertionError(f"ln q is not convex for n={n}")
    return arg, float(np.exp(top))


@dataclass
class RescaledCheck:
    violations: int
    worst_ratio: float
    samples: int


def check_rescaled_bound(rm: RescaledMap, kmax: int, samples: int = 1000, seed: int = 0) -> RescaledCheck:
    """Compare jet estimates of ``||d^k g_i(t)||`` for ``t`` in the radius-2 ball with ``C0 L0^n``."""
    if not 1 <= kmax <= 6:
        raise ParameterError("kmax must lie in [1, 6]")
    sys = rm.base
    C0 = compute_C0(sys.m, sys.M0, sys.rho)
    log_bound = math.log(C0) + rm.n * math.log(sys.L0)
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(samples, sys.m))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    t = 2.0 * g * rng.uniform(size=(samples, 1)) ** (1.0 / sys.m)
    worst, bad = -np.inf, 0
    for i in range(1, rm.count + 1):
        est = rm.derivative_norms(i, t, kmax)
        with np.errstate(divide="ignore"):
            ratio = np.log(est) - log_bound
        worst = max(worst, float(ratio.max()))
        bad += int(np.sum(ratio > _TOL))
    return RescaledCheck(bad, float(np.exp(worst)), samples * rm.count)


# ----------------------------------------------------------------------------
# reparametrization counts and the bound chain

def kappa(sched: BoundSchedule, n: int, s: float) -> float:
    """``ln kappa = ln mu + nu ln ln C_n + (2m / s) ln C_n`` with ``C_n = C0 L0^n``."""
    if not 1 <= s <= n:
        raise ParameterError("need 1 <= s <= n")
    lc = float(sched.log_C(n))
    if lc <= 1.0:
        raise ScaleTooSmall(f"C_n = exp({lc:g}) <= e: scale too small for the log-log term")
    m = sched.m
    return float(sched.model.log_mu(s, m) + sched.model.nu(s, m) * math.log(lc) + 2 * m / s * lc)


@dataclass
class HlocBound:
    n: int
    s: int
    value: float
    expanded: float
    relaxed: float


def hloc_bound(sched: BoundSchedule, n: int, s: int | None = None) -> HlocBound:
    """Upper bound on the local entropy at scale ``delta(n)``.

    ``value`` is ``ln kappa / n``; ``expanded`` is the same quantity written
    through ``C_n = C0 L0^n``; ``relaxed`` replaces ``ln C0 / n`` by ``ln C0``
    and splits the remaining terms into ``n^(-1/4)`` factors.
    """
    if n < sched.N_threshold:
        raise PreconditionError(f"n = {n} is below the large-n threshold {sched.N_threshold}")
    s = sched.s(n) if s is None else s
    value = kappa(sched, n, s) / n
    m = sched.m
    lc0, ll = math.log(sched.C0), sched.log_L0
    lmu = float(sched.model.log_mu(s, m))
    nu = float(sched.model.nu(s, m))
    inner = math.log(n * ll + lc0)
    expanded = 2 * m / s * (lc0 / n + ll) + (nu * inner + lmu) / n
    relaxed = 2 * m / s * (lc0 + ll) + n ** -0.5 * (n ** -0.25 * nu * n ** -0.25 * inner + n ** -0.5 * lmu)
    return HlocBound(n, int(s), value, expanded, relaxed)


# ----------------------------------------------------------------------------
# the schedule delta(n), s_bar, a(t)

def log_delta(sched: BoundSchedule, n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return -n * sched.log_L0 - 2.0 * np.log(n)


def delta_of_n(sched: BoundSchedule, n: int) -> float:
    """``delta(n) = L0^-n n^-2`` (may underflow to 0 for huge n; use :func:`log_delta`)."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    return float(np.exp(log_delta(sched, n)))


def _step_of_log_t(sched: BoundSchedule, lt: float) -> int:
    """Largest ``n`` with ``ln delta(n) >= lt`` (ties resolved toward ``delta(n)``)."""
    slack = _TOL * max(1.0, abs(lt))
    if lt > float(log_delta(sched, 1)) + slack:
        return 0
    lo, hi = 1, 2
    while float(log_delta(sched, hi)) >= lt - slack:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if float(log_delta(sched, mid)) >= lt - slack:
            lo = mid
        else:
            hi = mid
    return lo


def s_bar(sched: BoundSchedule, t: float) -> int:
    """``s(n)`` for the ``n`` with ``delta(n+1) < t <= delta(n)``."""
    if not t > 0:
        raise ParameterError("t must be positive")
    n = _step_of_log_t(sched, math.log(t))
    if n == 0:
        raise ParameterError("t exceeds delta(1)")
    return sched.s(n)


def a_at_step(sched: BoundSchedule, n):
    """``a(delta(n)) = 1/s(n) + (-ln delta(n))^(-1/2)``; vectorized over ``n``."""
    n = np.asarray(n)
    out = 1.0 / sched.s(n) + 1.0 / np.sqrt(-log_delta(sched, n))
    return float(out) if np.ndim(out) == 0 else out


def a_of_log_t(sched: BoundSchedule, lt: float) -> float:
    n = _step_of_log_t(sched, lt)
    return 1.0 if n == 0 else a_at_step(sched, n)


def a_of_t(sched: BoundSchedule, t: float) -> float:
    """The piecewise-constant modulus ``a(t)``: 1 above ``delta(1)``, else ``a(delta(n))``."""
    if not t > 0:
        raise ParameterError("t must be positive")
    return a_of_log_t(sched, math.log(t))


# ----------------------------------------------------------------------------
# side conditions

def _large_n_parts(sched: BoundSchedule, n) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = np.asarray(n, dtype=float)
    ld = log_delta(sched, n)
    lr = math.log(sched.rho)
    c4 = math.log(4 * math.sqrt(sched.m))
    slack = _TOL * np.maximum(1.0, np.abs(ld))
    first = ld <= -(c4 + n * sched.log_L0 - lr + np.log(n)) + slack
    second = ld <= lr - n * sched.log_L0 + slack
    third = (c4 - lr + 2 * np.log(n)) / n < 1.0
    return first, second, third


def large_n_check(sched: BoundSchedule, n: int) -> bool:
    """``delta(n) <= min((4 sqrt(m) L0^n n / rho)^-1, rho L0^-n)`` and ``ln(4 sqrt(m) n^2 / rho) / n < 1``."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    a, b, c = _large_n_parts(sched, n)
    return bool(a and b and c)


def large_n_threshold(sched: BoundSchedule, sweep: int = 10_000) -> int:
    """First ``n >= 3`` passing :func:`large_n_check`, certified to stay true up to ``sweep``."""
    n = np.arange(1, sweep + 1)
    a, b, c = _large_n_parts(sched, n)
    ok = a & b & c
    if not ok.any():
        raise PreconditionError(f"large-n conditions fail for every n <= {sweep}")
    first = int(np.argmax(ok))
    if not ok[first:].all():
        bad = first + int(np.argmin(ok[first:])) + 1
        raise AssertionError(f"large-n conditions not monotone: fail again at n={bad}")
    return max(3, first + 1)


@dataclass
class ConditionResult:
    name: str
    ok: bool
    first_bad: int | None = None
    detail: str = ""


@dataclass
class ScheduleReport:
    n_max: int
    results: list[ConditionResult]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def failed(self) -> list[ConditionResult]:
        return [r for r in self.results if not r.ok]

    def __str__(self) -> str:
        lines = [f"schedule conditions up to n = {self.n_max}: {'pass' if self.ok else 'FAIL'}"]
        for r in self.results:
            where = "" if r.first_bad is None else f" (first bad n = {r.first_bad})"
            lines.append(f"  {r.name:<14} {'ok ' if r.ok else 'BAD'}{where}  {r.detail}")
        return "\n".join(lines)


def _first_false(mask: np.ndarray, offset: int = 1) -> int | None:
    bad = np.flatnonzero(~mask)
    return None if bad.size == 0 else int(bad[0]) + offset


def _slow_condition(name: str, log_ratio: np.ndarray, n: np.ndarray) -> ConditionResult:
    """Finite-horizon proxy for ``ratio -> 0``: the last decade peaks below the previous
    one, and the final value is under 10% of the overall peak."""
    peak = float(log_ratio.max())
    final = float(log_ratio[-1])
    n_max = int(n[-1])
    last = log_ratio[n > n_max // 10]
    prev = log_ratio[(n > n_max // 100) & (n <= n_max // 10)]
    decreasing = prev.size == 0 or last.max() < prev.max()
    small = final < math.log(0.1) + peak
    ok = bool(decreasing and small)
    detail = f"final/peak = {math.exp(final - peak):.4g}"
    return ConditionResult(name, ok, None if ok else n_max, detail)


def schedule_conditions_check(sched: BoundSchedule, n_max: int = 10**6) -> ScheduleReport:
    """Check the smoothness-order conditions and the slow-growth limits up to ``n_max``.

    Limits are proxied on the finite horizon: ``s(n) -> inf`` as
    ``s(n_max) > s(floor(sqrt(n_max)))``; the slow limits as in
    :func:`_slow_condition`.
    """
    if n_max < 100:
        raise ParameterError("n_max must be at least 100")
    n = np.arange(1, n_max + 1)
    s = sched.s(n)
    res = []
    inc = np.diff(s)
    res.append(ConditionResult("monotone", bool(np.all(inc >= 0)), _first_false(inc >= 0, 2)))
    res.append(ConditionResult("unit-steps", bool(np.all(inc <= 1)), _first_false(inc <= 1, 2)))
    within = (s >= 1) & (s <= n)
    res.append(ConditionResult("1<=s(n)<=n", bool(within.all()), _first_false(within)))
    grows = bool(s[-1] > s[math.isqrt(n_max) - 1])
    res.append(ConditionResult("unbounded", grows, None if grows else n_max,
                               f"s(sqrt n_max) = {s[math.isqrt(n_max) - 1]}, s(n_max) = {s[-1]}"))
    quarter = 0.25 * np.log(n)
    model = sched.model
    for dim, tag in ((sched.m + 1, "slow"), (sched.m, "converging")):
        lmu = np.asarray(model.log_mu(s, dim), dtype=float) - quarter
        with np.errstate(divide="ignore"):
            lnu = np.log(np.asarray(model.nu(s, dim), dtype=float)) - quarter
        res.append(_slow_condition(f"{tag}-mu", lmu, n))
        if np.all(np.isneginf(lnu)):
            res.append(ConditionResult(f"{tag}-nu", True, None, "nu = 0"))
        else:
            res.append(_slow_condition(f"{tag}-nu", lnu, n))
    ld = log_delta(sched, n)
    N = sched.N_threshold
    step = (1.0 / n <= math.log(math.e * sched.L0) / -ld + _TOL)[N - 1:]
    res.append(ConditionResult("1/n-vs-delta", bool(step.all()), _first_false(step, N)))
    return ScheduleReport(n_max, res)


# ----------------------------------------------------------------------------
# small Lipschitz maps and the suspension reduction

@dataclass
class SmallLipschitzBound:
    n: int
    N1: int
    value: float
    C1: float


def small_lipschitz_threshold(sys: AnalyticSystem, sched: BoundSchedule, sweep: int = 10**6) -> int:
    """First ``n`` with ``delta(n) <= rho(sys) Lip(sys)^-n``; it stays true since ``Lip < L0``."""
    if not sys.L0 < sched.L0:
        raise PreconditionError(f"Lipschitz constant {sys.L0:g} must be below L0 = {sched.L0:g}")
    lr, ll = math.log(sys.rho), math.log(sys.L0)
    n = 1
    while n <= sweep:
        ld = float(log_delta(sched, n))
        if ld <= lr - n * ll + _TOL * max(1.0, abs(ld)):
            return n
        n += 1
    raise PreconditionError(f"no threshold below {sweep}")


def small_lipschitz_bound(sys: AnalyticSystem, sched: BoundSchedule, n: int) -> SmallLipschitzBound:
    """Local-entropy bound at ``delta(n)`` for a map stretching less than ``L0``.

    Uses dimension ``m + 1`` in the model (``m = sched.m``) so the same
    constant covers suspensions; ``C1 = value / a(delta(n))``.
    """
    N1 = small_lipschitz_threshold(sys, sched)
    if n < N1:
        raise PreconditionError(f"n = {n} is below the threshold N1 = {N1}")
    s = sched.s(n)
    dim = sched.m + 1
    lc0 = math.log(compute_C0(sys.m, sys.M0, sys.rho))
    ll = math.log(sys.L0)
    lmu = float(sched.model.log_mu(s, dim))
    nu = float(sched.model.nu(s, dim))
    value = (2 * dim / s * (lc0 + ll)
             + n ** -0.5 * (n ** -0.25 * nu * n ** -0.25 * math.log(n * ll + lc0) + n ** -0.5 * lmu))
    return SmallLipschitzBound(n, N1, value, value / a_at_step(sched, n))


def c3_ratio_bound(sched: BoundSchedule, i: int, n_max: int = 10**4) -> float:
    """``max_{i < n <= n_max} a(delta(n - i)) / a(delta(n))``; 1 for ``i = 0``."""
    if i < 0:
        raise ParameterError("i must be non-negative")
    if i == 0:
        return 1.0
    if n_max <= i:
        raise ParameterError("n_max must exceed i")
    n = np.arange(i + 1, n_max + 1)
    ratio = a_at_step(sched, n - i) / a_at_step(sched, n)
    out = float(ratio.max())
    if not math.isfinite(out):
        raise AssertionError("shift ratio is not finite")
    return out


def shift_inequality_holds(sched: BoundSchedule, i: int, n_max: int = 10**4) -> bool:
    """``delta(n) L0^i <= delta(n - i)`` for every ``i < n <= n_max``."""
    n = np.arange(i + 1, n_max + 1)
    lhs = log_delta(sched, n) + i * sched.log_L0
    rhs = log_delta(sched, n - i)
    return bool(np.all(lhs <= rhs + _TOL * np.maximum(1.0, np.abs(rhs))))


@dataclass
class SuspensionBound:
    value: float
    i: int
    C2: float
    a_shifted: float


def suspension_reduction_bound(susp, sched: BoundSchedule, delta: float,
                               n_sweep: int = 1000) -> SuspensionBound:
    """``i C2 a(delta L0^i)``: the time-one bound transported from the time-``1/i`` map.

    ``C2`` is the largest ``C1`` of :func:`small_lipschitz_bound` on the
    time-``1/i`` map over ``n`` from its threshold to ``n_sweep``.
    """
    step = susp.step_system()
    N1 = small_lipschitz_threshold(step, sched)
    C2 = max(small_lipschitz_bound(step, sched, n).C1 for n in range(N1, max(N1, n_sweep) + 1))
    a_shift = a_of_log_t(sched, math.log(delta) + susp.i * sched.log_L0)
    return SuspensionBound(susp.i * C2 * a_shift, susp.i, C2, a_shift)


# ----------------------------------------------------------------------------
# envelope certification

@dataclass
class EnvelopeReport:
    system: str
    checks: int
    violations: int
    worst_log_margin: float


def certify_envelopes(systems, alpha_max: int = 5, n_max: int = 6, points: int = 1000,
                      seed: int = 0) -> list[EnvelopeReport]:
    """Count jet estimates of ``||d^k f^n||`` exceeding the order-``k`` envelope.

    Systems without jets are skipped.  ``worst_log_margin`` is the largest
    ``ln(estimate) - ln(envelope)``; zero violations means it stays negative.
    """
    out = []
    rng = np.random.default_rng(seed)
    for sys in systems:
        if not getattr(sys, "has_jets", False):
            continue
        x = sys.space.sample(points, rng)
        worst, bad, checks = -np.inf, 0, 0
        for n in range(1, n_max + 1):
            env = CauchyEnvelope(sys.m, sys.M0, sys.rho, sys.L0, n)
            est = jet_norms(sys, x, n, alpha_max)
            bounds = np.array([cauchy_derivative_bound(env, _order_index(sys.m, k))
                               for k in range(1, alpha_max + 1)])
            with np.errstate(divide="ignore"):
                margin = np.log(est) - bounds
            worst = max(worst, float(margin.max()))
            bad += int(np.sum(margin > 0))
            checks += margin.size
        out.append(EnvelopeReport(sys.name, checks, bad, worst))
    return out


def _order_index(m: int, k: int) -> np.ndarray:
    a = np.zeros(m, dtype=np.int64)
    a[0] = k
    return a


def bound_curve_rows(sched: BoundSchedule, n_max: int = 10**4) -> list[dict]:
    """Rows ``n, delta, log_delta, s, a, hloc_bound, large_n`` for ``n = 1..n_max``."""
    n = np.arange(1, n_max + 1)
    ld = log_delta(sched, n)
    a = a_at_step(sched, n)
    s = sched.s(n)
    parts = _large_n_parts(sched, n)
    ok = parts[0] & parts[1] & parts[2]
    N = sched.N_threshold if sched.C0 is not None else None
    rows = []
    for k in range(n.size):
        h = ""
        if N is not None and n[k] >= N:
            h = f"{hloc_bound(sched, int(n[k])).value:.12g}"
        rows.append({"n": int(n[k]), "delta": f"{math.exp(ld[k]):.12g}", "log_delta": f"{ld[k]:.12g}",
                     "s": int(s[k]), "a": f"{a[k]:.12g}", "hloc_bound": h, "large_n": int(ok[k])})
    return rows
