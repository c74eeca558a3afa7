"""Deterministic numerics for Poisson branching processes and the diameter
predictions built on them.

Notation: ``lam`` is the offspring mean, ``eps = lam - 1``, ``s`` the
survival probability, ``lam_star`` the offspring mean of the process
conditioned to die out (``lam_star * exp(-lam_star) == lam * exp(-lam)``)
and ``delta = lam - 1 - log(lam)``.  Logs are natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

DEFAULT_TOL = 1e-12
MAX_BISECTION = 128
# above this mean the dual parameter is found by iterating in log space,
# where lam * (1 - s) would lose all its digits
LARGE_LAMBDA = 8.0
WINDOW_THRESHOLD = 10.0


class DomainError(ValueError):
    """Argument outside the mathematical domain of the quantity."""


class PrecisionError(ArithmeticError):
    """A truncated computation cannot meet its accuracy target."""


class WindowError(ValueError):
    """Parameters fall inside the critical window, where no formula applies."""


def survival_probability(lam: float, tol: float = DEFAULT_TOL) -> float:
    """Positive root of ``1 - s = exp(-lam s)``, or 0 when ``lam <= 1``.

    Plain bisection on ``[tol, 1)``; the function ``1 - s - exp(-lam s)`` is
    positive just right of 0 and negative at 1 whenever ``lam > 1``.
    """
    if lam <= 0 or tol <= 0:
        raise DomainError("lambda and tol must be positive")
    if lam <= 1:
        return 0.0

    def f(s):
        return -math.expm1(-lam * s) - s

    lo, hi = tol, 1.0
    if f(lo) <= 0:  # tol beyond the root itself
        lo = 0.0
    for _ in range(MAX_BISECTION):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    s = lo if abs(f(lo)) <= abs(f(hi)) else hi
    if abs(f(s)) > tol:
        raise PrecisionError(f"bisection residual {abs(f(s)):.3g} exceeds tol {tol:g}")
    return s


def log_dual_parameter(lam: float, tol: float = DEFAULT_TOL) -> float:
    """``log(lam_star)``; finite even where ``lam_star`` underflows."""
    if lam <= 1:
        raise DomainError(f"dual parameter needs lambda > 1, got {lam}")
    if lam < LARGE_LAMBDA:
        s = survival_probability(lam, tol)
        # 1 - s = exp(-lam s) by definition
        return math.log(lam) - lam * s
    # lam_star = lam exp(lam_star - lam): a strong contraction here
    base = math.log(lam) - lam
    ell = base
    for _ in range(200):
        nxt = base + math.exp(ell)
        if abs(nxt - ell) <= 1e-17 * max(1.0, abs(ell)):
            ell = nxt
            break
        ell = nxt
    return ell


def dual_parameter(lam: float, tol: float = DEFAULT_TOL) -> float:
    """``lam_star = lam (1 - s)`` for ``lam > 1``.

    Raises :class:`DomainError` for ``lam <= 1`` and
    :class:`PrecisionError` if the identity
    ``lam_star exp(-lam_star) = lam exp(-lam)`` is off by more than
    ``10 tol``.
    """
    mu = math.exp(log_dual_parameter(lam, tol))
    resid = abs(mu * math.exp(-mu) - lam * math.exp(-lam))
    if resid > 10 * tol:
        raise PrecisionError(f"duality residual {resid:.3g}")
    return mu


def undual(lam_star: float) -> float:
    """The mean ``mu > 1`` with ``mu exp(-mu) = lam_star exp(-lam_star)``;
    the inverse of :func:`dual_parameter`.  Returns 1 for ``lam_star = 1``."""
    if not 0 < lam_star <= 1:
        raise DomainError(f"need 0 < lam_star <= 1, got {lam_star}")
    if lam_star == 1:
        return 1.0
    target = math.log(lam_star) - lam_star

    def h(mu):  # log(mu) - mu is decreasing on (1, inf)
        return math.log(mu) - mu - target

    lo, hi = 1.0, 2.0
    while h(hi) > 0:
        lo, hi = hi, 2 * hi
    for _ in range(MAX_BISECTION):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BranchingParams:
    lam: float
    eps: float
    s: float
    lam_star: float | None
    log_lam_star: float | None
    delta: float
    n: int | None = None
    Lambda: float | None = None

    @classmethod
    def from_lambda(cls, lam: float, n: int | None = None,
                    tol: float = DEFAULT_TOL) -> BranchingParams:
        if lam <= 0:
            raise DomainError("lambda must be positive")
        eps = lam - 1.0
        if lam > 1:
            ell = log_dual_parameter(lam, tol)
            mu = math.exp(ell)
            s = survival_probability(lam, tol) if lam < LARGE_LAMBDA else 1.0 - mu / lam
        else:
            ell, mu, s = None, None, 0.0
        big = None if n is None else abs(eps) ** 3 * n
        return cls(lam, eps, s, mu, ell, lam - 1.0 - math.log(lam), n, big)

    def residuals(self) -> tuple[float, float]:
        """``(|1 - s - e^{-lam s}|, |lam* e^{-lam*} - lam e^{-lam}|)``."""
        r1 = abs(-math.expm1(-self.lam * self.s) - self.s)
        r2 = 0.0
        if self.lam_star is not None:
            r2 = abs(self.lam_star * math.exp(-self.lam_star) - self.lam * math.exp(-self.lam))
        return r1, r2


@dataclass(frozen=True)
class FiniteSurvival:
    """``s[t]`` = probability that the dual process is alive at generation
    ``t``, from ``s[0] = 1``; ``d[t] = 1 - s[t]``."""

    eps: float
    lam_star: float
    s: np.ndarray

    @property
    def d(self) -> np.ndarray:
        return 1.0 - self.s

    def closed_form(self, t) -> np.ndarray:
        """Large-``t`` approximation ``2 eps / (lam_star**-t - 1)``."""
        t = np.asarray(t, dtype=np.float64)
        return 2 * self.eps / np.expm1(-t * math.log(self.lam_star))


def finite_survival(lam_star: float, T: int) -> FiniteSurvival:
    if not 0 < lam_star <= 1:
        raise DomainError(f"need 0 < lam_star <= 1, got {lam_star}")
    if T < 1:
        raise DomainError("T must be at least 1")
    s = np.empty(T + 1)
    s[0] = 1.0
    for t in range(T):
        s[t + 1] = -math.expm1(-lam_star * s[t])
    return FiniteSurvival(undual(lam_star) - 1.0, lam_star, s)


@dataclass(frozen=True)
class Gamma0Estimate:
    eps: np.ndarray
    products: np.ndarray  # prod_{t>=1} (1 - s_t) per eps
    ratios: np.ndarray  # products / eps**2
    gamma0: float  # extrapolated to eps -> 0


def _survival_log_product(lam_star: float, T: int) -> float:
    total = 0.0
    st = 1.0
    for _ in range(T):
        st = -math.expm1(-lam_star * st)
        total += math.log1p(-st)
    return total


def gamma0_estimate(eps_list, T_cap: int | None = None) -> Gamma0Estimate:
    """``P(eps) = prod_{t=1}^{T} (1 - s_t)`` for each ``eps``, the ratios
    ``P / eps**2`` and a Richardson extrapolation to ``eps -> 0``.

    Without ``T_cap`` each product runs until ``lam_star**T < 1e-12``;
    with it, a cap for which ``lam_star**T_cap >= 1e-8`` raises
    :class:`PrecisionError`.  The ratio is linear in ``eps`` to first
    order, so the two smallest ``eps`` are combined as
    ``(e1 r2 - e2 r1) / (e1 - e2)``.
    """
    eps = np.asarray(eps_list, dtype=np.float64).ravel()
    if eps.size == 0 or np.any(eps <= 0):
        raise DomainError("eps values must be positive")
    prods = np.empty(eps.size)
    for i, e in enumerate(eps):
        ls = dual_parameter(1.0 + e)
        if T_cap is None:
            T = int(math.ceil(math.log(1e-12) / math.log(ls))) + 1
        else:
            T = int(T_cap)
            if T * math.log(ls) >= math.log(1e-8):
                raise PrecisionError(
                    f"lam_star**T_cap = {ls ** T:.3g} for eps={e}: tail not negligible")
        prods[i] = math.exp(_survival_log_product(ls, T))
    ratios = prods / eps ** 2
    if eps.size == 1:
        g0 = float(ratios[0])
    else:
        o = np.argsort(eps)
        e1, e2 = eps[o[0]], eps[o[1]]
        r1, r2 = ratios[o[0]], ratios[o[1]]
        g0 = float((e2 * r1 - e1 * r2) / (e2 - e1))
    return Gamma0Estimate(eps, prods, ratios, g0)


def log_poisson_cdf(lam: float, k: int) -> float:
    """``log Pr(Po(lam) <= k)``, summed in log space."""
    if lam < 0 or k < 0:
        raise DomainError("need lam >= 0 and k >= 0")
    if lam == 0:
        return 0.0
    j = np.arange(int(k) + 1, dtype=np.float64)
    terms = j * math.log(lam) - lam - gammaln(j + 1)
    return float(min(0.0, logsumexp(terms)))


def poisson_cdf(lam: float, k: int) -> float:
    return math.exp(log_poisson_cdf(lam, k))


@dataclass
class GFunction:
    """``g`` on ``[0, 1)`` from ``lam_star**g(a) = Pr(Z <= floor(lam**(1-a)))``
    with ``Z ~ Po(lam)``, extended by ``g(x) = floor(x) + g(x - floor(x))``.

    The Poisson CDF only changes at integer thresholds, so values are
    cached per threshold.
    """

    lam: float
    _log_ls: float = field(init=False, repr=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.lam < 3:
            raise DomainError(f"g is only defined here for lambda >= 3, got {self.lam}")
        self._log_ls = log_dual_parameter(self.lam)

    def threshold(self, a: float) -> int:
        # floor with a guard against lam**(1-a) landing a hair below an integer
        v = self.lam ** (1.0 - a)
        k = math.floor(v)
        if v - k > 1 - 1e-12:
            k += 1
        return max(k, 0)

    def frac(self, a: float) -> float:
        k = self.threshold(a)
        val = self._cache.get(k)
        if val is None:
            val = log_poisson_cdf(self.lam, k) / self._log_ls
            self._cache[k] = val
        return val

    def __call__(self, x):
        xs = np.asarray(x, dtype=np.float64)
        fl = np.floor(xs)
        out = np.array([self.frac(a) for a in (xs - fl).ravel()]).reshape(xs.shape) + fl
        return float(out) if out.ndim == 0 else out


def g_function(lam: float, x):
    return GFunction(lam)(x)


def conditioned_mean(lam: float, t: float) -> float:
    """``E(|X_t| | survival) = (lam**t - (1 - s) lam_star**t) / s``."""
    if lam <= 1:
        raise DomainError("conditioning on survival needs lambda > 1")
    if t < 0:
        raise DomainError("t must be non-negative")
    p = BranchingParams.from_lambda(lam)
    return (lam ** t - (1.0 - p.s) * p.lam_star ** t) / p.s


REGIMES = ("subcritical", "near_critical", "constant", "growing_lambda")


@dataclass(frozen=True)
class PredictionRecord:
    """Predicted diameter and the characteristic times behind it.

    For supercritical regimes ``target`` is ``n`` (or ``eps**3 n`` near
    criticality), ``omega = target**(1/6)`` and

    * ``t0 = log(target) / log(1/lam_star)``, the height of the tallest trees,
    * ``t1 = log(omega) / log(lam)``, the time to grow a neighbourhood to ``omega``,
    * ``t2 = log(target / omega**2) / log(lam)``, the time for two such
      neighbourhoods to meet,

    so that ``d0 = 2 t0 + 2 t1 + t2``.  In the subcritical regime only
    ``t0 = log(2 eps**3 n) / log(1/lam)`` is defined and ``d0 = t0``.
    """

    n: int
    lam: float
    regime: str
    d0: float
    t0: float
    t1: float | None
    t2: float | None
    omega: float | None
    normal_form: int | None = None

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in
                ("n", "lam", "regime", "d0", "t0", "t1", "t2", "omega", "normal_form")}


def detect_regime(n: int, lam: float) -> str:
    if lam < 1:
        return "subcritical"
    if lam <= 1.2:
        return "near_critical"
    if lam <= math.log(n):
        return "constant"
    return "growing_lambda"


def predict_diameter(n: int, lam: float, regime: str = "auto") -> PredictionRecord:
    """Predicted diameter of ``G(n, lam/n)``.

    ``regime="auto"`` picks subcritical below 1, near-critical on (1, 1.2],
    constant up to ``log n`` and growing beyond.  Sub- and near-critical
    predictions require ``|eps|**3 n >= 10``.
    """
    if n < 3:
        raise DomainError("n must be at least 3")
    if lam <= 0 or lam == 1:
        raise DomainError("lambda must be positive and different from 1")
    if regime == "auto":
        regime = detect_regime(n, lam)
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    eps = lam - 1.0
    if regime in ("subcritical", "near_critical") and abs(eps) ** 3 * n < WINDOW_THRESHOLD:
        raise WindowError(
            f"|eps|^3 n = {abs(eps) ** 3 * n:.3g} < {WINDOW_THRESHOLD:g}: inside the "
            "critical window, where the diameter has no formula of this kind")
    if regime == "subcritical":
        if lam > 1:
            raise DomainError("subcritical regime needs lambda < 1")
        t0 = math.log(2 * abs(eps) ** 3 * n) / -math.log(lam)
        return PredictionRecord(n, lam, regime, t0, t0, None, None, None)
    if lam < 1:
        raise DomainError(f"{regime} regime needs lambda > 1")
    log_ls = log_dual_parameter(lam)
    target = eps ** 3 * n if regime == "near_critical" else float(n)
    L = math.log(target)
    omega = target ** (1.0 / 6.0)
    t0 = L / -log_ls
    t1 = math.log(omega) / math.log(lam)
    t2 = (L - 2 * math.log(omega)) / math.log(lam)
    d0 = 2 * t0 + 2 * t1 + t2
    nf = None
    if regime == "growing_lambda":
        nf = int(math.ceil(L / math.log(lam)) + 2 * math.floor(t0) + 1)
    return PredictionRecord(n, lam, regime, d0, t0, t1, t2, omega, nf)
