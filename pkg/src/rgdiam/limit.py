"""Sampler for ``D = sup_{i<j} (z_i + z_j + T_ij)``.

``z_1 > z_2 > ...`` are the points of a Poisson process on the line with
intensity ``4 gamma1 e^{-x}`` and the ``T_ij`` are independent with
``Pr(T > x) = exp(-e^x)``.  Points come from unit-rate arrival times,
``z_k = -log(G_k / (4 gamma1))``.

Every random quantity of a sample is drawn from a stream tied to its role
(arrival times, or row ``i`` of the ``T`` matrix, read left to right), so
asking for more points or more pairs extends a sample instead of
re-drawing it.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1

from .rng import stream

_TAG_POINTS, _TAG_T, _TAG_CURVE = 11, 12, 13


class TruncationError(RuntimeError):
    pass


def default_tau(K: int, level: float = 1e-6) -> float:
    """Smallest ``tau`` with ``K**2 exp(-e**tau) <= level``."""
    return math.log(math.log(K * K / level))


@dataclass(frozen=True)
class LimitParams:
    gamma1: float
    K: int = 64
    tau: float | None = None
    delta_trunc: float = 1e-4
    max_K: int = 1 << 14

    def __post_init__(self):
        if self.gamma1 <= 0:
            raise ValueError("gamma1 must be positive")
        if self.K < 2:
            raise ValueError("K must be at least 2")

    def tau_for(self, K: int) -> float:
        return self.tau if self.tau is not None else default_tau(K)


def _open_uniform(rng: np.random.Generator, size=None):
    u = rng.random(size)
    # random() is on [0, 1); 0 would give an infinite T
    while np.any(u == 0):
        u = np.where(u == 0, rng.random(size), u)
    return u


def sample_T(rng: np.random.Generator, size=None):
    """``T = log(-log U)``, so that ``Pr(T > x) = exp(-e^x)``."""
    return np.log(-np.log(_open_uniform(rng, size)))


def points_from_arrivals(arrivals: np.ndarray, gamma1: float) -> np.ndarray:
    return -np.log(np.asarray(arrivals) / (4.0 * gamma1))


def sample_points(gamma1: float, K: int, seed=0, trials: int | None = None) -> np.ndarray:
    """The ``K`` largest points, in decreasing order.  With ``trials`` a
    ``(trials, K)`` array of independent copies."""
    if K < 2 or gamma1 <= 0:
        raise ValueError("need K >= 2 and gamma1 > 0")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, _TAG_POINTS)
    shape = (K,) if trials is None else (trials, K)
    gaps = rng.standard_exponential(shape)
    return points_from_arrivals(np.cumsum(gaps, axis=-1), gamma1)


class _Sample:
    """Lazily extended randomness of one draw of ``D``."""

    def __init__(self, seed: int, index: int, gamma1: float):
        self.seed, self.index, self.gamma1 = seed, index, gamma1
        self._prng = stream(seed, _TAG_POINTS, index)
        self._arrivals = np.zeros(0)
        self._rows: dict[int, tuple[np.random.Generator, list[float]]] = {}

    def points(self, K: int) -> np.ndarray:
        if self._arrivals.size < K:
            last = self._arrivals[-1] if self._arrivals.size else 0.0
            more = last + np.cumsum(self._prng.standard_exponential(K - self._arrivals.size))
            self._arrivals = np.concatenate([self._arrivals, more])
        return points_from_arrivals(self._arrivals[:K], self.gamma1)

    def T(self, i: int, j: int) -> float:
        row = self._rows.get(i)
        if row is None:
            row = (stream(self.seed, _TAG_T, self.index, i), [])
            self._rows[i] = row
        rng, vals = row
        need = j - i - len(vals)
        if need > 0:
            vals.extend(sample_T(rng, max(need, 16)).tolist())
        return vals[j - i - 1]


@dataclass(frozen=True)
class LimitSample:
    """One draw of ``D``.

    ``certificate`` bounds the probability that some pair not examined
    (unexamined pairs among the retained points, or pairs involving points
    beyond ``z[-1]``) exceeds ``D``.
    """

    D: float
    z: np.ndarray
    certificate: float
    pairs: int
    argmax: tuple[int, int]

    @property
    def K(self) -> int:
        return int(self.z.size)


def _scan(z: np.ndarray, T, tau: float) -> tuple[float, tuple[int, int], int]:
    """Pairs in decreasing ``z_i + z_j`` order until ``z_i + z_j + tau`` drops
    below the best value seen."""
    K = z.size
    best = -math.inf
    arg = (0, 1)
    heap = [(-(z[0] + z[1]), 0, 1)]
    seen = 0
    while heap:
        negs, i, j = heapq.heappop(heap)
        if -negs + tau < best:
            break
        val = -negs + T(i, j)
        seen += 1
        if val > best:
            best, arg = val, (i, j)
        if j + 1 < K:
            heapq.heappush(heap, (-(z[i] + z[j + 1]), i, j + 1))
        if j == i + 1 and i + 2 < K:
            heapq.heappush(heap, (-(z[i + 1] + z[i + 2]), i + 1, i + 2))
    return best, arg, seen


def _certificate(z: np.ndarray, best: float, seen: int, tau: float, gamma1: float) -> float:
    K = z.size
    # retained pairs never examined: each has sum below best - tau
    unexamined = K * (K - 1) // 2 - seen
    a = unexamined * math.exp(-math.exp(tau))
    # pairs with one point beyond z_K: integrating the intensity against
    # Pr(T > best - z_i - x) over x < z_K gives
    # 4 gamma1 e^{z_i - best} exp(-e^{best - z_i - z_K}) per retained i
    zk = z[-1]
    gap = best - z
    b = float(np.sum(4 * gamma1 * np.exp(-gap) * np.exp(-np.exp(np.minimum(gap - zk, 700)))))
    # both points beyond z_K
    c = 8 * gamma1 ** 2 * math.exp(-best) * float(exp1(math.exp(min(best - 2 * zk, 700))))
    return a + b + c


def sample_D(params: LimitParams, seed: int = 0, index: int = 0,
             fixed_K: bool = False) -> LimitSample:
    """One draw of ``D``.  The point budget doubles until the certificate is
    at most ``delta_trunc`` (unless ``fixed_K``); running out of budget
    raises :class:`TruncationError`."""
    smp = _Sample(seed, index, params.gamma1)
    K = params.K
    while True:
        z = smp.points(K)
        tau = params.tau_for(K)
        best, arg, seen = _scan(z, smp.T, tau)
        cert = _certificate(z, best, seen, tau, params.gamma1)
        if fixed_K or cert <= params.delta_trunc:
            return LimitSample(best, z, cert, seen, arg)
        if K >= params.max_K:
            raise TruncationError(f"certificate {cert:.3g} still above "
                                  f"{params.delta_trunc:g} at K={K}")
        K = min(2 * K, params.max_K)


def sample_D_from(z: np.ndarray, T: np.ndarray) -> float:
    """``max_{i<j} z_i + z_j + T[i, j]`` by brute force (test oracle)."""
    K = z.size
    iu, ju = np.triu_indices(K, 1)
    return float(np.max(z[iu] + z[ju] + T[iu, ju]))


@dataclass(frozen=True)
class SurvivalCurve:
    c: np.ndarray
    raw: np.ndarray
    corrected: np.ndarray
    stderr: np.ndarray
    trials: int
    monotone_raw: bool

    def to_json(self) -> dict:
        return {"c": self.c.tolist(), "raw": self.raw.tolist(),
                "corrected": self.corrected.tolist(), "stderr": self.stderr.tolist(),
                "trials": self.trials, "monotone_raw": self.monotone_raw}


def draw_many(params: LimitParams, trials: int, seed: int = 0) -> np.ndarray:
    return np.array([sample_D(params, seed, i).D for i in range(trials)])


def survival_curve(gamma1: float, c_grid, trials: int, seed: int = 0,
                   params: LimitParams | None = None) -> SurvivalCurve:
    """Monte Carlo ``Pr(D >= c)`` on ``c_grid`` with binomial standard errors.
    ``corrected`` is the running minimum of ``raw``, the closest
    non-increasing curve from above."""
    params = params or LimitParams(gamma1)
    c = np.asarray(c_grid, dtype=np.float64)
    D = np.sort(draw_many(params, trials, seed))
    raw = 1.0 - np.searchsorted(D, c, side="left") / trials
    se = np.sqrt(raw * (1 - raw) / trials)
    corrected = np.minimum.accumulate(raw)
    return SurvivalCurve(c, raw, corrected, se, trials, bool(np.all(np.diff(raw) <= 0)))


def parse_grid(spec: str) -> np.ndarray:
    """``"a:b:step"`` to the inclusive grid ``a, a+step, ..., <= b``."""
    try:
        a, b, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ValueError(f"grid must look like a:b:step, got {spec!r}") from None
    if step <= 0 or b < a:
        raise ValueError("grid needs a <= b and step > 0")
    k = int(math.floor((b - a) / step + 1e-9))
    return a + step * np.arange(k + 1)
