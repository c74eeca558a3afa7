"""Monte Carlo for Poisson Galton-Watson processes.

Unconditioned laws are advanced one generation at a time with a single
Poisson draw of mean ``count * mean`` (a sum of independent Poissons is
Poisson).  The survivor law, Po(s lam) conditioned to be at least 1, is
sampled per particle.  Batch routines run many independent trajectories
side by side; they are deterministic given ``(seed, trials)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .bp_numerics import BranchingParams, DomainError
from .rng import stream

KINDS = ("poisson", "dual", "conditioned_survivor", "critical")
EXTINCT, GEN_CAP, SIZE_CAP = 0, 1, 2
TERMINATION = {EXTINCT: "extinct", GEN_CAP: "hit_generation_cap", SIZE_CAP: "hit_size_cap"}

# purpose tags mixed into seeds so that different experiments never share
# a stream
_TAG_SIM, _TAG_BATCH, _TAG_TAIL, _TAG_Y, _TAG_YSTAR, _TAG_R = range(1, 7)


@dataclass(frozen=True)
class OffspringLaw:
    """Offspring distribution of a Poisson branching process.

    ``lam`` is always the supercritical mean the law is derived from:
    ``dual`` has mean ``lam_star`` and ``conditioned_survivor`` is
    Po(``s lam``) conditioned on being at least 1 (its mean is ``lam``).
    """

    kind: str
    lam: float = 1.0
    _table: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown law {self.kind!r}")
        if self.kind in ("dual", "conditioned_survivor") and self.lam <= 1:
            raise DomainError(f"{self.kind} law needs lambda > 1")
        if self.lam < 0:
            raise DomainError("lambda must be non-negative")
        if self.kind == "conditioned_survivor":
            object.__setattr__(self, "_table", _tail_cdf(self.inner_mean, 2))

    @classmethod
    def poisson(cls, lam: float) -> OffspringLaw:
        return cls("poisson", lam)

    @classmethod
    def dual(cls, lam: float) -> OffspringLaw:
        return cls("dual", lam)

    @classmethod
    def conditioned(cls, lam: float) -> OffspringLaw:
        return cls("conditioned_survivor", lam)

    @classmethod
    def critical(cls) -> OffspringLaw:
        return cls("critical", 1.0)

    @property
    def params(self) -> BranchingParams:
        return BranchingParams.from_lambda(self.lam)

    @property
    def inner_mean(self) -> float:
        """Poisson parameter before conditioning (``s lam``)."""
        return self.params.s * self.lam

    @property
    def mean(self) -> float:
        if self.kind == "dual":
            return self.params.lam_star
        if self.kind == "critical":
            return 1.0
        return self.lam

    def offspring(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Independent offspring counts of ``size`` particles."""
        if self.kind != "conditioned_survivor":
            return rng.poisson(self.mean, size=size)
        return self.totals(rng, np.ones(size, dtype=np.int64))

    def totals(self, rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
        """Total offspring of ``counts[i]`` particles, for each ``i``."""
        counts = np.asarray(counts, dtype=np.int64)
        if self.kind != "conditioned_survivor":
            return rng.poisson(self.mean * counts.astype(np.float64))
        # each particle has exactly one child with probability lam_star;
        # the others draw from Po(s lam) conditioned on >= 2
        many = rng.binomial(counts, 1.0 - self.params.lam_star)
        out = counts - many
        k = int(many.sum())
        if k:
            u = rng.random(k)
            draws = 2 + np.searchsorted(self._table, u, side="right")
            owner = np.repeat(np.arange(counts.size), many)
            out += np.bincount(owner, weights=draws, minlength=counts.size).astype(np.int64)
        return out


def _tail_cdf(mu: float, lo: int) -> np.ndarray:
    """CDF of Po(mu) conditioned on ``>= lo``, over ``lo, lo+1, ...``,
    truncated where the remaining mass is below 1e-17."""
    top = int(mu + 12 * math.sqrt(mu) + 40)
    k = np.arange(lo, top + 1)
    logp = k * math.log(mu) - mu - gammaln(k + 1)
    p = np.exp(logp - logp.max())
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    return cdf[:-1]


@dataclass(frozen=True)
class GWTrajectory:
    sizes: np.ndarray
    termination: str
    seed: int

    @property
    def generations(self) -> int:
        return int(self.sizes.size) - 1


def simulate(law: OffspringLaw, initial: int = 1, gen_cap: int = 1000,
             size_cap: int = 10 ** 9, seed: int = 0) -> GWTrajectory:
    """One trajectory, stopped at extinction, at generation ``gen_cap`` or
    once the population reaches ``size_cap``."""
    if gen_cap < 1 or size_cap < 1:
        raise ValueError("caps must be at least 1")
    rng = stream(seed, _TAG_SIM)
    sizes = [int(initial)]
    x = int(initial)
    term = EXTINCT
    while True:
        if x == 0:
            term = EXTINCT
            break
        if x >= size_cap:
            term = SIZE_CAP
            break
        if len(sizes) - 1 >= gen_cap:
            term = GEN_CAP
            break
        x = int(law.totals(rng, np.array([x]))[0])
        sizes.append(x)
    return GWTrajectory(np.array(sizes, dtype=np.int64), TERMINATION[term], seed)


def hitting_time(traj: GWTrajectory | np.ndarray, threshold: float) -> int | None:
    """First generation whose size is at least ``threshold``."""
    if threshold < 1:
        raise ValueError("threshold must be at least 1")
    sizes = traj.sizes if isinstance(traj, GWTrajectory) else np.asarray(traj)
    hit = np.flatnonzero(sizes >= threshold)
    return int(hit[0]) if hit.size else None


@dataclass(frozen=True)
class Batch:
    """Outcome of many independent trajectories.

    ``final[i]`` is the size of trajectory ``i`` at ``stop[i]``, the
    generation where it stopped, and ``termination[i]`` is one of the
    ``EXTINCT``/``GEN_CAP``/``SIZE_CAP`` codes.  With ``record`` the full
    size matrix is kept, padded with -1 after the stop.
    """

    final: np.ndarray
    stop: np.ndarray
    termination: np.ndarray
    sizes: np.ndarray | None = None


def simulate_batch(law: OffspringLaw, trials: int, gen_cap: int,
                   size_cap: float = math.inf, initial: int = 1, seed: int = 0,
                   record: bool = False, rng: np.random.Generator | None = None) -> Batch:
    if gen_cap < 1:
        raise ValueError("gen_cap must be at least 1")
    rng = rng if rng is not None else stream(seed, _TAG_BATCH)
    x = np.full(trials, initial, dtype=np.int64)
    stop = np.zeros(trials, dtype=np.int64)
    term = np.full(trials, GEN_CAP, dtype=np.int8)
    sizes = None
    if record:
        sizes = np.full((trials, gen_cap + 1), -1, dtype=np.int64)
        sizes[:, 0] = x
    active = np.arange(trials)
    for t in range(1, gen_cap + 1):
        done = (x[active] == 0) | (x[active] >= size_cap)
        if done.any():
            gone = active[done]
            stop[gone] = t - 1
            term[gone] = np.where(x[gone] == 0, EXTINCT, SIZE_CAP)
            active = active[~done]
        if active.size == 0:
            break
        x[active] = law.totals(rng, x[active])
        if record:
            sizes[active, t] = x[active]
    else:
        stop[active] = gen_cap
        ext = active[x[active] == 0]
        term[ext] = EXTINCT
        big = active[x[active] >= size_cap]
        term[big] = SIZE_CAP
    return Batch(x, stop, term, sizes)


@dataclass(frozen=True)
class TailEstimate:
    estimate: float
    predicted: float
    stderr: float
    trials: int
    hits: int
    horizon: int
    reliable: bool

    @property
    def ratio(self) -> float:
        return self.estimate / self.predicted

    def to_json(self) -> dict:
        return {"estimate": self.estimate, "predicted": self.predicted, "ratio": self.ratio,
                "stderr": self.stderr, "trials": self.trials, "hits": self.hits,
                "horizon": self.horizon, "reliable": self.reliable}


def slow_growth_tail(lam: float, omega: float, t: int, trials: int, seed: int = 0) -> TailEstimate:
    """Frequency of ``0 < |X_T| < omega/eps`` at ``T = ceil(t1) + t`` with
    ``t1 = log(omega)/log(lam)``, against ``4 eps lam_star**t``."""
    eps = lam - 1.0
    if not 0 < eps <= 0.2:
        raise DomainError("slow_growth_tail needs 0 < lambda - 1 <= 0.2")
    if omega < 10:
        raise DomainError("omega must be at least 10")
    if t < 0:
        raise DomainError("t must be non-negative")
    p = BranchingParams.from_lambda(lam)
    horizon = int(math.ceil(math.log(omega) / math.log(lam))) + int(t)
    thr = omega / eps
    b = simulate_batch(OffspringLaw.poisson(lam), trials, horizon,
                       rng=stream(seed, _TAG_TAIL, int(t)))
    hit = (b.final > 0) & (b.final < thr)
    k = int(hit.sum())
    est = k / trials
    se = math.sqrt(max(est * (1 - est), 1.0 / trials) / trials)
    return TailEstimate(est, 4 * eps * p.lam_star ** t, se, trials, k, horizon, k > 0)


@dataclass(frozen=True)
class YSamples:
    """``y = |X_T| / lam**T`` per trial; ``truncated`` counts trials that
    reached ``size_cap`` and were continued at their mean growth."""

    y: np.ndarray
    lam: float
    horizon: int
    truncated: int

    @property
    def survived(self) -> np.ndarray:
        return self.y > 0

    @property
    def y_star(self) -> np.ndarray:
        """``s y``, the scale of the survivor process limit."""
        return BranchingParams.from_lambda(self.lam).s * self.y

    @property
    def truncation_warning(self) -> bool:
        return self.truncated > 0.001 * self.y.size


def _martingale(law, lam, horizon, trials, size_cap, rng) -> tuple[np.ndarray, int]:
    b = simulate_batch(law, trials, horizon, size_cap=size_cap, rng=rng)
    y = b.final.astype(np.float64) / lam ** b.stop
    capped = b.termination == SIZE_CAP
    # a capped run's expected future growth is exactly lam per generation,
    # which the division above already accounts for
    k = int(capped.sum())
    if k > 0.001 * trials:
        warnings.warn(f"{k} of {trials} runs hit the size cap", RuntimeWarning, stacklevel=3)
    return y, k


def y_samples(lam: float, horizon_T: int, trials: int, seed: int = 0,
              size_cap: float = 1e12) -> YSamples:
    if lam <= 1:
        raise DomainError("y_samples needs lambda > 1")
    y, k = _martingale(OffspringLaw.poisson(lam), lam, horizon_T, trials, size_cap,
                       stream(seed, _TAG_Y))
    return YSamples(y, lam, horizon_T, k)


def ystar_samples(lam: float, horizon_T: int, trials: int, seed: int = 0,
                  size_cap: float = 1e12) -> np.ndarray:
    """``|X_T| / lam**T`` for the survivor process started from one particle."""
    if lam <= 1:
        raise DomainError("ystar_samples needs lambda > 1")
    y, _ = _martingale(OffspringLaw.conditioned(lam), lam, horizon_T, trials, size_cap,
                       stream(seed, _TAG_YSTAR))
    return y


def sample_side_branch(i: int, trials: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Generation-``i`` sizes of critical trees conditioned to be extinct by
    generation ``i + 1``, by rejection.  Returns the sizes and the observed
    acceptance rate.

    Given ``|X_i| = k`` the tree is extinct at ``i + 1`` with probability
    ``exp(-k)``, so a draw is accepted with exactly that probability.
    """
    out = np.empty(0, dtype=np.int64)
    tried = 0
    critical = OffspringLaw.critical()
    while out.size < trials:
        want = trials - out.size
        batch = max(64, int(want * 1.3) + 16)
        b = simulate_batch(critical, batch, i, rng=rng)
        xi = np.where(b.stop == i, b.final, 0)
        keep = rng.random(batch) < np.exp(-xi.astype(np.float64))
        tried += batch
        out = np.concatenate([out, xi[keep]])
    acc = out.size / tried
    return out[:trials], acc


@dataclass(frozen=True)
class Gamma1Estimate:
    gamma1: float
    stderr: float
    mean_inv_R: float
    min_acceptance: float
    branches: int
    trials: int


def sample_R(M_branches: int, trials: int, seed: int = 0) -> tuple[np.ndarray, float]:
    """``R = 1 + sum_{i=1..M} S_i`` per trial.  Branch ``i`` uses its own
    stream, so runs with different ``M`` share their first branches."""
    R = np.ones(trials, dtype=np.int64)
    min_acc = 1.0
    for i in range(1, M_branches + 1):
        s, acc = sample_side_branch(i, trials, stream(seed, _TAG_R, i))
        R += s
        min_acc = min(min_acc, acc)
    return R, min_acc


def estimate_gamma1(M_branches: int, trials: int, gamma0: float, seed: int = 0) -> Gamma1Estimate:
    """``gamma0 * E(1/R)`` with its Monte Carlo standard error."""
    if M_branches < 1 or trials < 2:
        raise ValueError("need M_branches >= 1 and trials >= 2")
    if gamma0 <= 0:
        raise DomainError("gamma0 must be positive")
    R, min_acc = sample_R(M_branches, trials, seed)
    if min_acc < 1e-3:
        warnings.warn(f"rejection acceptance fell to {min_acc:.2g}", RuntimeWarning, stacklevel=2)
    inv = 1.0 / R
    m = float(inv.mean())
    se = float(inv.std(ddof=1) / math.sqrt(trials))
    return Gamma1Estimate(gamma0 * m, gamma0 * se, m, min_acc, M_branches, trials)
