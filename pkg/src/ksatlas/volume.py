"""Stratified Monte Carlo estimate of the volume of the stable configuration set.

The cube [−π, π]^n is cut into nested shells R_k \\ R_{k−1} with
R_k = [−t_k, t_k]^n and t_k = kπ/K. Each shell receives the same number of
uniform samples, and its hit fraction is weighted by the shell volume. Far
out in n the stable set hugs the diagonal, so equal effort per shell puts
many more samples near it than plain uniform sampling would.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidInputError, NumericalFailure
from .model import FloatArray, check_alpha
from .spectral import DEFAULT_TOL, classify_many

MIN_ACCEPTANCE = 0.01
TORUS_SIDE = 2.0 * np.pi


@dataclass(frozen=True)
class StrataPlan:
    num_strata: int
    num_samples: int
    n: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_strata < 1 or self.num_samples < 1:
            raise InvalidInputError("num_strata and num_samples must be positive")
        if self.num_samples % self.num_strata:
            raise InvalidInputError("num_samples must be divisible by num_strata")
        if self.n < 1:
            raise InvalidInputError("dimension must be positive")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")

    @property
    def per_stratum(self) -> int:
        return self.num_samples // self.num_strata

    def t(self, k: int) -> float:
        return k / self.num_strata * np.pi

    def shell_volume(self, k: int) -> float:
        K, n = self.num_strata, self.n
        return TORUS_SIDE**n * ((k / K) ** n - ((k - 1) / K) ** n)

    def acceptance(self, k: int) -> float:
        """Probability that a uniform draw from R_k lands outside R_{k−1}."""
        return 1.0 - ((k - 1) / k) ** self.n


def stratum_rng(seed: int, k: int) -> np.random.Generator:
    """Independent Philox substream for stratum k."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, k])))


def _sample_shell_rejection(lo: float, hi: float, n: int, size: int, rng: np.random.Generator, acc: float):
    chunks = []
    have = 0
    while have < size:
        draw = int(math.ceil((size - have) / acc * 1.1)) + 16
        x = rng.uniform(-hi, hi, size=(draw, n))
        x = x[np.abs(x).max(axis=1) > lo]
        chunks.append(x)
        have += len(x)
    return np.concatenate(chunks)[:size]


def _sample_shell_direct(lo: float, hi: float, n: int, size: int, rng: np.random.Generator):
    # number m >= 1 of coordinates beyond lo: P(m) ∝ C(n, m) (hi − lo)^m lo^(n−m)
    a, b = hi - lo, lo
    m_vals = np.arange(1, n + 1)
    logw = np.array([math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1) for m in m_vals])
    logw += m_vals * math.log(a) + ((n - m_vals) * math.log(b) if b > 0 else np.where(m_vals == n, 0.0, -np.inf))
    p = np.exp(logw - logw.max())
    m = rng.choice(m_vals, size=size, p=p / p.sum())
    ranks = np.argsort(rng.random((size, n)), axis=1).argsort(axis=1)
    outer = ranks < m[:, None]
    mag_out = lo + a * (1.0 - rng.random((size, n)))  # (lo, hi]
    sign = np.where(rng.random((size, n)) < 0.5, -1.0, 1.0)
    inner = rng.uniform(-lo, lo, size=(size, n))
    return np.where(outer, sign * mag_out, inner)


def sample_shell(k: int, plan: StrataPlan, rng: np.random.Generator, size: int | None = None) -> FloatArray:
    """Uniform draws from the shell R_k \\ R_{k−1}.

    Rejection from R_k is used while its acceptance rate is at least 1%;
    thinner shells are sampled directly by first choosing which coordinates
    lie beyond t_{k−1}.
    """
    if not 1 <= k <= plan.num_strata:
        raise InvalidInputError(f"stratum index must lie in [1, {plan.num_strata}], got {k}")
    count = 1 if size is None else int(size)
    lo, hi = plan.t(k - 1), plan.t(k)
    acc = plan.acceptance(k)
    if acc >= MIN_ACCEPTANCE:
        pts = _sample_shell_rejection(lo, hi, plan.n, count, rng, acc)
    else:
        pts = _sample_shell_direct(lo, hi, plan.n, count, rng)
    return pts[0] if size is None else pts


@dataclass(frozen=True)
class StratumTally:
    k: int
    hit_count: int
    samples: int
    shell_volume: float
    degenerate: int = 0
    failures: int = 0

    @property
    def fraction(self) -> float:
        return self.hit_count / self.samples


@dataclass(frozen=True)
class VolumeEstimate:
    volume: float
    std_error: float
    per_stratum: tuple[StratumTally, ...]
    alpha: float
    n: int
    plan: StrataPlan | None = field(default=None, compare=False)

    @property
    def fraction(self) -> float:
        """Volume as a fraction of the torus, i.e. in units where [−π, π]^n has volume 1."""
        return self.volume / TORUS_SIDE**self.n

    @property
    def fraction_std_error(self) -> float:
        return self.std_error / TORUS_SIDE**self.n

    @property
    def degenerate(self) -> int:
        return sum(s.degenerate for s in self.per_stratum)

    @property
    def failures(self) -> int:
        return sum(s.failures for s in self.per_stratum)


def _classify_points(pts: FloatArray, alpha: float, tol: float) -> tuple[NDArray[np.bool_], NDArray[np.bool_], int]:
    try:
        counts = classify_many(pts, alpha, tol)
        return counts.stable, counts.degenerate, 0
    except NumericalFailure:
        pass
    stable = np.zeros(len(pts), dtype=bool)
    degenerate = np.zeros(len(pts), dtype=bool)
    failures = 0
    for i, p in enumerate(pts):
        try:
            c = classify_many(p[None, :], alpha, tol)
        except NumericalFailure:
            failures += 1
            continue
        stable[i] = c.stable[0]
        degenerate[i] = c.degenerate[0]
    return stable, degenerate, failures


def _run_stratum(k: int, plan: StrataPlan, alpha: float, tol: float) -> StratumTally:
    pts = sample_shell(k, plan, stratum_rng(plan.seed, k), size=plan.per_stratum)
    stable, degenerate, failures = _classify_points(pts, alpha, tol)
    return StratumTally(
        k=k,
        hit_count=int(stable.sum()),
        samples=plan.per_stratum,
        shell_volume=plan.shell_volume(k),
        degenerate=int(degenerate.sum()),
        failures=failures,
    )


def combine(tallies: Sequence[StratumTally], alpha: float, n: int, plan: StrataPlan | None = None) -> VolumeEstimate:
    """Shell-weighted estimate with per-stratum binomial variances added in quadrature."""
    volume = 0.0
    var = 0.0
    for s in tallies:
        p = s.hit_count / s.samples
        volume += s.shell_volume * p
        var += s.shell_volume**2 * p * (1.0 - p) / s.samples
    return VolumeEstimate(
        volume=volume, std_error=math.sqrt(var), per_stratum=tuple(tallies), alpha=alpha, n=n, plan=plan
    )


def stable_volume(plan: StrataPlan, alpha: float, tol: float = DEFAULT_TOL, workers: int = 1) -> VolumeEstimate:
    """Estimate the volume of {θ ∈ [−π, π]^n : θ is Stable}.

    Each stratum draws from its own substream, so the result does not depend
    on ``workers``.
    """
    alpha = check_alpha(alpha)
    if plan.n < 2:
        raise InvalidInputError("the stable set is only defined for n >= 2")
    ks = range(1, plan.num_strata + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(lambda k: _run_stratum(k, plan, alpha, tol), ks))
    else:
        tallies = [_run_stratum(k, plan, alpha, tol) for k in ks]
    return combine(tallies, alpha, plan.n, plan)


def plain_volume(n: int, alpha: float, num_samples: int, seed: int = 0, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Unstratified estimate over [−π, π]^n; returns (volume, std_error)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0xFFFF])))
    pts = rng.uniform(-np.pi, np.pi, size=(num_samples, n))
    p = float(classify_many(pts, alpha, tol).stable.mean())
    cube = TORUS_SIDE**n
    return cube * p, cube * math.sqrt(p * (1.0 - p) / num_samples)


def fit_decay_rate(ns: Sequence[int], volumes: Sequence[float]) -> float:
    """exp(slope) of the least-squares line through (n, log volume)."""
    ns = np.asarray(ns, dtype=np.float64)
    vols = np.asarray(volumes, dtype=np.float64)
    keep = vols > 0
    if not np.all(keep):
        warnings.warn(f"dropping {int((~keep).sum())} non-positive volume(s) from the decay fit", stacklevel=2)
    if keep.sum() < 3:
        raise InvalidInputError("decay fit needs at least three positive volumes")
    slope, _ = np.polyfit(ns[keep], np.log(vols[keep]), 1)
    return float(np.exp(slope))


def decay_fit(estimates: Sequence[VolumeEstimate], normalized: bool = True) -> float:
    """Fitted ρ in volume ≈ C·ρ^n.

    With ``normalized`` the torus is given unit volume, so ρ measures how fast
    the stable fraction shrinks; otherwise ρ absorbs an extra factor 2π.
    """
    ns = [e.n for e in estimates]
    vols = [e.fraction if normalized else e.volume for e in estimates]
    return fit_decay_rate(ns, vols)


@dataclass(frozen=True)
class SweepCurve:
    n: int
    alphas: tuple[float, ...]
    estimates: tuple[VolumeEstimate, ...]

    @property
    def rescaled(self) -> FloatArray:
        base = self.estimates[0].volume
        return np.array([e.volume / base for e in self.estimates])

    @property
    def rescaled_std_error(self) -> FloatArray:
        """Delta-method error of V(α)/V(0); zero at α = 0 where the ratio is exactly 1."""
        base = self.estimates[0]
        r = self.rescaled
        se = np.array([math.hypot(e.std_error, ri * base.std_error) / base.volume for e, ri in zip(self.estimates, r)])
        se[0] = 0.0
        return se

    def monotone_within(self, k_sigma: float = 2.0) -> bool:
        r, se = self.rescaled, self.rescaled_std_error
        return all(r[i + 1] <= r[i] + k_sigma * math.hypot(se[i], se[i + 1]) for i in range(len(r) - 1))


def alpha_sweep(
    n_list: Sequence[int],
    alpha_grid: Sequence[float],
    num_strata: int = 100,
    num_samples: int = 100_000,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> list[SweepCurve]:
    """Stable volume against phase lag, each curve divided by its α = 0 value."""
    alphas = [float(a) for a in alpha_grid]
    if not alphas or alphas[0] != 0.0:
        raise InvalidInputError("alpha grid must start at 0")
    if any(not 0.0 <= a < np.pi / 2 for a in alphas):
        raise InvalidInputError("alpha grid must lie in [0, pi/2)")
    curves = []
    for n in n_list:
        plan = StrataPlan(num_strata, num_samples, n, seed)
        ests = tuple(stable_volume(plan, a, tol, workers) for a in alphas)
        if ests[0].volume <= 0.0:
            raise InvalidInputError(f"zero stable volume at alpha = 0 for n = {n}; cannot rescale")
        curves.append(SweepCurve(n=n, alphas=tuple(alphas), estimates=ests))
    return curves
