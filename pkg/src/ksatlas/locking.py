"""Phase-locked solutions: detection, the three-oscillator families, and RK4 integration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError, NumericalFailure
from .model import (
    Configuration,
    FloatArray,
    MeanZeroBasis,
    ThetaLike,
    as_angles,
    canonicalize,
    check_alpha,
    embed,
    vector_field,
)
from .spectral import DEFAULT_TOL, SpectralCounts, classify_many

DEFAULT_LOCK_TOL = 1e-10


@dataclass(frozen=True)
class LockReport:
    locked: bool
    velocity: float | None
    residual: float

    def to_dict(self) -> dict:
        return {"locked": self.locked, "velocity": self.velocity, "residual": self.residual}


def _omega(omega: ArrayLike | None, n: int) -> FloatArray:
    if omega is None:
        return np.zeros(n)
    om = np.asarray(omega, dtype=np.float64)
    if om.shape != (n,):
        raise InvalidInputError(f"frequency vector must have length {n}, got shape {om.shape}")
    if not np.all(np.isfinite(om)):
        raise InvalidInputError("frequencies must be finite")
    return om


def lock_report(
    theta: ThetaLike, omega: ArrayLike | None, alpha: float, lock_tol: float = DEFAULT_LOCK_TOL
) -> LockReport:
    """Is θ a rigidly rotating solution of dθ/dt = ω + f(θ)?

    The velocity is the mean of ω + f(θ), the least-squares fit of c·1; the
    residual is the largest deviation from it.
    """
    if not 1e-12 <= lock_tol <= 1e-6:
        raise InvalidInputError(f"lock tolerance must lie in [1e-12, 1e-6], got {lock_tol!r}")
    th = as_angles(theta)
    rate = _omega(omega, th.size) + vector_field(th, alpha)
    c = float(rate.mean())
    residual = float(np.abs(rate - c).max())
    locked = residual <= lock_tol
    return LockReport(locked=locked, velocity=c if locked else None, residual=residual)


def omega_for_fixed_point(theta: ThetaLike, alpha: float) -> FloatArray:
    """Frequencies ω = −f(θ) for which θ is an equilibrium."""
    return -vector_field(as_angles(theta), alpha)


def gauge_shift(omega: ArrayLike, kappa: float) -> FloatArray:
    """ω + κ·1, the frequencies seen by η(t) = θ(t) + κt·1."""
    return np.asarray(omega, dtype=np.float64) + float(kappa)


def to_mean_zero_frequencies(omega: ArrayLike) -> tuple[FloatArray, float]:
    """Shift ω onto the mean-zero plane; returns (shifted ω, κ used)."""
    om = np.asarray(omega, dtype=np.float64)
    kappa = -float(om.mean())
    return gauge_shift(om, kappa), kappa


def pi_state_phi(alpha: float) -> float:
    """Offset φ(α) = −2 arctan(sin α / (3 cos α)) that keeps (0, π + φ, 0) phase-locked."""
    alpha = check_alpha(alpha)
    return -2.0 * math.atan(math.sin(alpha) / (3.0 * math.cos(alpha)))


def pi_state_residual(alpha: float, phi: float) -> float:
    """sin(α − φ) − sin α − 2 sin(α + φ), zero exactly when (0, π + φ, 0) is phase-locked."""
    return math.sin(alpha - phi) - math.sin(alpha) - 2.0 * math.sin(alpha + phi)


def pi_state_velocity(alpha: float) -> float:
    phi = pi_state_phi(alpha)
    return math.sin(alpha) + math.sin(alpha - phi)


@dataclass(frozen=True)
class LockedState:
    name: str
    theta: Configuration
    velocity: float


def six_states(alpha: float) -> list[LockedState]:
    """The six phase-locked families of three oscillators, with their rotation rates.

    The π-states carry the φ(α) correction on the coordinate that sits at π.
    """
    alpha = check_alpha(alpha)
    phi = pi_state_phi(alpha)
    twist_c = 3.0 * math.sin(alpha)
    pi_c = math.sin(alpha) + math.sin(alpha - phi)
    third = 2.0 * np.pi / 3.0
    states = [
        LockedState("sync", Configuration([0.0, 0.0, 0.0]), 0.0),
        LockedState("twist+", Configuration([0.0, third, 2.0 * third]), twist_c),
        LockedState("twist-", Configuration([0.0, 2.0 * third, third]), twist_c),
    ]
    for k in range(3):
        th = np.zeros(3)
        th[(k + 1) % 3] = np.pi + phi
        states.append(LockedState(f"pi-{(k + 1) % 3 + 1}", Configuration(th), pi_c))
    return states


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: FloatArray
    states: FloatArray  # (len(times), n), angles in (−π, π]
    step: float


def _rk4(th: FloatArray, omega: FloatArray, alpha: float, dt: float, steps: int, every: int):
    n = th.size
    offset = n * math.sin(alpha)

    def rhs(x):
        return omega + np.sin(x[None, :] - x[:, None] - alpha).sum(axis=1) + offset

    out = [th.copy()]
    for k in range(1, steps + 1):
        k1 = rhs(th)
        k2 = rhs(th + 0.5 * dt * k1)
        k3 = rhs(th + 0.5 * dt * k2)
        k4 = rhs(th + dt * k3)
        th = th + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k % every == 0 or k == steps:
            if not np.all(np.isfinite(th)):
                raise NumericalFailure(f"non-finite state at step {k}")
            out.append(th.copy())
    return np.array(out)


def integrate(
    theta0: ThetaLike,
    omega: ArrayLike | None,
    alpha: float,
    dt: float,
    t_end: float,
    record_every: int = 1,
    unwrapped: bool = False,
) -> Trajectory:
    """Classical fixed-step RK4 for dθ/dt = ω + f(θ).

    ``t_end`` must be a whole number of steps. Angles are integrated on the
    real line and wrapped into (−π, π] only in the returned states, unless
    ``unwrapped`` is set.
    """
    alpha = check_alpha(alpha)
    th = np.array(as_angles(theta0), dtype=np.float64)
    om = _omega(omega, th.size)
    if not 0.0 < dt <= 1e-2:
        raise InvalidInputError(f"step must satisfy 0 < dt <= 1e-2, got {dt!r}")
    if t_end < 0.0:
        raise InvalidInputError("t_end must be non-negative")
    steps = int(round(t_end / dt))
    if steps > 10**7:
        raise InvalidInputError("too many steps (t_end/dt > 1e7)")
    if abs(steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise InvalidInputError("t_end must be an integer multiple of dt")
    if record_every < 1:
        raise InvalidInputError("record_every must be >= 1")
    states = _rk4(th, om, alpha, dt, steps, record_every)
    idx = [0] + [k for k in range(1, steps + 1) if k % record_every == 0 or k == steps]
    times = np.array(idx, dtype=np.float64) * dt
    return Trajectory(times=times, states=states if unwrapped else canonicalize(states), step=dt)


def shift_trajectory(traj: Trajectory, kappa: float) -> Trajectory:
    """η(t) = θ(t) + κt·1, a solution for the frequencies ω + κ·1."""
    shifted = traj.states + float(kappa) * traj.times[:, None]
    return Trajectory(times=traj.times, states=canonicalize(shifted), step=traj.step)


@dataclass(frozen=True, eq=False)
class FrequencySurface:
    """Image of a grid in the mean-zero configuration plane under f, with stability."""

    coords: FloatArray  # (..., n−1) plane coordinates
    theta: FloatArray  # (..., n)
    omega: FloatArray  # (..., n), f(θ)
    counts: SpectralCounts
    alpha: float

    @property
    def n_plus(self) -> NDArray[np.int64]:
        return self.counts.n_plus

    @property
    def labels(self) -> NDArray[np.str_]:
        lab = np.where(self.counts.n_plus > 0, "Unstable", "Degenerate").astype(object)
        lab = np.where(self.counts.stable, "Stable", lab)
        return lab


def frequency_surface(coords: ArrayLike, alpha: float, tol: float = DEFAULT_TOL) -> FrequencySurface:
    """Evaluate f and the stability class at each plane point (n = 3 or 4)."""
    alpha = check_alpha(alpha)
    x = np.asarray(coords, dtype=np.float64)
    if x.shape[-1] not in (2, 3):
        raise InvalidInputError("frequency surfaces are built for n = 3 or n = 4 only")
    basis = MeanZeroBasis.for_size(x.shape[-1] + 1)
    theta = embed(x, basis)
    return FrequencySurface(
        coords=x,
        theta=theta,
        omega=vector_field(theta, alpha),
        counts=classify_many(theta, alpha, tol),
        alpha=alpha,
    )
