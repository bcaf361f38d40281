"""Kuramoto-Sakaguchi vector field, Jacobian and mean-zero plane coordinates.

The model, with the coupling fixed to one, is

    dθ_i/dt = ω_i + Σ_j [sin(θ_j − θ_i − α) + sin α]

The constant ``sin α`` offset makes θ = 0 a fixed point for ω = 0 at every
phase lag. Functions that take ``theta`` accept any array whose last axis
indexes oscillators, so a stack of configurations of shape ``(..., n)`` is
evaluated in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import helmert

from .errors import InvalidInputError

FloatArray = NDArray[np.float64]

TWO_PI = 2.0 * np.pi


def canonicalize(theta: ArrayLike) -> FloatArray:
    """Map angles into (−π, π]."""
    th = np.asarray(theta, dtype=np.float64)
    return th - TWO_PI * np.ceil((th - np.pi) / TWO_PI)


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or abs(alpha) >= np.pi / 2:
        raise InvalidInputError(f"phase lag must satisfy |alpha| < pi/2, got {alpha!r}")
    return alpha


@dataclass(frozen=True)
class ModelParams:
    """Phase lag with the coupling strength pinned to 1."""

    alpha: float
    gamma: float = field(default=1.0, init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", check_alpha(self.alpha))


@dataclass(frozen=True, eq=False)
class Configuration:
    """A point on the n-torus, stored with angles in (−π, π]."""

    theta: FloatArray

    def __post_init__(self) -> None:
        th = np.array(self.theta, dtype=np.float64)
        if th.ndim != 1 or th.size < 2:
            raise InvalidInputError(f"configuration needs a 1-D vector of n >= 2 angles, got shape {th.shape}")
        if not np.all(np.isfinite(th)):
            raise InvalidInputError("configuration angles must be finite")
        th = canonicalize(th)
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    @property
    def n(self) -> int:
        return self.theta.size

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Configuration) and np.array_equal(self.theta, other.theta)

    def __hash__(self) -> int:
        return hash(self.theta.tobytes())


ThetaLike = Union[Configuration, ArrayLike]


def as_angles(theta: ThetaLike, *, batch: bool = False) -> FloatArray:
    """Return ``theta`` as a float array, validating shape and finiteness."""
    if isinstance(theta, Configuration):
        return theta.theta
    th = np.asarray(theta, dtype=np.float64)
    if th.ndim == 0 or (th.ndim > 1 and not batch):
        raise InvalidInputError(f"expected a vector of angles, got shape {th.shape}")
    if th.shape[-1] < 2:
        raise InvalidInputError("need at least two oscillators")
    if not np.all(np.isfinite(th)):
        raise InvalidInputError("angles must be finite")
    return th


def _phase_differences(th: FloatArray, alpha: float) -> FloatArray:
    # entry [..., i, j] = θ_j − θ_i − α
    return th[..., None, :] - th[..., :, None] - alpha


def vector_field(theta: ThetaLike, alpha: float) -> FloatArray:
    """f_i(θ) = Σ_j [sin(θ_j − θ_i − α) + sin α]; accepts stacked configurations."""
    alpha = check_alpha(alpha)
    th = as_angles(theta, batch=True)
    n = th.shape[-1]
    return np.sin(_phase_differences(th, alpha)).sum(axis=-1) + n * np.sin(alpha)


def jacobian_matrix(theta: ThetaLike, alpha: float) -> FloatArray:
    """Dense Jacobian ∂f/∂θ, stacked over leading axes of ``theta``.

    The diagonal is set to minus the off-diagonal row sum so J·1 vanishes to
    rounding.
    """
    alpha = check_alpha(alpha)
    th = as_angles(theta, batch=True)
    J = np.cos(_phase_differences(th, alpha))
    idx = np.arange(th.shape[-1])
    J[..., idx, idx] = 0.0
    J[..., idx, idx] = -J.sum(axis=-1)
    return J


def rank_two_factors(theta: ThetaLike, alpha: float) -> tuple[FloatArray, ...]:
    """Return (D, u, v, w, z) with J = diag(D) + u⊗v + w⊗z, stacked like ``theta``."""
    alpha = check_alpha(alpha)
    th = as_angles(theta, batch=True)
    half = 0.5 * alpha
    u = np.cos(th + half)
    v = np.cos(th - half)
    w = np.sin(th + half)
    z = np.sin(th - half)
    D = -np.cos(_phase_differences(th, alpha)).sum(axis=-1)
    return D, u, v, w, z


@dataclass(frozen=True, eq=False)
class JacobianParts:
    """Jacobian together with its diagonal-plus-rank-two splitting."""

    J: FloatArray
    D: FloatArray
    u: FloatArray
    v: FloatArray
    w: FloatArray
    z: FloatArray

    @property
    def n(self) -> int:
        return self.D.size

    @property
    def A(self) -> FloatArray:
        """The rank-two part u⊗v + w⊗z."""
        return np.outer(self.u, self.v) + np.outer(self.w, self.z)

    def at(self, s: float) -> FloatArray:
        """Homotopy matrix D + sA, equal to J at s = 1."""
        return np.diag(self.D) + s * self.A


def jacobian(theta: ThetaLike, alpha: float) -> JacobianParts:
    th = as_angles(theta)
    D, u, v, w, z = rank_two_factors(th, alpha)
    return JacobianParts(J=jacobian_matrix(th, alpha), D=D, u=u, v=v, w=w, z=z)


def finite_difference_jacobian(theta: ThetaLike, alpha: float, h: float = 1e-5) -> FloatArray:
    """Central-difference approximation of ∂f/∂θ (test oracle)."""
    if not 1e-7 <= h <= 1e-4:
        raise InvalidInputError(f"step h must lie in [1e-7, 1e-4], got {h!r}")
    th = as_angles(theta)
    n = th.size
    out = np.empty((n, n))
    for j in range(n):
        step = np.zeros(n)
        step[j] = h
        out[:, j] = (vector_field(th + step, alpha) - vector_field(th - step, alpha)) / (2.0 * h)
    return out


@dataclass(frozen=True, eq=False)
class MeanZeroBasis:
    """Orthonormal basis of the plane orthogonal to (1, ..., 1), one vector per row.

    Rows are the Helmert contrasts, so for n = 3 they are (1, −1, 0)/√2 and
    (1, 1, −2)/√6.
    """

    basis: FloatArray

    @classmethod
    def for_size(cls, n: int) -> "MeanZeroBasis":
        if n < 2:
            raise InvalidInputError("need n >= 2")
        return cls(basis=helmert(n))

    @property
    def n(self) -> int:
        return self.basis.shape[1]


def embed(coords: ArrayLike, basis: MeanZeroBasis) -> FloatArray:
    """Plane coordinates (..., n−1) to mean-zero angles (..., n)."""
    x = np.asarray(coords, dtype=np.float64)
    if x.shape[-1] != basis.n - 1:
        raise InvalidInputError(f"expected {basis.n - 1} plane coordinates, got {x.shape[-1]}")
    return x @ basis.basis


def project(theta: ThetaLike, basis: MeanZeroBasis) -> FloatArray:
    """Angles (..., n) to plane coordinates (..., n−1); the mean is discarded."""
    th = as_angles(theta, batch=True)
    if th.shape[-1] != basis.n:
        raise InvalidInputError(f"expected {basis.n} angles, got {th.shape[-1]}")
    return th @ basis.basis.T


def mean_zero_part(theta: ThetaLike) -> FloatArray:
    """Orthogonal projection onto the mean-zero plane."""
    th = as_angles(theta, batch=True)
    return th - th.mean(axis=-1, keepdims=True)
