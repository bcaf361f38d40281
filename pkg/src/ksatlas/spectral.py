"""Spectra of the (non-symmetric) Jacobian and the Perron-Frobenius stability test."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError, NumericalFailure, PreconditionError
from .model import FloatArray, ThetaLike, as_angles, check_alpha, jacobian, jacobian_matrix

ComplexArray = NDArray[np.complex128]

DEFAULT_TOL = 1e-9
MAX_DIM = 500


def matrix_hash(M: ArrayLike) -> str:
    return hashlib.sha256(np.ascontiguousarray(M, dtype=np.float64).tobytes()).hexdigest()[:16]


def eigenvalues(M: ArrayLike) -> ComplexArray:
    """Full spectrum of a real square matrix, or of a stack of them.

    Uses LAPACK ``geev`` (balancing, Hessenberg reduction, shifted QR).
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise InvalidInputError(f"expected square matrices, got shape {M.shape}")
    if M.shape[-1] > MAX_DIM:
        raise InvalidInputError(f"dense eigen-solve limited to n <= {MAX_DIM}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix entries must be finite")
    try:
        return np.linalg.eigvals(M).astype(np.complex128, copy=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue iteration failed: {exc}", matrix_hash(M)) from exc


class Stability(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    DEGENERATE = "Degenerate"


class SpectralCounts(NamedTuple):
    """Per-matrix eigenvalue tallies for a stack of spectra."""

    n_plus: NDArray[np.int64]
    zero_multiplicity: NDArray[np.int64]
    axis_multiplicity: NDArray[np.int64]
    n_minus: NDArray[np.int64]

    @property
    def stable(self) -> NDArray[np.bool_]:
        return (self.n_plus == 0) & (self.zero_multiplicity == 1) & (self.axis_multiplicity == 0)

    @property
    def degenerate(self) -> NDArray[np.bool_]:
        return (self.n_plus == 0) & ~self.stable


def count_spectrum(eigs: ArrayLike, tol: float = DEFAULT_TOL) -> SpectralCounts:
    """Split each spectrum (last axis) into right half-plane, zero, imaginary-axis and left half-plane counts."""
    ev = np.asarray(eigs)
    re = ev.real
    mag = np.abs(ev)
    zero = mag <= tol
    axis = (np.abs(re) <= tol) & ~zero
    return SpectralCounts(
        n_plus=(re > tol).sum(axis=-1),
        zero_multiplicity=zero.sum(axis=-1),
        axis_multiplicity=axis.sum(axis=-1),
        n_minus=(re < -tol).sum(axis=-1),
    )


@dataclass(frozen=True, eq=False)
class SpectralReport:
    eigenvalues: ComplexArray
    n_plus: int
    zero_multiplicity: int
    axis_multiplicity: int
    n_minus: int
    stability: Stability
    tol: float

    @property
    def label(self) -> str:
        if self.stability is Stability.UNSTABLE:
            return f"Unstable({self.n_plus})"
        return self.stability.value

    @property
    def is_stable(self) -> bool:
        return self.stability is Stability.STABLE

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(l.real), float(l.imag)] for l in self.eigenvalues],
            "n_plus": self.n_plus,
            "zero_multiplicity": self.zero_multiplicity,
            "axis_multiplicity": self.axis_multiplicity,
            "class": self.label,
            "tol": self.tol,
        }


def _check_tol(tol: float) -> float:
    if not 1e-12 <= tol <= 1e-6:
        raise InvalidInputError(f"classification tolerance must lie in [1e-12, 1e-6], got {tol!r}")
    return float(tol)


def classify_matrix(M: ArrayLike, tol: float = DEFAULT_TOL) -> SpectralReport:
    tol = _check_tol(tol)
    ev = eigenvalues(M)
    ev = ev[np.lexsort((ev.imag, -ev.real))]
    c = count_spectrum(ev, tol)
    n_plus = int(c.n_plus)
    if n_plus > 0:
        stability = Stability.UNSTABLE
    elif c.stable:
        stability = Stability.STABLE
    else:
        stability = Stability.DEGENERATE
    return SpectralReport(
        eigenvalues=ev,
        n_plus=n_plus,
        zero_multiplicity=int(c.zero_multiplicity),
        axis_multiplicity=int(c.axis_multiplicity),
        n_minus=int(c.n_minus),
        stability=stability,
        tol=tol,
    )


def classify(theta: ThetaLike, alpha: float, tol: float = DEFAULT_TOL) -> SpectralReport:
    """Stability class of the configuration θ.

    Stable means the Jacobian has no eigenvalue with positive real part and a
    simple zero eigenvalue; anything within ``tol`` of that boundary is
    reported as Degenerate.
    """
    return classify_matrix(jacobian_matrix(as_angles(theta), alpha), tol)


def classify_many(thetas: ArrayLike, alpha: float, tol: float = DEFAULT_TOL) -> SpectralCounts:
    """Vectorised classification of a stack of configurations of shape (..., n)."""
    tol = _check_tol(tol)
    return count_spectrum(eigenvalues(jacobian_matrix(as_angles(thetas, batch=True), alpha)), tol)


def s_dagger_member(theta: ThetaLike, alpha: float) -> bool | NDArray[np.bool_]:
    """True where cos(θ_i − θ_j − α) > 0 for every ordered pair (i, j), including i = j."""
    alpha = check_alpha(alpha)
    th = as_angles(theta, batch=True)
    c = np.cos(th[..., :, None] - th[..., None, :] - alpha)
    out = np.all(c > 0.0, axis=(-2, -1))
    return bool(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class PerronPair:
    """Rightmost eigenvalue with positive right/left eigenvectors, ⟨y, x⟩ = 1."""

    lambda_top: float
    x_right: FloatArray
    y_left: FloatArray
    iterations: int


def _power_iterate(B: FloatArray, M: FloatArray, rtol: float, max_iter: int) -> tuple[FloatArray, int]:
    n = B.shape[0]
    x = np.full(n, 1.0 / np.sqrt(n))
    scale = max(1.0, float(np.abs(M).sum(axis=1).max()))
    for it in range(1, max_iter + 1):
        bx = B @ x
        x = bx / np.linalg.norm(bx)
        mx = M @ x
        lam = float(x @ mx)
        if np.linalg.norm(mx - lam * x) <= rtol * scale:
            return x, it
    raise NumericalFailure(f"power iteration did not converge in {max_iter} steps", matrix_hash(M))


def perron_pair(M: ArrayLike, *, rtol: float = 1e-12, max_iter: int = 200_000) -> PerronPair:
    """Perron eigen-triple of a matrix with strictly positive off-diagonal entries.

    Power iteration runs on M + cI with c = 1 + max|M_ii|, which has all
    entries positive; the left vector comes from the transpose. Convergence is
    declared when the Rayleigh-quotient residual ‖Mx − λx‖ falls below
    ``rtol`` times the infinity norm of M (at least ``rtol``).
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise InvalidInputError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix entries must be finite")
    n = M.shape[0]
    off = ~np.eye(n, dtype=bool)
    if n > 1 and not np.all(M[off] > 0.0):
        raise PreconditionError("Perron pair requires strictly positive off-diagonal entries")
    c = 1.0 + float(np.abs(np.diag(M)).max())
    B = M + c * np.eye(n)
    x, it_x = _power_iterate(B, M, rtol, max_iter)
    y, it_y = _power_iterate(B.T, M.T, rtol, max_iter)
    y = y / (y @ x)
    # two-sided Rayleigh quotient: second-order accurate in the vector errors
    lam = float(y @ M @ x)
    return PerronPair(lambda_top=lam, x_right=x, y_left=y, iterations=max(it_x, it_y))


def top_eigenvalue(theta: ThetaLike, alpha: float, s: float) -> float:
    """λ₁(s), the rightmost eigenvalue of D + sA, for θ in the Perron region.

    At s = 0 the matrix is diagonal and λ₁(0) = max D_ii.
    """
    theta = as_angles(theta)
    if not s_dagger_member(theta, alpha):
        raise PreconditionError("configuration is outside the region cos(θ_i − θ_j − α) > 0")
    parts = jacobian(theta, alpha)
    if s == 0.0:
        return float(parts.D.max())
    if s < 0.0:
        raise PreconditionError("homotopy parameter must be non-negative")
    return perron_pair(parts.at(s)).lambda_top


def top_eigenvalue_derivative(theta: ThetaLike, alpha: float, s: float) -> float:
    """dλ₁/ds = ⟨y(s), A x(s)⟩ for the normalised Perron pair of D + sA (s > 0)."""
    theta = as_angles(theta)
    if not s_dagger_member(theta, alpha):
        raise PreconditionError("configuration is outside the region cos(θ_i − θ_j − α) > 0")
    if s <= 0.0:
        raise PreconditionError("Perron pair of D + sA needs s > 0")
    parts = jacobian(theta, alpha)
    pair = perron_pair(parts.at(s))
    return float(pair.y_left @ parts.A @ pair.x_right)
