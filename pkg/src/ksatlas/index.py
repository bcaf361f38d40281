"""Determinant polynomial of the homotopy D + sA and the mod-2 instability index.

For J(s) = D + s(u⊗v + w⊗z) the ratio det(J(s))/det(D) is the quadratic

    P(s) = 1 + (⟨v,D⁻¹u⟩ + ⟨z,D⁻¹w⟩) s
             + (⟨v,D⁻¹u⟩⟨z,D⁻¹w⟩ − ⟨z,D⁻¹u⟩⟨v,D⁻¹w⟩) s²

which always vanishes at s = 1 because J·1 = 0. Counting its roots in (0, 1)
tracks real eigenvalues crossing zero along the homotopy, so

    (−1)^(n₊(J) − n₊(D) − n_R) = sign(dλ₀/ds at s = 1)

where λ₀ is the eigenvalue branch through zero at s = 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import PreconditionError, SingularDiagonalError
from .model import FloatArray, JacobianParts, ThetaLike, as_angles, jacobian_matrix, rank_two_factors
from .spectral import DEFAULT_TOL, count_spectrum, eigenvalues

SINGULAR_D_TOL = 1e-12
ROOT_GUARD = 1e-9
LINEAR_TOL = 1e-12


def _inner_products(D, u, v, w, z):
    with np.errstate(divide="ignore", invalid="ignore"):
        Dinv = 1.0 / D
    vu = np.sum(v * Dinv * u, axis=-1)
    zw = np.sum(z * Dinv * w, axis=-1)
    zu = np.sum(z * Dinv * u, axis=-1)
    vw = np.sum(v * Dinv * w, axis=-1)
    return vu, zw, zu, vw


def _coefficients(D, u, v, w, z):
    vu, zw, zu, vw = _inner_products(D, u, v, w, z)
    return np.ones_like(vu), vu + zw, vu * zw - zu * vw


def quadratic_coeffs(parts: JacobianParts) -> tuple[float, float, float]:
    """Coefficients (c0, c1, c2) of det(D + sA)/det(D); c0 is exactly 1."""
    if np.any(np.abs(parts.D) <= SINGULAR_D_TOL):
        raise SingularDiagonalError("diagonal part D is singular")
    c0, c1, c2 = _coefficients(parts.D, parts.u, parts.v, parts.w, parts.z)
    return float(c0), float(c1), float(c2)


class RootCount(NamedTuple):
    n_R: int
    roots: tuple[float, ...]
    endpoint_root: bool
    double_root: bool


def _is_linear(c1, c2):
    return np.abs(c2) <= LINEAR_TOL * (1.0 + np.abs(c1))


def count_roots_in_unit_interval(c0: float, c1: float, c2: float, guard: float = ROOT_GUARD) -> RootCount:
    """Real roots of c0 + c1 s + c2 s² lying in the open interval (0, 1).

    Roots are counted with multiplicity. Roots within ``guard`` of 0 or 1 are
    left out of the count and reported through ``endpoint_root``.
    """
    if _is_linear(c1, c2):
        roots: tuple[float, ...] = () if c1 == 0.0 else (-c0 / c1,)
    else:
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc < 0.0:
            if disc < -guard * max(1.0, c1 * c1):
                return RootCount(0, (), False, False)
            disc = 0.0
        q = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
        # c0 = 1 keeps q away from zero whenever c1 and c2 are not both tiny
        roots = tuple(sorted((q / c2, c0 / q)))
    double = len(roots) == 2 and abs(roots[1] - roots[0]) <= guard
    endpoint = any(abs(r) <= guard or abs(r - 1.0) <= guard for r in roots)
    n_R = sum(1 for r in roots if guard < r < 1.0 - guard)
    return RootCount(n_R, roots, endpoint, double)


def _left_null_vector(J):
    # smallest left singular vector; J is real so U carries the left side
    U, _, _ = np.linalg.svd(J)
    return U[..., :, -1]


def _lambda0_prime(J, u, v, w, z):
    y = _left_null_vector(J)
    n = J.shape[-1]
    A1 = u * v.sum(axis=-1, keepdims=True) + w * z.sum(axis=-1, keepdims=True)
    y1 = y.sum(axis=-1)
    yAx = np.sum(y * A1, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = yAx / y1
    defective = np.abs(y1) <= 1e-12 * np.sqrt(n)
    return slope, defective


def lambda0_prime_at_one(parts: JacobianParts, tol: float = DEFAULT_TOL) -> float:
    """First-order slope of the zero eigenvalue of D + sA at s = 1.

    Equals ⟨y, A·1⟩ / ⟨y, 1⟩ with y the left null vector of J.
    """
    counts = count_spectrum(eigenvalues(parts.J), tol)
    if int(counts.zero_multiplicity) != 1:
        raise PreconditionError("zero is not a simple eigenvalue of J")
    slope, defective = _lambda0_prime(parts.J, parts.u, parts.v, parts.w, parts.z)
    if defective:
        raise PreconditionError("left and right null vectors are orthogonal")
    return float(slope)


class Verdict(str, enum.Enum):
    CONSISTENT_PARITY = "ConsistentParity"
    INSTABILITY_CERTIFIED = "InstabilityCertified"
    INAPPLICABLE = "Inapplicable"
    # only reachable through numerical trouble: the parity identity failed
    PARITY_MISMATCH = "ParityMismatch"


# reason codes for inapplicable samples, in order of precedence
_REASONS = {
    1: "D is singular",
    2: "s = 1 is a double root of P_J",
    3: "kernel of J is not one-dimensional",
    4: "eigenvalue on the imaginary axis",
    5: "zero eigenvalue does not cross transversally",
}


class CertificateArrays(NamedTuple):
    c0: FloatArray
    c1: FloatArray
    c2: FloatArray
    other_root: FloatArray
    n_R: NDArray[np.int64]
    n_plus_D: NDArray[np.int64]
    n_plus_J: NDArray[np.int64]
    lambda0_prime: FloatArray
    reason: NDArray[np.int64]
    certified: NDArray[np.bool_]
    parity_ok: NDArray[np.bool_]

    @property
    def applicable(self) -> NDArray[np.bool_]:
        return self.reason == 0

    @property
    def predicted_parity(self) -> NDArray[np.int64]:
        """n₊(J) mod 2 as predicted from n₊(D), n_R and the slope sign alone; −1 when inapplicable."""
        odd = (self.n_plus_D + self.n_R + (self.lambda0_prime < 0)) % 2
        return np.where(self.applicable, odd, -1)


def certificate_arrays(thetas: ArrayLike, alpha: float, tol: float = DEFAULT_TOL) -> CertificateArrays:
    """Vectorised index certificate for a stack of configurations (..., n)."""
    th = as_angles(thetas, batch=True)
    D, u, v, w, z = rank_two_factors(th, alpha)
    J = jacobian_matrix(th, alpha)
    counts = count_spectrum(eigenvalues(J), tol)

    singular = np.any(np.abs(D) <= SINGULAR_D_TOL, axis=-1)
    safe_D = np.where(singular[..., None], 1.0, D)
    c0, c1, c2 = _coefficients(safe_D, u, v, w, z)

    # s = 1 is a root, so the other one is c0/c2; this avoids the cancellation
    # of the quadratic formula near a double root at 1
    linear = _is_linear(c1, c2)
    with np.errstate(divide="ignore", invalid="ignore"):
        other = np.where(linear, np.inf, c0 / np.where(linear, 1.0, c2))
    double = np.abs(other - 1.0) <= ROOT_GUARD
    n_R = ((other > ROOT_GUARD) & (other < 1.0 - ROOT_GUARD)).astype(np.int64)
    n_plus_D = (D > SINGULAR_D_TOL).sum(axis=-1)

    slope, defective = _lambda0_prime(J, u, v, w, z)

    reason = np.zeros(th.shape[:-1], dtype=np.int64)
    for code, bad in (
        (5, defective | ~(np.abs(slope) > tol)),
        (4, counts.axis_multiplicity > 0),
        (3, counts.zero_multiplicity != 1),
        (2, double),
        (1, singular),
    ):
        reason = np.where(bad, code, reason)

    neg = slope < 0
    even_D = n_plus_D % 2 == 0
    certified = ((n_R == 0) & (even_D == neg)) | ((n_R == 1) & (even_D != neg))
    certified &= reason == 0
    parity_sign = np.where((counts.n_plus - n_plus_D - n_R) % 2 == 0, 1, -1)
    parity_ok = parity_sign == np.where(neg, -1, 1)

    return CertificateArrays(
        c0=c0,
        c1=c1,
        c2=c2,
        other_root=other,
        n_R=n_R,
        n_plus_D=n_plus_D,
        n_plus_J=counts.n_plus,
        lambda0_prime=slope,
        reason=reason,
        certified=certified,
        parity_ok=parity_ok,
    )


@dataclass(frozen=True)
class IndexCertificate:
    c0: float
    c1: float
    c2: float
    roots: tuple[float, ...]
    n_R: int
    n_plus_D: int
    n_plus_J: int
    lambda0_prime: float
    lambda0_prime_sign: int
    parity: int
    verdict: Verdict
    reason: str | None = None

    @property
    def undetected_instability(self) -> bool:
        """Unstable although D is stable and no real eigenvalue crosses zero: only a complex pair explains this."""
        return self.verdict is Verdict.CONSISTENT_PARITY and self.n_plus_J > 0 and self.n_plus_D == 0 and self.n_R == 0

    def to_dict(self) -> dict:
        return {
            "coefficients": [self.c0, self.c1, self.c2],
            "roots": list(self.roots),
            "n_R": self.n_R,
            "n_plus_D": self.n_plus_D,
            "n_plus_J": self.n_plus_J,
            "lambda0_prime": self.lambda0_prime,
            "lambda0_prime_sign": self.lambda0_prime_sign,
            "parity": self.parity,
            "verdict": self.verdict.value,
            "reason": self.reason,
        }


def _finite_or_nan(x) -> float:
    x = float(x)
    return x if math.isfinite(x) else float("nan")


def index_certificate(theta: ThetaLike, alpha: float, tol: float = DEFAULT_TOL) -> IndexCertificate:
    """Assemble the index data for θ; failed hypotheses give an Inapplicable verdict."""
    arr = certificate_arrays(as_angles(theta), alpha, tol)
    code = int(arr.reason)
    slope = float(arr.lambda0_prime)
    sign = 0 if not math.isfinite(slope) or slope == 0.0 else (1 if slope > 0 else -1)
    parity = 1 if (int(arr.n_plus_J) - int(arr.n_plus_D) - int(arr.n_R)) % 2 == 0 else -1
    if code:
        verdict = Verdict.INAPPLICABLE
    elif arr.certified:
        verdict = Verdict.INSTABILITY_CERTIFIED
    elif arr.parity_ok:
        verdict = Verdict.CONSISTENT_PARITY
    else:
        verdict = Verdict.PARITY_MISMATCH
    roots: tuple[float, ...] = (1.0,)
    if code != 1 and math.isfinite(float(arr.other_root)):
        roots = tuple(sorted((1.0, float(arr.other_root))))
    return IndexCertificate(
        c0=_finite_or_nan(arr.c0) if code != 1 else float("nan"),
        c1=_finite_or_nan(arr.c1) if code != 1 else float("nan"),
        c2=_finite_or_nan(arr.c2) if code != 1 else float("nan"),
        roots=roots,
        n_R=int(arr.n_R),
        n_plus_D=int(arr.n_plus_D),
        n_plus_J=int(arr.n_plus_J),
        lambda0_prime=_finite_or_nan(slope),
        lambda0_prime_sign=sign,
        parity=parity,
        verdict=verdict,
        reason=_REASONS.get(code),
    )
