"""Stability of phase-locked states in the Kuramoto-Sakaguchi model."""

__version__ = "0.1.0"

from .errors import InvalidInputError, KSAtlasError, NumericalFailure, PreconditionError, SingularDiagonalError
from .index import IndexCertificate, Verdict, count_roots_in_unit_interval, index_certificate, quadratic_coeffs
from .locking import integrate, lock_report, omega_for_fixed_point, pi_state_phi, six_states
from .model import Configuration, JacobianParts, MeanZeroBasis, ModelParams, jacobian, vector_field
from .spectral import SpectralReport, Stability, classify, eigenvalues, perron_pair, s_dagger_member
from .volume import StrataPlan, VolumeEstimate, alpha_sweep, decay_fit, stable_volume

__all__ = [
    "Configuration",
    "IndexCertificate",
    "InvalidInputError",
    "JacobianParts",
    "KSAtlasError",
    "MeanZeroBasis",
    "ModelParams",
    "NumericalFailure",
    "PreconditionError",
    "SingularDiagonalError",
    "SpectralReport",
    "Stability",
    "StrataPlan",
    "Verdict",
    "VolumeEstimate",
    "alpha_sweep",
    "classify",
    "count_roots_in_unit_interval",
    "decay_fit",
    "eigenvalues",
    "index_certificate",
    "integrate",
    "jacobian",
    "lock_report",
    "omega_for_fixed_point",
    "perron_pair",
    "pi_state_phi",
    "s_dagger_member",
    "six_states",
    "stable_volume",
    "vector_field",
]
