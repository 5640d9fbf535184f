"""Simulation and analysis of an EIT four-wave-mixing frequency beam splitter."""

__version__ = "0.1.0"

from .errors import FbsError  # noqa: E402
from .physics import (  # noqa: E402
    BsCoefficients,
    MediumParams,
    PulseEnvelope,
    gaussian_pulse,
    split_ratio,
)
from .maxwell_bloch import (  # noqa: E402
    TransferMatrix,
    extract_bs_coefficients,
    propagate_pulse,
    transfer_matrix,
)

__all__ = [
    "FbsError",
    "BsCoefficients",
    "MediumParams",
    "PulseEnvelope",
    "gaussian_pulse",
    "split_ratio",
    "TransferMatrix",
    "extract_bs_coefficients",
    "propagate_pulse",
    "transfer_matrix",
]
