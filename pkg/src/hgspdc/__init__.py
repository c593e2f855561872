"""Hermite-Gaussian mode decomposition of the SPDC two-photon state."""
from .gaussian_modes import BeamGeometry, ModeIndex
from .spdc_coeffs import (
    CALIBRATION,
    REFERENCE_CONFIG,
    CoeffKey,
    CrystalConfig,
    PumpSpec,
    TwoPhotonAmplitudes,
    build_state,
    coeff_exact,
    coeff_thin,
    total_probability,
)

__all__ = [
    "BeamGeometry",
    "ModeIndex",
    "CALIBRATION",
    "REFERENCE_CONFIG",
    "CoeffKey",
    "CrystalConfig",
    "PumpSpec",
    "TwoPhotonAmplitudes",
    "build_state",
    "coeff_exact",
    "coeff_thin",
    "total_probability",
]
__version__ = "0.1.0"
