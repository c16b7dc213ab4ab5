"""Simulation and entanglement certification for two atoms entangled by spin exchange in optical tweezers."""

from .config import ExperimentConfig, load_config
from .dynamics import ApRamp, DephasingParams, ExchangeParams, GradientParams, PulseParams
from .measure import ErrorModel, ShotRecord, ParityScan, ContrastFit, SinusoidRegressor
from .potential import TweezerParams
from .witness import CertificationInput, CertificationResult, certify

__all__ = [
    "ApRamp",
    "CertificationInput",
    "CertificationResult",
    "ContrastFit",
    "DephasingParams",
    "ErrorModel",
    "ExchangeParams",
    "ExperimentConfig",
    "GradientParams",
    "ParityScan",
    "PulseParams",
    "ShotRecord",
    "SinusoidRegressor",
    "TweezerParams",
    "certify",
    "load_config",
]

__version__ = "0.1.0"
