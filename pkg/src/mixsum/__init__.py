"""Finite Gaussian-mixture summaries of mixture-model posteriors."""

__version__ = "0.1.0"

from .errors import MixsumError, NumericalError, ValidationError  # noqa: E402
from .kernels import RngStream  # noqa: E402
from .reference_models import Dataset, DrawBundle, MixtureDraw  # noqa: E402
from .summary_fit import EmConfig, GmmSummary, fit_gmm, fit_summary_sequence  # noqa: E402

__all__ = [
    "Dataset",
    "DrawBundle",
    "EmConfig",
    "GmmSummary",
    "MixsumError",
    "MixtureDraw",
    "NumericalError",
    "RngStream",
    "ValidationError",
    "fit_gmm",
    "fit_summary_sequence",
]
