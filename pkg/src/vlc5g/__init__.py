"""Latency simulation and analysis for 5G + visible-light infrastructure-to-vehicle links."""

from .distributions import (
    DistributionSpec,
    EmpiricalSample,
    TLocationScaleParams,
    tls_cdf,
    tls_pdf,
    tls_sample,
)
from .fitting import (
    FitResult,
    bic_score,
    cdf_error_curve,
    fit_mle,
    histogram_pdf_estimate,
    select_best_model,
)

__version__ = "0.1.0"

__all__ = [
    "DistributionSpec",
    "EmpiricalSample",
    "FitResult",
    "TLocationScaleParams",
    "bic_score",
    "cdf_error_curve",
    "fit_mle",
    "histogram_pdf_estimate",
    "select_best_model",
    "tls_cdf",
    "tls_pdf",
    "tls_sample",
]
