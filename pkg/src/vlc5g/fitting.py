"""Maximum-likelihood fitting, BIC model selection and fit diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np
from scipy import optimize, stats

from .distributions import (
    DEFAULT_FAMILIES,
    DistributionSpec,
    EmpiricalSample,
    as_array,
    get_family,
)
from .errors import InsufficientDataError, NoModelError, ParameterDomainError

log = logging.getLogger(__name__)

SIGMA_BOUNDS = (1e-9, 1e3)
NU_BOUNDS = (0.5, 1e3)
NU_START = 5.0
XATOL = 1e-8
FATOL = 1e-8
MAXITER = 2000

# IQR of a standard normal; turns an IQR into a sigma estimate.
_NORMAL_IQR = 2.0 * stats.norm.ppf(0.75)


@dataclass(frozen=True)
class FitResult:
    spec: DistributionSpec
    log_likelihood: float
    bic: float
    converged: bool
    n: int

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def k(self) -> int:
        return self.spec.arity

    def as_record(self) -> dict:
        """Flat key-value export: family, params, logL, BIC, converged."""
        rec = self.spec.as_dict()
        rec.update(
            log_likelihood=self.log_likelihood,
            bic=self.bic,
            converged=self.converged,
            n=self.n,
        )
        return rec


def bic_score(log_likelihood: float, k: int, n: int) -> float:
    """Bayesian information criterion ``k ln n - 2 lnL``; lower is better."""
    if n < 1 or k < 1:
        raise ValueError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
    return k * math.log(n) - 2.0 * log_likelihood


def _robust_scale(x: np.ndarray) -> float:
    q25, q75 = np.percentile(x, [25, 75])
    scale = (q75 - q25) / _NORMAL_IQR
    if scale <= 0:
        scale = float(np.std(x))
    if not scale > 0:
        raise InsufficientDataError("data has no variation; cannot fit a scale parameter")
    return float(scale)


def _family_iqr(family: str) -> float:
    """IQR of the standard member of ``family`` at the starting shape."""
    if family == "t-location-scale":
        return 2.0 * stats.t.ppf(0.75, NU_START)
    if family == "logistic":
        return 2.0 * math.log(3.0)
    return _NORMAL_IQR


def fit_mle(data: Union[EmpiricalSample, Sequence[float]], family: str) -> FitResult:
    """Fit ``family`` to ``data`` by maximum likelihood.

    Data are standardized by the median and normalized IQR; Nelder-Mead then
    works on (location, log scale[, log shape]) inside the configured bounds.
    Log-normal is fitted the same way on ``log(x)``. A failed or bound-pinned
    optimization comes back with ``converged=False`` rather than raising.
    """
    fam = get_family(family)
    x = as_array(data)
    n = x.size
    if n < fam.arity + 1:
        raise InsufficientDataError(
            f"{family} needs at least {fam.arity + 1} observations, got {n}"
        )
    if x.min() == x.max():
        raise InsufficientDataError("data has no variation; cannot fit a scale parameter")

    if fam.location_scale:
        y = x
        jacobian = 0.0
    else:
        if np.any(x <= 0):
            raise ParameterDomainError(f"{family} requires strictly positive data")
        y = np.log(x)
        jacobian = -float(np.sum(y))

    centre = float(np.median(y))
    scale = _robust_scale(y)
    z = (y - centre) / scale
    # Family used on the standardized scale: log-normal becomes a normal on log(x).
    std_fam = fam if fam.location_scale else get_family("normal")

    log_sig0 = math.log(_NORMAL_IQR / _family_iqr(std_fam.name))
    theta0 = [0.0, log_sig0]
    lo_sig, hi_sig = SIGMA_BOUNDS
    # Bounds apply to the fitted scale; move them to the standardized axis.
    sig_bounds = (math.log(lo_sig / scale), math.log(hi_sig / scale))
    bounds = [(None, None), sig_bounds]
    if std_fam.arity == 3:
        theta0.append(math.log(NU_START))
        bounds.append((math.log(NU_BOUNDS[0]), math.log(NU_BOUNDS[1])))
    theta0[1] = min(max(theta0[1], sig_bounds[0]), sig_bounds[1])

    def unpack(theta):
        p = [theta[0], math.exp(theta[1])]
        if len(theta) == 3:
            p.append(math.exp(theta[2]))
        return tuple(p)

    def nll(theta):
        ll = std_fam.logpdf(z, unpack(theta))
        total = float(np.sum(ll))
        return -total if math.isfinite(total) else 1e300

    res = optimize.minimize(
        nll,
        np.asarray(theta0),
        method="Nelder-Mead",
        bounds=bounds,
        options={"xatol": XATOL, "fatol": FATOL, "maxiter": MAXITER, "maxfev": 20 * MAXITER},
    )
    theta = res.x
    p_std = unpack(theta)
    # Undo the standardization; the likelihood picks up -n ln(scale).
    params = (centre + scale * p_std[0], scale * p_std[1]) + tuple(p_std[2:])
    ll = -float(res.fun) - n * math.log(scale) + jacobian

    pinned = abs(theta[1] - sig_bounds[0]) < 1e-6
    converged = bool(res.success) and math.isfinite(ll) and not pinned
    if not converged:
        log.warning("fit of %s did not converge: %s", family, res.message)
    spec = DistributionSpec(family, params)
    return FitResult(spec, ll, bic_score(ll, spec.arity, n), converged, n)


@dataclass(frozen=True)
class Selection:
    best: FitResult
    ranked: list[FitResult]
    # family -> error message for families that could not be fitted.
    diagnostics: dict[str, str] = field(default_factory=dict)


def _rank_key(fit: FitResult):
    return (fit.bic, fit.k, fit.family)


def rank_fits(fits: Iterable[FitResult]) -> list[FitResult]:
    """Sort by BIC, then fewer parameters, then family name."""
    return sorted(fits, key=_rank_key)


def select_best_model(
    data: Union[EmpiricalSample, Sequence[float]],
    families: Sequence[str] = DEFAULT_FAMILIES,
) -> Selection:
    if not families:
        raise ValueError("families must not be empty")
    fits, diagnostics = [], {}
    for name in families:
        try:
            fits.append(fit_mle(data, name))
        except (InsufficientDataError, ParameterDomainError) as exc:
            diagnostics[name] = str(exc)
            log.info("excluding %s: %s", name, exc)
    if not fits:
        raise NoModelError(f"no family could be fitted: {diagnostics}")
    ranked = rank_fits(fits)
    return Selection(ranked[0], ranked, diagnostics)


def empirical_cdf(data) -> Callable[[np.ndarray], np.ndarray]:
    """Right-continuous step CDF of ``data``."""
    xs = np.sort(as_array(data))
    n = xs.size

    def cdf(x):
        return np.searchsorted(xs, np.asarray(x, dtype=float), side="right") / n

    return cdf


@dataclass(frozen=True)
class CdfErrorCurve:
    x: np.ndarray
    error: np.ndarray
    sup_norm: float

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.error.tolist()))


def cdf_error_curve(
    data,
    model: Union[DistributionSpec, Callable[[np.ndarray], np.ndarray]],
    grid: Sequence[float],
) -> CdfErrorCurve:
    """Pointwise ``|F_empirical(x) - F_model(x)|`` on a sorted grid, plus its max."""
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0:
        raise ValueError("grid must not be empty")
    if np.any(np.diff(g) < 0):
        raise ValueError("grid must be sorted ascending")
    model_cdf = model.cdf if isinstance(model, DistributionSpec) else model
    err = np.abs(empirical_cdf(data)(g) - np.asarray(model_cdf(g), dtype=float))
    return CdfErrorCurve(g, err, float(np.max(err)))


@dataclass(frozen=True)
class Histogram:
    centers: np.ndarray
    densities: np.ndarray
    bin_width: float
    mode: float

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.centers.tolist(), self.densities.tolist()))


def histogram_pdf_estimate(data, bin_width: float) -> Histogram:
    """Density histogram on bins ``[k w, (k+1) w)`` spanning the data.

    Densities sum to one when multiplied by ``bin_width``; ``mode`` is the
    centre of the fullest bin (lowest such bin on ties).
    """
    if not (bin_width > 0 and math.isfinite(bin_width)):
        raise ValueError(f"bin_width must be > 0, got {bin_width!r}")
    x = as_array(data)
    idx = np.floor(x / bin_width).astype(np.int64)
    lo = int(idx.min())
    counts = np.bincount(idx - lo)
    centers = (np.arange(lo, lo + counts.size) + 0.5) * bin_width
    densities = counts / (x.size * bin_width)
    return Histogram(centers, densities, float(bin_width), float(centers[np.argmax(counts)]))
