"""Latency distributions: the t-location-scale law and its fitting competitors.

All latencies are in seconds. Every family exposes ``logpdf``, ``pdf``, ``cdf``
and ``sample`` on plain parameter tuples; :class:`DistributionSpec` bundles a
family name with validated parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import special

from .errors import ParameterDomainError

ArrayLike = Union[float, Sequence[float], np.ndarray]
Seed = Union[int, np.random.Generator, np.random.SeedSequence, None]

TLS = "t-location-scale"
NORMAL = "normal"
LOGISTIC = "logistic"
LOGNORMAL = "log-normal"


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ParameterDomainError(f"{name} must be finite and > 0, got {value!r}")


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ParameterDomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class TLocationScaleParams:
    """Location ``mu`` and scale ``sigma`` in seconds, shape ``nu`` (degrees of freedom)."""

    mu: float
    sigma: float
    nu: float

    def __post_init__(self):
        _check_finite("mu", self.mu)
        _check_positive("sigma", self.sigma)
        _check_positive("nu", self.nu)

    def astuple(self) -> tuple[float, float, float]:
        return (self.mu, self.sigma, self.nu)


def _tls_log_norm(sigma: float, nu: float) -> float:
    return (
        math.lgamma((nu + 1.0) / 2.0)
        - math.lgamma(nu / 2.0)
        - math.log(sigma)
        - 0.5 * math.log(nu * math.pi)
    )


def tls_logpdf(x: ArrayLike, p: TLocationScaleParams) -> np.ndarray:
    z = (np.asarray(x, dtype=float) - p.mu) / p.sigma
    return _tls_log_norm(p.sigma, p.nu) - 0.5 * (p.nu + 1.0) * np.log1p(z * z / p.nu)


def tls_pdf(x: ArrayLike, p: TLocationScaleParams) -> np.ndarray:
    """Density of the t-location-scale law, in 1/seconds.

    ``Gamma((nu+1)/2) / (sigma sqrt(nu pi) Gamma(nu/2)) * ((nu + z^2)/nu)^(-(nu+1)/2)``
    with ``z = (x - mu)/sigma``. Gamma ratios go through log-gamma so large
    ``nu`` does not overflow.
    """
    return np.exp(tls_logpdf(x, p))


def _student_t_cdf(t: np.ndarray, nu: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    t2 = t * t
    out = np.empty_like(t)
    # Near the centre the complementary incomplete-beta form keeps relative accuracy.
    central = t2 < nu
    tc = t[central]
    out[central] = 0.5 + 0.5 * np.sign(tc) * special.betainc(
        0.5, nu / 2.0, t2[central] / (nu + t2[central])
    )
    tt = t[~central]
    tail = 0.5 * special.betainc(nu / 2.0, 0.5, nu / (nu + t2[~central]))
    out[~central] = np.where(tt < 0, tail, 1.0 - tail)
    return out


def tls_cdf(x: ArrayLike, p: TLocationScaleParams) -> np.ndarray:
    """Cumulative probability via the regularized incomplete beta function."""
    x = np.asarray(x, dtype=float)
    out = _student_t_cdf(np.atleast_1d((x - p.mu) / p.sigma), p.nu)
    return out.reshape(x.shape) if x.ndim else out[0]


def tls_sample(p: TLocationScaleParams, rng_seed: Seed, n: int) -> np.ndarray:
    """Draw ``n`` values ``mu + sigma * T`` with ``T`` standard Student-t(nu).

    The same integer seed always reproduces the same sequence.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = _rng(rng_seed)
    return p.mu + p.sigma * rng.standard_t(p.nu, size=n)


# -- family registry ---------------------------------------------------------


@dataclass(frozen=True)
class Family:
    name: str
    param_names: tuple[str, ...]
    logpdf: Callable[[np.ndarray, tuple], np.ndarray]
    cdf: Callable[[np.ndarray, tuple], np.ndarray]
    sample: Callable[[tuple, np.random.Generator, int], np.ndarray]
    # True when the family is closed under x -> a + b x (fitting standardizes data).
    location_scale: bool = True

    @property
    def arity(self) -> int:
        return len(self.param_names)

    def validate(self, params: Sequence[float]) -> tuple[float, ...]:
        params = tuple(float(v) for v in params)
        if len(params) != self.arity:
            raise ParameterDomainError(
                f"{self.name} takes {self.arity} parameters {self.param_names}, got {len(params)}"
            )
        for name, value in zip(self.param_names, params):
            if name in ("sigma", "s", "nu"):
                _check_positive(name, value)
            else:
                _check_finite(name, value)
        return params


def _tls_tuple(params) -> TLocationScaleParams:
    return TLocationScaleParams(*params)


def _normal_logpdf(x, params):
    mu, sigma = params
    z = (x - mu) / sigma
    return -0.5 * z * z - math.log(sigma) - 0.5 * math.log(2.0 * math.pi)


def _logistic_logpdf(x, params):
    mu, s = params
    az = np.abs((x - mu) / s)
    return -az - 2.0 * np.log1p(np.exp(-az)) - math.log(s)


def _lognormal_logpdf(x, params):
    m, s = params
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.log(x)
        out = _normal_logpdf(lx, (m, s)) - lx
    return np.where(x > 0, out, -np.inf)


def _lognormal_cdf(x, params):
    m, s = params
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > 0, special.ndtr((np.log(np.maximum(x, 1e-300)) - m) / s), 0.0)


FAMILIES: dict[str, Family] = {
    TLS: Family(
        TLS,
        ("mu", "sigma", "nu"),
        lambda x, p: tls_logpdf(x, _tls_tuple(p)),
        lambda x, p: tls_cdf(x, _tls_tuple(p)),
        lambda p, rng, n: tls_sample(_tls_tuple(p), rng, n),
    ),
    NORMAL: Family(
        NORMAL,
        ("mu", "sigma"),
        _normal_logpdf,
        lambda x, p: special.ndtr((np.asarray(x, dtype=float) - p[0]) / p[1]),
        lambda p, rng, n: rng.normal(p[0], p[1], size=n),
    ),
    LOGISTIC: Family(
        LOGISTIC,
        ("mu", "s"),
        _logistic_logpdf,
        lambda x, p: special.expit((np.asarray(x, dtype=float) - p[0]) / p[1]),
        lambda p, rng, n: rng.logistic(p[0], p[1], size=n),
    ),
    LOGNORMAL: Family(
        LOGNORMAL,
        ("mu", "sigma"),
        _lognormal_logpdf,
        _lognormal_cdf,
        lambda p, rng, n: rng.lognormal(p[0], p[1], size=n),
        location_scale=False,
    ),
}

DEFAULT_FAMILIES = (TLS, NORMAL, LOGISTIC, LOGNORMAL)


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ParameterDomainError(
            f"unknown family {name!r}; known: {', '.join(FAMILIES)}"
        ) from None


@dataclass(frozen=True)
class DistributionSpec:
    """A family name plus its parameter vector (seconds, or log-seconds for log-normal)."""

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        fam = get_family(self.family)
        object.__setattr__(self, "params", fam.validate(self.params))

    @property
    def arity(self) -> int:
        return len(self.params)

    def logpdf(self, x: ArrayLike) -> np.ndarray:
        return get_family(self.family).logpdf(np.asarray(x, dtype=float), self.params)

    def pdf(self, x: ArrayLike) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def cdf(self, x: ArrayLike) -> np.ndarray:
        return get_family(self.family).cdf(np.asarray(x, dtype=float), self.params)

    def sample(self, rng: Seed, n: int) -> np.ndarray:
        return get_family(self.family).sample(self.params, _rng(rng), n)

    def as_dict(self) -> dict:
        names = get_family(self.family).param_names
        return {"family": self.family, **dict(zip(names, self.params))}


@dataclass(frozen=True)
class EmpiricalSample:
    """Observed latencies in seconds, kept in arrival order."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValueError("an empirical sample needs at least one value")
        if not np.all(np.isfinite(v)):
            raise ValueError("latency values must be finite")
        if np.any(v < 0):
            raise ValueError("latency values must be >= 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @classmethod
    def from_ms(cls, values_ms: Sequence[float]) -> "EmpiricalSample":
        return cls(np.asarray(values_ms, dtype=float) * 1e-3)


def as_array(data) -> np.ndarray:
    """Accept an :class:`EmpiricalSample` or any finite 1-D array-like."""
    if isinstance(data, EmpiricalSample):
        return data.values
    v = np.asarray(data, dtype=float).ravel()
    if v.size < 1:
        raise ValueError("data must contain at least one value")
    if not np.all(np.isfinite(v)):
        raise ValueError("data must be finite")
    return v
