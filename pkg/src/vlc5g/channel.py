"""Optical link budget for a traffic-light transmitter and a vehicle photodiode.

Line-of-sight gain follows the generalized Lambertian model with an ideal
non-imaging concentrator; SNR is ``R_PD * H * P_s / xi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional

from .errors import InfeasibleLinkError

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class TransmitterParams:
    power: float  # optical transmit power P_s, watts
    half_power_semiangle: float  # radians

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError(f"power must be > 0, got {self.power}")
        if not 0 < self.half_power_semiangle < HALF_PI:
            raise ValueError("half_power_semiangle must lie in (0, pi/2)")


@dataclass(frozen=True)
class ReceiverOptics:
    area: float  # m^2
    filter_transmission: float = 1.0
    concentrator_index: float = 1.5
    fov: float = math.radians(30)
    responsivity: float = 0.4  # A/W

    def __post_init__(self):
        if not self.area > 0:
            raise ValueError(f"area must be > 0, got {self.area}")
        if not 0 < self.filter_transmission <= 1:
            raise ValueError("filter_transmission must lie in (0, 1]")
        if not self.concentrator_index >= 1:
            raise ValueError("concentrator_index must be >= 1")
        if not 0 < self.fov <= HALF_PI:
            raise ValueError("fov must lie in (0, pi/2]")
        if not self.responsivity > 0:
            raise ValueError("responsivity must be > 0")


@dataclass(frozen=True)
class LinkGeometry:
    distance: float  # m
    irradiance_angle: float = 0.0  # phi, radians
    incidence_angle: float = 0.0  # psi, radians

    def __post_init__(self):
        if not self.distance > 0:
            raise ValueError(f"distance must be > 0, got {self.distance}")
        for name in ("irradiance_angle", "incidence_angle"):
            a = getattr(self, name)
            if not 0 <= a <= HALF_PI:
                raise ValueError(f"{name} must lie in [0, pi/2], got {a}")


@dataclass(frozen=True)
class NoiseModel:
    noise_power: float  # cumulative noise power xi

    def __post_init__(self):
        if not self.noise_power > 0:
            raise ValueError(f"noise_power must be > 0, got {self.noise_power}")


def lambertian_order(half_power_semiangle: float) -> float:
    """``m = -ln 2 / ln cos(half angle)``; 60 deg gives 1, 45 deg gives 2."""
    if not 0 < half_power_semiangle < HALF_PI:
        raise ValueError("half_power_semiangle must lie in (0, pi/2)")
    return -math.log(2.0) / math.log(math.cos(half_power_semiangle))


def concentrator_gain(rx: ReceiverOptics, incidence_angle: float) -> float:
    if incidence_angle > rx.fov:
        return 0.0
    return rx.concentrator_index**2 / math.sin(rx.fov) ** 2


def los_channel_gain(geom: LinkGeometry, tx: TransmitterParams, rx: ReceiverOptics) -> float:
    psi = geom.incidence_angle
    if psi > rx.fov:
        return 0.0
    m = lambertian_order(tx.half_power_semiangle)
    return (
        (m + 1.0)
        * rx.area
        / (2.0 * math.pi * geom.distance**2)
        * math.cos(geom.irradiance_angle) ** m
        * rx.filter_transmission
        * concentrator_gain(rx, psi)
        * math.cos(psi)
    )


def snr(
    h: float,
    tx: TransmitterParams,
    rx: ReceiverOptics,
    noise: NoiseModel,
    squared: bool = False,
) -> float:
    """Received SNR. ``squared=True`` uses the electrical form ``(R H P)^2 / xi``."""
    signal = rx.responsivity * h * tx.power
    if squared:
        signal = signal * signal
    return signal / noise.noise_power


def q_function(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def ook_ber(gamma: float) -> float:
    if gamma < 0 or math.isnan(gamma):
        raise ValueError(f"SNR must be >= 0, got {gamma}")
    return q_function(math.sqrt(gamma))


def snr_for_ber(ber: float) -> float:
    """SNR at which :func:`ook_ber` equals ``ber`` (0 < ber < 0.5)."""
    if not 0 < ber < 0.5:
        raise ValueError("ber must lie in (0, 0.5)")
    return NormalDist().inv_cdf(1.0 - ber) ** 2


def frame_error_rate(ber: float, frame_bits: int) -> float:
    if not 0 <= ber <= 1:
        raise ValueError(f"ber must lie in [0, 1], got {ber}")
    if frame_bits < 1:
        raise ValueError(f"frame_bits must be >= 1, got {frame_bits}")
    if ber == 1:
        return 1.0
    return -math.expm1(frame_bits * math.log1p(-ber))


def max_range(
    tx: TransmitterParams,
    rx: ReceiverOptics,
    noise: NoiseModel,
    gamma_min: float,
    squared: bool = False,
    resolution: float = 1e-3,
) -> float:
    """Largest on-axis distance (m) whose SNR still reaches ``gamma_min``.

    Bisection down to ``resolution``; the returned bound always satisfies the
    threshold.
    """
    if not gamma_min > 0:
        raise ValueError("gamma_min must be > 0")

    def ok(d):
        return snr(los_channel_gain(LinkGeometry(d), tx, rx), tx, rx, noise, squared) >= gamma_min

    lo = resolution
    if not ok(lo):
        raise InfeasibleLinkError(f"SNR {gamma_min} unreachable even at {resolution} m")
    hi = 2.0 * lo
    while ok(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e9:
            raise InfeasibleLinkError("range diverges")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class LinkBudget:
    h: float
    gamma: float
    ber: float
    per: float


def link_budget(
    geom: LinkGeometry,
    tx: TransmitterParams,
    rx: ReceiverOptics,
    noise: NoiseModel,
    frame_bits: int,
    squared: bool = False,
) -> LinkBudget:
    h = los_channel_gain(geom, tx, rx)
    gamma = snr(h, tx, rx, noise, squared)
    ber = ook_ber(gamma)
    return LinkBudget(h, gamma, ber, frame_error_rate(ber, frame_bits))


def _angle_between(ax: float, ay: float, bx: float, by: float) -> float:
    na, nb = math.hypot(ax, ay), math.hypot(bx, by)
    c = (ax * bx + ay * by) / (na * nb)
    return math.acos(max(-1.0, min(1.0, c)))


def planar_geometry(
    tx_pos: tuple[float, float],
    beam_orientation: float,
    rx_pos: tuple[float, float],
    rx_heading: float,
) -> Optional[LinkGeometry]:
    """Geometry between a transmitter and a forward-looking receiver in the plane.

    Returns None when either end faces away (angle beyond 90 deg) or the two
    points coincide.
    """
    dx, dy = rx_pos[0] - tx_pos[0], rx_pos[1] - tx_pos[1]
    d = math.hypot(dx, dy)
    if d == 0:
        return None
    phi = _angle_between(math.cos(beam_orientation), math.sin(beam_orientation), dx, dy)
    psi = _angle_between(math.cos(rx_heading), math.sin(rx_heading), -dx, -dy)
    if phi > HALF_PI or psi > HALF_PI:
        return None
    return LinkGeometry(d, phi, psi)
