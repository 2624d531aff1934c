"""End-to-end latency as an ordered chain of segment models.

A segment is stochastic (a fitted distribution truncated to physical bounds),
deterministic (fixed processing time) or airtime-derived (frame bits over the
VLC data rate). Times are in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .distributions import TLS, DistributionSpec
from .errors import ConfigurationError, DegenerateTruncationError
from .phy import Frame, PhyConfig, frame_airtime

FIVEG_PARAMS = (0.0088, 7.43e-4, 1.09)
OVERALL_PARAMS = (0.0119, 0.001, 1.253)
FIVEG_BOUNDS = (2.4e-3, 29e-3)
VLC_AIRTIME_BOUNDS = (2.4e-3, 3.1e-3)
PROCESSING_DELAY = 300e-6
MIN_ACCEPTANCE = 1e-9


@dataclass(frozen=True)
class StochasticSegment:
    spec: DistributionSpec
    lo: float
    hi: float
    loss_prob: float = 0.0

    def __post_init__(self):
        if not (0 <= self.lo < self.hi and math.isfinite(self.hi)):
            raise ConfigurationError(f"truncation needs 0 <= lo < hi, got [{self.lo}, {self.hi}]")
        if not 0 <= self.loss_prob < 1:
            raise ConfigurationError(f"loss_prob must lie in [0, 1), got {self.loss_prob}")
        if self.acceptance < MIN_ACCEPTANCE:
            raise DegenerateTruncationError(
                f"[{self.lo}, {self.hi}] holds only {self.acceptance:.3g} of the probability mass"
            )

    @cached_property
    def acceptance(self) -> float:
        lo_p, hi_p = self.spec.cdf(np.array([self.lo, self.hi]))
        return float(hi_p - lo_p)


@dataclass(frozen=True)
class DeterministicSegment:
    value: float

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise ConfigurationError(f"deterministic delay must be >= 0, got {self.value}")


@dataclass(frozen=True)
class AirtimeSegment:
    phy: PhyConfig = PhyConfig()
    decode_delay: float = 0.0
    # Fixed frame size in bits; None takes it from the message frame.
    frame_bits: Optional[int] = None
    # Airtime range the scenario expects its frames to fall into (checked by validation).
    expected_range: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.decode_delay < 0:
            raise ConfigurationError("decode_delay must be >= 0")
        if self.frame_bits is not None and self.frame_bits < 1:
            raise ConfigurationError("frame_bits must be >= 1")

    def airtime(self, frame: Optional[Frame]) -> float:
        if self.frame_bits is not None:
            bits = self.frame_bits
        elif frame is not None:
            bits = frame.bit_length
        else:
            raise ConfigurationError("airtime segment needs a frame or a fixed frame_bits")
        return frame_airtime(bits, self.phy) + self.decode_delay


SegmentModel = Union[StochasticSegment, DeterministicSegment, AirtimeSegment]


@dataclass(frozen=True)
class PipelineConfig:
    segments: tuple[tuple[str, SegmentModel], ...]

    def __post_init__(self):
        segs = tuple((str(n), m) for n, m in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ConfigurationError("a pipeline needs at least one segment")
        names = [n for n, _ in segs]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ConfigurationError(f"duplicate segment names: {', '.join(dupes)}")

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.segments]


@dataclass(frozen=True)
class LatencySample:
    per_segment: dict[str, float]
    total: float
    # Name of the segment that dropped the message, if any.
    lost_at: Optional[str] = None

    @property
    def delivered(self) -> bool:
        return self.lost_at is None


def sample_truncated(
    spec: DistributionSpec, lo: float, hi: float, rng: np.random.Generator, n: int
) -> np.ndarray:
    """``n`` draws from ``spec`` conditioned on ``[lo, hi]``, by rejection."""
    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        batch = spec.sample(rng, max(64, int(need * 1.2) + 16))
        keep = batch[(batch >= lo) & (batch <= hi)][:need]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    return out


def sample_segment(
    model: SegmentModel, rng: np.random.Generator, frame: Optional[Frame] = None
) -> float:
    if isinstance(model, DeterministicSegment):
        return model.value
    if isinstance(model, AirtimeSegment):
        return model.airtime(frame)
    if isinstance(model, StochasticSegment):
        while True:
            x = float(model.spec.sample(rng, 1)[0])
            if model.lo <= x <= model.hi:
                return x
    raise ConfigurationError(f"unknown segment model {model!r}")


def end_to_end(
    cfg: PipelineConfig, rng: np.random.Generator, frame: Optional[Frame] = None
) -> LatencySample:
    """Sample each segment once, in order. A segment loss stops the chain."""
    per_segment: dict[str, float] = {}
    lost_at = None
    for name, model in cfg.segments:
        per_segment[name] = sample_segment(model, rng, frame)
        if isinstance(model, StochasticSegment) and model.loss_prob > 0:
            if rng.random() < model.loss_prob:
                lost_at = name
                break
    return LatencySample(per_segment, sum(per_segment.values()), lost_at)


def reference_pipeline(frame_bits: Optional[int] = None, processing: float = PROCESSING_DELAY) -> PipelineConfig:
    """5G segment + gateway processing + VLC airtime, with the reference 5G fit."""
    return PipelineConfig(
        (
            ("5g", StochasticSegment(DistributionSpec(TLS, FIVEG_PARAMS), *FIVEG_BOUNDS)),
            ("processing", DeterministicSegment(processing)),
            ("vlc", AirtimeSegment(PhyConfig(), frame_bits=frame_bits, expected_range=VLC_AIRTIME_BOUNDS)),
        )
    )


def overall_pipeline() -> PipelineConfig:
    """Single segment drawn from the reference end-to-end fit.

    Bounds are the sums of the per-segment bounds of :func:`reference_pipeline`.
    """
    lo = FIVEG_BOUNDS[0] + PROCESSING_DELAY + VLC_AIRTIME_BOUNDS[0]
    hi = FIVEG_BOUNDS[1] + PROCESSING_DELAY + VLC_AIRTIME_BOUNDS[1]
    return PipelineConfig((("total", StochasticSegment(DistributionSpec(TLS, OVERALL_PARAMS), lo, hi)),))
