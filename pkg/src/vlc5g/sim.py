"""Discrete-event simulation of sensor messages reaching vehicles through traffic lights.

Sources emit messages; each emission is offered to every vehicle, routed via
the vehicle's best traffic light (assignment re-evaluated per emission) and
delayed by that light's latency pipeline. Vehicles move in straight lines;
link metrics are evaluated where the vehicle is when the frame lands.

Every (message, vehicle) pair gets its own random stream derived from the
run seed, so records for one vehicle never depend on other vehicles or on
lights it is not assigned to.
"""

from __future__ import annotations

import heapq
import logging
import math
import zlib
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .channel import (
    NoiseModel,
    ReceiverOptics,
    TransmitterParams,
    frame_error_rate,
    los_channel_gain,
    ook_ber,
    planar_geometry,
    snr,
)
from .errors import ValidationError, VLC5GError
from .fitting import histogram_pdf_estimate
from .phy import MAX_PAYLOAD, Frame, PhyConfig, build_frame, frame_airtime
from .pipeline import AirtimeSegment, PipelineConfig, end_to_end

log = logging.getLogger(__name__)

SENSOR_LABELS = ("flame", "accelerometer", "environment")


@dataclass(frozen=True)
class TrafficLight:
    id: str
    position: tuple[float, float]
    tx: TransmitterParams
    beam_orientation: float  # radians, direction of the beam axis in the road plane
    pipeline: str = "default"


@dataclass(frozen=True)
class Vehicle:
    id: str
    position: tuple[float, float]
    heading: float  # radians; the receiver looks along the heading
    speed: float
    rx: ReceiverOptics

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError(f"vehicle {self.id}: speed must be >= 0")

    def at(self, t: float) -> "Vehicle":
        if self.speed == 0 or t == 0:
            return self
        x, y = self.position
        step = self.speed * t
        return replace(self, position=(x + step * math.cos(self.heading), y + step * math.sin(self.heading)))


@dataclass(frozen=True)
class MessageSource:
    id: str
    kind: str  # "periodic" or "triggered"
    sensor: str
    interval: Optional[float] = None  # seconds, periodic sources
    rate: Optional[float] = None  # events per second, triggered sources
    payload: str = "{sensor}#{seq}"
    payload_bytes: Optional[int] = None
    start: float = 0.0

    def __post_init__(self):
        if self.kind == "periodic":
            if not (self.interval and self.interval > 0):
                raise ValueError(f"source {self.id}: periodic sources need interval > 0")
        elif self.kind == "triggered":
            if not (self.rate and self.rate > 0):
                raise ValueError(f"source {self.id}: triggered sources need rate > 0")
        else:
            raise ValueError(f"source {self.id}: kind must be 'periodic' or 'triggered', got {self.kind!r}")
        if self.sensor not in SENSOR_LABELS:
            raise ValueError(f"source {self.id}: sensor must be one of {SENSOR_LABELS}")
        if self.payload_bytes is not None and not 1 <= self.payload_bytes <= MAX_PAYLOAD:
            raise ValueError(f"source {self.id}: payload_bytes must lie in 1..{MAX_PAYLOAD}")
        if self.start < 0:
            raise ValueError(f"source {self.id}: start must be >= 0")

    def frame(self, seq: int, phy: PhyConfig) -> Frame:
        data = self.payload.format(sensor=self.sensor, seq=seq, source=self.id).encode()
        if self.payload_bytes is not None:
            data = data[: self.payload_bytes].ljust(self.payload_bytes, b"\0")
        return build_frame(data[:MAX_PAYLOAD] or b"\0", phy)


@dataclass(frozen=True)
class Scenario:
    lights: tuple[TrafficLight, ...]
    vehicles: tuple[Vehicle, ...]
    sources: tuple[MessageSource, ...]
    pipelines: dict[str, PipelineConfig]
    phy: PhyConfig = PhyConfig()
    noise: NoiseModel = NoiseModel(9.2e-9)
    seed: int = 0
    duration: float = 60.0
    snr_squared: bool = False
    name: str = "scenario"

    def segment_names(self) -> list[str]:
        names: list[str] = []
        for light in self.lights:
            cfg = self.pipelines.get(light.pipeline)
            for n in cfg.names if cfg else []:
                if n not in names:
                    names.append(n)
        return names


def _duplicates(ids: Sequence[str]) -> list[str]:
    seen, dupes = set(), []
    for i in ids:
        if i in seen and i not in dupes:
            dupes.append(i)
        seen.add(i)
    return dupes


def validate_scenario(sc: Scenario) -> list[str]:
    """Cross-reference checks; returns every problem found (empty when valid)."""
    problems = []
    for kind, items in (("light", sc.lights), ("vehicle", sc.vehicles), ("source", sc.sources)):
        for d in _duplicates([x.id for x in items]):
            where = " and ".join(f"{kind} #{i + 1}" for i, x in enumerate(items) if x.id == d)
            problems.append(f"duplicate {kind} id {d!r} ({where})")
    for light in sc.lights:
        if light.pipeline not in sc.pipelines:
            problems.append(f"light {light.id!r} references unknown pipeline {light.pipeline!r}")
    if not sc.duration > 0:
        problems.append(f"duration must be > 0, got {sc.duration}")
    for pname, cfg in sc.pipelines.items():
        for sname, model in cfg.segments:
            if not isinstance(model, AirtimeSegment) or model.expected_range is None:
                continue
            lo, hi = model.expected_range
            for src in sc.sources:
                bits = model.frame_bits or src.frame(0, sc.phy).bit_length
                t = frame_airtime(bits, model.phy)
                if not lo <= t <= hi:
                    problems.append(
                        f"source {src.id!r}: airtime {t * 1e3:.3f} ms on {pname}.{sname} "
                        f"is outside [{lo * 1e3:g}, {hi * 1e3:g}] ms"
                    )
    return problems


def link_gain(vehicle: Vehicle, light: TrafficLight) -> float:
    geom = planar_geometry(light.position, light.beam_orientation, vehicle.position, vehicle.heading)
    if geom is None:
        return 0.0
    return los_channel_gain(geom, light.tx, vehicle.rx)


def assign(vehicle: Vehicle, lights: Sequence[TrafficLight]) -> Optional[str]:
    """Id of the light with the highest positive gain to ``vehicle``, or None.

    Ties go to the lowest light id.
    """
    best_id, best_h = None, 0.0
    for light in sorted(lights, key=lambda l: l.id):
        h = link_gain(vehicle, light)
        if h > best_h:
            best_id, best_h = light.id, h
    return best_id


@dataclass(frozen=True)
class TraceRecord:
    msg_id: int
    source: str
    emit_time: float
    light_id: Optional[str]
    vehicle_id: str
    segments: dict[str, float]
    total: Optional[float]
    delivered: bool
    distance: Optional[float] = None
    h: Optional[float] = None
    gamma: Optional[float] = None
    ber: Optional[float] = None
    # Why the message did not arrive: no-light, lost:<segment>, out-of-view, frame-error.
    drop_reason: Optional[str] = None


def _stable_id(text: str) -> int:
    return zlib.crc32(text.encode())


def _record_rng(seed: int, source_id: str, seq: int, vehicle_id: str) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(_stable_id(source_id), seq, _stable_id(vehicle_id)))
    return np.random.Generator(np.random.PCG64(ss))


def _arrival_rng(seed: int, source_id: str) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(_stable_id(source_id), 2**32 - 1))
    return np.random.Generator(np.random.PCG64(ss))


def _emissions(sc: Scenario, seed: int, duration: float):
    """Yield (time, source, seq) in (time, source id, seq) order."""
    queue = []
    arrival = {}
    for src in sc.sources:
        if src.kind == "triggered":
            arrival[src.id] = _arrival_rng(seed, src.id)
            t = src.start + arrival[src.id].exponential(1.0 / src.rate)
        else:
            t = src.start
        if t < duration:
            heapq.heappush(queue, (t, src.id, 0, src))
    while queue:
        t, sid, seq, src = heapq.heappop(queue)
        yield t, src, seq
        if src.kind == "periodic":
            nxt = src.start + (seq + 1) * src.interval
        else:
            nxt = t + arrival[sid].exponential(1.0 / src.rate)
        if nxt < duration:
            heapq.heappush(queue, (nxt, sid, seq + 1, src))


def _deliver(sc: Scenario, light: TrafficLight, vehicle: Vehicle, msg_id, src, seq, t, seed) -> TraceRecord:
    rng = _record_rng(seed, src.id, seq, vehicle.id)
    frame = src.frame(seq, sc.phy)
    lat = end_to_end(sc.pipelines[light.pipeline], rng, frame)
    base = dict(
        msg_id=msg_id,
        source=src.id,
        emit_time=t,
        light_id=light.id,
        vehicle_id=vehicle.id,
        segments=lat.per_segment,
        total=lat.total,
    )
    if not lat.delivered:
        return TraceRecord(**base, delivered=False, drop_reason=f"lost:{lat.lost_at}")

    there = vehicle.at(t + lat.total)
    geom = planar_geometry(light.position, light.beam_orientation, there.position, there.heading)
    h = los_channel_gain(geom, light.tx, there.rx) if geom is not None else 0.0
    d = geom.distance if geom is not None else math.dist(light.position, there.position)
    if h == 0.0:
        return TraceRecord(**base, delivered=False, distance=d, h=0.0, gamma=0.0, ber=0.5, drop_reason="out-of-view")
    gamma = snr(h, light.tx, there.rx, sc.noise, sc.snr_squared)
    ber = ook_ber(gamma)
    per = frame_error_rate(ber, frame.bit_length)
    ok = per == 0.0 or rng.random() >= per
    return TraceRecord(
        **base,
        delivered=ok,
        distance=d,
        h=h,
        gamma=gamma,
        ber=ber,
        drop_reason=None if ok else "frame-error",
    )


@dataclass
class SimResult:
    records: list[TraceRecord]
    emitted: int
    segment_names: list[str] = field(default_factory=list)

    @property
    def delivered(self) -> int:
        return sum(r.delivered for r in self.records)

    @property
    def dropped(self) -> int:
        return len(self.records) - self.delivered


def run(sc: Scenario, seed: Optional[int] = None, duration: Optional[float] = None) -> SimResult:
    """Simulate ``sc``; identical (scenario, seed) always yields an identical trace."""
    problems = validate_scenario(sc)
    if problems:
        raise ValidationError(problems)
    seed = sc.seed if seed is None else seed
    duration = sc.duration if duration is None else duration
    lights = {l.id: l for l in sc.lights}
    records: list[TraceRecord] = []
    msg_id = 0
    for t, src, seq in _emissions(sc, seed, duration):
        for vehicle in sc.vehicles:
            here = vehicle.at(t)
            lid = assign(here, sc.lights)
            if lid is None:
                records.append(
                    TraceRecord(msg_id, src.id, t, None, vehicle.id, {}, None, False, drop_reason="no-light")
                )
            else:
                records.append(_deliver(sc, lights[lid], vehicle, msg_id, src, seq, t, seed))
        msg_id += 1
    log.debug("simulated %d messages, %d records", msg_id, len(records))
    return SimResult(records, len(records), sc.segment_names())


def _stats_ms(values: Sequence[float], bin_ms: float) -> dict:
    v = np.asarray(values, dtype=float) * 1e3
    return {
        "count": int(v.size),
        "min_ms": float(v.min()),
        "max_ms": float(v.max()),
        "median_ms": float(np.median(v)),
        "mode_ms": histogram_pdf_estimate(v, bin_ms).mode,
    }


def summarize(records: Sequence[TraceRecord], bin_ms: float = 1.0) -> dict:
    """Per-segment and total latency statistics over delivered records (ms)."""
    if not records:
        raise VLC5GError("cannot summarize an empty trace")
    delivered = [r for r in records if r.delivered]
    out = {
        "emitted": len(records),
        "delivered": len(delivered),
        "dropped": len(records) - len(delivered),
        "delivery_ratio": len(delivered) / len(records),
        "drop_reasons": dict(sorted(Counter(r.drop_reason for r in records if not r.delivered).items())),
        "bin_ms": bin_ms,
        "segments": {},
        "total": None,
    }
    if not delivered:
        return out
    names: list[str] = []
    for r in delivered:
        names.extend(n for n in r.segments if n not in names)
    for n in names:
        vals = [r.segments[n] for r in delivered if n in r.segments]
        out["segments"][n] = _stats_ms(vals, bin_ms)
    out["total"] = _stats_ms([r.total for r in delivered], bin_ms)
    return out
