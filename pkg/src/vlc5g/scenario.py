"""Scenario files: TOML with explicit units in every key name.

Loading collects every problem it finds (missing or unknown keys, out-of-range
values, dangling references) and raises a single ValidationError listing all
of them.
"""

from __future__ import annotations

import math
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Union

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import NoiseModel, ReceiverOptics, TransmitterParams
from .distributions import DistributionSpec
from .errors import ValidationError
from .phy import PhyConfig
from .pipeline import (
    AirtimeSegment,
    DeterministicSegment,
    PipelineConfig,
    StochasticSegment,
)
from .sim import MessageSource, Scenario, TrafficLight, Vehicle, validate_scenario

BUNDLED = ("paper-default", "paper-overall", "city-grid")

_TOP_KEYS = {"name", "seed", "duration_s", "snr_form", "phy", "noise", "pipelines", "lights", "vehicles", "sources"}
_SEGMENT_KEYS = {
    "stochastic": ({"name", "kind", "family", "params_s", "lo_ms", "hi_ms"}, {"loss_prob"}),
    "deterministic": ({"name", "kind", "value_ms"}, set()),
    "airtime": ({"name", "kind"}, {"decode_delay_ms", "frame_bits", "expected_min_ms", "expected_max_ms"}),
}
_LIGHT_KEYS = ({"id", "x_m", "y_m", "beam_deg", "power_w", "half_power_deg"}, {"pipeline"})
_VEHICLE_KEYS = (
    {"id", "x_m", "y_m", "heading_deg", "area_cm2"},
    {"speed_mps", "filter_transmission", "concentrator_index", "fov_deg", "responsivity_a_per_w"},
)
_SOURCE_KEYS = ({"id", "kind", "sensor"}, {"interval_s", "rate_per_s", "payload", "payload_bytes", "start_s"})


class _Collector:
    def __init__(self):
        self.problems: list[str] = []

    def build(self, where: str, table: Any, keys, fn: Callable[[dict], Any]):
        if not isinstance(table, dict):
            self.problems.append(f"{where}: expected a table")
            return None
        required, optional = keys
        missing = sorted(required - table.keys())
        unknown = sorted(table.keys() - required - optional)
        for k in missing:
            self.problems.append(f"{where}: missing key {k!r}")
        for k in unknown:
            self.problems.append(f"{where}: unknown key {k!r}")
        if missing:
            return None
        try:
            return fn(table)
        except (ValueError, TypeError) as exc:
            self.problems.append(f"{where}: {exc}")
            return None


def _segment(t: dict, phy: PhyConfig):
    kind = t["kind"]
    if kind == "stochastic":
        return StochasticSegment(
            DistributionSpec(t["family"], tuple(t["params_s"])),
            t["lo_ms"] / 1e3,
            t["hi_ms"] / 1e3,
            t.get("loss_prob", 0.0),
        )
    if kind == "deterministic":
        return DeterministicSegment(t["value_ms"] / 1e3)
    rng = None
    if "expected_min_ms" in t or "expected_max_ms" in t:
        rng = (t.get("expected_min_ms", 0.0) / 1e3, t.get("expected_max_ms", math.inf) / 1e3)
    return AirtimeSegment(phy, t.get("decode_delay_ms", 0.0) / 1e3, t.get("frame_bits"), rng)


def _light(t: dict) -> TrafficLight:
    return TrafficLight(
        str(t["id"]),
        (float(t["x_m"]), float(t["y_m"])),
        TransmitterParams(float(t["power_w"]), math.radians(t["half_power_deg"])),
        math.radians(t["beam_deg"]),
        str(t.get("pipeline", "default")),
    )


def _vehicle(t: dict) -> Vehicle:
    rx = ReceiverOptics(
        area=t["area_cm2"] / 1e4,
        filter_transmission=t.get("filter_transmission", 1.0),
        concentrator_index=t.get("concentrator_index", 1.5),
        fov=math.radians(t.get("fov_deg", 30.0)),
        responsivity=t.get("responsivity_a_per_w", 0.4),
    )
    return Vehicle(
        str(t["id"]),
        (float(t["x_m"]), float(t["y_m"])),
        math.radians(t["heading_deg"]),
        float(t.get("speed_mps", 0.0)),
        rx,
    )


def _source(t: dict) -> MessageSource:
    return MessageSource(
        id=str(t["id"]),
        kind=t["kind"],
        sensor=t["sensor"],
        interval=t.get("interval_s"),
        rate=t.get("rate_per_s"),
        payload=t.get("payload", "{sensor}#{seq}"),
        payload_bytes=t.get("payload_bytes"),
        start=float(t.get("start_s", 0.0)),
    )


def scenario_from_dict(doc: dict) -> Scenario:
    c = _Collector()
    for k in sorted(doc.keys() - _TOP_KEYS):
        c.problems.append(f"unknown top-level key {k!r}")

    phy = c.build(
        "phy",
        doc.get("phy", {}),
        (set(), {"data_rate_bps", "amplitude", "preamble_bits"}),
        lambda t: PhyConfig(t.get("data_rate_bps", 100_000.0), t.get("amplitude", 1.0), t.get("preamble_bits", 16)),
    ) or PhyConfig()
    noise = c.build("noise", doc.get("noise", {}), ({"noise_power_w"}, set()), lambda t: NoiseModel(t["noise_power_w"]))

    pipelines = {}
    raw_pipes = doc.get("pipelines", {})
    if not isinstance(raw_pipes, dict) or not raw_pipes:
        c.problems.append("pipelines: at least one pipeline table is required")
        raw_pipes = {}
    for pname, ptable in raw_pipes.items():
        segs = []
        for i, st in enumerate(ptable.get("segments", []) if isinstance(ptable, dict) else []):
            where = f"pipelines.{pname}.segments[{i}]"
            kind = st.get("kind") if isinstance(st, dict) else None
            if kind not in _SEGMENT_KEYS:
                c.problems.append(f"{where}: kind must be one of {sorted(_SEGMENT_KEYS)}, got {kind!r}")
                continue
            model = c.build(where, st, _SEGMENT_KEYS[kind], lambda t: _segment(t, phy))
            if model is not None:
                segs.append((st["name"], model))
        cfg = c.build(f"pipelines.{pname}", {"segments": segs}, ({"segments"}, set()), lambda t: PipelineConfig(tuple(t["segments"])))
        if cfg is not None:
            pipelines[pname] = cfg

    def items(key, keys, fn):
        out = []
        for i, t in enumerate(doc.get(key, [])):
            obj = c.build(f"{key}[{i}]", t, keys, fn)
            if obj is not None:
                out.append(obj)
        return tuple(out)

    lights = items("lights", _LIGHT_KEYS, _light)
    vehicles = items("vehicles", _VEHICLE_KEYS, _vehicle)
    sources = items("sources", _SOURCE_KEYS, _source)

    snr_form = doc.get("snr_form", "linear")
    if snr_form not in ("linear", "squared"):
        c.problems.append(f"snr_form must be 'linear' or 'squared', got {snr_form!r}")
    duration = doc.get("duration_s", 60.0)
    if isinstance(duration, bool) or not isinstance(duration, (int, float)):
        c.problems.append(f"duration_s must be a number, got {duration!r}")
        duration = 1.0
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        c.problems.append(f"seed must be a non-negative integer, got {seed!r}")
        seed = 0

    sc = Scenario(
        lights=lights,
        vehicles=vehicles,
        sources=sources,
        pipelines=pipelines,
        phy=phy,
        noise=noise or NoiseModel(1.0),
        seed=seed,
        duration=float(duration),
        snr_squared=snr_form == "squared",
        name=str(doc.get("name", "scenario")),
    )
    c.problems.extend(validate_scenario(sc))
    if c.problems:
        raise ValidationError(c.problems)
    return sc


def loads(text: str) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError([f"not valid TOML: {exc}"]) from None
    return scenario_from_dict(doc)


def load(path: Union[str, Path]) -> Scenario:
    return loads(Path(path).read_text(encoding="utf-8"))


def load_bundled(name: str) -> Scenario:
    if name not in BUNDLED:
        raise ValueError(f"unknown bundled scenario {name!r}; choose from {', '.join(BUNDLED)}")
    return loads(resources.files("vlc5g.scenarios").joinpath(f"{name}.toml").read_text(encoding="utf-8"))


def load_any(ref: str) -> Scenario:
    """A bundled scenario name or a path to a TOML file."""
    return load_bundled(ref) if ref in BUNDLED else load(ref)


def _segment_to_dict(name: str, m) -> dict:
    if isinstance(m, StochasticSegment):
        d = {
            "name": name,
            "kind": "stochastic",
            "family": m.spec.family,
            "params_s": list(m.spec.params),
            "lo_ms": m.lo * 1e3,
            "hi_ms": m.hi * 1e3,
        }
        if m.loss_prob:
            d["loss_prob"] = m.loss_prob
        return d
    if isinstance(m, DeterministicSegment):
        return {"name": name, "kind": "deterministic", "value_ms": m.value * 1e3}
    d = {"name": name, "kind": "airtime", "decode_delay_ms": m.decode_delay * 1e3}
    if m.frame_bits is not None:
        d["frame_bits"] = m.frame_bits
    if m.expected_range is not None:
        d["expected_min_ms"] = m.expected_range[0] * 1e3
        if math.isfinite(m.expected_range[1]):
            d["expected_max_ms"] = m.expected_range[1] * 1e3
    return d


def scenario_to_dict(sc: Scenario) -> dict:
    def source(s: MessageSource) -> dict:
        d = {"id": s.id, "kind": s.kind, "sensor": s.sensor, "payload": s.payload, "start_s": s.start}
        if s.interval is not None:
            d["interval_s"] = s.interval
        if s.rate is not None:
            d["rate_per_s"] = s.rate
        if s.payload_bytes is not None:
            d["payload_bytes"] = s.payload_bytes
        return d

    return {
        "name": sc.name,
        "seed": sc.seed,
        "duration_s": sc.duration,
        "snr_form": "squared" if sc.snr_squared else "linear",
        "phy": {
            "data_rate_bps": sc.phy.data_rate,
            "amplitude": sc.phy.amplitude,
            "preamble_bits": sc.phy.preamble_bits,
        },
        "noise": {"noise_power_w": sc.noise.noise_power},
        "pipelines": {
            name: {"segments": [_segment_to_dict(n, m) for n, m in cfg.segments]}
            for name, cfg in sc.pipelines.items()
        },
        "lights": [
            {
                "id": l.id,
                "x_m": l.position[0],
                "y_m": l.position[1],
                "beam_deg": math.degrees(l.beam_orientation),
                "power_w": l.tx.power,
                "half_power_deg": math.degrees(l.tx.half_power_semiangle),
                "pipeline": l.pipeline,
            }
            for l in sc.lights
        ],
        "vehicles": [
            {
                "id": v.id,
                "x_m": v.position[0],
                "y_m": v.position[1],
                "heading_deg": math.degrees(v.heading),
                "speed_mps": v.speed,
                "area_cm2": v.rx.area * 1e4,
                "filter_transmission": v.rx.filter_transmission,
                "concentrator_index": v.rx.concentrator_index,
                "fov_deg": math.degrees(v.rx.fov),
                "responsivity_a_per_w": v.rx.responsivity,
            }
            for v in sc.vehicles
        ],
        "sources": [source(s) for s in sc.sources],
    }


def dumps(sc: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(sc))
