import math
from dataclasses import replace

import numpy as np
import pytest

from vlc5g.channel import NoiseModel, ReceiverOptics, TransmitterParams
from vlc5g.errors import ValidationError, VLC5GError
from vlc5g.files import trace_to_csv
from vlc5g.pipeline import DeterministicSegment, PipelineConfig, reference_pipeline
from vlc5g.scenario import BUNDLED, load_bundled
from vlc5g.sim import (
    MessageSource,
    Scenario,
    TraceRecord,
    TrafficLight,
    Vehicle,
    assign,
    run,
    summarize,
)

DEG = math.pi / 180
TX = TransmitterParams(1.0, 30 * DEG)
RX = ReceiverOptics(area=1e-4)


def light(lid, x, beam=0.0, pipeline="trial"):
    return TrafficLight(lid, (x, 0.0), TX, beam, pipeline)


def vehicle(vid, x, heading=math.pi, speed=0.0):
    return Vehicle(vid, (x, 0.0), heading, speed, RX)


def scenario(lights, vehicles, sources=None, **kw):
    sources = sources or (MessageSource("env", "periodic", "environment", interval=1.0, payload_bytes=25),)
    kw.setdefault("duration", 20.0)
    return Scenario(tuple(lights), tuple(vehicles), tuple(sources), {"trial": reference_pipeline()}, **kw)


class TestAssign:
    def test_behind_all_beams(self):
        assert assign(vehicle("V", -10.0), [light("A", 0.0)]) is None

    def test_single_light(self):
        assert assign(vehicle("V", 10.0), [light("A", 0.0)]) == "A"

    def test_nearer_light_wins(self):
        # A at 10 m, B at 20 m, both on-axis with the vehicle.
        lights = [light("B", -10.0), light("A", 0.0)]
        assert assign(vehicle("V", 10.0), lights) == "A"

    def test_tie_goes_to_lowest_id(self):
        lights = [light("Z", 0.0), light("M", 0.0)]
        assert assign(vehicle("V", 10.0), lights) == "M"


class TestRun:
    def test_zero_vehicles(self):
        res = run(scenario([light("A", 0.0)], []))
        assert res.records == [] and res.emitted == 0

    def test_one_hz_for_2250_s_gives_2250_records(self):
        sc = scenario([light("A", 0.0)], [vehicle("V", 10.0)], duration=2250.0)
        assert len(run(sc).records) == 2250

    def test_seeds_change_values_not_count(self):
        sc = scenario([light("A", 0.0)], [vehicle("V", 10.0)], duration=100.0)
        a, b = run(sc, seed=1).records, run(sc, seed=2).records
        assert len(a) == len(b) == 100
        assert [r.total for r in a] != [r.total for r in b]

    def test_ordered_by_emit_time(self):
        res = run(load_bundled("city-grid"))
        times = [r.emit_time for r in res.records]
        assert times == sorted(times)
        ids = [r.msg_id for r in res.records]
        assert ids == sorted(ids)

    @pytest.mark.parametrize("name", BUNDLED)
    def test_conservation(self, name):
        res = run(load_bundled(name))
        assert res.emitted == res.delivered + res.dropped == len(res.records)
        s = summarize(res.records)
        assert s["emitted"] == s["delivered"] + s["dropped"]
        assert sum(s["drop_reasons"].values()) == s["dropped"]

    def test_city_grid_drop_reasons(self):
        res = run(load_bundled("city-grid"))
        assert all(r.drop_reason == "no-light" for r in res.records if r.vehicle_id == "V4")
        assert all(r.drop_reason is None for r in res.records if r.delivered)
        assert {r.source for r in res.records} == {"env", "flame", "crash"}

    def test_byte_identical_traces(self):
        sc = load_bundled("city-grid")
        a, b = run(sc, seed=7), run(sc, seed=7)
        assert trace_to_csv(a.records, a.segment_names) == trace_to_csv(b.records, b.segment_names)

    def test_lights_do_not_interfere(self):
        # Dropping the light that serves V2 must leave V1's records unchanged.
        far = [light("A", 0.0), light("B", 500.0)]
        sc = scenario(far, [vehicle("V1", 10.0), vehicle("V2", 510.0)], duration=30.0)
        full = [r for r in run(sc).records if r.vehicle_id == "V1"]
        only = [r for r in run(replace(sc, lights=(far[0],))).records if r.vehicle_id == "V1"]
        assert full == only

    def test_vehicles_do_not_interfere(self):
        sc = scenario([light("A", 0.0)], [vehicle("V1", 10.0), vehicle("V2", 15.0)], duration=30.0)
        full = [r for r in run(sc).records if r.vehicle_id == "V1"]
        alone = run(replace(sc, vehicles=sc.vehicles[:1])).records
        assert full == alone

    def test_moving_vehicle_leaves_beam(self):
        # Receiver facing away from the lamp never gets a light.
        sc = scenario([light("A", 0.0)], [vehicle("V", 5.0, heading=0.0)], duration=20.0)
        res = run(sc)
        assert all(r.drop_reason == "no-light" for r in res.records)
        sc = scenario([light("A", 0.0)], [Vehicle("V", (100.0, 0.0), math.pi, 8.0, RX)], duration=12.0)
        # Approaching from 100 m: out of range at first, in range by the end.
        res = run(sc)
        assert not res.records[0].delivered and res.records[-1].delivered

    def test_frame_errors_far_out(self):
        # Heavy noise: every link is marginal and frames fail.
        sc = scenario([light("A", 0.0)], [vehicle("V", 30.0)], noise=NoiseModel(1e-6))
        res = run(sc)
        assert all(r.drop_reason == "frame-error" for r in res.records)

    def test_invalid_scenario(self):
        sc = scenario([light("A", 0.0), light("A", 5.0, pipeline="nope")], [vehicle("V", 10.0)])
        with pytest.raises(ValidationError) as e:
            run(sc)
        assert len(e.value.problems) == 2

    def test_triggered_rate(self):
        src = MessageSource("fire", "triggered", "flame", rate=2.0, payload_bytes=25)
        sc = scenario([light("A", 0.0)], [vehicle("V", 10.0)], sources=[src], duration=500.0)
        n = len(run(sc).records)
        # Poisson(1000): 5 sigma band.
        assert abs(n - 1000) < 5 * math.sqrt(1000)


class TestSummarize:
    def test_empty(self):
        with pytest.raises(VLC5GError):
            summarize([])

    def test_constant(self):
        recs = [TraceRecord(i, "s", float(i), "A", "V", {"x": 5e-3}, 5e-3, True) for i in range(10)]
        t = summarize(recs)["total"]
        assert t["min_ms"] == t["max_ms"] == t["median_ms"] == 5.0

    def test_default_scenario(self):
        res = run(load_bundled("paper-default"))
        s = summarize(res.records)
        assert s["emitted"] == 2250
        g = s["segments"]["5g"]
        assert 2.4 <= g["min_ms"] and g["max_ms"] <= 29.0
        assert s["segments"]["processing"]["min_ms"] == pytest.approx(0.3)
        assert s["segments"]["vlc"]["min_ms"] == pytest.approx(2.4)
        assert abs(s["total"]["mode_ms"] - 12.0) <= 1.5
