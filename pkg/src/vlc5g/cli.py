"""Command-line entry point: ``vlc5g run | fit | link-budget | validate``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import channel
from .distributions import DEFAULT_FAMILIES, FAMILIES
from .errors import VLC5GError, ValidationError
from .files import ColumnError, read_latency_column, write_json, write_trace
from .report import build_report, fit_report
from .scenario import BUNDLED, load_any
from .sim import run, summarize

log = logging.getLogger("vlc5g")


def _families(text: str) -> list[str]:
    names = [f.strip() for f in text.split(",") if f.strip()]
    unknown = [f for f in names if f not in FAMILIES]
    if unknown or not names:
        raise argparse.ArgumentTypeError(
            f"unknown families {unknown}; choose from {', '.join(FAMILIES)}"
        )
    return names


def _positive(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _run_one(scenario_ref: str, seed: int, duration, out: Path, suffix: str, bins_ms: float, report: bool, families):
    sc = load_any(scenario_ref)
    result = run(sc, seed=seed, duration=duration)
    write_trace(out / f"trace{suffix}.csv", result.records, result.segment_names)
    summary = {
        "scenario": sc.name,
        "seed": seed,
        "duration_s": sc.duration if duration is None else duration,
        "segment_names": result.segment_names,
        **(summarize(result.records, bins_ms) if result.records else {"emitted": 0, "delivered": 0, "dropped": 0}),
    }
    write_json(out / f"summary{suffix}.json", summary)
    if report and result.records:
        write_json(out / f"report{suffix}.json", build_report(result, families, bins_ms))
    return summary


def cmd_run(args) -> int:
    sc = load_any(args.scenario)  # validate before creating outputs
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = sc.seed if args.seed is None else args.seed
    if args.replications == 1:
        s = _run_one(args.scenario, seed, args.duration, out, "", args.bins_ms, args.report, args.families)
        _print_summary(s)
        return 0
    seeds = [seed + k for k in range(args.replications)]
    with ProcessPoolExecutor() as pool:
        futures = [
            pool.submit(_run_one, args.scenario, s, args.duration, out, f"_seed{s}", args.bins_ms, args.report, args.families)
            for s in seeds
        ]
        for f in futures:
            _print_summary(f.result())
    return 0


def _print_summary(s: dict) -> None:
    line = f"{s['scenario']} seed={s['seed']}: {s['emitted']} records, {s['delivered']} delivered"
    total = s.get("total")
    if total:
        line += f", median total {total['median_ms']:.3f} ms, mode {total['mode_ms']:.3f} ms"
    print(line)


def cmd_fit(args) -> int:
    text = Path(args.path).read_text(encoding="utf-8")
    values = read_latency_column(text, args.column)
    rep = fit_report(values, args.families, args.bins_ms)
    print(f"n = {values.size}; winner: {rep.winner}")
    print(f"{'rank':>4}  {'family':<18} {'BIC':>14} {'logL':>14} {'CDF err':>9}  params")
    for f in rep.fits_ms():
        params = ", ".join(f"{k}={v:.6g}" for k, v in f["params"].items())
        flag = "" if f["converged"] else "  (not converged)"
        print(f"{f['rank']:>4}  {f['family']:<18} {f['bic']:>14.3f} {f['log_likelihood']:>14.3f} {f['cdf_error_sup']:>9.4f}  {params}{flag}")
    for fam, why in rep.selection.diagnostics.items():
        print(f"      {fam:<18} excluded: {why}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "fit_report.json", rep.to_dict())
        (out / "pdf_grid.csv").write_text(rep.pdf_grid_csv(), encoding="utf-8")
        (out / "cdf_grid.csv").write_text(rep.cdf_grid_csv(), encoding="utf-8")
        (out / "histogram.csv").write_text(rep.histogram_csv(), encoding="utf-8")
    return 0


def cmd_link_budget(args) -> int:
    try:
        tx = channel.TransmitterParams(args.power, math.radians(args.half_angle))
        rx = channel.ReceiverOptics(
            area=args.area_cm2 / 1e4,
            filter_transmission=args.ts,
            concentrator_index=args.n,
            fov=math.radians(args.fov),
            responsivity=args.responsivity,
        )
        geom = channel.LinkGeometry(args.distance, math.radians(args.phi), math.radians(args.psi))
        noise = channel.NoiseModel(args.noise)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    lb = channel.link_budget(geom, tx, rx, noise, args.frame_bits, args.squared)
    print(f"H     = {lb.h:.6g}")
    print(f"gamma = {lb.gamma:.6g}")
    print(f"BER   = {lb.ber:.6g}")
    print(f"PER   = {lb.per:.6g}")
    if args.gamma_min is not None:
        r = channel.max_range(tx, rx, noise, args.gamma_min, args.squared)
        print(f"range = {r:.6g} m")
    return 0


def cmd_validate(args) -> int:
    sc = load_any(args.scenario)
    print(
        f"{sc.name}: OK ({len(sc.lights)} lights, {len(sc.vehicles)} vehicles, "
        f"{len(sc.sources)} sources, {len(sc.pipelines)} pipelines)"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vlc5g", description="5G + VLC infrastructure-to-vehicle latency toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    scen_help = f"scenario TOML path or bundled name ({', '.join(BUNDLED)})"
    r = sub.add_parser("run", help="simulate a scenario and write trace.csv + summary.json")
    r.add_argument("scenario", help=scen_help)
    r.add_argument("--out", default=".", help="output directory")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--duration", type=_positive, default=None, help="override the horizon, seconds")
    r.add_argument("--replications", type=int, default=1, help="run N seeds (seed, seed+1, ...) in parallel")
    r.add_argument("--bins-ms", type=_positive, default=1.0, help="histogram bin width for the summary")
    r.add_argument("--report", action="store_true", help="also write report.json with fits and CDF grids")
    r.add_argument("--families", type=_families, default=list(DEFAULT_FAMILIES))
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("fit", help="fit latency distributions to a CSV column (ms) and rank by BIC")
    f.add_argument("path")
    f.add_argument("--column", default=None, help="column name (default total_ms, else first column)")
    f.add_argument("--families", type=_families, default=list(DEFAULT_FAMILIES), help="comma-separated family names")
    f.add_argument("--bins-ms", type=_positive, default=1.0)
    f.add_argument("--out", default=None, help="directory for fit_report.json and grid CSVs")
    f.set_defaults(func=cmd_fit)

    lb = sub.add_parser("link-budget", help="print H, SNR, BER and PER for one geometry")
    lb.add_argument("--distance", type=float, default=10.0, help="m")
    lb.add_argument("--phi", type=float, default=0.0, help="irradiance angle, deg")
    lb.add_argument("--psi", type=float, default=0.0, help="incidence angle, deg")
    lb.add_argument("--half-angle", type=float, default=60.0, help="LED half-power semi-angle, deg")
    lb.add_argument("--power", type=float, default=1.0, help="optical transmit power, W")
    lb.add_argument("--area-cm2", type=float, default=1.0, help="photodetector area, cm^2")
    lb.add_argument("--ts", type=float, default=1.0, help="optical filter transmission")
    lb.add_argument("--n", type=float, default=1.5, help="concentrator refractive index")
    lb.add_argument("--fov", type=float, default=30.0, help="receiver field of view, deg")
    lb.add_argument("--responsivity", type=float, default=0.4, help="A/W")
    lb.add_argument("--noise", type=float, default=1e-8, help="cumulative noise power")
    lb.add_argument("--frame-bits", type=int, default=240)
    lb.add_argument("--gamma-min", type=float, default=None, help="also print the on-axis range for this SNR")
    lb.add_argument("--squared", action="store_true", help="use the squared (electrical) SNR form")
    lb.set_defaults(func=cmd_link_budget)

    v = sub.add_parser("validate", help="check a scenario file and list every problem")
    v.add_argument("scenario", help=scen_help)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "replications", 1) < 1:
        parser.error("--replications must be >= 1")
    try:
        return args.func(args)
    except ValidationError as exc:
        print("scenario is invalid:", file=sys.stderr)
        for p in exc.problems:
            print(f"  - {p}", file=sys.stderr)
        return 2
    except argparse.ArgumentTypeError as exc:
        print(f"vlc5g: error: {exc}", file=sys.stderr)
        return 2
    except (ColumnError, FileNotFoundError, VLC5GError, ValueError) as exc:
        print(f"vlc5g: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
