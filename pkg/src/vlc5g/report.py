"""Fit reports and the per-run report bundle (plot-ready data, ms units)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import DEFAULT_FAMILIES, get_family
from .errors import InsufficientDataError, NoModelError
from .fitting import (
    Histogram,
    Selection,
    cdf_error_curve,
    empirical_cdf,
    histogram_pdf_estimate,
    select_best_model,
)
from .sim import SimResult, summarize

GRID_POINTS = 400
MIN_FIT_VALUES = 10


@dataclass
class FitReport:
    values: np.ndarray  # seconds
    selection: Selection
    sup_norms: dict[str, float]
    histogram: Histogram
    grid: np.ndarray  # seconds

    @property
    def winner(self) -> str:
        return self.selection.best.family

    def fits_ms(self) -> list[dict]:
        """Ranked fits with location/scale converted to ms (log-normal left in log-seconds)."""
        out = []
        for rank, f in enumerate(self.selection.ranked, 1):
            fam = get_family(f.family)
            params = {}
            for name, v in zip(fam.param_names, f.spec.params):
                if fam.location_scale and name in ("mu", "sigma", "s"):
                    params[f"{name}_ms"] = v * 1e3
                else:
                    params[name] = v
            out.append(
                {
                    "rank": rank,
                    "family": f.family,
                    "params": params,
                    "params_s": list(f.spec.params),
                    "log_likelihood": f.log_likelihood,
                    "bic": f.bic,
                    "converged": f.converged,
                    "cdf_error_sup": self.sup_norms[f.family],
                }
            )
        return out

    def to_dict(self) -> dict:
        return {
            "n": int(self.values.size),
            "winner": self.winner,
            "fits": self.fits_ms(),
            "excluded": dict(self.selection.diagnostics),
            "histogram": {
                "bin_ms": self.histogram.bin_width * 1e3,
                "mode_ms": self.histogram.mode * 1e3,
                "centers_ms": (self.histogram.centers * 1e3).tolist(),
                "density_per_ms": (self.histogram.densities / 1e3).tolist(),
            },
        }

    def pdf_grid_csv(self) -> str:
        fams = [f.spec for f in self.selection.ranked]
        rows = [["x_ms"] + [f"{s.family}_pdf_per_ms" for s in fams]]
        dens = [s.pdf(self.grid) / 1e3 for s in fams]
        for i, x in enumerate(self.grid):
            rows.append([repr(float(x) * 1e3)] + [repr(float(d[i])) for d in dens])
        return _csv(rows)

    def cdf_grid_csv(self) -> str:
        fams = [f.spec for f in self.selection.ranked]
        emp = empirical_cdf(self.values)(self.grid)
        header = ["x_ms", "empirical"]
        cols = [emp]
        for s in fams:
            c = np.asarray(s.cdf(self.grid), dtype=float)
            header += [f"{s.family}_cdf", f"{s.family}_err"]
            cols += [c, np.abs(emp - c)]
        rows = [header]
        for i, x in enumerate(self.grid):
            rows.append([repr(float(x) * 1e3)] + [repr(float(c[i])) for c in cols])
        return _csv(rows)

    def histogram_csv(self) -> str:
        rows = [["bin_center_ms", "density_per_ms"]]
        for c, d in self.histogram.pairs():
            rows.append([repr(float(c) * 1e3), repr(float(d) / 1e3)])
        return _csv(rows)


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def fit_report(values_s, families: Sequence[str] = DEFAULT_FAMILIES, bin_ms: float = 1.0) -> FitReport:
    x = np.asarray(values_s, dtype=float)
    if x.size < MIN_FIT_VALUES:
        raise InsufficientDataError(f"need at least {MIN_FIT_VALUES} values to fit, got {x.size}")
    sel = select_best_model(x, families)
    grid = np.linspace(x.min(), x.max(), GRID_POINTS)
    sup = {f.family: cdf_error_curve(x, f.spec, grid).sup_norm for f in sel.ranked}
    hist = histogram_pdf_estimate(x, bin_ms / 1e3)
    return FitReport(x, sel, sup, hist, grid)


def _check_finite(obj, path="report"):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite value at {path}")
    elif isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def build_report(result: SimResult, families: Sequence[str] = DEFAULT_FAMILIES, bin_ms: float = 1.0) -> dict:
    """Summary plus fits, histograms and CDF grids for every segment and the total.

    Segments without spread (deterministic or fixed airtime) are listed under
    ``skipped`` instead of being fitted.
    """
    delivered = [r for r in result.records if r.delivered]
    bundle = {"summary": summarize(result.records, bin_ms), "fits": {}, "skipped": {}}
    columns = {n: [r.segments[n] for r in delivered if n in r.segments] for n in result.segment_names}
    columns["total"] = [r.total for r in delivered]
    for name, vals in columns.items():
        try:
            rep = fit_report(vals, families, bin_ms)
        except (InsufficientDataError, NoModelError) as exc:
            bundle["skipped"][name] = str(exc)
            continue
        d = rep.to_dict()
        emp = empirical_cdf(rep.values)(rep.grid)
        d["cdf_grid"] = {"x_ms": (rep.grid * 1e3).tolist(), "empirical": emp.tolist()}
        for f in rep.selection.ranked:
            d["cdf_grid"][f.family] = np.asarray(f.spec.cdf(rep.grid), dtype=float).tolist()
            d["cdf_grid"][f"{f.family}_err"] = cdf_error_curve(rep.values, f.spec, rep.grid).error.tolist()
        bundle["fits"][name] = d
    _check_finite(bundle)
    return bundle
