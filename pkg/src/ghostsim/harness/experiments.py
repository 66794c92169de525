"""Recipes for the three slit experiments: frequency response, visibility, complement.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns a report
dataclass with a ``write(out_dir)`` method that emits its CSV files and returns
manifest entries.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..estimator import DetectorSpec, reconstruct_image, run_ensemble
from ..metrics import (
    GaussianFit,
    background_ratio,
    default_visibility_roi,
    first_order_response,
    fit_gaussian,
    grating_regions,
    ResponseRow,
    snr,
    visibility,
)
from ..optics import ObjectMask, complement, make_slit_grating
from ..oracle import OracleConfig, gamma_exact
from .config import ExperimentConfig
from .io import write_csv

logger = logging.getLogger(__name__)

EXPERIMENTS = ("freq-response", "visibility", "complement")


def reference_table() -> List[Tuple[float, float, float]]:
    """Measured ``(csl_um, ffc, rfr)`` rows shipped in ``data/table1.csv``."""
    text = resources.files("ghostsim.data").joinpath("table1.csv").read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.reader(lines[1:])
    return [tuple(float(v) for v in row) for row in reader]


def _run_kwargs(cfg: ExperimentConfig, threads: Optional[int]) -> dict:
    return dict(
        threads=threads or cfg["run.threads"],
        chunk=cfg["run.chunk"],
        n_groups=cfg["run.groups"],
    )


# -- frequency response -------------------------------------------------------

@dataclass(frozen=True)
class FreqRow:
    csl: float
    ffc: float
    rfr_oracle: float
    rfr_simulated: float
    rfr_simulated_se: float
    rfr_reference: float
    rfr_oracle_g: float
    rfr_simulated_g: float


@dataclass(frozen=True)
class FreqResponseReport:
    rows: List[FreqRow]
    fit_oracle: GaussianFit
    fit_simulated: Optional[GaussianFit]
    l_c: float

    def oracle_rows(self) -> List[ResponseRow]:
        return [ResponseRow(r.csl, r.ffc, r.rfr_oracle) for r in self.rows]

    def write(self, out: Path) -> Dict[str, object]:
        write_csv(
            out / "response.csv",
            ("csl_um", "ffc", "rfr_oracle", "rfr_simulated", "rfr_paper_reference",
             "rfr_simulated_se", "rfr_oracle_g", "rfr_simulated_g"),
            [(r.csl, r.ffc, r.rfr_oracle, r.rfr_simulated, r.rfr_reference,
              r.rfr_simulated_se, r.rfr_oracle_g, r.rfr_simulated_g) for r in self.rows],
        )
        f = np.linspace(0.0, 1.25 * max(r.ffc for r in self.rows), 61)
        fits = [self.fit_oracle] + ([self.fit_simulated] if self.fit_simulated else [])
        header = ("ffc", "rfr_fit_oracle") + (("rfr_fit_simulated",) if self.fit_simulated else ())
        curves = [fit.amplitude * np.exp(-((f / fit.width) ** 2)) for fit in fits]
        write_csv(out / "response_fit.csv", header, zip(f, *curves))
        entries = {
            "fit.oracle.amplitude": self.fit_oracle.amplitude,
            "fit.oracle.width": self.fit_oracle.width,
            "fit.oracle.r_squared": self.fit_oracle.r_squared,
        }
        if self.fit_simulated:
            entries.update({
                "fit.simulated.amplitude": self.fit_simulated.amplitude,
                "fit.simulated.width": self.fit_simulated.width,
                "fit.simulated.r_squared": self.fit_simulated.r_squared,
            })
        return entries


def _group_rfr(result, mask: ObjectMask, period: float) -> Tuple[float, float]:
    """RFR of ``Re(gamma)`` and its batch standard error."""
    def rfr(gam):
        prof = gam.real[0] if result.grid.is_1d else gam.real
        return first_order_response(prof, mask, period).rfr

    per_group = np.array([rfr(g) for g in result.groups.gamma])
    se = float(np.std(per_group, ddof=1) / math.sqrt(len(per_group))) if len(per_group) > 1 else math.inf
    return rfr(result.gamma), se


def run_freq_response(cfg: ExperimentConfig, *, threads: Optional[int] = None,
                      simulate: bool = True) -> FreqResponseReport:
    """Oracle and Monte Carlo response over gratings ``(w, gap_ratio * w)``.

    The Monte Carlo leg uses the pixel detector and reads the response off
    ``Re(gamma)``; the ``*_g`` columns use ``|gamma|^2`` (oracle) and the
    fluctuation image (simulation) instead.
    """
    grid = cfg.grid()
    src = cfg.source()
    arm = cfg.arm()
    ocfg = OracleConfig(src.sigma, src.mode_intensity, arm)
    l_c = src.coherence_length
    reference = {round(r[0], 6): r[2] for r in reference_table() if math.isfinite(r[0])}
    widths = cfg["freq_response.widths_um"]
    counts = cfg["freq_response.counts"]
    rows = []
    for width, count in zip(widths, counts):
        gap = cfg["freq_response.gap_ratio"] * width
        period = width + gap
        mask = make_slit_grating(width, gap, count, grid)
        gam = gamma_exact(mask, ocfg)
        rfr_o = first_order_response(gam.real, mask, period).rfr
        rfr_o_g = first_order_response(np.abs(gam) ** 2, mask, period).rfr
        rfr_s = se = rfr_s_g = math.nan
        if simulate:
            logger.info("freq-response: width %g um, M=%d", width, cfg["freq_response.realizations"])
            res = run_ensemble(src, mask, arm, DetectorSpec("pixel"), cfg["freq_response.realizations"],
                               cfg["run.seed"], **_run_kwargs(cfg, threads))
            rfr_s, se = _group_rfr(res, mask, period)
            rfr_s_g = first_order_response(res.profile("g_fluct"), mask, period).rfr
        rows.append(FreqRow(width, l_c / period, rfr_o, rfr_s, se,
                            reference.get(round(width, 6), math.nan), rfr_o_g, rfr_s_g))
    rows.sort(key=lambda r: r.ffc)
    fit_o = fit_gaussian([ResponseRow(r.csl, r.ffc, r.rfr_oracle) for r in rows])
    fit_s = fit_gaussian([ResponseRow(r.csl, r.ffc, r.rfr_simulated) for r in rows]) if simulate else None
    return FreqResponseReport(rows, fit_o, fit_s, l_c)


# -- visibility ---------------------------------------------------------------

@dataclass(frozen=True)
class VisibilityRun:
    counts: Tuple[int, ...]
    seeds: Tuple[int, ...]
    visibility: np.ndarray = field(repr=False)   # (n_seeds, n_counts)
    background: np.ndarray = field(repr=False)   # (n_seeds, n_counts)

    @property
    def ordered(self) -> np.ndarray:
        """Per seed: visibility strictly decreasing with slit count."""
        return np.all(np.diff(self.visibility, axis=1) < 0, axis=1)

    @property
    def verdict(self) -> str:
        chain = " > ".join(f"V({c})" for c in self.counts)
        return f"{chain} in {int(self.ordered.sum())}/{len(self.seeds)} seeds"

    @property
    def background_monotone(self) -> bool:
        med = np.median(self.background, axis=0)
        return bool(np.all(np.diff(med) >= 0))

    def write(self, out: Path) -> Dict[str, object]:
        header = (("seed",) + tuple(f"visibility_n{c}" for c in self.counts)
                  + tuple(f"background_ratio_n{c}" for c in self.counts) + ("ordered",))
        rows = [(s,) + tuple(v) + tuple(b) + (bool(o),)
                for s, v, b, o in zip(self.seeds, self.visibility, self.background, self.ordered)]
        write_csv(out / "visibility.csv", header, rows)
        return {
            "verdict": self.verdict,
            "ordered_seeds": int(self.ordered.sum()),
            "background_median_monotone": self.background_monotone,
        }


def visibility_images(cfg: ExperimentConfig, count: int, seed: int, threads: Optional[int] = None):
    """``(mask, correlation image, fluctuation image)`` for one grating and seed."""
    grid = cfg.grid()
    mask = make_slit_grating(cfg["visibility.width_um"], cfg["visibility.gap_um"], count, grid)
    det = cfg.detector(cfg["visibility.detector"])
    res = run_ensemble(cfg.source(), mask, cfg.arm(), det, cfg["visibility.realizations"], seed,
                       **_run_kwargs(cfg, threads))
    return mask, reconstruct_image(res, "correlation"), reconstruct_image(res, "fluctuation", clip=False)


def run_visibility(cfg: ExperimentConfig, *, threads: Optional[int] = None) -> VisibilityRun:
    """Visibility of the background-inclusive correlation image ``<D I2>``.

    Also records the background-to-peak ratio of the fluctuation image over
    the opaque gaps inside the visibility window.
    """
    counts = tuple(cfg["visibility.counts"])
    period = cfg["visibility.width_um"] + cfg["visibility.gap_um"]
    seeds = tuple(cfg["run.seed"] + s for s in range(cfg["visibility.seeds"]))
    vis = np.zeros((len(seeds), len(counts)))
    bg = np.zeros_like(vis)
    for i, seed in enumerate(seeds):
        for j, count in enumerate(counts):
            logger.info("visibility: seed %d, %d slits", seed, count)
            mask, corr, fluct = visibility_images(cfg, count, seed, threads)
            lo, hi = default_visibility_roi(mask, period)
            vis[i, j] = visibility(corr, (lo, hi))
            _, opaque = grating_regions(mask, 0.0)
            window = np.zeros(mask.grid.n_x, dtype=bool)
            window[lo:hi] = True
            bg[i, j] = background_ratio(fluct, opaque & window)
    return VisibilityRun(counts, seeds, vis, bg)


# -- complement ---------------------------------------------------------------

@dataclass(frozen=True)
class ComplementRun:
    snr_object: float
    snr_complement: float
    margin: float

    @property
    def ratio(self) -> float:
        return self.snr_object / self.snr_complement if self.snr_complement else math.inf

    def write(self, out: Path) -> Dict[str, object]:
        write_csv(out / "complement.csv", ("object", "snr"),
                  [("grating", self.snr_object), ("complement", self.snr_complement)])
        return {"snr_ratio": self.ratio}


def image_snr(image: np.ndarray, mask: ObjectMask, margin: float) -> float:
    """SNR of a profile with the mask's open samples as signal and opaque ones as background."""
    img = np.asarray(image)
    if img.ndim == 2:
        img = img[img.shape[0] // 2]
    sig, bg = grating_regions(mask, margin)
    return snr(img, sig, bg)


def run_complement(cfg: ExperimentConfig, *, threads: Optional[int] = None) -> ComplementRun:
    """SNR of the unclipped fluctuation image for a grating and for its complement.

    Runs on its own grid (``complement.grid_n`` samples at the configured pitch)
    so the complement's open area, and with it the noise floor, is large.
    """
    cfg = cfg.replace(grid__n=cfg["complement.grid_n"])
    grid = cfg.grid()
    mask = make_slit_grating(cfg["complement.width_um"], cfg["complement.gap_um"],
                             cfg["complement.count"], grid)
    margin = cfg["complement.margin_um"]
    det = cfg.detector(cfg["complement.detector"])
    out = []
    for m in (mask, complement(mask)):
        res = run_ensemble(cfg.source(), m, cfg.arm(), det, cfg["complement.realizations"],
                           cfg["run.seed"], **_run_kwargs(cfg, threads))
        out.append(image_snr(reconstruct_image(res, "fluctuation", clip=False), m, margin))
    return ComplementRun(out[0], out[1], margin)


def run_experiment(name: str, cfg: ExperimentConfig, *, threads: Optional[int] = None):
    if name == "freq-response":
        return run_freq_response(cfg, threads=threads)
    if name == "visibility":
        return run_visibility(cfg, threads=threads)
    if name == "complement":
        return run_complement(cfg, threads=threads)
    raise ValueError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
