"""Command-line entry point: ``ghostsim {simulate, oracle, experiment, mask}``.

Exit codes: 0 success, 2 configuration error (including an existing output
directory without ``--overwrite``), 3 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import shutil
import sys
import time
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from .. import __version__
from ..estimator import reconstruct_image, run_ensemble
from ..optics import focal_axis, load_mask, point_object, render_mask
from ..oracle import OracleConfig, bucket_fluctuation_image, gamma_exact, psf_std
from ..source import RNG_NAME, counters_per_realization
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import EXPERIMENTS, run_experiment
from .io import write_csv, write_heatmap, write_manifest, write_profile_csv

logger = logging.getLogger("ghostsim")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class OutputCollision(ConfigError):
    """Output directory already holds files and ``--overwrite`` was not given."""


def _prepare_out(cfg: ExperimentConfig, args) -> Path:
    out = Path(args.out) if args.out else Path(cfg["output.dir"])
    if out.exists() and any(out.iterdir()):
        if not args.overwrite:
            raise OutputCollision(f"output directory {out} is not empty (use --overwrite)")
        shutil.rmtree(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    updates = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        updates["run.seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        updates["run.threads"] = args.threads
    return cfg.replace(**{k.replace(".", "__"): v for k, v in updates.items()}) if updates else cfg


def _manifest(out: Path, cfg: ExperimentConfig, command: str, started: float,
              extra: Optional[Dict[str, object]] = None) -> None:
    (out / "config.cfg").write_text(cfg.to_text(), encoding="utf-8")
    entries: Dict[str, object] = {
        "command": command,
        "version": __version__,
        "seed": cfg["run.seed"],
        "rng": RNG_NAME,
        "rng.counters_per_realization": counters_per_realization(cfg.grid()),
        "threads": cfg["run.threads"],
    }
    entries.update({f"config.{k}": v if not isinstance(v, tuple) else ", ".join(map(str, v))
                    for k, v in cfg.values.items()})
    entries.update(extra or {})
    entries["wall_time_s"] = round(time.perf_counter() - started, 3)
    entries["outputs"] = ", ".join(sorted(p.name for p in out.iterdir()))
    write_manifest(out / "manifest.txt", entries)


def _write_image(out: Path, cfg: ExperimentConfig, image: np.ndarray) -> Dict[str, object]:
    grid = cfg.grid()
    write_profile_csv(out / "profile.csv", grid.x, image, None if grid.is_1d else grid.y)
    lo, hi = write_heatmap(out / "heatmap.pgm", image, png=cfg["output.png"])
    return {"heatmap.min": lo, "heatmap.max": hi}


def _gamma_csv(path: Path, cfg: ExperimentConfig, gamma: np.ndarray) -> None:
    grid = cfg.grid()
    g = np.asarray(gamma)
    if g.ndim == 1:
        write_csv(path, ("x2f_um", "gamma_re", "gamma_im", "gamma_abs"),
                  zip(grid.x, g.real, g.imag, np.abs(g)))
    else:
        yy, xx = np.meshgrid(grid.y, grid.x, indexing="ij")
        write_csv(path, ("y2f_um", "x2f_um", "gamma_re", "gamma_im", "gamma_abs"),
                  zip(yy.ravel(), xx.ravel(), g.real.ravel(), g.imag.ravel(), np.abs(g).ravel()))


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    out = _prepare_out(cfg, args)
    mask = cfg.mask()
    det = cfg.detector()
    res = run_ensemble(cfg.source(), mask, cfg.arm(), det, cfg["run.realizations"], cfg["run.seed"],
                       threads=cfg["run.threads"], chunk=cfg["run.chunk"], n_groups=cfg["run.groups"])
    extra = _write_image(out, cfg, reconstruct_image(res, "fluctuation"))
    if res.gamma is not None:
        _gamma_csv(out / "gamma.csv", cfg, res.profile("continuum_gamma"))
    extra["mean_bucket_or_pixel_signal"] = res.mean_d
    if res.realizations < 100:
        extra["warning"] = "low realization count; statistics unreliable"
    _manifest(out, cfg, "simulate", started, extra)
    return EXIT_OK


def cmd_oracle(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    out = _prepare_out(cfg, args)
    mask = cfg.mask()
    src, arm, grid = cfg.source(), cfg.arm(), cfg.grid()
    ocfg = OracleConfig(src.sigma, src.mode_intensity, arm)
    det = cfg.detector()
    if det.kind == "pixel":
        r, c = det.resolve_pixel(grid)
        xf = focal_axis(grid, arm)
        yf = grid.ky * arm.wavelength * arm.focal_length / (2.0 * np.pi)
        gam = gamma_exact(mask, ocfg, (xf[c], yf[r]))
        image = np.abs(gam) ** 2
        _gamma_csv(out / "gamma.csv", cfg, gam)
    else:
        aperture = None if det.aperture is None else det.aperture
        image = bucket_fluctuation_image(mask, ocfg, aperture)
    peak = np.max(image)
    if not peak > 0:
        raise ValueError("oracle image is identically zero")
    extra = _write_image(out, cfg, image / peak)
    point = gamma_exact(point_object(grid), ocfg, x2f=grid.x, y2f=np.zeros(1))
    point = np.abs(np.atleast_2d(point)[0])
    write_csv(out / "psf.csv", ("x2f_um", "psf"), zip(grid.x, point / point.max()))
    extra["psf_std_um"] = psf_std(src.sigma)
    _manifest(out, cfg, "oracle", started, extra)
    return EXIT_OK


def cmd_experiment(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    out = _prepare_out(cfg, args)
    report = run_experiment(args.name, cfg, threads=cfg["run.threads"])
    extra = report.write(out)
    _manifest(out, cfg, f"experiment {args.name}", started, extra)
    for k, v in extra.items():
        print(f"{k}: {v}")
    return EXIT_OK


def cmd_mask(args) -> int:
    if args.action == "render":
        cfg = _load(args)
        target = Path(args.out or "mask.pgm")
        if target.exists() and not args.overwrite:
            raise OutputCollision(f"{target} exists (use --overwrite)")
        target.parent.mkdir(parents=True, exist_ok=True)
        render_mask(cfg.mask(), target)
        print(target)
        return EXIT_OK
    if not args.path:
        raise ConfigError("mask info needs a mask file path")
    mask = load_mask(args.path)
    g = mask.grid
    print(f"n_x: {g.n_x}\nn_y: {g.n_y}\npitch_um: {g.pitch:g}")
    print(f"binary: {str(mask.is_binary).lower()}\nopen_fraction: {mask.open_fraction:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghostsim", description="Thermal-light ghost imaging simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=False, help="key-value config file")
    common.add_argument("--out", help="output directory (file for 'mask render')")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="override run.seed")
    common.add_argument("--threads", type=int, help="override run.threads")
    common.add_argument("--overwrite", action="store_true", help="replace existing outputs")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Monte Carlo ghost image").set_defaults(func=cmd_simulate)
    sub.add_parser("oracle", parents=[common], help="noise-free quadrature image").set_defaults(func=cmd_oracle)
    exp = sub.add_parser("experiment", parents=[common], help="run a slit experiment")
    exp.add_argument("name", choices=EXPERIMENTS)
    exp.set_defaults(func=cmd_experiment)
    mask = sub.add_parser("mask", parents=[common], help="render or inspect mask files")
    mask.add_argument("action", choices=("render", "info"))
    mask.add_argument("path", nargs="?", help="mask file for 'info'")
    mask.set_defaults(func=cmd_mask)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    needs_config = args.command != "mask" or args.action == "render"
    try:
        if needs_config and not args.config:
            raise ConfigError("--config is required")
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
