"""Plain-text ``section.key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored.  Every key has a type and default
(see :data:`SCHEMA`); unknown keys and bad values raise :class:`ConfigError`
with the offending line number.  ``to_text`` writes every key back out, so a
manifest copy of the config reproduces the run exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from ..estimator import DetectorSpec
from ..lattice import GridSpec
from ..optics import ArmParams, ObjectMask, complement, load_mask, make_slit_grating, open_aperture, point_object
from ..source import AMPLITUDE_LAWS, SourceParams, sigma_from_coherence_length


class ConfigError(ValueError):
    """Invalid configuration text or values."""


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(conv: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(text: str):
        return None if text.strip().lower() in ("", "none") else conv(text)

    parse.__name__ = conv.__name__
    return parse


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return v


# key -> (parser, default)
SCHEMA: Dict[str, Tuple[Callable[[str], Any], Any]] = {
    "grid.n": (int, 512),
    "grid.n_y": (int, 1),
    "grid.pitch_um": (float, 10.0),
    "source.coherence_length_um": (_optional(float), 75.0),
    "source.sigma_per_um": (_optional(float), None),
    "source.mode_intensity": (float, 1.0),
    "source.k_max_per_um": (_optional(float), None),
    "source.amplitude_law": (str, "gaussian"),
    "arm.wavelength_um": (float, 0.532),
    "arm.focal_length_um": (float, 2.5e5),
    "object.kind": (str, "grating"),
    "object.width_um": (float, 300.0),
    "object.gap_um": (float, 900.0),
    "object.count": (int, 2),
    "object.position_um": (float, 0.0),
    "object.file": (_optional(str), None),
    "object.complement": (_bool, False),
    "detector.kind": (str, "pixel"),
    "detector.pixel": (_optional(_ints), None),
    "detector.aperture": (_optional(_ints), None),
    "run.realizations": (int, 10000),
    "run.seed": (_seed, 0),
    "run.threads": (int, 1),
    "run.chunk": (int, 2048),
    "run.groups": (int, 32),
    "output.dir": (str, "ghostsim-out"),
    "output.png": (_bool, False),
    "freq_response.widths_um": (_floats, (300.0, 150.0, 100.0, 75.0)),
    "freq_response.gap_ratio": (float, 3.0),
    "freq_response.counts": (_ints, (2, 4, 6, 8)),
    "freq_response.realizations": (int, 100000),
    "visibility.width_um": (float, 200.0),
    "visibility.gap_um": (float, 400.0),
    "visibility.counts": (_ints, (2, 4, 6)),
    "visibility.seeds": (int, 10),
    "visibility.realizations": (int, 50000),
    "visibility.detector": (str, "bucket"),
    "complement.width_um": (float, 300.0),
    "complement.gap_um": (float, 900.0),
    "complement.count": (int, 2),
    "complement.realizations": (int, 50000),
    "complement.detector": (str, "pixel"),
    "complement.margin_um": (float, 80.0),
    "complement.grid_n": (int, 1024),
}

OBJECT_KINDS = ("grating", "point", "open", "file")


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    values: Mapping[str, Any] = field(default_factory=dict)
    base_dir: Path = Path(".")

    def __post_init__(self):
        merged = {k: default for k, (_, default) in SCHEMA.items()}
        unknown = set(self.values) - set(SCHEMA)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged.update(self.values)
        object.__setattr__(self, "values", merged)
        self._validate()

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def replace(self, **updates: Any) -> "ExperimentConfig":
        vals = dict(self.values)
        for k, v in updates.items():
            vals[k.replace("__", ".")] = v
        return ExperimentConfig(vals, self.base_dir)

    # -- validation -----------------------------------------------------------
    def _validate(self):
        v = self.values
        try:
            self.grid()
            self.source()
            self.arm()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if v["object.kind"] not in OBJECT_KINDS:
            raise ConfigError(f"object.kind must be one of {OBJECT_KINDS}")
        if v["object.kind"] == "file" and not v["object.file"]:
            raise ConfigError("object.kind = file needs object.file")
        if v["object.kind"] != "file":
            try:
                self.mask()
            except ValueError as exc:
                raise ConfigError(f"object: {exc}") from exc
        for key in ("detector.kind", "visibility.detector", "complement.detector"):
            if v[key] not in ("pixel", "bucket"):
                raise ConfigError(f"{key} must be 'pixel' or 'bucket'")
        for key in ("run.realizations", "freq_response.realizations",
                    "visibility.realizations", "complement.realizations"):
            if v[key] < 2:
                raise ConfigError(f"{key} = {v[key]}: need M >= 2 realizations")
        if v["run.threads"] < 1 or v["run.chunk"] < 1 or v["run.groups"] < 1:
            raise ConfigError("run.threads, run.chunk and run.groups must be >= 1")
        if v["complement.grid_n"] < 1:
            raise ConfigError("complement.grid_n must be >= 1")
        if v["visibility.seeds"] < 1:
            raise ConfigError("visibility.seeds must be >= 1")
        if len(v["freq_response.counts"]) != len(v["freq_response.widths_um"]):
            raise ConfigError("freq_response.counts needs one entry per width")
        if v["detector.aperture"] is not None and len(v["detector.aperture"]) not in (2, 4):
            raise ConfigError("detector.aperture is 'col0, col1' or 'row0, row1, col0, col1'")
        if v["detector.pixel"] is not None and len(v["detector.pixel"]) not in (1, 2):
            raise ConfigError("detector.pixel is 'col' or 'row, col'")

    # -- builders -------------------------------------------------------------
    def grid(self) -> GridSpec:
        v = self.values
        return GridSpec(v["grid.n"], v["grid.n_y"], v["grid.pitch_um"])

    def source(self) -> SourceParams:
        v = self.values
        sigma = v["source.sigma_per_um"]
        if sigma is None:
            if v["source.coherence_length_um"] is None:
                raise ValueError("set source.coherence_length_um or source.sigma_per_um")
            sigma = sigma_from_coherence_length(v["source.coherence_length_um"])
        k_max = v["source.k_max_per_um"]
        if k_max is None:
            k_max = 2.0 * math.pi / v["arm.wavelength_um"]
        if v["source.amplitude_law"] not in AMPLITUDE_LAWS:
            raise ValueError(f"source.amplitude_law must be one of {AMPLITUDE_LAWS}")
        return SourceParams(sigma, v["source.mode_intensity"], k_max, v["source.amplitude_law"])

    def arm(self) -> ArmParams:
        return ArmParams(self.values["arm.wavelength_um"], self.values["arm.focal_length_um"])

    def mask(self, grid: Optional[GridSpec] = None) -> ObjectMask:
        v = self.values
        grid = grid or self.grid()
        kind = v["object.kind"]
        if kind == "grating":
            mask = make_slit_grating(v["object.width_um"], v["object.gap_um"], v["object.count"], grid)
        elif kind == "point":
            mask = point_object(grid, v["object.position_um"])
        elif kind == "open":
            mask = open_aperture(grid)
        else:
            path = Path(v["object.file"])
            if not path.is_absolute():
                path = self.base_dir / path
            mask = load_mask(path)
            if mask.grid != grid:
                raise ValueError(f"mask file grid {mask.grid} does not match config grid {grid}")
        return complement(mask) if v["object.complement"] else mask

    def detector(self, kind: Optional[str] = None) -> DetectorSpec:
        v = self.values
        kind = kind or v["detector.kind"]
        grid = self.grid()
        if kind == "pixel":
            pix = v["detector.pixel"]
            if pix is None:
                return DetectorSpec("pixel")
            pix = (grid.center[0], pix[0]) if len(pix) == 1 else tuple(pix)
            return DetectorSpec("pixel", pixel=pix)
        ap = v["detector.aperture"]
        if ap is None:
            return DetectorSpec("bucket")
        if len(ap) == 2:
            return DetectorSpec("bucket", aperture=((0, grid.n_y), (ap[0], ap[1])))
        return DetectorSpec("bucket", aperture=((ap[0], ap[1]), (ap[2], ap[3])))

    # -- text form ------------------------------------------------------------
    def to_text(self) -> str:
        lines = []
        section = None
        for key in SCHEMA:
            sec = key.split(".", 1)[0]
            if sec != section:
                if section is not None:
                    lines.append("")
                section = sec
            lines.append(f"{key} = {_format(self.values[key])}")
        return "\n".join(lines) + "\n"


def parse_config(text: str, source: str = "<config>", base_dir: Path = Path(".")) -> ExperimentConfig:
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value', got {raw.strip()!r}")
        key, text_value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        parser, _ = SCHEMA[key]
        try:
            values[key] = parser(text_value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    try:
        return ExperimentConfig(values, base_dir)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path), path.parent)
