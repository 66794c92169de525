"""Object masks and the two optical arms.

The object arm is an f-f system with the mask at the beam-splitter output: the
lens maps focal position ``x_f`` to spatial frequency ``u = 2 pi x_f / (lambda f)``
and the focal field is the Fourier transform of ``t * U0`` (infinite pupil, constant
phase dropped).  The reference arm is a unit-magnification 2f-2f relay modelled as
the identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .lattice import ComplexField, GridSpec, dft_forward, focal_positions

DEFAULT_FOCAL_LENGTH = 2.5e5  # um
MAX_MASK_DIM = 1 << 14
_TOL = 1e-12


class MaskFormatError(ValueError):
    """Raised for unreadable or malformed mask image files."""


@dataclass(frozen=True)
class ArmParams:
    wavelength: float = 0.532
    focal_length: float = DEFAULT_FOCAL_LENGTH

    def __post_init__(self):
        if not self.wavelength > 0 or not self.focal_length > 0:
            raise ValueError("wavelength and focal length must be > 0")


@dataclass(frozen=True)
class ObjectMask:
    grid: GridSpec
    transmission: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.transmission)
        if t.size != self.grid.size:
            raise ValueError(f"mask size {t.size} does not match grid {self.grid.shape}")
        t = t.astype(np.complex128).reshape(self.grid.shape)
        if not np.all(np.isfinite(t)):
            raise ValueError("mask transmission must be finite")
        if np.any(np.abs(t) > 1.0 + _TOL):
            raise ValueError("mask transmission must satisfy |t| <= 1")
        t.flags.writeable = False
        object.__setattr__(self, "transmission", t)

    @property
    def profile(self) -> np.ndarray:
        return self.transmission[0] if self.grid.is_1d else self.transmission

    @property
    def is_binary(self) -> bool:
        t = self.transmission
        return bool(np.all(np.abs(t.imag) <= _TOL)
                    and np.all((np.abs(t.real) <= _TOL) | (np.abs(t.real - 1) <= _TOL)))

    @property
    def open_fraction(self) -> float:
        return float(np.mean(np.abs(self.transmission) ** 2))


def grating_extent(width: float, gap: float, count: int) -> float:
    return count * width + (count - 1) * gap


def make_slit_grating(width: float, gap: float, count: int, grid: GridSpec) -> ObjectMask:
    """Binary grating of ``count`` slits, centered on the grid.

    Slits run along y.  A sample at ``x`` is open when it falls in a half-open
    slit interval ``[a, a + width)``, so a slit spans ``width / pitch`` samples
    when the width is a multiple of the pitch.
    """
    if not width > 0 or not gap > 0:
        raise ValueError("slit width and gap must be > 0")
    if int(count) != count or count < 1:
        raise ValueError(f"slit count must be a positive integer, got {count}")
    extent = grating_extent(width, gap, int(count))
    span = grid.n_x * grid.pitch
    if extent > span + _TOL:
        raise ValueError(
            f"grating extent {extent:g} um exceeds grid span {span:g} um"
        )
    x = grid.x
    row = np.zeros(grid.n_x)
    eps = 1e-9 * grid.pitch
    for s in range(int(count)):
        a = -extent / 2 + s * (width + gap)
        row[(x >= a - eps) & (x < a + width - eps)] = 1.0
    return ObjectMask(grid, np.broadcast_to(row, grid.shape))


def open_aperture(grid: GridSpec) -> ObjectMask:
    return ObjectMask(grid, np.ones(grid.shape))


def point_object(grid: GridSpec, x: float = 0.0) -> ObjectMask:
    """Single open sample at the grid position nearest ``x`` (on the center row)."""
    t = np.zeros(grid.shape)
    j = int(np.argmin(np.abs(grid.x - x)))
    t[grid.center[0], j] = 1.0
    return ObjectMask(grid, t)


def complement(mask: ObjectMask) -> ObjectMask:
    if not mask.is_binary:
        raise ValueError("complement is only defined for binary masks")
    return ObjectMask(mask.grid, 1.0 - mask.transmission.real)


def object_arm_field(source_field: ComplexField, mask: ObjectMask, arm: ArmParams) -> ComplexField:
    """Focal-plane field ``U_f(u) = FT[t * U0](u)``.

    Focal sample ``m`` sits at ``x_f = kx[m] * lambda * f / (2 pi)``
    (see :func:`focal_axis`).
    """
    if source_field.grid != mask.grid:
        raise ValueError("source field and mask must share a grid")
    transmitted = ComplexField(mask.grid, mask.transmission * source_field.samples, "object")
    return dft_forward(transmitted).with_plane("focal")


def focal_axis(grid: GridSpec, arm: ArmParams) -> np.ndarray:
    return focal_positions(grid, arm.wavelength, arm.focal_length)


def reference_arm_field(source_field: ComplexField) -> ComplexField:
    return source_field.with_plane("reference-2f")


# --- mask files ------------------------------------------------------------

def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".meta")


def render_mask(mask: ObjectMask, path, *, write_sidecar: bool = True) -> Path:
    """Write ``|t|`` as an 8-bit binary graymap (255 = open) plus a pitch sidecar."""
    path = Path(path)
    level = np.rint(np.abs(mask.transmission) * 255.0).astype(np.uint8)
    Image.fromarray(level, mode="L").save(path, format="PPM")
    if write_sidecar:
        _sidecar(path).write_text(
            f"pitch_um = {mask.grid.pitch!r}\nn_x = {mask.grid.n_x}\nn_y = {mask.grid.n_y}\n"
        )
    return path


def _read_sidecar(path: Path) -> dict:
    meta = {}
    for lineno, line in enumerate(_sidecar(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MaskFormatError(f"{_sidecar(path)}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        meta[key] = value
    return meta


def load_mask(path, pitch: float | None = None) -> ObjectMask:
    """Read a P5 graymap mask; pitch comes from ``pitch`` or the ``.meta`` sidecar."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.format != "PPM" or im.mode not in ("L", "1"):
                raise MaskFormatError(f"{path}: expected an 8-bit binary graymap (P5)")
            n_x, n_y = im.size
            if n_x > MAX_MASK_DIM or n_y > MAX_MASK_DIM:
                raise MaskFormatError(
                    f"{path}: {n_x}x{n_y} exceeds the {MAX_MASK_DIM} pixel limit"
                )
            level = np.asarray(im.convert("L"), dtype=np.float64)
    except MaskFormatError:
        raise
    except (OSError, SyntaxError, ValueError) as exc:
        raise MaskFormatError(f"{path}: {exc}") from exc
    if pitch is None:
        if not _sidecar(path).exists():
            raise MaskFormatError(f"{path}: no pitch given and no sidecar {_sidecar(path)}")
        try:
            pitch = float(_read_sidecar(path)["pitch_um"])
        except (KeyError, ValueError) as exc:
            raise MaskFormatError(f"{_sidecar(path)}: missing or invalid pitch_um") from exc
    grid = GridSpec(n_x, n_y, pitch)
    return ObjectMask(grid, level / 255.0)
