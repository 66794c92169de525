"""Uniform grids, complex field containers and the Fourier transform convention.

Conventions used throughout the package:

* sample ``j`` of an axis with ``n`` points sits at ``x_j = (j - n // 2) * pitch``
  (DC / origin at index ``n // 2``);
* the conjugate axis has spacing ``dk = 2 pi / (n * pitch)`` in rad/um and the
  same centered indexing;
* ``T(k) = sum_x t(x) exp(-i k x) * pitch`` (Riemann-sum normalized, angular
  frequency), with the symmetric inverse ``t(x) = (1 / 2 pi) sum_k T(k) exp(i k x) dk``.

Arrays are always stored as ``(n_y, n_x)``; 1D mode is simply ``n_y == 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

PLANES = ("source", "object", "focal", "reference-2f", "spectrum")
SPATIAL_PLANES = ("source", "object", "reference-2f")


@dataclass(frozen=True)
class GridSpec:
    """Uniform, centered sampling grid with ``pitch`` in micrometres."""

    n_x: int
    n_y: int = 1
    pitch: float = 1.0

    def __post_init__(self):
        if int(self.n_x) != self.n_x or int(self.n_y) != self.n_y:
            raise ValueError("grid sizes must be integers")
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError(f"grid sizes must be >= 1, got ({self.n_x}, {self.n_y})")
        if not np.isfinite(self.pitch) or self.pitch <= 0:
            raise ValueError(f"pitch must be > 0, got {self.pitch}")
        object.__setattr__(self, "n_x", int(self.n_x))
        object.__setattr__(self, "n_y", int(self.n_y))
        object.__setattr__(self, "pitch", float(self.pitch))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_y, self.n_x)

    @property
    def size(self) -> int:
        return self.n_x * self.n_y

    @property
    def is_1d(self) -> bool:
        return self.n_y == 1

    @property
    def dk_x(self) -> float:
        return 2.0 * np.pi / (self.n_x * self.pitch)

    @property
    def dk_y(self) -> float:
        return 2.0 * np.pi / (self.n_y * self.pitch)

    @property
    def dk(self) -> float:
        """Frequency spacing along x (rad/um)."""
        return self.dk_x

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n_x) - self.n_x // 2) * self.pitch

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.n_y) - self.n_y // 2) * self.pitch

    @property
    def kx(self) -> np.ndarray:
        return (np.arange(self.n_x) - self.n_x // 2) * self.dk_x

    @property
    def ky(self) -> np.ndarray:
        return (np.arange(self.n_y) - self.n_y // 2) * self.dk_y

    @property
    def center(self) -> Tuple[int, int]:
        """(row, column) index of the origin / DC sample."""
        return (self.n_y // 2, self.n_x // 2)

    @property
    def cell_area(self) -> float:
        """Spatial quadrature weight of one sample (um or um^2)."""
        return self.pitch if self.is_1d else self.pitch**2

    @property
    def mode_area(self) -> float:
        """Frequency quadrature weight of one mode (rad/um or (rad/um)^2)."""
        return self.dk_x if self.is_1d else self.dk_x * self.dk_y

    def radius2_k(self) -> np.ndarray:
        """|k|^2 on the conjugate grid, shape ``(n_y, n_x)``."""
        return self.ky[:, None] ** 2 + self.kx[None, :] ** 2


def make_grid(n_x: int, n_y: int = 1, pitch: float = 1.0) -> GridSpec:
    return GridSpec(n_x, n_y, pitch)


@dataclass(frozen=True)
class ComplexField:
    """Complex samples on a grid, tagged with the optical plane they live on."""

    grid: GridSpec
    samples: np.ndarray = field(repr=False)
    plane: str = "source"

    def __post_init__(self):
        if self.plane not in PLANES:
            raise ValueError(f"unknown plane {self.plane!r}; expected one of {PLANES}")
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.size != self.grid.size:
            raise ValueError(
                f"sample count {samples.size} does not match grid {self.grid.shape}"
            )
        samples = samples.reshape(self.grid.shape)
        if not np.all(np.isfinite(samples)):
            raise ValueError("field samples must be finite")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def profile(self) -> np.ndarray:
        """Samples as a 1D array in 1D mode, otherwise the 2D map."""
        return self.samples[0] if self.grid.is_1d else self.samples

    def with_plane(self, plane: str) -> "ComplexField":
        return ComplexField(self.grid, self.samples, plane)


def _axes(a: np.ndarray) -> Tuple[int, int]:
    return (a.ndim - 2, a.ndim - 1)


def centered_fft(a: np.ndarray) -> np.ndarray:
    """``sum_x a(x) exp(-i k x)`` on the centered grid, over the last two axes."""
    ax = _axes(a)
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(a, axes=ax), axes=ax), axes=ax)


def centered_mode_sum(c: np.ndarray) -> np.ndarray:
    """``sum_k c(k) exp(+i k x)`` on the centered grid, over the last two axes."""
    ax = _axes(c)
    n = c.shape[-1] * c.shape[-2]
    return (
        np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(c, axes=ax), axes=ax), axes=ax) * n
    )


def dft_forward(field: ComplexField) -> ComplexField:
    if field.plane not in SPATIAL_PLANES:
        raise ValueError(f"dft_forward expects a spatial plane, got {field.plane!r}")
    spec = centered_fft(field.samples) * field.grid.cell_area
    return ComplexField(field.grid, spec, "spectrum")


def dft_inverse(spectrum: ComplexField) -> ComplexField:
    if spectrum.plane not in ("spectrum", "focal"):
        raise ValueError(f"dft_inverse expects a spectrum, got {spectrum.plane!r}")
    g = spectrum.grid
    scale = g.mode_area / (2.0 * np.pi if g.is_1d else (2.0 * np.pi) ** 2)
    return ComplexField(g, centered_mode_sum(spectrum.samples) * scale, "source")


def focal_coordinate_map(wavelength: float, focal_length: float, x_f) -> np.ndarray | float:
    """Spatial frequency ``u = 2 pi x_f / (lambda f)`` seen at focal position ``x_f``."""
    if wavelength <= 0 or focal_length <= 0:
        raise ValueError("wavelength and focal length must be > 0")
    u = 2.0 * np.pi * np.asarray(x_f, dtype=float) / (wavelength * focal_length)
    return float(u) if u.ndim == 0 else u


def focal_positions(grid: GridSpec, wavelength: float, focal_length: float) -> np.ndarray:
    """Focal-plane x positions (um) whose mapped frequencies coincide with ``grid.kx``."""
    return grid.kx * wavelength * focal_length / (2.0 * np.pi)
