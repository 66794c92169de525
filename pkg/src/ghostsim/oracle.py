"""Closed-form / quadrature ground truth for the two-arm correlation.

``gamma(x_f, x2f) = (I/4) * integral dk exp(-2|k|^2/sigma^2) T(u(x_f) - k) exp(-i k.x2f)``

with ``T(k) = sum_x t(x) exp(-i k.x) dA`` evaluated by direct summation over the
mask samples (no FFT), and the k-integral done by the trapezoidal rule on a
uniform node set.  The node spacing is chosen so that the implied
``2 pi / dk`` period exceeds every mask-to-output separation plus the Gaussian
tail, which makes the rule accurate to rounding.

At ``x_f = 0`` the same function is a Gaussian blur of the mask,
``gamma(0, x) = prefactor * sum_j t_j dA exp(-sigma^2 |x - x_j|^2 / 8)``
(:func:`image_psf_convolution`), giving a second, independent route.

1D mode (``n_y == 1``) integrates over ``k_x`` only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .lattice import GridSpec, focal_coordinate_map
from .optics import ArmParams, ObjectMask

# exp(-sigma^2 x^2 / 8) < 1e-17 beyond this many 1/sigma
_TAIL = 18.0


def psf(sigma: float, r) -> np.ndarray:
    """Gaussian spreading function ``exp(-sigma^2 r^2 / 8)`` (peak 1)."""
    return np.exp(-(sigma**2) * np.asarray(r, dtype=float) ** 2 / 8.0)


def psf_std(sigma: float) -> float:
    """Standard deviation of :func:`psf` viewed as a Gaussian profile: ``2 / sigma``."""
    return 2.0 / sigma


def response_attenuation(k, sigma: float):
    """Transfer of spatial frequency ``k`` into the correlation image: ``exp(-2 k^2 / sigma^2)``."""
    return np.exp(-2.0 * np.asarray(k, dtype=float) ** 2 / sigma**2)


@dataclass(frozen=True)
class OracleConfig:
    sigma: float
    mode_intensity: float = 1.0
    arm: ArmParams = field(default_factory=ArmParams)
    span_sigmas: float = 8.0
    spacing: Optional[float] = None

    def __post_init__(self):
        if not self.sigma > 0 or not self.mode_intensity > 0:
            raise ValueError("sigma and mode_intensity must be > 0")
        if self.span_sigmas < 6.0:
            raise ValueError("quadrature must span at least 6 sigma on each side of DC")
        if self.spacing is not None and not 0 < self.spacing <= self.sigma / 8.0:
            raise ValueError(
                f"quadrature spacing {self.spacing} must be in (0, sigma/8 = {self.sigma / 8})"
            )

    def nodes(self, max_separation: float) -> Tuple[np.ndarray, np.ndarray]:
        """Trapezoid nodes and weights along one axis."""
        h = 2.0 * np.pi / (max_separation + 2.0 * _TAIL / self.sigma)
        h = min(h, self.sigma / 8.0)
        if self.spacing is not None:
            h = min(h, self.spacing)
        q = int(np.ceil(self.span_sigmas * self.sigma / h))
        k = np.arange(-q, q + 1) * h
        w = np.full(k.shape, h)
        w[[0, -1]] *= 0.5
        return k, w


def _axis(mask_coords, out_coords, u, cfg: OracleConfig, active: bool):
    """Per-axis factors: E_obj[q, j] = exp(-i (u - k_q) x_j), E_out[i, q] = exp(-i k_q x'_i)."""
    if not active:
        k = np.zeros(1)
        w = np.ones(1)
    else:
        sep = np.max(np.abs(out_coords)) + np.max(np.abs(mask_coords))
        k, w = cfg.nodes(sep)
    e_obj = np.exp(-1j * np.outer(u - k, mask_coords))
    e_out = np.exp(-1j * np.outer(out_coords, k))
    gauss = w * np.exp(-2.0 * k**2 / cfg.sigma**2)
    return e_obj, e_out, gauss


def _coords(grid: GridSpec, x2f, y2f):
    x_out = grid.x if x2f is None else np.atleast_1d(np.asarray(x2f, dtype=float))
    y_out = grid.y if y2f is None else np.atleast_1d(np.asarray(y2f, dtype=float))
    return x_out, y_out


def _squeeze(arr: np.ndarray, grid: GridSpec) -> np.ndarray:
    return arr[0] if grid.is_1d and arr.shape[0] == 1 else arr


def _gamma(mask: ObjectMask, cfg: OracleConfig, u: Tuple[float, float], x2f, y2f) -> np.ndarray:
    g = mask.grid
    x_out, y_out = _coords(g, x2f, y2f)
    ex_obj, ex_out, wx = _axis(g.x, x_out, u[1], cfg, True)
    ey_obj, ey_out, wy = _axis(g.y, y_out, u[0], cfg, not g.is_1d)
    spectrum = (ey_obj @ mask.transmission @ ex_obj.T) * g.cell_area  # T(u - k), (Qy, Qx)
    weighted = spectrum * wy[:, None] * wx[None, :]
    return 0.25 * cfg.mode_intensity * (ey_out @ weighted @ ex_out.T)


def _offset_u(cfg: OracleConfig, x_f) -> Tuple[float, float]:
    if np.ndim(x_f) == 0:
        xf, yf = float(x_f), 0.0
    else:
        xf, yf = (float(v) for v in x_f)
    lam, f = cfg.arm.wavelength, cfg.arm.focal_length
    return focal_coordinate_map(lam, f, yf), focal_coordinate_map(lam, f, xf)


def gamma_exact(mask: ObjectMask, cfg: OracleConfig, x_f=0.0, x2f=None, y2f=None) -> np.ndarray:
    """Correlation between focal position ``x_f`` (scalar or ``(x_f, y_f)``, um) and the reference plane.

    Output is sampled at ``x2f`` (and ``y2f`` in 2D), by default the mask grid.
    """
    return _squeeze(_gamma(mask, cfg, _offset_u(cfg, x_f), x2f, y2f), mask.grid)


def psf_prefactor(sigma: float, mode_intensity: float = 1.0, two_d: bool = False) -> float:
    """Absolute scale of the blur route: ``integral exp(-2k^2/sigma^2) dk`` times ``I/4``."""
    per_axis = sigma * np.sqrt(np.pi / 2.0)
    return 0.25 * mode_intensity * (per_axis**2 if two_d else per_axis)


@dataclass(frozen=True)
class PsfImage:
    values: np.ndarray = field(repr=False)
    prefactor: float = 1.0

    @property
    def shape(self) -> np.ndarray:
        """Peak-normalized modulus."""
        mag = np.abs(self.values)
        return mag / np.max(mag)


def image_psf_convolution(mask: ObjectMask, sigma: float, mode_intensity: float = 1.0,
                          x2f=None, y2f=None) -> PsfImage:
    """Mask blurred by the Gaussian spreading function, with its absolute scale.

    ``values = prefactor * sum_j t_j dA psf(x2f - x_j)``; the mask is not
    mirrored (the Fourier sign convention used here yields an upright image).
    """
    g = mask.grid
    x_out, y_out = _coords(g, x2f, y2f)
    bx = psf(sigma, x_out[:, None] - g.x[None, :])
    by = psf(sigma, y_out[:, None] - g.y[None, :]) if not g.is_1d else np.ones((1, 1))
    blurred = (by @ mask.transmission @ bx.T) * g.cell_area
    if np.all(mask.transmission.imag == 0):
        blurred = blurred.real
    pre = psf_prefactor(sigma, mode_intensity, two_d=not g.is_1d)
    return PsfImage(_squeeze(pre * blurred, g), pre)


@dataclass(frozen=True)
class OffsetGamma:
    gamma: np.ndarray = field(repr=False)
    predicted: np.ndarray = field(repr=False)
    u: Tuple[float, float] = (0.0, 0.0)


def gamma_offset(mask: ObjectMask, cfg: OracleConfig, x_f, x2f=None, y2f=None) -> OffsetGamma:
    """Correlation at a displaced focal pixel, alongside the phase-factor prediction.

    ``predicted = exp(-i u.x2f) * gamma(0, x2f)``.  The exact result is
    ``exp(-i u.x) exp(-2|u|^2/sigma^2) gamma0(x - 4 i u / sigma^2)`` (complex
    shift), so the prediction holds where ``|u| << sigma`` and ``gamma0`` is
    locally flat on the scale ``4 |u| / sigma^2``.
    """
    u = _offset_u(cfg, x_f)
    g = mask.grid
    x_out, y_out = _coords(g, x2f, y2f)
    gam = _gamma(mask, cfg, u, x2f, y2f)
    base = _gamma(mask, cfg, (0.0, 0.0), x2f, y2f)
    phase = np.exp(-1j * (u[0] * y_out[:, None] + u[1] * x_out[None, :]))
    return OffsetGamma(_squeeze(gam, g), _squeeze(phase * base, g), u)


def _aperture_gammas(mask: ObjectMask, cfg: OracleConfig, aperture, x2f, y2f):
    """Yield ``gamma`` for every aperture row, shape ``(n_cols, n_y', n_x')``.

    Same quadrature as :func:`gamma_exact` with the mask sum moved outside:
    ``gamma(u, x') = (I/4) dA sum_j t_j exp(-i u x_j) K(x_j, x')`` where
    ``K(x, x') = sum_q w_q exp(-2 k_q^2 / sigma^2) exp(i k_q (x - x'))``.
    """
    g = mask.grid
    x_out, y_out = _coords(g, x2f, y2f)
    rows, cols, area = _aperture_indices(mask, cfg, aperture)
    ex_obj, ex_out, wx = _axis(g.x, x_out, 0.0, cfg, True)
    ey_obj, ey_out, wy = _axis(g.y, y_out, 0.0, cfg, not g.is_1d)
    # ex_obj[q, j] = exp(+i k_q x_j) when u = 0
    kx = (ex_obj.T * wx) @ ex_out.T          # (J_x, n_x')
    ky = (ey_obj.T * wy) @ ey_out.T          # (J_y, n_y')
    scale = 0.25 * cfg.mode_intensity * g.cell_area
    px = np.exp(-1j * np.outer(g.kx[cols[0]:cols[1]], g.x))    # (n_c, J_x)
    for r in range(*rows):
        left = (ky.T * np.exp(-1j * g.ky[r] * g.y)[None, :]) @ mask.transmission  # (n_y', J_x)
        yield scale * np.einsum("yj,cj,jo->cyo", left, px, kx), area


def _aperture_indices(mask: ObjectMask, cfg: OracleConfig, aperture):
    g = mask.grid
    if aperture is None:
        rows, cols = (0, g.n_y), (0, g.n_x)
    elif np.ndim(aperture[0]) == 0:
        rows, cols = (0, g.n_y), tuple(aperture)
    else:
        rows, cols = (tuple(a) for a in aperture)
    if not (0 <= cols[0] < cols[1] <= g.n_x and 0 <= rows[0] < rows[1] <= g.n_y):
        raise ValueError(f"aperture {aperture} empty or outside focal grid {g.shape}")
    scale = cfg.arm.wavelength * cfg.arm.focal_length / (2.0 * np.pi)
    area = g.dk_x * scale if g.is_1d else g.dk_x * g.dk_y * scale**2
    return rows, cols, area


def bucket_gamma_integral(mask: ObjectMask, cfg: OracleConfig, aperture, x2f=None, y2f=None) -> np.ndarray:
    """Field correlation summed over a focal-plane aperture, times the focal pixel area.

    ``aperture`` is ``(col0, col1)`` or ``((row0, row1), (col0, col1))``, half-open
    indices into the focal grid conjugate to the mask grid (focal sample ``m``
    maps to ``u = kx[m]``).
    """
    total = 0
    for gam, area in _aperture_gammas(mask, cfg, aperture, x2f, y2f):
        total = total + gam.sum(axis=0) * area
    return _squeeze(total, mask.grid)


def bucket_fluctuation_image(mask: ObjectMask, cfg: OracleConfig, aperture=None, x2f=None, y2f=None) -> np.ndarray:
    """Noise-free bucket-detector fluctuation image ``sum_u |gamma(u, x2f)|^2``.

    Sum over the focal samples of the aperture (whole plane when ``None``).  For
    circular Gaussian fields this is exactly ``Cov(D, I2)``; divide by
    ``grid.mode_area**2`` to get the per-mode units of the Monte Carlo estimator.
    """
    total = 0.0
    for gam, _ in _aperture_gammas(mask, cfg, aperture, x2f, y2f):
        total = total + np.sum(gam.real**2 + gam.imag**2, axis=0)
    return _squeeze(total, mask.grid)


def fluctuation_image(gamma: np.ndarray) -> np.ndarray:
    """Noise-free pixel-detector ghost image ``|gamma|^2``."""
    return np.abs(gamma) ** 2
