"""Pseudo-thermal source: Gaussian angular spectrum with random per-mode amplitudes.

Random numbers come from numpy's counter-based Philox4x64 generator keyed by the
master seed.  Realization ``r`` owns the counter block starting at
``r * counters_per_realization(grid)``, so any realization can be regenerated
on its own and batches may be cut anywhere without changing a single bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import ComplexField, GridSpec, centered_mode_sum

DEFAULT_WAVELENGTH = 0.532  # um
AMPLITUDE_LAWS = ("gaussian", "constant_modulus")
RNG_NAME = "numpy.random.Philox(4x64, counter-based)"


def sigma_from_coherence_length(l_c: float) -> float:
    """Gaussian spectral width for a source whose degree of coherence falls to 1/e at ``l_c``.

    The ensemble autocorrelation of the synthesized field is
    ``exp(-sigma^2 dx^2 / 8)``, so ``sigma = 2 sqrt(2) / l_c``.
    """
    if not np.isfinite(l_c) or l_c <= 0:
        raise ValueError(f"coherence length must be > 0, got {l_c}")
    return 2.0 * np.sqrt(2.0) / l_c


def coherence_length_from_sigma(sigma: float) -> float:
    return 2.0 * np.sqrt(2.0) / sigma


@dataclass(frozen=True)
class SourceParams:
    sigma: float
    mode_intensity: float = 1.0
    k_max: float = 2.0 * np.pi / DEFAULT_WAVELENGTH
    amplitude_law: str = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not self.mode_intensity > 0:
            raise ValueError(f"mode_intensity must be > 0, got {self.mode_intensity}")
        if not self.k_max >= 3.0 * self.sigma:
            raise ValueError(
                f"k_max={self.k_max} truncates the spectrum; need k_max >= 3*sigma"
            )
        if self.amplitude_law not in AMPLITUDE_LAWS:
            raise ValueError(f"amplitude_law must be one of {AMPLITUDE_LAWS}")

    @classmethod
    def from_coherence_length(cls, l_c: float, **kwargs) -> "SourceParams":
        return cls(sigma=sigma_from_coherence_length(l_c), **kwargs)

    @property
    def coherence_length(self) -> float:
        return coherence_length_from_sigma(self.sigma)


@dataclass(frozen=True)
class SpeckleDraw:
    grid: GridSpec
    amplitudes: np.ndarray = field(repr=False)
    seed: int = 0
    index: int = 0


def spectral_weights(params: SourceParams, grid: GridSpec) -> np.ndarray:
    """Field amplitude weight ``exp(-|k|^2 / sigma^2)`` with the evanescent cutoff applied."""
    k2 = grid.radius2_k()
    w = np.exp(-k2 / params.sigma**2)
    w[k2 > params.k_max**2] = 0.0
    return w


def counters_per_realization(grid: GridSpec) -> int:
    # two uniforms per mode; Philox emits four 64-bit words per counter step
    return -(-2 * grid.size // 4)


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def raw_amplitudes(
    params: SourceParams, grid: GridSpec, seed: int, start: int, count: int
) -> np.ndarray:
    """Amplitudes for realizations ``start .. start + count - 1`` in FFT index order.

    Shape ``(count, n_y, n_x)``; mode ``(0, 0)`` is DC.  Use
    :func:`draw_amplitudes` for the centered layout.
    """
    stride = counters_per_realization(grid)
    bitgen = np.random.Philox(key=_check_seed(seed), counter=int(start) * stride)
    raw = np.random.Generator(bitgen).random((count, 4 * stride))
    n = grid.size
    theta = raw[:, n : 2 * n] * (2.0 * np.pi)
    if params.amplitude_law == "gaussian":
        # |A|^2 ~ Exp(mean = I): circular complex Gaussian (Box-Muller)
        modulus = np.sqrt(-params.mode_intensity * np.log1p(-raw[:, :n]))
    else:
        modulus = np.sqrt(params.mode_intensity)
    out = np.empty((count, n), dtype=np.complex128)
    out.real = modulus * np.cos(theta)
    out.imag = modulus * np.sin(theta)
    return out.reshape((count,) + grid.shape)


def draw_amplitudes(
    params: SourceParams, grid: GridSpec, seed: int, start: int, count: int
) -> np.ndarray:
    """Amplitudes for realizations ``start .. start + count - 1`` on the centered grid."""
    return np.fft.fftshift(raw_amplitudes(params, grid, seed, start, count), axes=(1, 2))


def fft_order_field(raw: np.ndarray, raw_weights: np.ndarray) -> np.ndarray:
    """Source field in FFT index order from FFT-ordered amplitudes and weights."""
    c = raw_weights * raw
    n = c.shape[-1] * c.shape[-2]
    if c.shape[-2] == 1:
        return np.fft.ifft(c, axis=-1) * (0.5 * n)
    return np.fft.ifft2(c, axes=(-2, -1)) * (0.5 * n)


def draw_speckle(params: SourceParams, grid: GridSpec, seed: int, index: int = 0) -> SpeckleDraw:
    amps = draw_amplitudes(params, grid, seed, index, 1)[0]
    amps.flags.writeable = False
    return SpeckleDraw(grid, amps, int(seed), int(index))


def synthesize_fields(amplitudes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Batch version of :func:`synthesize_source_field` on raw arrays."""
    return 0.5 * centered_mode_sum(weights * amplitudes)


def synthesize_source_field(draw: SpeckleDraw, params: SourceParams) -> ComplexField:
    """``U(x) = 1/2 sum_k exp(-|k|^2/sigma^2) A_k exp(i k x)``.

    Both beam-splitter outputs carry this same field.
    """
    amps = np.asarray(draw.amplitudes)
    if amps.shape != draw.grid.shape:
        raise ValueError(f"draw amplitudes {amps.shape} do not match grid {draw.grid.shape}")
    u = synthesize_fields(amps, spectral_weights(params, draw.grid))
    return ComplexField(draw.grid, u, "source")
