"""Monte Carlo estimation of the two-arm correlation over speckle ensembles.

Each realization draws a speckle field, sends one copy through the object arm
to a pixel or bucket detector (signal ``D``) and the other copy to the
resolving reference detector (``I2(x) = |V(x)|^2``).  Accumulated are

* ``gamma(x)   = <U_f(pixel) V*(x)>``            (pixel detector only)
* ``corr(x)    = <D I2(x)>``                     (background-inclusive)
* ``g_fluct(x) = <D I2(x)> - <D><I2(x)>``        (fluctuation image)

Realizations are split into ``n_groups`` contiguous groups (batch means for
standard errors) and each group into fixed-size chunks.  Chunk boundaries
depend only on ``M``, so the result is the same for any thread count.

``gamma`` is in per-mode units; multiply by ``grid.mode_area`` (see
:attr:`CorrelationResult.continuum_gamma`) to compare with the quadrature oracle.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .lattice import GridSpec
from .optics import ArmParams, ObjectMask
from .source import SourceParams, fft_order_field, raw_amplitudes, spectral_weights

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 2048
DEFAULT_GROUPS = 32
IMAGE_KINDS = ("fluctuation", "gamma", "correlation")


@dataclass(frozen=True)
class DetectorSpec:
    """Object-arm detector.

    ``pixel`` is a ``(row, col)`` focal-plane index (``None`` = DC sample).
    ``aperture`` is ``((row0, row1), (col0, col1))`` half-open (``None`` = whole plane).
    """

    kind: str = "pixel"
    pixel: Optional[Tuple[int, int]] = None
    aperture: Optional[Tuple[Tuple[int, int], Tuple[int, int]]] = None

    def __post_init__(self):
        if self.kind not in ("pixel", "bucket"):
            raise ValueError(f"detector kind must be 'pixel' or 'bucket', got {self.kind!r}")

    @classmethod
    def bucket(cls, cols=None, rows=None) -> "DetectorSpec":
        if cols is None and rows is None:
            return cls("bucket")
        return cls("bucket", aperture=(tuple(rows or (0, 1)), tuple(cols)))

    def resolve_pixel(self, grid: GridSpec) -> Tuple[int, int]:
        r, c = grid.center if self.pixel is None else self.pixel
        if not (0 <= r < grid.n_y and 0 <= c < grid.n_x):
            raise ValueError(f"pixel {(r, c)} outside focal grid {grid.shape}")
        return int(r), int(c)

    def resolve_aperture(self, grid: GridSpec) -> Tuple[slice, slice]:
        if self.aperture is None:
            return slice(0, grid.n_y), slice(0, grid.n_x)
        (r0, r1), (c0, c1) = self.aperture
        if not (0 <= r0 < r1 <= grid.n_y and 0 <= c0 < c1 <= grid.n_x):
            raise ValueError(f"aperture {self.aperture} empty or outside grid {grid.shape}")
        return slice(r0, r1), slice(c0, c1)


@dataclass(frozen=True)
class GroupStats:
    """Per-group means; leading axis indexes the group."""

    counts: np.ndarray
    gamma: Optional[np.ndarray]
    corr: np.ndarray
    mean_d: np.ndarray
    mean_i: np.ndarray

    @property
    def g_fluct(self) -> np.ndarray:
        return self.corr - self.mean_d[:, None, None] * self.mean_i

    @property
    def n_groups(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class CorrelationResult:
    grid: GridSpec
    gamma: Optional[np.ndarray] = field(repr=False)
    g_fluct: np.ndarray = field(repr=False)
    corr: np.ndarray = field(repr=False)
    mean_d: float
    mean_i: np.ndarray = field(repr=False)
    realizations: int
    detector: DetectorSpec
    seed: int
    groups: GroupStats = field(repr=False)

    @property
    def continuum_gamma(self) -> np.ndarray:
        if self.gamma is None:
            raise ValueError("gamma is only estimated for pixel detectors")
        return self.gamma * self.grid.mode_area

    def profile(self, name: str) -> np.ndarray:
        arr = getattr(self, name)
        return arr[0] if self.grid.is_1d else arr


def _chunks(m: int, n_groups: int, chunk: int):
    """Yield ``(group, start, count)`` in a fixed order that depends only on ``m``."""
    bounds = [g * m // n_groups for g in range(n_groups + 1)]
    for g in range(n_groups):
        start = bounds[g]
        while start < bounds[g + 1]:
            count = min(chunk, bounds[g + 1] - start)
            yield g, start, count
            start += count


def _make_worker(source: SourceParams, mask: ObjectMask, detector: DetectorSpec, seed: int):
    """Per-chunk partial sums.  Works in FFT index order; callers shift the totals."""
    grid = mask.grid
    to_fft = lambda a: np.fft.ifftshift(a, axes=(-2, -1))  # noqa: E731
    weights = to_fft(spectral_weights(source, grid))
    t = to_fft(mask.transmission)
    if detector.kind == "pixel":
        r, c = detector.resolve_pixel(grid)
        # U_f(u_p) = sum_x t U0 exp(-i u_p x) dA
        probe = mask.transmission * np.exp(
            -1j * (grid.ky[r] * grid.y[:, None] + grid.kx[c] * grid.x[None, :])
        )
        probe = to_fft(probe) * grid.cell_area
    elif detector.aperture is None:
        # whole focal plane: Parseval gives sum_u |U_f|^2 = size * dA^2 * sum_x |t U0|^2
        full_scale = grid.size * grid.cell_area**2
    else:
        rows, cols = detector.resolve_aperture(grid)
        window = np.zeros(grid.shape, dtype=bool)
        window[rows, cols] = True
        window = to_fft(window)

    def work(start: int, count: int):
        u0 = fft_order_field(raw_amplitudes(source, grid, seed, start, count), weights)
        intensity = u0.real**2 + u0.imag**2
        s_uv = None
        if detector.kind == "pixel":
            uf = np.sum(u0 * probe, axis=(1, 2))
            d = uf.real**2 + uf.imag**2
            s_uv = np.sum(uf[:, None, None] * np.conj(u0), axis=0)
        elif detector.aperture is None:
            transmitted = t * u0
            d = np.sum(transmitted.real**2 + transmitted.imag**2, axis=(1, 2)) * full_scale
        else:
            focal = np.fft.fft2(t * u0, axes=(1, 2)) * grid.cell_area
            d = np.sum((focal.real**2 + focal.imag**2) * window, axis=(1, 2))
        return (
            s_uv,
            np.sum(d[:, None, None] * intensity, axis=0),
            np.sum(d),
            np.sum(intensity, axis=0),
        )

    return work


def run_ensemble(
    source: SourceParams,
    mask: ObjectMask,
    arm: ArmParams,
    detector: DetectorSpec,
    M: int,
    seed: int,
    *,
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
    n_groups: int = DEFAULT_GROUPS,
) -> CorrelationResult:
    """Estimate the correlation images from ``M`` speckle realizations.

    ``arm`` only sets the focal-plane axis labelling; the detector indexes the
    focal grid directly.
    """
    if int(M) != M or M < 2:
        raise ValueError(f"need M >= 2 realizations, got {M}")
    M = int(M)
    if chunk < 1:
        raise ValueError("chunk size must be >= 1")
    grid = mask.grid
    n_groups = max(1, min(int(n_groups), M))
    work = _make_worker(source, mask, detector, int(seed))
    plan = list(_chunks(M, n_groups, chunk))
    pixel = detector.kind == "pixel"

    shape = (n_groups,) + grid.shape
    acc_uv = np.zeros(shape, dtype=np.clongdouble) if pixel else None
    acc_di = np.zeros(shape, dtype=np.longdouble)
    acc_i = np.zeros(shape, dtype=np.longdouble)
    acc_d = np.zeros(n_groups, dtype=np.longdouble)
    counts = np.zeros(n_groups, dtype=np.int64)

    def add(g, count, parts):
        s_uv, s_di, s_d, s_i = parts
        if pixel:
            acc_uv[g] += s_uv
        acc_di[g] += s_di
        acc_d[g] += s_d
        acc_i[g] += s_i
        counts[g] += count

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(lambda p: work(p[1], p[2]), plan)
            for (g, _, count), parts in zip(plan, results):
                add(g, count, parts)
    else:
        for g, start, count in plan:
            add(g, count, work(start, count))
    logger.debug("ensemble done: M=%d chunks=%d groups=%d", M, len(plan), n_groups)

    centered = lambda a: np.fft.fftshift(a, axes=(-2, -1))  # noqa: E731
    acc_di, acc_i = centered(acc_di), centered(acc_i)
    if pixel:
        acc_uv = centered(acc_uv)
    n = counts.astype(np.longdouble)
    group_gamma = (acc_uv / n[:, None, None]).astype(np.complex128) if pixel else None
    groups = GroupStats(
        counts=counts,
        gamma=group_gamma,
        corr=(acc_di / n[:, None, None]).astype(np.float64),
        mean_d=(acc_d / n).astype(np.float64),
        mean_i=(acc_i / n[:, None, None]).astype(np.float64),
    )
    total = np.longdouble(M)
    mean_d = acc_d.sum() / total
    mean_i = acc_i.sum(axis=0) / total
    corr = acc_di.sum(axis=0) / total
    g_fluct = corr - mean_d * mean_i
    gamma = (acc_uv.sum(axis=0) / total).astype(np.complex128) if pixel else None
    return CorrelationResult(
        grid=grid,
        gamma=gamma,
        g_fluct=g_fluct.astype(np.float64),
        corr=corr.astype(np.float64),
        mean_d=float(mean_d),
        mean_i=mean_i.astype(np.float64),
        realizations=M,
        detector=detector,
        seed=int(seed),
        groups=groups,
    )


def reconstruct_image(result: CorrelationResult, kind: str = "fluctuation", *, clip: bool = True) -> np.ndarray:
    """Ghost image normalized to peak 1, on the reference-plane ``x_2f`` axis.

    ``kind``: ``"fluctuation"`` (``<dD dI2>``), ``"gamma"`` (``|gamma|^2``, pixel
    detectors) or ``"correlation"`` (``<D I2>``, background included).  With
    ``clip`` negative noise excursions are set to zero.
    """
    if kind == "fluctuation":
        img = result.g_fluct.copy()
    elif kind == "gamma":
        if result.gamma is None:
            raise ValueError("the gamma image needs a pixel detector")
        img = np.abs(result.gamma) ** 2
    elif kind == "correlation":
        img = result.corr.copy()
    else:
        raise ValueError(f"unknown image kind {kind!r}; expected one of {IMAGE_KINDS}")
    if clip:
        img = np.clip(img, 0.0, None)
    peak = np.max(np.abs(img))
    if not peak > 0:
        raise ValueError("cannot normalize an all-zero image")
    img = img / peak
    return img[0] if result.grid.is_1d else img


def batch_standard_error(result: CorrelationResult, statistic: Callable[[GroupStats, int], np.ndarray]) -> np.ndarray:
    """Standard error of ``statistic`` from the spread of its per-group values."""
    g = result.groups
    if g.n_groups < 2:
        return np.full_like(np.asarray(statistic(g, 0), dtype=float), np.inf)
    vals = np.array([statistic(g, i) for i in range(g.n_groups)])
    return np.std(vals, axis=0, ddof=1) / np.sqrt(g.n_groups)


def gaussian_moment_check(result: CorrelationResult) -> float:
    """max over pixels of ``| |gamma|^2 - g_fluct | / SE``.

    For circular Gaussian fields both estimate the same quantity, so values of a
    few units are expected; the standard error comes from the group batches.
    Small ``M`` gives an unreliable (but finite) number.
    """
    if result.detector.kind != "pixel":
        raise ValueError("gaussian_moment_check needs a pixel-detector result")
    diff = np.abs(result.gamma) ** 2 - result.g_fluct
    se = batch_standard_error(
        result, lambda g, i: np.abs(g.gamma[i]) ** 2 - g.g_fluct[i]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(diff) / se
    z = np.where(se > 0, z, np.where(np.abs(diff) > 0, np.inf, 0.0))
    return float(np.max(z))
