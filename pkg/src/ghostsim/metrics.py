"""Figures of merit for ghost images: visibility, SNR and grating frequency response."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit

from .optics import ObjectMask


def _roi(image: np.ndarray, roi) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if roi is None:
        return image.ravel()
    if isinstance(roi, np.ndarray) and roi.dtype == bool:
        return image[roi]
    if isinstance(roi, slice):
        return image[..., roi].ravel()
    lo, hi = roi
    return image[..., lo:hi].ravel()


def visibility(image, roi=None) -> float:
    """``(max - min) / (max + min)`` inside ``roi`` (index range, slice or boolean mask)."""
    vals = _roi(image, roi)
    if vals.size == 0:
        raise ValueError("empty region of interest")
    if np.any(vals < 0):
        raise ValueError("visibility needs a non-negative image")
    hi, lo = float(vals.max()), float(vals.min())
    if hi + lo == 0:
        raise ValueError("visibility undefined on an all-zero region")
    return (hi - lo) / (hi + lo)


def snr(image, signal_roi, background_roi) -> float:
    """``(mean_signal - mean_background) / std_background``.

    A noiseless background returns ``inf`` (signed) or ``nan`` when the means agree too.
    """
    sig = _roi(image, signal_roi)
    bg = _roi(image, background_roi)
    if sig.size == 0 or bg.size == 0:
        raise ValueError("signal and background regions must be non-empty")
    if isinstance(signal_roi, np.ndarray) and isinstance(background_roi, np.ndarray):
        if np.any(signal_roi & background_roi):
            raise ValueError("signal and background regions overlap")
    contrast = float(sig.mean() - bg.mean())
    spread = float(bg.std(ddof=1)) if bg.size > 1 else 0.0
    if spread == 0.0:
        return math.copysign(math.inf, contrast) if contrast else math.nan
    return contrast / spread


def grating_regions(mask: ObjectMask, margin: float) -> Tuple[np.ndarray, np.ndarray]:
    """(open, opaque) boolean masks along x, each shrunk by ``margin`` um from every edge.

    Only the central row is used; grid-edge samples count as boundaries too so the
    periodic wrap never enters a region.
    """
    row = np.abs(mask.transmission[mask.grid.center[0]]) > 0.5
    steps = int(round(margin / mask.grid.pitch))

    def shrink(sel):
        out = sel.copy()
        for s in range(1, steps + 1):
            out[s:] &= sel[:-s]
            out[:-s] &= sel[s:]
        out[:steps] = False
        if steps:
            out[-steps:] = False
        return out

    return shrink(row), shrink(~row)


def _window(x: np.ndarray, period: float, window: Optional[float]) -> np.ndarray:
    span = x[-1] - x[0] + (x[1] - x[0])
    if window is None:
        window = math.floor(span / period + 1e-9) * period
    if window < period - 1e-9:
        raise ValueError(f"analysis window {window:g} um shorter than one period {period:g} um")
    pitch = x[1] - x[0]
    n = int(round(window / pitch))
    c = len(x) // 2
    return np.arange(c - n // 2, c - n // 2 + n)


def _component(profile: np.ndarray, x: np.ndarray, k: float) -> complex:
    return complex(np.sum(profile * np.exp(-1j * k * x)))


@dataclass(frozen=True)
class ResponseMeasurement:
    rfr: float
    image_ratio: float
    object_ratio: float


def first_order_response(image, mask: ObjectMask, period: float, window: Optional[float] = None) -> ResponseMeasurement:
    """Relative frequency response at ``k1 = 2 pi / period``.

    Ratio of first-to-zero order magnitudes of the image over the same ratio for
    the object, both from DFTs over a centered window that holds a whole number
    of periods (the widest that fits unless ``window`` is given, in um).
    """
    x = mask.grid.x
    obj = np.real(mask.profile if mask.grid.is_1d else mask.transmission[mask.grid.center[0]])
    img = np.asarray(image, dtype=float)
    if img.ndim == 2:
        img = img[img.shape[0] // 2]
    if img.shape != x.shape:
        raise ValueError("image and mask must share the x axis")
    idx = _window(x, period, window)
    k1 = 2.0 * np.pi / period
    xi, im, ob = x[idx], img[idx], obj[idx]
    im0, ob0 = _component(im, xi, 0.0).real, _component(ob, xi, 0.0).real
    if im0 == 0 or ob0 == 0:
        raise ValueError("zero-order component vanishes")
    image_ratio = abs(_component(im, xi, k1)) / abs(im0)
    object_ratio = abs(_component(ob, xi, k1)) / abs(ob0)
    if object_ratio == 0:
        raise ValueError("object has no first-order component at this period")
    return ResponseMeasurement(image_ratio / object_ratio, image_ratio, object_ratio)


@dataclass(frozen=True)
class ResponseRow:
    csl: float  # slit width, um
    ffc: float  # l_c / period
    rfr: float
    rfr_se: float = 0.0


def response_curve(
    gratings: Iterable[Tuple[float, float]],
    l_c: float,
    image_source: Callable[[float, float], Tuple[np.ndarray, ObjectMask, float]],
) -> List[ResponseRow]:
    """One :class:`ResponseRow` per ``(width, gap)`` grating, sorted by ``ffc``.

    ``image_source(width, gap)`` returns ``(image, mask, standard_error)``; see
    :mod:`ghostsim.harness.experiments` for the oracle and Monte Carlo sources.
    """
    rows = []
    for width, gap in gratings:
        period = width + gap
        image, mask, se = image_source(width, gap)
        rows.append(ResponseRow(width, l_c / period, first_order_response(image, mask, period).rfr, se))
    return sorted(rows, key=lambda r: r.ffc)


def _gauss(f, amplitude, width):
    return amplitude * np.exp(-((f / width) ** 2))


@dataclass(frozen=True)
class GaussianFit:
    amplitude: float
    width: float
    r_squared: float


def fit_gaussian(rows: Sequence[ResponseRow]) -> GaussianFit:
    """Least-squares fit ``rfr ~ A exp(-(ffc / w)^2)``."""
    if len(rows) < 3:
        raise ValueError("need at least 3 rows for a Gaussian fit")
    f = np.array([r.ffc for r in rows], dtype=float)
    y = np.array([r.rfr for r in rows], dtype=float)
    if np.ptp(f) == 0:
        raise ValueError("degenerate input: all ffc values are equal")
    w0 = max(float(np.ptp(f)), 1e-12)
    (a, w), _ = curve_fit(_gauss, f, y, p0=(max(y.max(), 1e-12), w0), maxfev=20000)
    resid = y - _gauss(f, a, w)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return GaussianFit(float(a), float(abs(w)), r2)


@dataclass(frozen=True)
class VisibilityReport:
    visibility: float
    snr: float
    roi: object
    signal_roi: object
    background_roi: object


def background_ratio(image, background_roi) -> float:
    """RMS level of ``image`` in the background region relative to its peak magnitude."""
    img = np.asarray(image, dtype=float)
    bg = _roi(img, background_roi)
    return float(np.sqrt(np.mean(bg**2)) / np.max(np.abs(img)))


def default_visibility_roi(mask: ObjectMask, period: float) -> Tuple[int, int]:
    """Grating bounding box plus one period on each side, as a column range."""
    row = np.abs(mask.transmission[mask.grid.center[0]]) > 0.5
    open_idx = np.flatnonzero(row)
    if open_idx.size == 0:
        raise ValueError("mask has no open samples")
    pad = int(round(period / mask.grid.pitch))
    return max(0, open_idx[0] - pad), min(mask.grid.n_x, open_idx[-1] + 1 + pad)
