"""scikit-learn style transformers mapping 1D transmission profiles to ghost images.

Rows of ``X`` are object masks sampled on a uniform grid (``pitch`` um per
column, values in [0, 1]); ``transform`` returns one peak-normalized image per
row on the same axis.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .estimator import DetectorSpec, reconstruct_image, run_ensemble
from .lattice import GridSpec
from .optics import ArmParams, ObjectMask
from .oracle import OracleConfig, bucket_fluctuation_image, gamma_exact
from .source import DEFAULT_WAVELENGTH, SourceParams


class _GhostBase(TransformerMixin, BaseEstimator):
    def _check_X(self, X, reset: bool) -> np.ndarray:
        X = check_array(X, dtype=np.float64)
        if np.any(X < 0) or np.any(X > 1):
            raise ValueError("transmission values must lie in [0, 1]")
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} was fitted with {self.n_features_in_}"
            )
        return X

    def fit(self, X, y=None):
        """Validate ``X`` and fix the grid and source; no data-dependent state."""
        X = self._check_X(X, reset=True)
        if self.detector not in ("pixel", "bucket"):
            raise ValueError(f"detector must be 'pixel' or 'bucket', got {self.detector!r}")
        self.grid_ = GridSpec(X.shape[1], 1, float(self.pitch))
        self.source_ = SourceParams.from_coherence_length(float(self.coherence_length))
        self.arm_ = ArmParams(float(self.wavelength), float(self.focal_length))
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = self._check_X(X, reset=False)
        return np.stack([self._image(ObjectMask(self.grid_, row), i) for i, row in enumerate(X)])


class GhostImageTransformer(_GhostBase):
    """Monte Carlo ghost image of each row.

    Parameters
    ----------
    coherence_length : float
        Source coherence length in um.
    pitch : float
        Sample spacing in um.
    n_realizations : int
        Speckle realizations per image.
    detector : {"pixel", "bucket"}
        Object-arm detector (pixel at the focal-plane center, or whole-plane bucket).
    image : {"fluctuation", "gamma", "correlation"}
        Which estimate to return; see :func:`ghostsim.estimator.reconstruct_image`.
    random_state : int
        Row ``i`` uses seed ``random_state + i``.
    """

    def __init__(self, coherence_length=75.0, pitch=10.0, n_realizations=10000, detector="pixel",
                 image="fluctuation", wavelength=DEFAULT_WAVELENGTH, focal_length=2.5e5,
                 random_state=0, threads=1):
        self.coherence_length = coherence_length
        self.pitch = pitch
        self.n_realizations = n_realizations
        self.detector = detector
        self.image = image
        self.wavelength = wavelength
        self.focal_length = focal_length
        self.random_state = random_state
        self.threads = threads

    def _image(self, mask: ObjectMask, i: int) -> np.ndarray:
        seed = (int(self.random_state) + i) % 2**64
        res = run_ensemble(self.source_, mask, self.arm_, DetectorSpec(self.detector),
                           self.n_realizations, seed, threads=self.threads)
        return reconstruct_image(res, self.image)


class OracleImageTransformer(_GhostBase):
    """Noise-free ghost image of each row: ``|gamma|^2`` (pixel) or the bucket sum."""

    def __init__(self, coherence_length=75.0, pitch=10.0, detector="pixel",
                 wavelength=DEFAULT_WAVELENGTH, focal_length=2.5e5):
        self.coherence_length = coherence_length
        self.pitch = pitch
        self.detector = detector
        self.wavelength = wavelength
        self.focal_length = focal_length

    def _image(self, mask: ObjectMask, i: int) -> np.ndarray:
        cfg = OracleConfig(self.source_.sigma, arm=self.arm_)
        if self.detector == "pixel":
            img = np.abs(gamma_exact(mask, cfg)) ** 2
        else:
            img = bucket_fluctuation_image(mask, cfg)
        peak = img.max()
        if not peak > 0:
            raise ValueError(f"row {i}: all-zero image (opaque mask?)")
        return img / peak
