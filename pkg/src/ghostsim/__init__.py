"""Thermal-light ghost imaging: speckle source, two-arm optics, Monte Carlo
correlation estimator, quadrature oracle and image metrics."""
from .lattice import ComplexField, GridSpec, dft_forward, dft_inverse, focal_coordinate_map, make_grid
from .source import SourceParams, SpeckleDraw, draw_speckle, sigma_from_coherence_length, synthesize_source_field
from .optics import (
    ArmParams,
    ObjectMask,
    complement,
    load_mask,
    make_slit_grating,
    object_arm_field,
    reference_arm_field,
    render_mask,
)
from .estimator import CorrelationResult, DetectorSpec, gaussian_moment_check, reconstruct_image, run_ensemble
from .oracle import (
    OracleConfig,
    bucket_gamma_integral,
    gamma_exact,
    gamma_offset,
    image_psf_convolution,
)
from .metrics import (
    ResponseRow,
    VisibilityReport,
    first_order_response,
    fit_gaussian,
    response_curve,
    snr,
    visibility,
)

__version__ = "0.1.0"

__all__ = [
    "ArmParams", "ComplexField", "CorrelationResult", "DetectorSpec", "GridSpec", "ObjectMask",
    "OracleConfig", "ResponseRow", "SourceParams", "SpeckleDraw", "VisibilityReport",
    "bucket_gamma_integral", "complement", "dft_forward", "dft_inverse", "draw_speckle",
    "first_order_response", "fit_gaussian", "focal_coordinate_map", "gamma_exact", "gamma_offset",
    "gaussian_moment_check", "image_psf_convolution", "load_mask", "make_grid", "make_slit_grating",
    "object_arm_field", "reconstruct_image", "reference_arm_field", "render_mask", "response_curve",
    "run_ensemble", "sigma_from_coherence_length", "snr", "synthesize_source_field", "visibility",
]
