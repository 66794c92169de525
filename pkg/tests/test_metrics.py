import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import erf

from conftest import L_C, SIGMA
from ghostsim.harness.experiments import reference_table
from ghostsim.lattice import make_grid
from ghostsim.metrics import (
    ResponseRow,
    background_ratio,
    default_visibility_roi,
    first_order_response,
    fit_gaussian,
    grating_regions,
    response_curve,
    snr,
    visibility,
)
from ghostsim.optics import make_slit_grating
from ghostsim.oracle import OracleConfig, gamma_exact, image_psf_convolution

GRID = make_grid(512, 1, 10.0)


def test_visibility_basics():
    assert visibility(np.full(10, 3.0)) == 0.0
    m = make_slit_grating(100, 300, 4, GRID)
    assert visibility(m.profile.real, default_visibility_roi(m, 400)) == 1.0
    with pytest.raises(ValueError):
        visibility(np.zeros(5))
    with pytest.raises(ValueError):
        visibility(np.array([1.0, -0.1]))
    with pytest.raises(ValueError):
        visibility(np.ones(5), (3, 3))


@given(st.lists(st.floats(0, 1e3), min_size=2, max_size=50).filter(lambda v: sum(v) > 0), st.floats(1e-3, 1e3))
def test_visibility_scale_invariant(vals, scale):
    img = np.array(vals)
    assert visibility(img * scale) == pytest.approx(visibility(img), abs=1e-12)
    assert 0.0 <= visibility(img) <= 1.0


# Frozen from image_psf_convolution (|gamma|^2 on a 512 x 10 um grid), ROI = grating bounding box.
GOLDEN_VISIBILITY = [
    ((300, 900, 2), 1.0),
    ((150, 450, 4), 0.999999998702334),
    ((200, 400, 6), 0.9999999348274179),
    ((100, 300, 6), 0.9998919950687087),
    ((75, 225, 8), 0.9928635973042602),
]


@pytest.mark.parametrize("geom,golden", GOLDEN_VISIBILITY)
def test_oracle_image_visibility_golden(geom, golden):
    width, gap, count = geom
    m = make_slit_grating(width, gap, count, GRID)
    img = np.abs(image_psf_convolution(m, SIGMA).values) ** 2
    idx = np.flatnonzero(m.profile.real > 0.5)
    v = visibility(img, (idx[0], idx[-1] + 1))
    assert v == pytest.approx(golden, abs=1e-9)
    # continuum cross-check: erf-blurred boxes (sample j covers [x_j - 5, x_j + 5))
    sd = 2 / SIGMA
    xx = np.linspace(GRID.x[idx[0]], GRID.x[idx[-1]], 100001)
    starts = GRID.x[idx[0]] + np.arange(count) * (width + gap) - 5
    prof = sum(0.5 * (erf((a + width - xx) / (np.sqrt(2) * sd)) - erf((a - xx) / (np.sqrt(2) * sd)))
               for a in starts) ** 2
    assert v == pytest.approx((prof.max() - prof.min()) / (prof.max() + prof.min()), abs=2e-3)


def test_snr_null_distribution():
    sig, bg = np.zeros(200, bool), np.zeros(200, bool)
    sig[:100], bg[100:] = True, True
    vals = [snr(np.random.default_rng(s).normal(size=200), sig, bg) for s in range(100)]
    assert max(abs(v) for v in vals) <= 3


def test_snr_degenerate_and_errors():
    img = np.array([0, 0, 0, 5.0, 5.0, 0, 0, 0])
    sig = (3, 5)
    bg = np.array([1, 1, 1, 0, 0, 1, 1, 1], bool)
    assert snr(img, sig, bg) == math.inf
    assert snr(-img, sig, bg) == -math.inf
    assert math.isnan(snr(np.zeros(8), sig, bg))
    with pytest.raises(ValueError, match="overlap"):
        snr(img, bg, bg)
    with pytest.raises(ValueError):
        snr(img, (2, 2), bg)


@given(st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_snr_affine_invariant(a, b):
    img = np.random.default_rng(0).normal(size=64)
    s0 = snr(img, (0, 20), (30, 64))
    assert snr(a * img + b, (0, 20), (30, 64)) == pytest.approx(s0, rel=1e-9)


def test_first_order_response_identity():
    m = make_slit_grating(100, 300, 6, GRID)
    r = first_order_response(m.profile.real, m, 400)
    assert r.rfr == pytest.approx(1.0, abs=1e-12)
    assert r.image_ratio == pytest.approx(r.object_ratio)


def test_first_order_response_oracle_1200():
    m = make_slit_grating(300, 900, 2, GRID)
    r = first_order_response(gamma_exact(m, OracleConfig(SIGMA)).real, m, 1200)
    assert r.rfr == pytest.approx(0.96218, abs=1e-3)
    # first-order image component over zero-order object component exceeds 1/2
    assert r.image_ratio > 0.5


def test_first_order_response_errors():
    m = make_slit_grating(300, 900, 2, GRID)
    with pytest.raises(ValueError, match="shorter"):
        first_order_response(m.profile.real, m, 1200, window=600)
    with pytest.raises(ValueError):
        first_order_response(np.ones(10), m, 1200)


def _oracle_source(width, gap):
    count = {300: 2, 150: 4, 100: 6, 75: 8}[width]
    m = make_slit_grating(width, gap, count, GRID)
    return gamma_exact(m, OracleConfig(SIGMA)).real, m, 0.0


def test_response_curve_oracle():
    rows = response_curve([(w, 3 * w) for w in (300, 150, 100, 75)], L_C, _oracle_source)
    assert [r.ffc for r in rows] == [0.0625, 0.125, 0.1875, 0.25]
    np.testing.assert_allclose([r.rfr for r in rows], [0.962, 0.857, 0.707, 0.540], atol=1e-3)
    assert all(a.rfr > b.rfr for a, b in zip(rows, rows[1:]))
    k1 = np.array([2 * np.pi * r.ffc / L_C for r in rows])
    slope = np.polyfit(k1**2, np.log([r.rfr for r in rows]), 1)[0]
    assert slope == pytest.approx(-2 / SIGMA**2, rel=0.01)
    assert fit_gaussian(rows).r_squared >= 0.999


def test_fit_gaussian_self_consistent():
    f = np.linspace(0.02, 0.3, 6)
    rows = [ResponseRow(0, x, 0.9 * math.exp(-((x / 0.21) ** 2))) for x in f]
    fit = fit_gaussian(rows)
    assert fit.amplitude == pytest.approx(0.9, rel=1e-6)
    assert fit.width == pytest.approx(0.21, rel=1e-6)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_gaussian(rows[:2])
    with pytest.raises(ValueError, match="degenerate"):
        fit_gaussian([ResponseRow(0, 0.1, v) for v in (1, 0.5, 0.2)])


def test_fit_gaussian_on_measured_reference():
    rows = [ResponseRow(c, f, r) for c, f, r in reference_table()]
    assert [r.rfr for r in rows] == [1, 0.64, 0.449, 0.388, 0]
    fit = fit_gaussian(rows)
    assert math.isfinite(fit.r_squared)


def test_grating_regions_and_background():
    m = make_slit_grating(300, 900, 2, GRID)
    open_, opaque = grating_regions(m, 110)
    assert not np.any(open_ & opaque)
    assert open_.sum() == 2 * (30 - 22)
    assert not open_[0] and not opaque[0] and not opaque[-1]
    assert np.all(m.profile.real[open_] == 1) and np.all(m.profile.real[opaque] == 0)
    img = np.where(m.profile.real > 0, 2.0, 0.1)
    assert background_ratio(img, opaque) == pytest.approx(0.05)
    lo, hi = default_visibility_roi(m, 1200)
    assert (lo, hi) == (np.flatnonzero(m.profile.real)[0] - 120, np.flatnonzero(m.profile.real)[-1] + 121)
