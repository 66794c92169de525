import dataclasses

import numpy as np
import pytest
from scipy.optimize import curve_fit

from conftest import SIGMA
from ghostsim.estimator import (
    CorrelationResult,
    DetectorSpec,
    batch_standard_error,
    gaussian_moment_check,
    reconstruct_image,
    run_ensemble,
)
from ghostsim.lattice import make_grid
from ghostsim.optics import ArmParams, ObjectMask, make_slit_grating, open_aperture, point_object
from ghostsim.oracle import OracleConfig, bucket_fluctuation_image, gamma_exact
from ghostsim.source import SourceParams

ARM = ArmParams()


def rel_rms(a, b):
    return np.sqrt(np.mean(np.abs(a - b) ** 2)) / np.sqrt(np.mean(np.abs(b) ** 2))


def test_detector_spec_validation():
    g = make_grid(16, 4, 1.0)
    with pytest.raises(ValueError):
        DetectorSpec("camera")
    assert DetectorSpec().resolve_pixel(g) == g.center
    with pytest.raises(ValueError):
        DetectorSpec(pixel=(4, 0)).resolve_pixel(g)
    with pytest.raises(ValueError):
        DetectorSpec.bucket(cols=(3, 3), rows=(0, 4)).resolve_aperture(g)
    assert DetectorSpec.bucket(cols=(2, 5)).aperture == ((0, 1), (2, 5))


def test_rejects_too_few_realizations(source, grid256):
    m = open_aperture(grid256)
    for bad in (0, 1, 2.5):
        with pytest.raises(ValueError, match="M >= 2"):
            run_ensemble(source, m, ARM, DetectorSpec(), bad, 0)


def test_open_aperture_image_is_flat(source):
    g = make_grid(64, 1, 10.0)
    res = run_ensemble(source, open_aperture(g), ARM, DetectorSpec(), 20_000, 3)
    se = batch_standard_error(res, lambda gr, i: gr.g_fluct[i])
    dev = res.g_fluct - res.g_fluct.mean()
    assert np.all(np.abs(dev) < 5 * np.sqrt(se**2 + (se**2).mean() / g.n_x))


def test_serial_runs_byte_identical(source, grid256):
    m = make_slit_grating(300, 900, 2, grid256)
    a = run_ensemble(source, m, ARM, DetectorSpec(), 3000, 42, chunk=500)
    b = run_ensemble(source, m, ARM, DetectorSpec(), 3000, 42, chunk=500)
    for name in ("gamma", "g_fluct", "corr", "mean_i"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_threads_match_serial(source, grid256):
    m = make_slit_grating(300, 900, 2, grid256)
    a = run_ensemble(source, m, ARM, DetectorSpec("bucket"), 3000, 9, chunk=256)
    b = run_ensemble(source, m, ARM, DetectorSpec("bucket"), 3000, 9, chunk=256, threads=3)
    np.testing.assert_allclose(b.g_fluct, a.g_fluct, rtol=1e-12, atol=0)


def test_chunking_only_reorders_sums(source, grid256):
    m = make_slit_grating(300, 900, 2, grid256)
    a = run_ensemble(source, m, ARM, DetectorSpec(), 2000, 5, chunk=2048)
    b = run_ensemble(source, m, ARM, DetectorSpec(), 2000, 5, chunk=37)
    np.testing.assert_allclose(b.gamma, a.gamma, rtol=1e-12, atol=1e-12 * np.abs(a.gamma).max())


def test_seed_changes_result(source, grid256):
    m = make_slit_grating(300, 900, 2, grid256)
    a = run_ensemble(source, m, ARM, DetectorSpec(), 100, 1)
    b = run_ensemble(source, m, ARM, DetectorSpec(), 100, 2)
    assert not np.array_equal(a.gamma, b.gamma)


def test_pixel_gamma_matches_oracle_small(source):
    g = make_grid(128, 1, 10.0)
    m = make_slit_grating(200, 400, 2, g)
    res = run_ensemble(source, m, ARM, DetectorSpec(), 40_000, 8)
    ref = gamma_exact(m, OracleConfig(SIGMA))
    assert rel_rms(np.abs(res.profile("continuum_gamma")), np.abs(ref)) < 0.05
    assert rel_rms(res.profile("g_fluct") * g.mode_area**2, np.abs(ref) ** 2) < 0.1


@pytest.mark.parametrize("aperture", [None, ((0, 1), (40, 90))])
def test_bucket_matches_oracle(source, aperture):
    g = make_grid(128, 1, 10.0)
    m = make_slit_grating(200, 400, 2, g)
    res = run_ensemble(source, m, ARM, DetectorSpec("bucket", aperture=aperture), 40_000, 4)
    ref = bucket_fluctuation_image(m, OracleConfig(SIGMA), None if aperture is None else aperture[1])
    assert rel_rms(res.profile("g_fluct") * g.mode_area**2, ref) < 0.1
    with pytest.raises(ValueError):
        res.continuum_gamma


def test_2d_pixel_estimate(source):
    # finite-height slits clear of the grid edge (the estimator's field is periodic)
    g = make_grid(32, 32, 20.0)
    t = make_slit_grating(100, 140, 2, g).transmission * (np.abs(g.y) < 100)[:, None]
    m = ObjectMask(g, t)
    res = run_ensemble(source, m, ARM, DetectorSpec(), 20_000, 6)
    ref = gamma_exact(m, OracleConfig(SIGMA))
    assert res.gamma.shape == g.shape
    assert rel_rms(np.abs(res.continuum_gamma), np.abs(ref)) < 0.08


def _fit_width(x, prof):
    (_, w), _ = curve_fit(lambda x, a, w: a * np.exp(-(x**2) / (2 * w**2)), x, prof, p0=(prof.max(), 50.0))
    return abs(w)


def test_point_object_psf_width(source, grid256):
    res = run_ensemble(source, point_object(grid256), ARM, DetectorSpec(), 50_000, 11)
    x = grid256.x
    near = np.abs(x) <= 200
    # the field correlation spreads with std 2/sigma, its squared modulus with sqrt(2)/sigma
    assert _fit_width(x[near], res.profile("gamma").real[near]) == pytest.approx(2 / SIGMA, rel=0.03)
    g_img = reconstruct_image(res, "fluctuation", clip=False)
    assert _fit_width(x[near], g_img[near]) == pytest.approx(np.sqrt(2) / SIGMA, rel=0.03)


def test_off_center_slit_images_upright(source):
    g = make_grid(128, 1, 10.0)
    m = ObjectMask(g, ((g.x >= 250) & (g.x < 400)).astype(float))
    res = run_ensemble(source, m, ARM, DetectorSpec(), 10_000, 2)
    img = reconstruct_image(res)
    assert 250 <= g.x[np.argmax(img)] < 400


def _fake(g, g_fluct, gamma=None, kind="pixel"):
    shaped = np.asarray(g_fluct, float).reshape(g.shape)
    return CorrelationResult(g, gamma, shaped, shaped, 1.0, shaped, 2, DetectorSpec(kind), 0, None)


def test_reconstruct_image_normalization():
    g = make_grid(8, 1, 1.0)
    np.testing.assert_allclose(reconstruct_image(_fake(g, np.full(8, 3.0))), 1.0)
    img = reconstruct_image(_fake(g, [-1, 0, 2, 4, 1, 0, 0, 0]))
    np.testing.assert_allclose(img, [0, 0, 0.5, 1, 0.25, 0, 0, 0])
    raw = reconstruct_image(_fake(g, [-8, 0, 2, 4, 1, 0, 0, 0]), clip=False)
    assert raw.min() == -1.0
    with pytest.raises(ValueError, match="all-zero"):
        reconstruct_image(_fake(g, np.zeros(8)))
    with pytest.raises(ValueError):
        reconstruct_image(_fake(g, np.ones(8)), kind="gamma")
    with pytest.raises(ValueError):
        reconstruct_image(_fake(g, np.ones(8)), kind="nope")


def test_gamma_image_kind(source, grid256):
    m = make_slit_grating(300, 900, 2, grid256)
    res = run_ensemble(source, m, ARM, DetectorSpec(), 2000, 1)
    img = reconstruct_image(res, "gamma")
    np.testing.assert_allclose(img, np.abs(res.profile("gamma")) ** 2 / np.max(np.abs(res.gamma) ** 2))
    assert reconstruct_image(res, "correlation").max() == 1.0


def test_moment_check_small_m_and_bucket(source, grid256):
    m = make_slit_grating(300, 900, 2, grid256)
    res = run_ensemble(source, m, ARM, DetectorSpec(), 2, 0)
    assert np.isfinite(gaussian_moment_check(res)) or gaussian_moment_check(res) == np.inf
    bucket = run_ensemble(source, m, ARM, DetectorSpec("bucket"), 10, 0)
    with pytest.raises(ValueError):
        gaussian_moment_check(bucket)


def test_moment_check_detects_constant_modulus():
    g = make_grid(64, 1, 10.0)
    m = make_slit_grating(100, 300, 2, g)
    gauss = SourceParams(SIGMA)
    const = dataclasses.replace(gauss, amplitude_law="constant_modulus")
    ok = gaussian_moment_check(run_ensemble(gauss, m, ARM, DetectorSpec(), 20_000, 1))
    bad = gaussian_moment_check(run_ensemble(const, m, ARM, DetectorSpec(), 20_000, 1))
    assert ok <= 5 < bad
