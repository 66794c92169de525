import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from ghostsim import GridSpec, ObjectMask, OracleConfig, SourceParams, gamma_exact
from ghostsim.transformers import GhostImageTransformer, OracleImageTransformer


def slits(n=256, pitch=10.0, width=300.0, gap=900.0):
    x = (np.arange(n) - n // 2) * pitch
    centers = (-(gap + width) / 2, (gap + width) / 2)
    return np.array([any(abs(xi - c) < width / 2 for c in centers) for xi in x], float)


@pytest.fixture
def X():
    return np.stack([slits(), slits(width=200, gap=400)])


def test_params_and_clone():
    est = GhostImageTransformer(n_realizations=50, random_state=3)
    params = est.get_params()
    assert params["n_realizations"] == 50 and params["random_state"] == 3
    other = clone(est).set_params(detector="bucket")
    assert other.detector == "bucket" and est.detector == "pixel"


def test_oracle_transformer_matches_oracle(X):
    out = OracleImageTransformer().fit_transform(X)
    assert out.shape == X.shape
    grid = GridSpec(256, 1, 10.0)
    g = np.abs(gamma_exact(ObjectMask(grid, X[0]), OracleConfig(SourceParams.from_coherence_length(75).sigma))) ** 2
    np.testing.assert_allclose(out[0], g / g.max(), rtol=1e-10, atol=1e-14)
    assert out.max() == pytest.approx(1.0)


def test_bucket_oracle_shape(X):
    out = OracleImageTransformer(detector="bucket").fit_transform(X)
    assert out.shape == X.shape and np.all(np.isfinite(out))


def test_ghost_transformer_deterministic_and_close(X):
    est = GhostImageTransformer(n_realizations=20_000, random_state=1)
    a = est.fit_transform(X)
    b = clone(est).fit(X).transform(X)
    np.testing.assert_array_equal(a, b)
    ref = OracleImageTransformer().fit_transform(X)
    for row, r in zip(a, ref):
        assert np.corrcoef(row, r)[0, 1] > 0.95


def test_validation(X):
    est = OracleImageTransformer().fit(X)
    assert est.n_features_in_ == 256
    with pytest.raises(ValueError, match="features"):
        est.transform(X[:, :64])
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        OracleImageTransformer().fit(X * 2)
    with pytest.raises(ValueError, match="detector"):
        OracleImageTransformer(detector="camera").fit(X)
    with pytest.raises(ValueError, match="opaque"):
        OracleImageTransformer().fit_transform(np.zeros((1, 256)))
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        GhostImageTransformer().transform(X)


def test_pipeline(X):
    pipe = make_pipeline(FunctionTransformer(lambda a: np.clip(a, 0, 1)), OracleImageTransformer())
    assert pipe.fit_transform(X).shape == X.shape
