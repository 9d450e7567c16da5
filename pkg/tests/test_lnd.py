import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbepath.errors import ValidationError
from sbepath.lnd import (GaussianIncrementModel, cnu_linearity, gaussian_increment_cbeta, hermite_peak,
                         increment_lower_bound, lnd_min_ratio, lnd_param_region, lnd_ratio)
from sbepath.norms import holder_exponent
from sbepath.paths import CustomCovariance, FractionalBrownian, GaussianSpec


@given(st.integers(2, 6), st.integers(1, 3), st.integers(0, 10 ** 6))
def test_brownian_ratio_is_one(n, d, seed):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, 1, n))
    x = rng.normal(size=(n - 1, d))
    assert lnd_ratio(GaussianIncrementModel.brownian(d), t, x) == 1.0


@pytest.mark.parametrize("hurst", [0.25, 0.75])
def test_fbm_ratio_bounded_below(hurst):
    rep = lnd_min_ratio(GaussianIncrementModel.fbm(hurst), 3, 500, seed=2)
    assert rep.min_ratio > 0.05
    assert rep.c_n == rep.min_ratio / 2
    # the minimum over all vectors is below the sampled minimum
    assert rep.min_eigenvalue <= rep.min_ratio + 1e-12


def test_model_from_spec_and_covariance():
    m = GaussianIncrementModel.from_spec(GaussianSpec(FractionalBrownian(0.3)))
    assert m.hurst == 0.3
    bm = GaussianIncrementModel.from_covariance(lambda s, t: np.minimum(s, t), 0.5)
    assert bm.variance(0.2, 0.7) == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        GaussianIncrementModel.from_spec(GaussianSpec(CustomCovariance(lambda s, t: np.minimum(s, t))))


def test_increment_matrix_brownian_is_diagonal():
    t = [0.1, 0.3, 0.35, 0.9]
    mat = GaussianIncrementModel.brownian().increment_matrix(t)
    np.testing.assert_allclose(mat, np.diag(np.diff(t)), atol=1e-15)


def test_ou_lower_bound():
    rep = increment_lower_bound(GaussianIncrementModel.ornstein_uhlenbeck(), np.linspace(0, 2, 41))
    assert 0 < rep.min_ratio <= 1


def test_hermite_peaks():
    assert hermite_peak(0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)
    # |z phi(z)| peaks at z = 1
    assert hermite_peak(1) == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi), rel=1e-10)


@pytest.mark.parametrize("hurst,beta", [(0.25, 0.5), (0.5, 1.0), (0.75, 1.3)])
def test_cbeta_slope(hurst, beta):
    model = GaussianIncrementModel.fbm(hurst)
    spans = np.logspace(-3, 0, 8)
    fit = holder_exponent(spans, [gaussian_increment_cbeta(model, 0.2, 0.2 + s, beta).value for s in spans])
    assert fit.slope == pytest.approx(-hurst * (beta + 1), abs=1e-9)


def test_cbeta_validation():
    with pytest.raises(ValidationError):
        gaussian_increment_cbeta(GaussianIncrementModel.brownian(), 0.5, 0.5, 1.0)


def test_cnu_exponent_and_divergence():
    rep = cnu_linearity(GaussianIncrementModel.fbm(0.3), 0.5, refinements=3)
    # the diagonal singularity |t - s|^{-H(beta + d)} makes the J x J integral
    # grow like |J|^{2 - H(beta + d)}
    assert rep.exponent == pytest.approx(2 - rep.singularity, abs=0.02)
    div = cnu_linearity(GaussianIncrementModel.fbm(0.5), 1.0)
    assert div.divergent and div.exponent is None
    assert div.log_correction["slope_in_log_inverse_eps"] > 0


def test_param_region():
    ok = lnd_param_region(0.5, 1, 0.4, math.inf, 2)
    assert ok.hurst_ok and ok.second_ok
    bad = lnd_param_region(0.5, 1, 0.6, 10, 2)
    assert not bad.second_ok and not bad.admissible
    assert not lnd_param_region(0.6, 2, 0.1, 2, 2).hurst_ok
