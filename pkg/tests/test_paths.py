import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbepath import process_gen
from sbepath.errors import ComputationError, ValidationError
from sbepath.paths import (BrownianMotion, CustomCovariance, FractionalBrownian, GaussianSpec, SampledPath,
                           euler_maruyama_1d, euler_maruyama_batch, gen_gaussian, path_rngs, perturb,
                           reparametrize)


def test_process_gen_reexports():
    assert process_gen.gen_gaussian is gen_gaussian
    assert process_gen.SampledPath is SampledPath


def test_sampled_path_validation():
    with pytest.raises(ValidationError, match="strictly increasing"):
        SampledPath([0.0, 1.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(ValidationError, match="non-finite"):
        SampledPath([0.0, 1.0], [0.0, np.nan])
    with pytest.raises(ValidationError):
        SampledPath([0.0], [0.0])
    p = SampledPath([0.0, 1.0], [0.0, 2.0])
    assert p.dim == 1 and p.n == 2
    assert p.at(0.25)[0] == 0.5
    with pytest.raises(ValidationError):
        p.at(1.5)
    with pytest.raises(ValueError):
        p.values[0, 0] = 3.0


@given(st.integers(0, 10 ** 6), st.sampled_from([2, 17, 256]))
def test_generation_is_deterministic(seed, n):
    spec = GaussianSpec(FractionalBrownian(0.3), dim=2)
    a = gen_gaussian(spec, n, (0.0, 1.0), seed)
    b = gen_gaussian(spec, n, (0.0, 1.0), seed)
    assert a.equals(b)
    assert np.all(a.values[0] == 0)


@pytest.mark.parametrize("hurst", [0.25, 0.5, 0.75])
def test_fbm_increment_variance(hurst):
    # var(B_1) = 1 and var(B_t - B_s) = |t - s|^{2H}, checked over many seeds
    spec = GaussianSpec(FractionalBrownian(hurst))
    ends = np.array([gen_gaussian(spec, 65, (0.0, 1.0), s).values[[16, -1], 0] for s in range(3000)])
    se = math.sqrt(2 / 3000)
    assert abs(np.var(ends[:, 1]) - 1.0) < 5 * se
    assert abs(np.var(ends[:, 1] - ends[:, 0]) / 0.75 ** (2 * hurst) - 1.0) < 5 * se


def test_circulant_and_dense_agree_in_law():
    spec = GaussianSpec(FractionalBrownian(0.7))
    v1 = [gen_gaussian(spec, 33, (0, 1), s, method="circulant").values[-1, 0] for s in range(2000)]
    v2 = [gen_gaussian(spec, 33, (0, 1), s, method="dense").values[-1, 0] for s in range(2000)]
    assert abs(np.var(v1) - np.var(v2)) < 0.15


def test_custom_covariance_matches_brownian():
    spec = GaussianSpec(CustomCovariance(lambda s, t: np.minimum(s, t)))
    ends = np.array([gen_gaussian(spec, 9, (0.0, 2.0), s).values[-1, 0] for s in range(3000)])
    assert abs(np.var(ends) / 2.0 - 1.0) < 0.15


def test_custom_covariance_rejects_non_psd():
    with pytest.raises(ValidationError, match="positive semidefinite"):
        CustomCovariance(lambda s, t: np.minimum(s, t) - 2.0 * np.abs(s - t))


def test_path_rngs_independent_of_count():
    a = path_rngs(5, 3)
    b = path_rngs(5, 7)
    for x, y in zip(a, b):
        assert x.standard_normal() == y.standard_normal()


def test_euler_maruyama_zero_drift_is_scaled_noise():
    times, x = euler_maruyama_batch(lambda t, x: 0.0, lambda t, x: 2.0, 1.0, 129, (0, 1), path_rngs(4, 3))
    _, y = euler_maruyama_batch(lambda t, x: 0.0, lambda t, x: 1.0, 0.0, 129, (0, 1), path_rngs(4, 3))
    np.testing.assert_allclose(x - 1.0, 2 * y, rtol=0, atol=1e-13)


def test_euler_maruyama_blowup_is_reported():
    with np.errstate(over="ignore"), pytest.raises(ComputationError, match="non-finite"):
        euler_maruyama_1d(lambda t, x: x ** 3 * 1e200, lambda t, x: 1.0, 1.0, 64, (0, 1), 0)


def test_reparametrize_identity_is_exact(bm_path):
    phi = SampledPath(bm_path.times, bm_path.times)
    assert reparametrize(bm_path, phi).equals(bm_path)


def test_reparametrize_rejects_bad_maps(bm_path):
    with pytest.raises(ValidationError, match="increasing"):
        reparametrize(bm_path, SampledPath([0, 0.5, 1], [0, 0.6, 0.5]))
    with pytest.raises(ValidationError, match="maps onto"):
        reparametrize(bm_path, SampledPath([0, 1], [0, 0.5]))


def test_perturb_adds_pointwise(bm_path):
    f = SampledPath([0.0, 1.0], [1.0, 3.0])
    out = perturb(bm_path, f)
    np.testing.assert_allclose(out.values[:, 0] - bm_path.values[:, 0], 1 + 2 * bm_path.times, atol=1e-15)
    with pytest.raises(ValidationError, match="dimension"):
        perturb(bm_path, SampledPath([0, 1], [[0, 0], [1, 1]]))
