import json
import math

import numpy as np
import pytest

from sbepath.errors import ValidationError
from sbepath.experiments import (band_limited_drift, besov_sbe_family, dyadic_consistency, mc_moment_scaling,
                                 moment_target, path_scale_params, regularization_demo, reparam_experiment,
                                 sde_occupation_experiment, shift_experiment, shift_family)
from sbepath.norms import BesovParams
from sbepath.paths import BrownianMotion, FractionalBrownian, GaussianSpec, SampledPath

SPANS = [2.0 ** -j for j in range(2, 6)]


def test_moment_target_identity():
    beta, delta0 = moment_target(0.4, 0.5, 1)
    assert beta == pytest.approx(0.95)
    assert (beta + 2) * (1 - delta0) == pytest.approx(2 * (0.4 + 1))


def test_moment_scaling_small_run():
    rep = mc_moment_scaling(GaussianSpec(BrownianMotion()), 0.4, SPANS, 12, 2 ** 10, seed=1, bootstrap=200)
    assert rep.n_paths == 12 and len(rep.means) == len(SPANS)
    assert all(m > 0 for m in rep.means)
    assert rep.ci[0] <= rep.slope <= rep.ci[1]
    json.dumps(rep.to_dict())
    # the same seed reproduces the report exactly, independent of threading
    again = mc_moment_scaling(GaussianSpec(BrownianMotion()), 0.4, SPANS, 12, 2 ** 10, seed=1, bootstrap=200,
                              workers=3)
    assert again.means == rep.means and again.ci == rep.ci


def test_moment_scaling_guards():
    spec = GaussianSpec(BrownianMotion())
    with pytest.raises(ValidationError, match="insufficient"):
        mc_moment_scaling(spec, 0.4, SPANS, 5, 2 ** 8, 0)
    with pytest.raises(ValidationError, match="integer"):
        mc_moment_scaling(spec, 0.5, SPANS, 12, 2 ** 8, 0)
    with pytest.raises(ValidationError):
        mc_moment_scaling(spec, 0.4, [0.5, 0.25], 12, 2 ** 8, 0)
    with pytest.raises(ValidationError, match="beta/2"):
        mc_moment_scaling(GaussianSpec(FractionalBrownian(0.8)), 0.2, SPANS, 12, 2 ** 8, 0)


def test_sde_dilation_ratio_exact_without_drift():
    out = sde_occupation_experiment(None, 10, SPANS, 0.4, seed=2, n_steps=2 ** 9, bootstrap=100)
    dil = out["dilation"]
    np.testing.assert_allclose(dil["ratios"], dil["expected_ratio"], rtol=1e-12)
    assert out["ci_overlap"]


def test_identity_reparametrisation_ratio_exact(bm_path):
    phi = SampledPath(bm_path.times, bm_path.times)
    out = reparam_experiment(bm_path, phi, 2.0, path_scale_params(bm_path, 0.4), n_points=9)
    assert out["ratio"] == 1.0


def test_shift_with_equal_perturbations_is_zero(bm_path):
    f = SampledPath(bm_path.times, 0.05 * np.sin(4 * bm_path.times))
    out = shift_experiment(bm_path, f, f, 2.0, 1.0, BesovParams(alpha=0.2, p=2, q=2), n_points=5)
    assert out["difference_norm"] == 0.0 and out["bound_ratio"] == 0.0


def test_shift_family_spread(bm_path):
    out = shift_family(bm_path, n_pairs=3, seed=1, n_points=5)
    assert all(r > 0 for r in out["ratios"])
    assert out["spread"] < 10


def test_besov_sbe_family():
    out = besov_sbe_family(n_steps=2 ** 10)
    assert len(out["members"]) == 6
    assert 1 <= out["worst_factor"] < 10


def test_dyadic_bound_dominates_exact_variation(bm_path):
    out = dyadic_consistency(bm_path, levels=3)
    assert out["dominates"] and out["slack_factor"] >= 1


def test_band_limited_drift_is_normalised():
    f = band_limited_drift(1, 0.5, 8, 3.0, 257, seed=0)
    assert np.max(np.abs(f.values)) == pytest.approx(1.0)
    # tapered to zero at the box edges
    assert abs(f.values[0, 0, 0]) < 1e-12 and abs(f.values[0, -1, 0]) < 1e-12
    g = band_limited_drift(2, 0.5, 3, 3.0, 33, seed=0)
    assert g.values.shape == (1, 33, 33, 2)


def test_regularization_converges():
    out = regularization_demo(levels=(6, 7, 8, 9), n_grid=2 ** 10)
    assert out["status"] == "ok"
    diffs = out["self_differences"]
    assert diffs[-1] < diffs[0]
    assert out["finest"]["changes"][-1] < 1e-10


def test_regularization_zero_drift_is_exact():
    out = regularization_demo(levels=(6, 7), n_grid=2 ** 10, zero_drift=True)
    assert max(out["zero_drift_errors"]) < 1e-12


def test_regularization_reports_budget_violation():
    out = regularization_demo(alpha2=-2.0, levels=(6,), n_grid=2 ** 8)
    assert out["status"] == "budget_violation"
    assert out["inequality"]
    assert not math.isnan(out["gamma0"])
