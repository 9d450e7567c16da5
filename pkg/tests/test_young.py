import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from sbepath.errors import BudgetError, ConvergenceError, DivergenceError, ValidationError
from sbepath.occupation import occupation
from sbepath.paths import SampledPath
from sbepath.young import (DriftField, SewingGerm, YoungParams, averaged_field, check_budget, check_composition,
                           flow, flow_jacobian, inverse_flow, sewing_integrate, solve_ode, young_integral)


@pytest.fixture(scope="module")
def smooth_drift():
    return DriftField.from_function(lambda t, x: np.sin(x) + 0.5 * np.cos(t), np.linspace(0, 1, 33), [-6.0],
                                    [12 / 4096], [4097], alpha2=3.0)


@pytest.fixture(scope="module")
def wave():
    tw = np.linspace(0, 1, 65)
    return SampledPath(tw, np.sin(3 * tw)[:, None])


# drift fields ---------------------------------------------------------------


def test_multilinear_interpolation_is_exact_on_affine_fields():
    f = DriftField.from_function(lambda t, x: np.stack([1 + 2 * x[:, 0] - x[:, 1], 3 * x[:, 1] + t], axis=1),
                                 [0.0, 1.0], [-1.0, -1.0], [0.25, 0.5], [9, 5])
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (50, 2))
    t = rng.uniform(0, 1, 50)
    expect = np.stack([1 + 2 * pts[:, 0] - pts[:, 1], 3 * pts[:, 1] + t], axis=1)
    np.testing.assert_allclose(f.evaluate(t, pts), expect, atol=1e-13)
    jac = f.jacobian(0.3, pts)
    np.testing.assert_allclose(jac, np.broadcast_to([[2.0, -1.0], [0.0, 3.0]], jac.shape), atol=1e-12)


def test_outside_the_grid():
    f = DriftField.constant([1.0], [0.0], [0.1], [11])
    assert f.evaluate(0.0, [[2.0]])[0, 0] == 0.0
    assert f.outside_fraction([[0.5], [2.0]]) == 0.5
    strict = DriftField.constant([1.0], [0.0], [0.1], [11], zero_extend=False)
    with pytest.raises(ValidationError, match="outside"):
        strict.evaluate(0.0, [[2.0]])


def test_shifted_field():
    f = DriftField.from_function(lambda t, x: x ** 2, [0.0], [-2.0], [0.01], [401])
    g = f.shifted([0.5])
    assert g.evaluate(0.0, [[0.3]])[0, 0] == pytest.approx(0.8 ** 2, abs=1e-4)


def test_field_validation():
    with pytest.raises(ValidationError):
        DriftField([0.0], [0.0], [0.0], np.zeros((1, 3, 1)))
    with pytest.raises(ValidationError, match="shape"):
        DriftField([0.0], [0.0], [1.0], np.zeros((2, 3, 1)))
    with pytest.raises(ValidationError, match="finite"):
        DriftField([0.0], [0.0], [1.0], np.full((1, 3, 1), np.nan))


def test_measured_regularity():
    f = DriftField.from_function(lambda t, x: np.sin(x), [0.0], [-8.0], [1 / 32], [513], check_regularity=True)
    assert len(f.measured_regularity) == 1 and np.isfinite(f.measured_regularity[0])


# sewing ------------------------------------------------------------------------


@pytest.mark.parametrize("base", [2, 3])
def test_sewing_recovers_riemann_integral(base):
    germ = SewingGerm(lambda s, t: (np.cos(s) * (t - s))[:, None], a=1.0, b=1.0)
    res = sewing_integrate(germ, level=8, base=base)
    assert res.values[-1, 0] == pytest.approx(np.sin(1.0), abs=2e-3)
    assert res.extrapolated[-1, 0] == pytest.approx(np.sin(1.0), abs=1e-5)
    assert all(r < 0.6 for r in res.decay[2:])


def test_additive_germ_is_exact():
    germ = SewingGerm(lambda s, t: (t ** 3 - s ** 3)[:, None], a=0.6, b=0.6)
    res = sewing_integrate(germ, level=6)
    assert res.values[-1, 0] == pytest.approx(1.0, abs=1e-15)
    assert max(res.differences) < 1e-14


def test_sewing_rejects_weak_control():
    with pytest.raises(ValidationError, match="a \\+ b"):
        SewingGerm(lambda s, t: (t - s)[:, None], a=0.5, b=0.5)
    # a germ with defect of order one on every scale outgrows any power control
    rough = lambda s, t: np.sqrt(t - s)[:, None]  # noqa: E731
    with pytest.raises(ValidationError, match="outgrows"):
        SewingGerm(rough, a=0.6, b=0.6)
    with pytest.raises(DivergenceError) as info:
        sewing_integrate(SewingGerm(rough, a=0.6, b=0.6, check=False), level=8)
    s, u, t = info.value.worst
    assert s < u < t


# integrals ---------------------------------------------------------------------


def test_young_integral_matches_quadrature(smooth_drift, wave):
    th = SampledPath(np.linspace(0, 1, 1025), (0.3 * np.cos(np.linspace(0, 1, 1025)))[:, None])
    res = young_integral(smooth_drift, th, wave, YoungParams(level=12))
    # the driver acts as a step function through its left-endpoint atoms
    total = 0.0
    for k in range(64):
        g = lambda s: smooth_drift.evaluate(s, [[th.at(s)[0] - wave.values[k, 0]]])[0, 0]  # noqa: E731
        total += integrate.quad(g, wave.times[k], wave.times[k + 1], epsabs=1e-14, epsrel=1e-13)[0]
    assert abs(res.path.values[-1, 0] - total) < 1e-6
    # differences decay geometrically
    assert all(r < 0.75 for r in res.decay[3:])


@given(st.floats(-5, 5), st.integers(0, 1000))
def test_constant_and_zero_drift_exact(c, seed):
    rng = np.random.default_rng(seed)
    om = SampledPath(np.linspace(0, 1, 33), np.cumsum(rng.normal(size=33)) * 0.1)
    th = SampledPath([0.0, 1.0], [0.0, 0.0])
    f = DriftField.constant([c], [-20.0], [1.0], [41], alpha2=3.0)
    res = young_integral(f, th, om, YoungParams(level=6))
    np.testing.assert_allclose(res.path.values[:, 0], c * res.path.times, rtol=1e-14, atol=1e-15)
    zero = DriftField.constant([0.0], [-20.0], [1.0], [41], alpha2=3.0)
    assert np.all(young_integral(zero, th, om, YoungParams(level=6)).path.values == 0.0)


def test_averaged_field_agrees_with_germ(smooth_drift, wave):
    mu = occupation(wave, 0.0, 0.5)
    x = np.array([0.4])
    direct = sum(w * smooth_drift.evaluate(0.0, [x - a])[0] for a, w in zip(mu.atoms, mu.weights))
    np.testing.assert_allclose(averaged_field(smooth_drift, mu, x, 0.0), direct, rtol=1e-13)


# budget --------------------------------------------------------------------------


def test_budget_names_the_violated_inequality():
    f = DriftField.constant([1.0], [0.0], [1.0], [3], alpha2=-2.0)
    with pytest.raises(BudgetError) as info:
        check_budget(YoungParams(), f)
    assert info.value.inequality == "1/q1 + 1/p2 < 1 + (alpha1 + alpha2)/d"
    g = DriftField.constant([1.0], [0.0], [1.0], [3], alpha2=1.0)
    with pytest.raises(BudgetError, match="r1 < 1 \\+ gamma"):
        check_budget(YoungParams(r1=1.95, gamma=0.9), g)
    rep = check_budget(YoungParams(), g)
    assert rep.unique and rep.gamma0 == pytest.approx(0.4 + 1.0 - (1 / 1.5 + 1 / 2 - 1))


def test_budget_allows_gamma_equal_gamma0():
    f = DriftField.constant([1.0], [0.0], [1.0], [3], alpha2=0.4)
    gamma0 = check_budget(YoungParams(gamma=0.6), f).gamma0
    assert check_budget(YoungParams(gamma=gamma0), f).slacks["gamma <= gamma0"] == 0.0


# ODEs and flows --------------------------------------------------------------------


@pytest.fixture(scope="module")
def linear_case():
    fl = DriftField.from_function(lambda t, x: -x, [0.0], [-8.0], [16 / 8192], [8193], alpha2=3.0)
    tw = np.linspace(0, 1, 4097)
    return fl, SampledPath(tw, np.sin(3 * tw)[:, None])


def test_ode_matches_classical_solver(linear_case):
    fl, om = linear_case
    sol = solve_ode(fl, om, [1.0], YoungParams(level=12))
    # x = theta - omega solves x' = -x - omega'
    ref = integrate.solve_ivp(lambda t, x: -x - 3 * np.cos(3 * t), (0, 1), [1.0], rtol=1e-11, atol=1e-12,
                              dense_output=True)
    assert np.max(np.abs(sol.solution.values[:, 0] - ref.sol(sol.solution.times)[0])) < 1e-3
    assert sol.changes[-1] < 1e-10
    assert sol.report()["unique"]


def test_ode_reports_nonconvergence(linear_case):
    fl, om = linear_case
    with pytest.raises(ConvergenceError) as info:
        solve_ode(fl, om, [1.0], YoungParams(level=8, max_iter=2))
    assert len(info.value.history["changes"]) == 2


def test_ode_dimension_check(linear_case):
    fl, om = linear_case
    with pytest.raises(ValidationError):
        solve_ode(fl, om, [1.0, 2.0], YoungParams(level=6))


def test_flow_composition_inverse_and_jacobian(smooth_drift, wave):
    params = YoungParams(level=10)
    fr = flow(smooth_drift, wave, [0.0, 0.25, 0.5], [[-1.0], [0.0], [1.0]], params)
    comp = check_composition(fr)
    assert comp["ok"] and comp["max_error"] <= 2 * params.tol
    y = fr.values[0, :, -1]
    back = inverse_flow(smooth_drift, wave, 0.0, 1.0, y, params)
    assert np.max(np.abs(back - fr.points)) <= 2 * params.tol
    jac = flow_jacobian(smooth_drift, wave, 0.0, [0.3], params)
    e = 1e-5
    ends = flow(smooth_drift, wave, [0.0], [[0.3 + e], [0.3 - e]], params).values[0, :, -1, 0]
    assert jac.values[-1, 0] == pytest.approx((ends[0] - ends[1]) / (2 * e), rel=1e-3)


def test_flow_start_must_be_grid_point(smooth_drift, wave):
    with pytest.raises(ValidationError, match="grid"):
        flow(smooth_drift, wave, [0.1234], [[0.0]], YoungParams(level=4))
