import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from sbepath.deltak import delta_k_coeffs
from sbepath.errors import CoverageError, ValidationError
from sbepath.measures import GaussianMeasure, UniformMeasure
from sbepath.norms import SbeParams, dirac_profile_constant, resolve_sbe_grid, sbe_norm, sbe_refinement, \
    sbe_report, sbe_sensitivity
from sbepath.occupation import OccupationMeasure, occupation


@pytest.mark.parametrize("k,alpha,d,p", [(0, 0.3, 1, 2.0), (1, 0.4, 1, 1.0), (1, 0.7, 2, 3.0), (2, 1.5, 2, 2.0)])
def test_dirac_constant_matches_quadrature(k, alpha, d, p):
    a = delta_k_coeffs(k).coeffs
    s = alpha + d

    def integrand(u):
        r = math.exp(u)
        val = sum(c for j, c in enumerate(a) if r / 2 ** j >= 1)
        return (r ** -s * abs(val)) ** p

    pieces = [integrate.quad(integrand, j * math.log(2), (j + 1) * math.log(2))[0] for j in range(k + 1)]
    assert dirac_profile_constant(k, alpha, d, p) == pytest.approx(math.fsum(pieces) ** (1 / p), rel=1e-10)


def test_dirac_constant_sup_norm():
    # k = 0: r^{-s} on [1, 2) attains its sup 1 at r = 1
    assert dirac_profile_constant(0, 0.3, 1, math.inf) == 1.0


@given(st.floats(0.01, 100), st.integers(0, 50))
def test_norm_is_positively_homogeneous(scale, seed):
    rng = np.random.default_rng(seed)
    atoms = rng.normal(size=(40, 1))
    w = rng.uniform(0.1, 1, 40)
    params = SbeParams(alpha=0.3, r_min=0.05, r_max=8.0, y_spacing=0.05)
    base = sbe_norm(OccupationMeasure(atoms, w), params)
    scaled = sbe_norm(OccupationMeasure(atoms, w * scale), params)
    assert scaled == pytest.approx(scale * base, rel=1e-12)


def test_empty_measure_has_zero_norm():
    assert sbe_norm(OccupationMeasure(np.zeros((0, 1)), np.zeros(0)), SbeParams(alpha=0.3, r_min=0.1)) == 0.0


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_dilation_with_scaled_grid_is_exact(alpha):
    vals = {}
    for N in (1, 2, 4):
        sig = 1.0 / N
        params = SbeParams(alpha=alpha, p=2, q=1, far_field=True, far_field_radius=32 * sig,
                           r_min=sig * 2 ** -8, y_spacing=sig / 32)
        vals[N] = sbe_norm(GaussianMeasure((0.0,), sig), params)
    for N in (2, 4):
        assert vals[N] / vals[1] == pytest.approx(N ** alpha, rel=1e-9)


def test_translation_invariance_with_anchored_grid(bm_path):
    mu = occupation(bm_path, 0.0, 1.0)
    lo, hi = mu.support_box()
    base = SbeParams(alpha=0.4, r_min=0.02, r_max=1.0, y_spacing=0.01)
    # a padding commensurate with the radii would put atoms exactly on ball edges,
    # where rounding of the shifted positions decides membership
    pad = 1.5037
    a = sbe_norm(mu, SbeParams(**{**base.to_dict(), "y_bounds": ((lo[0] - pad,), (hi[0] + pad,))}))
    shift = 3.25
    moved = mu.translate([shift])
    b = sbe_norm(moved, SbeParams(**{**base.to_dict(), "y_bounds": ((lo[0] - pad + shift,), (hi[0] + pad + shift,))}))
    assert b == pytest.approx(a, rel=1e-12)


def test_coverage_error_names_the_gap(bm_path):
    mu = occupation(bm_path, 0.0, 1.0)
    with pytest.raises(CoverageError, match="does not cover"):
        sbe_norm(mu, SbeParams(alpha=0.4, r_min=0.02, r_max=1.0, y_bounds=((-0.1,), (0.1,))))


def test_far_field_radius_insensitive():
    mu = GaussianMeasure((0.2,), 0.3)
    vals = [sbe_norm(mu, SbeParams(alpha=0.3, far_field=True, far_field_radius=R, r_min=2 ** -8,
                                   y_spacing=2 ** -7)) for R in (4.0, 8.0, 16.0)]
    assert max(vals) / min(vals) < 1.01


def test_far_field_tail_closes_the_sum():
    # a point mass: the core quadrature plus the analytic tail is the whole integral,
    # so growing the core radius must not change the value
    mu = OccupationMeasure([[0.0]], [1.0])
    vals = [sbe_report(mu, SbeParams(alpha=0.3, q=2, far_field=True, far_field_radius=R, r_min=2 ** -6,
                                     points_per_octave=16, y_spacing=2 ** -8))
            for R in (1.0, 2.0, 4.0)]
    assert vals[0].far_field_share > vals[2].far_field_share
    assert max(v.value for v in vals) / min(v.value for v in vals) < 1.02


def test_params_validation():
    with pytest.raises(ValidationError):
        SbeParams(alpha=0.3, p=0.5)
    with pytest.raises(ValidationError):
        SbeParams(alpha=0.3, r_min=-1.0)


def test_grid_resolution_defaults(bm_path):
    mu = occupation(bm_path, 0.0, 1.0)
    grid = resolve_sbe_grid(mu, SbeParams(alpha=0.4))
    assert grid.k == 1
    assert grid.r_min == pytest.approx(mu.default_r_min())
    assert grid.radii[0] < grid.r_min


def test_sensitivity_and_refinement_rows():
    mu = GaussianMeasure((0.0,), 0.5)
    params = SbeParams(alpha=0.3, far_field=True, r_min=2 ** -6, y_spacing=2 ** -6)
    sens = sbe_sensitivity(mu, params, factors=(1.0, 0.5))
    ref = sbe_refinement(mu, params, levels=1)
    assert [r["r_min"] for r in sens] == [2 ** -6, 2 ** -7]
    # a smooth density converges as the grids are refined
    assert sens[1]["value"] == pytest.approx(sens[0]["value"], rel=0.02)
    assert ref[1]["value"] == pytest.approx(ref[0]["value"], rel=0.02)


def test_gaussian_ball_profile_2d_matches_quadrature():
    mu = GaussianMeasure((0.3, -0.2), 0.7, mass=2.0)
    y, r = np.array([[0.9, 0.1]]), np.array([0.5])
    val = mu.ball_profile(y, r)[0, 0]

    def inner(x1):
        half = math.sqrt(max(r[0] ** 2 - (x1 - y[0, 0]) ** 2, 0.0))
        return integrate.quad(lambda x2: mu.density([[x1, x2]])[0], y[0, 1] - half, y[0, 1] + half)[0]

    ref = integrate.quad(inner, y[0, 0] - r[0], y[0, 0] + r[0], epsabs=1e-12)[0]
    assert val == pytest.approx(ref, rel=1e-7)


def test_uniform_ball_profile():
    mu = UniformMeasure(0.0, 2.0, mass=4.0)
    prof = mu.ball_profile(np.array([[0.0], [1.0], [5.0]]), np.array([0.5, 3.0]))
    np.testing.assert_allclose(prof, [[1.0, 4.0], [2.0, 4.0], [0.0, 0.0]])
