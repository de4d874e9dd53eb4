import numpy as np
import pytest

from ojasde.angle2d import (
    TWO_PI,
    Angle2dModel,
    DensityGrid,
    angle_histogram,
    angle_of,
    angle_sde_step,
    backward_expectation,
    c_coeffs,
    cfl_limit,
    coupled_consistency,
    decay_rate_fit,
    eb2_quadrature,
    f_g_eval,
    fp_solve,
    gibbs_angle_density,
    grid_index,
    invariant_density,
    lift_angle,
    make_angle_model,
    total_variation,
    weighted_l2_distance,
)
from ojasde.errors import CflViolation, InsufficientData, NoiseDegenerate, WrongDimension, ZeroDensityCell
from ojasde.model import Distribution, exact_moments, g_drift
from ojasde.sde import make_potential

SKEWED_ATOMS = [[1.0, 0.3], [-0.4, 0.9], [-0.6, -1.2]]


def _skewed_law():
    atoms = np.array(SKEWED_ATOMS)
    return Distribution.finite(atoms - atoms.mean(axis=0))


def test_uniform_example_coefficients(uniform_ctx):
    c1, c2, c3 = c_coeffs(uniform_ctx)
    assert c1 == pytest.approx(4 / 9, abs=1e-14)
    assert c2 == pytest.approx(28 / 45, abs=1e-14)
    assert c3 == pytest.approx(0.0, abs=1e-14)
    assert eb2_quadrature(0.0, uniform_ctx.dist) == pytest.approx(4 / 9, abs=1e-14)
    assert eb2_quadrature(np.pi / 4, uniform_ctx.dist) == pytest.approx(17 / 45, abs=1e-14)


def test_two_atom_coefficients():
    c1, _, c3 = c_coeffs(exact_moments(Distribution.finite([[1.0, 0.0], [-1.0, 0.0]])))
    assert c1 == 0.0 and c3 == 0.0


def test_c_coeffs_needs_n2():
    with pytest.raises(WrongDimension):
        c_coeffs(exact_moments(Distribution.product_uniform([1.0, 1.0, 1.0])))


@pytest.mark.parametrize("dist", [Distribution.product_uniform([2.0, 1.0]), Distribution.product_uniform([0.5, 1.5]),
                                  _skewed_law()])
def test_c_squared_matches_quadrature(dist):
    model = make_angle_model(exact_moments(dist), 1.0)
    theta = np.linspace(0, TWO_PI, 100, endpoint=False)
    quad = eb2_quadrature(theta, dist)
    np.testing.assert_allclose(model.c_squared(theta), quad, rtol=1e-10)


def test_skewed_law_has_third_coefficient():
    assert abs(c_coeffs(exact_moments(_skewed_law()))[2]) > 0.01


def test_drift_examples(uniform_ctx):
    m0 = make_angle_model(uniform_ctx, 0.0)
    f, g = f_g_eval(np.pi / 4, m0)
    assert f == pytest.approx(-0.5)
    for eta in (0.0, 0.3, 2.0):
        f, _ = f_g_eval(np.array([0.0, np.pi / 2, np.pi]), make_angle_model(uniform_ctx, eta))
        np.testing.assert_allclose(f, 0, atol=1e-15)


@pytest.mark.parametrize("dist", [Distribution.product_uniform([2.0, 1.0]), _skewed_law()])
def test_drift_matches_matrix_oracle(dist):
    # f = (angle rate of the flow W' = G(A, W)) + (eta / 4) d E[b^2] / d theta
    ctx = exact_moments(dist)
    eta = 0.7
    model = make_angle_model(ctx, eta)
    theta = np.linspace(0.1, TWO_PI, 37)
    W = lift_angle(theta)
    h = 1e-6
    G = g_drift(ctx.A, W)
    step = angle_of(W + h * G) - angle_of(W - h * G)
    rate = np.angle(np.exp(1j * step)) / (2 * h)
    deb2 = (eb2_quadrature(theta + h, dist) - eb2_quadrature(theta - h, dist)) / (2 * h)
    f, g = f_g_eval(theta, model)
    np.testing.assert_allclose(f, rate + 0.25 * eta * deb2, atol=1e-7)
    np.testing.assert_allclose(g**2, eb2_quadrature(theta, dist), rtol=1e-10)


def test_rotation_by_pi_symmetry(uniform_ctx):
    model = make_angle_model(uniform_ctx, 0.4)
    t = np.linspace(0, np.pi, 50)
    f0, g0 = f_g_eval(t, model)
    f1, g1 = f_g_eval(t + np.pi, model)
    np.testing.assert_allclose(f0, f1, atol=1e-14)
    np.testing.assert_allclose(g0**2, g1**2, atol=1e-14)
    rho = invariant_density(model, 256).values
    np.testing.assert_allclose(rho[:128], rho[128:], rtol=1e-10)


def test_lift_and_angle():
    np.testing.assert_array_equal(lift_angle(0.0), np.eye(2))
    np.testing.assert_allclose(lift_angle(np.pi / 2), [[0, 1], [-1, 0]], atol=1e-16)
    t = np.linspace(0, TWO_PI, 20, endpoint=False)
    np.testing.assert_allclose(angle_of(lift_angle(t)), t, atol=1e-14)


def test_angle_step_special_cases(uniform_ctx):
    degenerate = make_angle_model(exact_moments(Distribution.finite([[0.0, 0.0]])), 1.0)
    th = np.array([0.3, 2.0])
    np.testing.assert_array_equal(angle_sde_step(th, 0.1, np.array([0.5, -1.0]), degenerate), th)
    model = make_angle_model(uniform_ctx, 0.5)
    f, _ = f_g_eval(th, model)
    np.testing.assert_allclose(angle_sde_step(th, 0.1, np.zeros(2), model), th + 0.1 * f)
    with pytest.raises(ValueError):
        angle_sde_step(th, 0.1, np.zeros(2), model, scheme="rk")


def test_angle_step_wraps(uniform_ctx):
    model = make_angle_model(uniform_ctx, 1.0)
    out = angle_sde_step(np.full(1000, 0.01), 0.1, np.random.default_rng(0).standard_normal(1000), model)
    assert np.all((out >= 0) & (out < TWO_PI))


def test_coupled_consistency_deterministic_limits(uniform_ctx):
    model = make_angle_model(uniform_ctx, 0.5)
    n = 1000
    dev = coupled_consistency(0.7, np.zeros(n), 1e-3, 1.0, model)
    assert dev <= 1e-3
    degenerate = make_angle_model(exact_moments(Distribution.finite([[0.0, 0.0]])), 1.0)
    dB = np.random.default_rng(0).standard_normal((n, 3)) * np.sqrt(1e-3)
    np.testing.assert_array_equal(coupled_consistency(0.0, dB, 1e-3, 1.0, degenerate), 0)


def test_coupled_consistency_noise_shrinks_with_dt(uniform_ctx):
    model = make_angle_model(uniform_ctx, 1.0)
    rng = np.random.default_rng(5)
    fine = rng.standard_normal((400, 20)) * np.sqrt(1e-3 / 2)
    coarse = fine[0::2] + fine[1::2]
    d1 = coupled_consistency(0.3, coarse, 1e-3, 0.2, model)
    d2 = coupled_consistency(0.3, fine, 5e-4, 0.2, model)
    assert d1.max() <= 0.05
    assert 1.3 <= d1.mean() / d2.mean() <= 3.0


def test_grid_layout_and_histogram():
    m = 8
    assert grid_index(0.0, m) == 0
    assert grid_index(TWO_PI - 1e-9, m) == 0
    assert grid_index(np.pi, m) == 4
    assert grid_index(TWO_PI / m * 0.49, m) == 0
    assert grid_index(TWO_PI / m * 0.51, m) == 1
    hist = angle_histogram(np.array([0.0, np.pi]), m)
    assert hist.mass() == pytest.approx(1.0)
    assert hist.values[0] == hist.values[4] > 0
    assert total_variation(hist, hist) == 0.0
    assert total_variation(DensityGrid.uniform(m), hist) == pytest.approx(0.75)


def test_density_grid_csv(tmp_path):
    g = DensityGrid.uniform(4)
    g.to_csv(tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "theta,value"
    assert len(lines) == 5


def test_invariant_density_uniform_when_drift_vanishes():
    model = Angle2dModel(1.0, 2.0, 0.0, 0.5 * np.eye(2), 1.0)
    t = np.linspace(0, TWO_PI, 64)
    np.testing.assert_allclose(f_g_eval(t, model)[0], 0, atol=1e-15)
    np.testing.assert_allclose(invariant_density(model, 128).values, 1 / TWO_PI, rtol=1e-12)


@pytest.mark.parametrize("dist", [Distribution.product_uniform([2.0, 1.0]), _skewed_law()])
def test_invariant_density_has_zero_flux(dist):
    model = make_angle_model(exact_moments(dist), 0.8)
    m = 2048
    rho = invariant_density(model, m)
    t = rho.centers
    f, g = f_g_eval(t, model)
    D = model.eta * g * g * rho.values
    h = rho.width
    flux = f * rho.values - 0.5 * (np.roll(D, -1) - np.roll(D, 1)) / (2 * h)
    assert np.max(np.abs(flux)) <= 1e-4 * np.max(np.abs(f * rho.values))


def test_invariant_density_errors(uniform_ctx):
    with pytest.raises(NoiseDegenerate):
        invariant_density(make_angle_model(uniform_ctx, 0.0))
    with pytest.raises(NoiseDegenerate):
        invariant_density(Angle2dModel(0.0, 0.0, 0.0, np.eye(2), 1.0))


def test_gibbs_density(uniform_ctx):
    zero = gibbs_angle_density(make_potential("zero"), 0.5, 64)
    np.testing.assert_allclose(zero.values, 1 / TWO_PI)
    ob = gibbs_angle_density(make_potential("oja_brockett", uniform_ctx), 0.5, 64)
    assert ob.mass() == pytest.approx(1.0)
    assert grid_index(0.0, 64) in np.argsort(ob.values)[-2:]
    with pytest.raises(NoiseDegenerate):
        gibbs_angle_density(make_potential("zero"), 0.0)


@pytest.mark.parametrize("flux", ["sg", "upwind"])
def test_fp_heat_kernel(flux):
    # f = 0, constant g: a cos mode decays as exp(-eta g^2 t / 2)
    model = Angle2dModel(1.0, 2.0, 0.0, 0.5 * np.eye(2), 0.6)
    m = 256
    t = np.arange(m) * TWO_PI / m
    rho0 = DensityGrid((1 + 0.5 * np.cos(t)) / TWO_PI)
    res = fp_solve(rho0, model, cfl_limit(model, m), 1.0, flux=flux)
    expected = (1 + 0.5 * np.exp(-0.3) * np.cos(t)) / TWO_PI
    np.testing.assert_allclose(res.final.values, expected, atol=1e-4)
    assert res.max_mass_change <= 1e-13


def test_fp_mass_positivity_and_cfl(uniform_ctx):
    model = make_angle_model(uniform_ctx, 1.0)
    m = 128
    dt = cfl_limit(model, m)
    rho0 = DensityGrid(np.where(np.arange(m) == 5, m / TWO_PI, 0.0))
    res = fp_solve(rho0, model, dt, 0.5, store_every=10)
    assert res.times[-1] == pytest.approx(0.5)
    assert res.max_mass_change <= 1e-12
    assert all(d.values.min() >= 0 for d in res.densities)
    with pytest.raises(CflViolation):
        fp_solve(rho0, model, 2 * dt, 0.5)
    with pytest.raises(ValueError):
        fp_solve(rho0, model, dt, 0.5, flux="central")


def test_fp_stationary_short_horizon(uniform_ctx):
    model = make_angle_model(uniform_ctx, 1.0)
    rho = invariant_density(model, 512)
    res = fp_solve(rho, model, cfl_limit(model, 512), 1.0)
    assert np.sum(np.abs(res.final.values - rho.values)) * rho.width <= 1e-3


def test_backward_expectation(uniform_ctx):
    model = make_angle_model(uniform_ctx, 0.3)
    assert backward_expectation(np.cos, 0.4, 0.0, model) == pytest.approx(np.cos(0.4))
    assert backward_expectation(lambda t: np.ones_like(t), 0.4, 1.0, model) == pytest.approx(1.0)
    heat = Angle2dModel(1.0, 2.0, 0.0, 0.5 * np.eye(2), 0.6)
    u = backward_expectation(np.cos, 0.4, 1.0, heat, m=512)
    assert u == pytest.approx(np.cos(0.4) * np.exp(-0.3), abs=1e-5)


def test_backward_expectation_matches_angle_monte_carlo(uniform_ctx):
    model = make_angle_model(uniform_ctx, 0.5)
    rng = np.random.default_rng(11)
    th = np.full(50_000, np.pi / 4)
    dt = 2e-3
    for _ in range(250):
        th = angle_sde_step(th, dt, np.sqrt(dt) * rng.standard_normal(th.size), model, scheme="milstein")
    v = np.cos(th)
    ref = backward_expectation(np.cos, np.pi / 4, 0.5, model)
    assert abs(v.mean() - ref) <= 4 * v.std() / np.sqrt(v.size) + 2e-3


def test_weighted_l2(uniform_ctx):
    rho = invariant_density(make_angle_model(uniform_ctx, 1.0), 128)
    assert weighted_l2_distance(rho, rho) == 0.0
    u = DensityGrid.uniform(128)
    assert weighted_l2_distance(u, u) == 0.0
    pert = np.cos(rho.centers)
    d1 = weighted_l2_distance(DensityGrid(rho.values + 1e-3 * pert), rho)
    d2 = weighted_l2_distance(DensityGrid(rho.values + 2e-3 * pert), rho)
    assert d2 == pytest.approx(2 * d1, rel=1e-10)
    with pytest.raises(ZeroDensityCell):
        weighted_l2_distance(u, DensityGrid(np.zeros(128)))


def test_decay_rate_fit():
    t = np.linspace(0, 5, 50)
    rate, r2 = decay_rate_fit(t, np.exp(-2 * t))
    assert rate == pytest.approx(2.0) and r2 == pytest.approx(1.0)
    rate, _ = decay_rate_fit(t, np.full(50, 0.3))
    assert rate == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InsufficientData):
        decay_rate_fit(t[:5], np.exp(-t[:5]))
    with pytest.raises(InsufficientData):
        decay_rate_fit(t, np.zeros(50))
    with pytest.raises(InsufficientData):
        decay_rate_fit(t, np.exp(-2 * t), floor=1.0)
