import numpy as np
import pytest

from ojasde.angle2d import backward_expectation, lift_angle, make_angle_model
from ojasde.errors import NegativeEta, NonFiniteState, NotOnManifold, SingularState, UnknownPotential
from ojasde.linalg import fd_derivative, haar_orthogonal, orthogonality_defect
from ojasde.model import Distribution, exact_moments, g_drift, project_tangent, second_order_terms, tangency_residual
from ojasde.sde import (
    feynman_kac_estimate,
    integrate_ode,
    ito_step,
    make_potential,
    make_sde_model,
    retraction,
    sde_step,
    simulate,
    tangent_apply,
)


def test_potentials(uniform_ctx, rng):
    zero = make_potential("zero")
    W = haar_orthogonal(2, rng)
    assert zero.value(W) == 0.0
    np.testing.assert_array_equal(zero.grad(W), 0)
    ob = make_potential("oja_brockett", uniform_ctx)
    assert ob.value(np.eye(2)) == pytest.approx(-(2 * 4 / 3 + 1 / 3))
    V = rng.standard_normal((2, 2))
    np.testing.assert_allclose(ob.grad(V), fd_derivative(ob.value, V), atol=1e-8)
    with pytest.raises(UnknownPotential):
        make_potential("harmonic")
    with pytest.raises(UnknownPotential):
        make_potential("oja_brockett")


def test_tangent_apply_matches_projection(rng):
    W = haar_orthogonal(3, rng)
    X = rng.standard_normal((3, 3))
    np.testing.assert_allclose(tangent_apply(W, X), project_tangent(W, X), atol=1e-14)
    W2 = W[:, :2]
    X2 = rng.standard_normal((3, 2))
    np.testing.assert_allclose(tangent_apply(W2, X2), project_tangent(W2, X2), atol=1e-14)
    assert tangency_residual(W2, tangent_apply(W2, X2)) <= 1e-14


def test_model_construction(uniform_ctx):
    with pytest.raises(NegativeEta):
        make_sde_model("first_order", uniform_ctx, -0.1)
    with pytest.raises(ValueError):
        make_sde_model("second_order", uniform_ctx, 0.1)
    with pytest.raises(ValueError):
        make_sde_model("generic", uniform_ctx, 0.1)
    assert make_sde_model("first_order", uniform_ctx, 0.0).noise_free
    assert not make_sde_model("langevin", uniform_ctx, sigma=0.5).noise_free


def test_zero_eta_is_ode_heun(uniform_ctx, rng):
    model = make_sde_model("first_order", uniform_ctx, 0.0, retraction=False)
    np.testing.assert_array_equal(sde_step(model, np.eye(2), 0.1, np.zeros((2, 2))), np.eye(2))
    W = haar_orthogonal(2, rng)
    dt = 0.05
    a0 = g_drift(uniform_ctx.A, W)
    a1 = g_drift(uniform_ctx.A, W + dt * a0)
    np.testing.assert_allclose(sde_step(model, W, dt, rng.standard_normal((2, 2))), W + 0.5 * dt * (a0 + a1),
                               atol=1e-15)


def test_langevin_zero_potential(uniform_ctx, rng):
    model = make_sde_model("langevin", uniform_ctx, potential="zero", sigma=0.3)
    W = haar_orthogonal(2, rng)
    np.testing.assert_array_equal(model.drift(W), 0)
    dB = rng.standard_normal((2, 2))
    np.testing.assert_allclose(model.noise(W, dB), 0.3 * project_tangent(W, dB), atol=1e-15)


def test_unstable_drift(uniform_ctx, rng):
    W = haar_orthogonal(2, rng)
    model = make_sde_model("unstable", uniform_ctx, 0.1)
    _, L = second_order_terms(W, uniform_ctx)
    np.testing.assert_allclose(model.drift(W), g_drift(uniform_ctx.A, W) + 0.1 * L, atol=1e-12)


def test_generic_model(uniform_ctx, rng):
    F = lambda W: np.ones_like(W)  # noqa: E731
    H = lambda W: np.zeros(W.shape + W.shape[-2:])  # noqa: E731
    model = make_sde_model("generic", uniform_ctx, 0.2, F=F, H=H)
    W = haar_orthogonal(2, rng)
    np.testing.assert_allclose(model.drift(W), g_drift(uniform_ctx.A, W) + 0.2 * project_tangent(W, np.ones((2, 2))),
                               atol=1e-15)
    np.testing.assert_array_equal(model.noise(W, rng.standard_normal((2, 2))), 0)


def test_retraction_examples(rng):
    W = haar_orthogonal(3, rng)
    assert np.max(np.abs(retraction(W) - W)) <= 1e-14
    np.testing.assert_allclose(retraction(2 * np.eye(2)), np.eye(2), atol=1e-15)
    B = rng.standard_normal((3, 3))
    S = B - B.T
    for eps in (1e-3, 5e-4):
        V = np.eye(3) + eps * S
        assert np.max(np.abs(retraction(V) - V)) <= 2 * eps**2 * np.max(np.abs(S @ S))
    with pytest.raises(SingularState):
        retraction(np.zeros((2, 2)))
    R = retraction(rng.standard_normal((4, 2)))
    assert orthogonality_defect(R) <= 1e-14


def test_retraction_keeps_paths_on_manifold(uniform_ctx, rng):
    model = make_sde_model("first_order", uniform_ctx, 0.5, retraction=True)
    path = simulate(model, haar_orthogonal(2, rng, 8), 0.2, 0.01, rng, store_every=1)
    assert path.W.shape == (21, 8, 2, 2)
    assert np.max(path.defect) <= 1e-12


def test_ito_step_degenerate_noise(rng):
    ctx = exact_moments(Distribution.finite([[0.0, 0.0]]))
    model = make_sde_model("first_order", ctx, 0.3, retraction=False)
    W = haar_orthogonal(2, rng)
    np.testing.assert_array_equal(ito_step(model, W, 0.1, rng.standard_normal((2, 2))), W)


def test_ito_step_zero_eta_is_euler(uniform_ctx, rng):
    model = make_sde_model("first_order", uniform_ctx, 0.0, retraction=False)
    W = haar_orthogonal(2, rng)
    np.testing.assert_allclose(ito_step(model, W, 0.1, np.zeros((2, 2))), W + 0.1 * g_drift(uniform_ctx.A, W),
                               atol=1e-15)


def test_ito_step_requires_manifold(uniform_ctx):
    model = make_sde_model("first_order", uniform_ctx, 0.1)
    with pytest.raises(NotOnManifold):
        ito_step(model, 1.1 * np.eye(2), 0.01, np.zeros((2, 2)))


def test_ito_and_stratonovich_agree_weakly(uniform_ctx):
    W0 = lift_angle(np.pi / 4)
    T, dt, n = 0.5, 1e-2, 4000
    means, ses = [], []
    for scheme, seed in (("heun", 1), ("ito", 2)):
        model = make_sde_model("first_order", uniform_ctx, 0.5, retraction=True)
        W = simulate(model, np.broadcast_to(W0, (n, 2, 2)), T, dt, np.random.default_rng(seed), scheme=scheme)
        means.append(W[:, 0, 0].mean())
        ses.append(W[:, 0, 0].std(ddof=1) / np.sqrt(n))
    assert abs(means[0] - means[1]) <= 3 * np.hypot(*ses) + 5 * dt


def test_simulate_argument_checks(uniform_ctx, rng):
    model = make_sde_model("first_order", uniform_ctx, 0.1)
    with pytest.raises(ValueError):
        simulate(model, np.eye(2), 1.0, 0.3, rng)
    with pytest.raises(ValueError):
        simulate(model, np.eye(2), 1.0, 0.1, rng, scheme="rk4")
    with pytest.raises(ValueError):
        simulate(model, np.eye(2), 1.0, 0.1, rng, scheme="leapfrog")


def test_blow_up_is_reported(uniform_ctx):
    model = make_sde_model("first_order", uniform_ctx, 0.0, retraction=False)
    with pytest.raises(NonFiniteState):
        sde_step(model, 1e4 * np.ones((2, 2)), 1.0, np.zeros((2, 2)))


def test_dB_source_couples_runs(uniform_ctx):
    model = make_sde_model("first_order", uniform_ctx, 0.2)
    incs = np.random.default_rng(3).standard_normal((10, 2, 2)) * 0.1
    a = simulate(model, np.eye(2), 0.1, 0.01, None, dB_source=lambda k, shape: incs[k])
    b = simulate(model, np.eye(2), 0.1, 0.01, None, dB_source=lambda k, shape: incs[k])
    np.testing.assert_array_equal(a, b)


def test_integrate_ode_equilibrium_and_convergence(rng):
    ctx = exact_moments(Distribution.product_uniform(np.sqrt(3.0 * np.array([3.0, 2.0, 1.0]))))
    np.testing.assert_allclose(integrate_ode(np.eye(3), 1.0, 0.01, ctx), np.eye(3), atol=1e-15)
    W = integrate_ode(haar_orthogonal(3, rng, 5), 50.0, 0.01, ctx)
    np.testing.assert_allclose(np.abs(W), np.broadcast_to(np.eye(3), W.shape), atol=1e-6)


def test_langevin_gradient_flow_decreases_potential(uniform_ctx, rng):
    model = make_sde_model("langevin", uniform_ctx, potential="oja_brockett", sigma=0.0)
    pot = model.potential
    W = haar_orthogonal(2, rng, 20)
    U = [pot.value(W)]
    for _ in range(200):
        W = simulate(model, W, 0.01, 0.01, None, scheme="rk4")
        U.append(pot.value(W))
    assert np.max(np.diff(np.array(U), axis=0)) <= 1e-12


def test_feynman_kac_trivial(uniform_ctx, rng):
    model = make_sde_model("first_order", uniform_ctx, 0.1)
    W0 = lift_angle(0.3)
    est = feynman_kac_estimate("w11", W0, 0.0, model, 0.01, 10, rng)
    assert est.value == pytest.approx(np.cos(0.3)) and est.stderr == 0.0
    est = feynman_kac_estimate("one", W0, 0.1, model, 0.01, 50, rng)
    assert est.value == 1.0 and est.stderr == 0.0


def test_feynman_kac_matches_angle_reference(uniform_ctx, rng):
    eta, t, dt = 0.5, 0.5, 0.01
    theta0 = np.pi / 4
    model = make_sde_model("first_order", uniform_ctx, eta)
    est = feynman_kac_estimate("w11", lift_angle(theta0), t, model, dt, 20_000, rng)
    ref = backward_expectation(np.cos, theta0, t, make_angle_model(uniform_ctx, eta))
    assert abs(est.value - ref) <= 3 * est.stderr + dt


def test_rectangular_first_order_with_retraction(rng):
    ctx = exact_moments(Distribution.product_uniform(np.sqrt(3.0 * np.array([4.0, 3.0, 2.0, 1.0]))))
    model = make_sde_model("first_order", ctx, 0.1)
    W0 = haar_orthogonal(4, rng, 4)[..., :2]
    path = simulate(model, W0, 0.1, 0.01, rng, store_every=1)
    assert path.W.shape[-2:] == (4, 2)
    assert np.max(path.defect) <= 1e-10
