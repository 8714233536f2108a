"""Model builtins, analytic derivatives, Hamiltonian assembly, priors."""

import dataclasses

import numpy as np
import pytest

from mflangevin.models import (gaussian_prior, hamiltonian,
                               make_builtin_model, make_linear_drift_model,
                               make_zero_cost_model, model_grad_selfcheck)
from mflangevin.rng import PURPOSE_PROBE, keyed_normals


@pytest.mark.parametrize("kind,kwargs,expected_p", [
    ("one_layer_residual", dict(d=1, p_hidden=1, dim_data=1), 2),
    ("one_layer_residual", dict(d=2, p_hidden=3, dim_data=2), 12),
    ("neural_ode_tanh", dict(d=1, p_hidden=1, dim_data=1), 2),
    ("neural_ode_tanh", dict(d=2, p_hidden=1, dim_data=2), 3),
    ("timeseries_interp", dict(d=1, p_hidden=2, dim_data=2), 6),
    ("timeseries_interp", dict(d=2, p_hidden=1, dim_data=4), 5),
])
def test_builtin_dimensions(kind, kwargs, expected_p):
    model = make_builtin_model(kind, **kwargs)
    assert model.dim_param == expected_p
    assert model.dim_state == kwargs["d"]


@pytest.mark.parametrize("kind,kwargs", [
    ("one_layer_residual", dict(d=2, p_hidden=2, dim_data=2)),
    ("neural_ode_tanh", dict(d=3, p_hidden=2, dim_data=3)),
    ("timeseries_interp", dict(d=2, p_hidden=2, dim_data=4)),
])
def test_builtin_selfcheck_passes_at_tight_tolerance(kind, kwargs):
    model = make_builtin_model(kind, **kwargs)
    report = model_grad_selfcheck(model, n_probes=100, seed=0)
    assert report.passed
    assert max(report.max_rel_err.values()) <= 1e-5


def test_selfcheck_flags_broken_derivative():
    model = make_builtin_model("timeseries_interp", d=1, p_hidden=1, dim_data=2)
    broken = dataclasses.replace(
        model, grad_x_f=lambda t, x, a, z: 2.0 * model.grad_x_f(t, x, a, z))
    report = model_grad_selfcheck(broken, n_probes=20, seed=1)
    assert not report.passed
    assert report.max_rel_err["grad_x_f"] > 1e-4


def test_selfcheck_rejects_zero_probes():
    model = make_linear_drift_model(1)
    with pytest.raises(ValueError):
        model_grad_selfcheck(model, n_probes=0)


def test_invalid_dimensions_rejected():
    with pytest.raises(ValueError):
        make_builtin_model("neural_ode_tanh", d=0, p_hidden=1)
    with pytest.raises(ValueError):
        make_builtin_model("one_layer_residual", d=1, p_hidden=0)
    with pytest.raises(ValueError):
        make_builtin_model("no_such_kind", d=1)
    with pytest.raises(ValueError):
        make_builtin_model("timeseries_interp", d=2, p_hidden=1, dim_data=3)


class TestOneLayerResidual:
    def test_state_gradient_is_exact_zero(self):
        model = make_builtin_model("one_layer_residual", d=1, p_hidden=1,
                                   dim_data=1)
        rng = np.random.default_rng(0)
        for _ in range(10):
            g = model.grad_x_phi(0.3, rng.normal(size=1),
                                 rng.normal(size=2), rng.normal(size=1))
            assert np.all(g == 0.0)

    def test_drift_ignores_state(self):
        model = make_builtin_model("one_layer_residual", d=2, p_hidden=2,
                                   dim_data=2)
        a = np.linspace(-1, 1, model.dim_param)
        z = np.array([0.4, -0.2])
        v1 = model.phi(0.0, np.zeros(2), a, z)
        v2 = model.phi(0.0, 17.0 * np.ones(2), a, z)
        np.testing.assert_array_equal(v1, v2)


class TestNeuralOdeTanh:
    def test_zero_parameters_annihilate_drift(self):
        model = make_builtin_model("neural_ode_tanh", d=3, p_hidden=2,
                                   dim_data=3)
        x = np.array([0.5, -1.0, 2.0])
        out = model.phi(0.0, x, np.zeros(model.dim_param), x)
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_closed_form_at_origin(self):
        # d=1, a=(a1,a2)=(1,1), x=0: phi = tanh(0) = 0 and the state
        # derivative is a1*a2*(1 - tanh(0)^2) = 1.
        model = make_builtin_model("neural_ode_tanh", d=1, p_hidden=1,
                                   dim_data=1)
        x = np.array([0.0])
        a = np.array([1.0, 1.0])
        z = np.array([0.0])
        assert model.phi(0.0, x, a, z)[0] == 0.0
        assert model.grad_x_phi(0.0, x, a, z)[0, 0] == pytest.approx(1.0)


class TestHamiltonian:
    def test_linear_case(self):
        # f = 0 and phi(x, a) = a in one dimension: h = a p.
        model = make_linear_drift_model(1)
        ev = hamiltonian(model, 0.0, np.array([0.3]), np.array([3.0]),
                         np.array([2.0]), np.array([0.0]))
        assert ev.value == pytest.approx(6.0)
        assert ev.grad_a[0] == pytest.approx(3.0)

    def test_zero_costate_leaves_running_cost(self):
        model = make_builtin_model("timeseries_interp", d=1, p_hidden=1,
                                   dim_data=2)
        x = np.array([0.7])
        a = np.array([0.1, 0.2, 0.3])
        z = np.array([0.4, 0.5])
        ev = hamiltonian(model, 0.2, x, np.zeros(1), a, z)
        assert ev.value == pytest.approx(float(model.f(0.2, x, a, z)))
        np.testing.assert_allclose(ev.grad_a, model.grad_a_f(0.2, x, a, z))

    def test_grad_a_matches_finite_differences(self):
        model = make_builtin_model("neural_ode_tanh", d=2, p_hidden=2,
                                   dim_data=2)
        rng = np.random.default_rng(3)
        x, p = rng.normal(size=2), rng.normal(size=2)
        a, z = rng.normal(size=model.dim_param), rng.normal(size=2)
        ev = hamiltonian(model, 0.1, x, p, a, z)
        h = 1e-6
        for j in range(model.dim_param):
            hi, lo = a.copy(), a.copy()
            hi[j] += h
            lo[j] -= h
            fd = (hamiltonian(model, 0.1, x, p, hi, z).value
                  - hamiltonian(model, 0.1, x, p, lo, z).value) / (2 * h)
            assert abs(ev.grad_a[j] - fd) / (1 + abs(fd)) <= 1e-5

    def test_bilinearity_in_costate(self):
        # h(., alpha p, .) - f = alpha (h(., p, .) - f).
        model = make_builtin_model("neural_ode_tanh", d=2, p_hidden=3,
                                   dim_data=2)
        rng = np.random.default_rng(11)
        for _ in range(20):
            x, p = rng.normal(size=2), rng.normal(size=2)
            a, z = rng.normal(size=model.dim_param), rng.normal(size=2)
            alpha = rng.normal()
            f_val = float(model.f(0.0, x, a, z))
            h1 = hamiltonian(model, 0.0, x, p, a, z).value - f_val
            h2 = hamiltonian(model, 0.0, x, alpha * p, a, z).value - f_val
            assert h2 == pytest.approx(alpha * h1, rel=1e-12, abs=1e-12)

    def test_dimension_mismatch_raises(self):
        model = make_linear_drift_model(2)
        with pytest.raises(ValueError):
            hamiltonian(model, 0.0, np.zeros(3), np.zeros(2), np.zeros(2),
                        np.zeros(2))


class TestPrior:
    def test_gaussian_prior_normalised(self):
        # exp(-U) integrates to one on a wide quadrature grid.
        prior = gaussian_prior(2.0, 1)
        xs = np.linspace(-8, 8, 20001).reshape(-1, 1)
        mass = np.trapezoid(np.exp(prior.log_density(xs)), xs[:, 0])
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_strong_convexity_on_sampled_pairs(self):
        prior = gaussian_prior(1.5, 3)
        a = keyed_normals(0, PURPOSE_PROBE, np.arange(3), np.arange(50).reshape(-1, 1), 0, 0)
        b = keyed_normals(1, PURPOSE_PROBE, np.arange(3), np.arange(50).reshape(-1, 1), 0, 0)
        lhs = np.sum((prior.grad_U(a) - prior.grad_U(b)) * (a - b), axis=1)
        rhs = prior.kappa * np.sum((a - b) ** 2, axis=1)
        assert np.all(lhs >= rhs - 1e-12)

    def test_kappa_positive_required(self):
        with pytest.raises(ValueError):
            gaussian_prior(0.0, 1)


def test_zero_cost_model_has_vanishing_costs():
    model = make_zero_cost_model(2)
    x = np.ones((5, 2))
    a = np.ones((5, 2))
    assert np.all(model.f(0.0, x, a, x) == 0.0)
    assert np.all(model.g(x, x) == 0.0)
    assert np.all(model.grad_x_g(x, x) == 0.0)
