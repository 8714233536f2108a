"""Controlled vector fields, costs, their analytic derivatives, and priors.

A model is the triple (phi, f, g): the drift phi_t(x, a, zeta_t) of the
controlled state, the running cost f_t(x, a, zeta_t), and the terminal cost
g(x, zeta), together with hand-coded partial derivatives.  Derivatives are
analytic on purpose: the finite-difference self-check below is then a fully
independent oracle rather than a test of one autodiff engine against itself.

All maps follow a numpy broadcasting contract: ``x`` has shape (..., d),
``a`` has shape (..., p), ``zeta_t`` has shape (..., q), batch dimensions
broadcast, and outputs carry the broadcast batch shape.  Jacobians are laid
out [output, input]: ``grad_x_phi`` returns (..., d, d) with entry [j, r]
equal to the derivative of output j with respect to x_r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .rng import PURPOSE_PROBE, keyed_normals, keyed_uniforms

__all__ = [
    "ModelSpec", "HamiltonianEval", "PriorSpec", "SelfCheckReport",
    "make_builtin_model", "make_linear_drift_model", "make_zero_cost_model",
    "gaussian_prior", "hamiltonian", "model_grad_selfcheck", "BUILTIN_KINDS",
]

BUILTIN_KINDS = ("one_layer_residual", "neural_ode_tanh", "timeseries_interp")


@dataclass(frozen=True)
class ModelSpec:
    """Dynamics and cost of one relaxed-control problem.

    ``dim_data`` is the length of the data slice fed to phi and f at one
    time node: the full vector for vector-valued data, the channel count
    for path-valued data.  ``g`` receives the complete data object (vector
    or path) since terminal costs may look at any of it.
    """

    dim_state: int
    dim_param: int
    dim_data: int
    phi: Callable
    grad_x_phi: Callable
    grad_a_phi: Callable
    f: Callable
    grad_x_f: Callable
    grad_a_f: Callable
    g: Callable
    grad_x_g: Callable
    kind: str = "custom"

    def __post_init__(self):
        if self.dim_state < 1 or self.dim_param < 1:
            raise ValueError("dim_state and dim_param must be positive")
        if self.dim_data < 0:
            raise ValueError("dim_data must be nonnegative")


@dataclass(frozen=True)
class HamiltonianEval:
    """Value and gradients of h = phi . p + f at one evaluation point."""

    value: np.ndarray
    grad_a: np.ndarray
    grad_x: np.ndarray


@dataclass(frozen=True)
class PriorSpec:
    """Regularising prior gamma(a) = exp(-U(a)) with convexity modulus kappa.

    ``log_density`` returns -U(a); for the default Gaussian prior U includes
    its normaliser so that gamma integrates to one, which makes the entropy
    reports genuine relative entropies.
    """

    kappa: float
    grad_U: Callable
    log_density: Callable

    def U(self, a):
        return -self.log_density(a)


def gaussian_prior(kappa: float, dim_param: int) -> PriorSpec:
    """Gaussian prior U(a) = kappa|a|^2/2 + normaliser, grad U = kappa a."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    log_norm = 0.5 * dim_param * math.log(2.0 * math.pi / kappa)

    def grad_U(a):
        return kappa * np.asarray(a, dtype=float)

    def log_density(a):
        a = np.asarray(a, dtype=float)
        return -0.5 * kappa * np.sum(a * a, axis=-1) - log_norm

    return PriorSpec(kappa=kappa, grad_U=grad_U, log_density=log_density)


def _batch_shape(*arrays):
    shapes = [np.asarray(arr).shape[:-1] for arr in arrays if arr is not None]
    return np.broadcast_shapes(*shapes) if shapes else ()


def hamiltonian(model: ModelSpec, t: float, x, p_costate, a,
                zeta_t=None) -> HamiltonianEval:
    """Evaluate h = phi . p + f together with its a- and x-gradients.

    grad_a = (grad_a phi)^T p + grad_a f and grad_x = (grad_x phi)^T p +
    grad_x f, assembled from the model's analytic derivative maps.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    p = np.asarray(p_costate, dtype=float)
    if x.shape[-1] != model.dim_state or p.shape[-1] != model.dim_state:
        raise ValueError("state/costate dimension mismatch")
    if a.shape[-1] != model.dim_param:
        raise ValueError("parameter dimension mismatch")
    if model.dim_data and (zeta_t is None
                           or np.asarray(zeta_t).shape[-1] != model.dim_data):
        raise ValueError("data-slice dimension mismatch")
    value = (np.einsum("...d,...d->...", model.phi(t, x, a, zeta_t), p)
             + model.f(t, x, a, zeta_t))
    grad_a = (np.einsum("...dp,...d->...p", model.grad_a_phi(t, x, a, zeta_t), p)
              + model.grad_a_f(t, x, a, zeta_t))
    grad_x = (np.einsum("...dr,...d->...r", model.grad_x_phi(t, x, a, zeta_t), p)
              + model.grad_x_f(t, x, a, zeta_t))
    return HamiltonianEval(value=value, grad_a=grad_a, grad_x=grad_x)


def _zero_cost_maps(d: int, p: int):
    def f(t, x, a, zeta_t):
        return np.zeros(_batch_shape(x, a, zeta_t))

    def grad_x_f(t, x, a, zeta_t):
        return np.zeros(_batch_shape(x, a, zeta_t) + (d,))

    def grad_a_f(t, x, a, zeta_t):
        return np.zeros(_batch_shape(x, a, zeta_t) + (p,))

    return f, grad_x_f, grad_a_f


def _squared_distance_terminal(d: int):
    def g(x, zeta):
        r = np.asarray(x, dtype=float) - np.asarray(zeta, dtype=float)
        return np.sum(r * r, axis=-1)

    def grad_x_g(x, zeta):
        return 2.0 * (np.asarray(x, dtype=float) - np.asarray(zeta, dtype=float))

    return g, grad_x_g


def make_linear_drift_model(d: int) -> ModelSpec:
    """Drift equal to the parameter: phi(x, a) = a, f = 0, g = |x - zeta|^2.

    The objective is a convex quadratic in the particle coordinates, which
    makes this the standard fixture for descent, contraction, and Gibbs
    checks.
    """
    if d < 1:
        raise ValueError("d must be positive")
    f, grad_x_f, grad_a_f = _zero_cost_maps(d, d)
    g, grad_x_g = _squared_distance_terminal(d)

    def phi(t, x, a, zeta_t):
        return np.broadcast_to(np.asarray(a, dtype=float),
                               _batch_shape(x, a, zeta_t) + (d,)).copy()

    def grad_x_phi(t, x, a, zeta_t):
        return np.zeros(_batch_shape(x, a, zeta_t) + (d, d))

    def grad_a_phi(t, x, a, zeta_t):
        eye = np.eye(d)
        return np.broadcast_to(eye, _batch_shape(x, a, zeta_t) + (d, d)).copy()

    return ModelSpec(dim_state=d, dim_param=d, dim_data=d,
                     phi=phi, grad_x_phi=grad_x_phi, grad_a_phi=grad_a_phi,
                     f=f, grad_x_f=grad_x_f, grad_a_f=grad_a_f,
                     g=g, grad_x_g=grad_x_g, kind="linear_drift")


def make_zero_cost_model(d: int) -> ModelSpec:
    """Vanishing costs: the costate is identically zero, so the cloud feels
    only the prior gradient and the noise.  The control run for
    stationarity checks against the bare prior."""
    base = make_linear_drift_model(d)
    f, grad_x_f, grad_a_f = _zero_cost_maps(d, d)

    def g(x, zeta):
        return np.zeros(np.asarray(x).shape[:-1])

    def grad_x_g(x, zeta):
        return np.zeros(np.asarray(x, dtype=float).shape)

    return replace(base, f=f, grad_x_f=grad_x_f, grad_a_f=grad_a_f,
                   g=g, grad_x_g=grad_x_g, kind="zero_cost")


def _split_params(a, blocks):
    """Split the trailing axis of ``a`` into reshaped blocks."""
    a = np.asarray(a, dtype=float)
    out, start = [], 0
    for shape in blocks:
        size = int(np.prod(shape))
        out.append(a[..., start:start + size].reshape(a.shape[:-1] + shape))
        start += size
    return out


def make_builtin_model(kind: str, d: int, p_hidden: int = 1,
                       dim_data: int = 0) -> ModelSpec:
    """Construct one of the built-in tanh architectures.

    one_layer_residual
        phi(a, zeta) = A1 tanh(A2 zeta): a one-hidden-layer network reading
        the data vector, independent of the state (grad_x phi is exactly
        zero).  Costs: f = 0, g(x, zeta) = |x - zeta|^2.  Requires
        dim_data == d.  Parameters per particle: p = p_hidden * (d + d).
    neural_ode_tanh
        phi(x, a) = A1 tanh(w * mean(x)): p_hidden tanh units driven by the
        pooled state, so the drift is genuinely state-dependent with a
        dense (rank-one) Jacobian.  Costs as above; dim_data must equal d.
        Parameters per particle: p = p_hidden * (d + 1).
    timeseries_interp
        phi_t(x, a, zeta_t) = A1 tanh(w * mean(x) + A3 zeta1_t) where the
        data slice carries two channel blocks (zeta1 observations, zeta2
        truth).  Running cost f = |x - zeta2_t|^2, terminal cost g = 0.
        Requires dim_data == 2 d.  Parameters: p = p_hidden * (2 d + 1).
    """
    if kind not in BUILTIN_KINDS:
        raise ValueError(f"unknown builtin kind {kind!r}")
    if d < 1 or p_hidden < 1:
        raise ValueError("dimensions must be positive")
    m = p_hidden

    if kind == "one_layer_residual":
        q = dim_data if dim_data else d
        if q != d:
            raise ValueError("one_layer_residual needs dim_data == d "
                             "(terminal cost compares state to data)")
        p = m * (d + q)
        g, grad_x_g = _squared_distance_terminal(d)
        f, grad_x_f, grad_a_f = _zero_cost_maps(d, p)

        def _parts(a):
            return _split_params(a, [(d, m), (m, q)])

        def phi(t, x, a, zeta_t):
            a1, a2 = _parts(a)
            h = np.tanh(np.einsum("...uc,...c->...u", a2, zeta_t))
            out = np.einsum("...du,...u->...d", a1, h)
            return np.broadcast_to(out, _batch_shape(x, a, zeta_t) + (d,)).copy()

        def grad_x_phi(t, x, a, zeta_t):
            return np.zeros(_batch_shape(x, a, zeta_t) + (d, d))

        def grad_a_phi(t, x, a, zeta_t):
            a1, a2 = _parts(a)
            zeta_t = np.asarray(zeta_t, dtype=float)
            z = np.einsum("...uc,...c->...u", a2, zeta_t)
            h = np.tanh(z)
            dh = 1.0 - h * h
            bshape = _batch_shape(x, a, zeta_t)
            g1 = np.einsum("jr,...u->...jru", np.eye(d), h)
            g2 = np.einsum("...ju,...u,...c->...juc", a1, dh, zeta_t)
            g1 = np.broadcast_to(g1, bshape + (d, d, m)).reshape(bshape + (d, d * m))
            g2 = np.broadcast_to(g2, bshape + (d, m, q)).reshape(bshape + (d, m * q))
            return np.concatenate([g1, g2], axis=-1)

        return ModelSpec(dim_state=d, dim_param=p, dim_data=q,
                         phi=phi, grad_x_phi=grad_x_phi, grad_a_phi=grad_a_phi,
                         f=f, grad_x_f=grad_x_f, grad_a_f=grad_a_f,
                         g=g, grad_x_g=grad_x_g, kind=kind)

    if kind == "neural_ode_tanh":
        q = dim_data if dim_data else d
        if q != d:
            raise ValueError("neural_ode_tanh needs dim_data == d")
        p = m * (d + 1)
        g, grad_x_g = _squared_distance_terminal(d)
        f, grad_x_f, grad_a_f = _zero_cost_maps(d, p)

        def _parts(a):
            return _split_params(a, [(d, m), (m,)])

        def _units(x, a):
            a1, w = _parts(a)
            xbar = np.mean(np.asarray(x, dtype=float), axis=-1)
            z = w * xbar[..., None]
            h = np.tanh(z)
            return a1, w, h, xbar

        def phi(t, x, a, zeta_t):
            a1, _, h, _ = _units(x, a)
            out = np.einsum("...du,...u->...d", a1, h)
            return np.broadcast_to(out, _batch_shape(x, a, zeta_t) + (d,)).copy()

        def grad_x_phi(t, x, a, zeta_t):
            a1, w, h, _ = _units(x, a)
            s = np.einsum("...du,...u->...d", a1, w * (1.0 - h * h)) / d
            out = np.repeat(s[..., None], d, axis=-1)
            return np.broadcast_to(out, _batch_shape(x, a, zeta_t) + (d, d)).copy()

        def grad_a_phi(t, x, a, zeta_t):
            a1, w, h, xbar = _units(x, a)
            bshape = _batch_shape(x, a, zeta_t)
            g1 = np.einsum("jr,...u->...jru", np.eye(d), h)
            g1 = np.broadcast_to(g1, bshape + (d, d, m)).reshape(bshape + (d, d * m))
            g2 = a1 * ((1.0 - h * h) * xbar[..., None])[..., None, :]
            g2 = np.broadcast_to(g2, bshape + (d, m))
            return np.concatenate([g1, g2], axis=-1)

        return ModelSpec(dim_state=d, dim_param=p, dim_data=q,
                         phi=phi, grad_x_phi=grad_x_phi, grad_a_phi=grad_a_phi,
                         f=f, grad_x_f=grad_x_f, grad_a_f=grad_a_f,
                         g=g, grad_x_g=grad_x_g, kind=kind)

    # timeseries_interp
    if dim_data < 2 or dim_data != 2 * d:
        raise ValueError("timeseries_interp needs dim_data == 2*d "
                         "(observation and truth channel blocks)")
    q = dim_data
    p = m * (2 * d + 1)

    def _parts(a):
        return _split_params(a, [(d, m), (m,), (m, d)])

    def _units(x, a, zeta_t):
        a1, w, a3 = _parts(a)
        zeta1 = np.asarray(zeta_t, dtype=float)[..., :d]
        xbar = np.mean(np.asarray(x, dtype=float), axis=-1)
        z = w * xbar[..., None] + np.einsum("...uc,...c->...u", a3, zeta1)
        h = np.tanh(z)
        return a1, w, a3, zeta1, h, xbar

    def phi(t, x, a, zeta_t):
        a1, _, _, _, h, _ = _units(x, a, zeta_t)
        out = np.einsum("...du,...u->...d", a1, h)
        return np.broadcast_to(out, _batch_shape(x, a, zeta_t) + (d,)).copy()

    def grad_x_phi(t, x, a, zeta_t):
        a1, w, _, _, h, _ = _units(x, a, zeta_t)
        s = np.einsum("...du,...u->...d", a1, w * (1.0 - h * h)) / d
        out = np.repeat(s[..., None], d, axis=-1)
        return np.broadcast_to(out, _batch_shape(x, a, zeta_t) + (d, d)).copy()

    def grad_a_phi(t, x, a, zeta_t):
        a1, w, a3, zeta1, h, xbar = _units(x, a, zeta_t)
        bshape = _batch_shape(x, a, zeta_t)
        dh = 1.0 - h * h
        g1 = np.einsum("jr,...u->...jru", np.eye(d), h)
        g1 = np.broadcast_to(g1, bshape + (d, d, m)).reshape(bshape + (d, d * m))
        gw = np.einsum("...ju,...u->...ju", a1, dh * xbar[..., None])
        gw = np.broadcast_to(gw, bshape + (d, m))
        g3 = np.einsum("...ju,...u,...c->...juc", a1, dh, zeta1)
        g3 = np.broadcast_to(g3, bshape + (d, m, d)).reshape(bshape + (d, m * d))
        return np.concatenate([g1, gw, g3], axis=-1)

    def f(t, x, a, zeta_t):
        r = np.asarray(x, dtype=float) - np.asarray(zeta_t, dtype=float)[..., d:]
        val = np.sum(r * r, axis=-1)
        return np.broadcast_to(val, _batch_shape(x, a, zeta_t)).copy()

    def grad_x_f(t, x, a, zeta_t):
        r = np.asarray(x, dtype=float) - np.asarray(zeta_t, dtype=float)[..., d:]
        return np.broadcast_to(2.0 * r, _batch_shape(x, a, zeta_t) + (d,)).copy()

    def grad_a_f(t, x, a, zeta_t):
        return np.zeros(_batch_shape(x, a, zeta_t) + (p,))

    def g(x, zeta):
        return np.zeros(np.asarray(x).shape[:-1])

    def grad_x_g(x, zeta):
        return np.zeros(np.asarray(x, dtype=float).shape)

    return ModelSpec(dim_state=d, dim_param=p, dim_data=q,
                     phi=phi, grad_x_phi=grad_x_phi, grad_a_phi=grad_a_phi,
                     f=f, grad_x_f=grad_x_f, grad_a_f=grad_a_f,
                     g=g, grad_x_g=grad_x_g, kind=kind)


@dataclass(frozen=True)
class SelfCheckReport:
    """Maximum relative derivative errors against central finite differences."""

    max_rel_err: dict
    threshold: float
    n_probes: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(v <= self.threshold for v in self.max_rel_err.values())


def _central_diff(fn, arg, step):
    """Columnwise central differences of fn along its argument's last axis."""
    cols = []
    for j in range(arg.shape[-1]):
        hi = arg.copy()
        lo = arg.copy()
        hi[..., j] += step
        lo[..., j] -= step
        cols.append((fn(hi) - fn(lo)) / (2.0 * step))
    return np.stack(cols, axis=-1)


def model_grad_selfcheck(model: ModelSpec, n_probes: int = 100,
                         seed: int = 0, step: float = 1e-4,
                         threshold: float = 1e-4) -> SelfCheckReport:
    """Check every analytic derivative map against finite differences.

    Probes are standard-normal states/parameters and data slices plus a
    uniform probe time, all drawn from the keyed generator.  Reported
    errors are max |analytic - numeric| / (1 + |numeric|); the report flags
    failure above ``threshold``.
    """
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    d, p, q = model.dim_state, model.dim_param, model.dim_data
    rows = np.arange(n_probes).reshape(-1, 1)

    def draw(tag, dim):
        return keyed_normals(seed, PURPOSE_PROBE, np.arange(dim), rows, tag, 0)

    x = draw(1, d)
    a = draw(2, p)
    zeta = draw(3, q) if q else None
    t = keyed_uniforms(seed, PURPOSE_PROBE, 0, 0, 4, 0).item()

    def rel_err(analytic, numeric):
        return float(np.max(np.abs(analytic - numeric) / (1.0 + np.abs(numeric))))

    errs = {
        "grad_x_phi": rel_err(model.grad_x_phi(t, x, a, zeta),
                              _central_diff(lambda v: model.phi(t, v, a, zeta), x, step)),
        "grad_a_phi": rel_err(model.grad_a_phi(t, x, a, zeta),
                              _central_diff(lambda v: model.phi(t, x, v, zeta), a, step)),
        "grad_x_f": rel_err(model.grad_x_f(t, x, a, zeta),
                            _central_diff(lambda v: model.f(t, v, a, zeta), x, step)),
        "grad_a_f": rel_err(model.grad_a_f(t, x, a, zeta),
                            _central_diff(lambda v: model.f(t, x, v, zeta), a, step)),
        "grad_x_g": rel_err(model.grad_x_g(x, zeta if q else np.zeros_like(x)),
                            _central_diff(lambda v: model.g(v, zeta if q else np.zeros_like(x)), x, step)),
    }
    return SelfCheckReport(max_rel_err=errs, threshold=threshold,
                           n_probes=n_probes, seed=seed)


def with_overrides(model: ModelSpec, **maps) -> ModelSpec:
    """Copy of a model with some maps replaced (used to build test fixtures)."""
    return replace(model, **maps)
