"""Forward and adjoint sweeps on the grid, and the mean-field drift.

The forward state follows explicit Euler under the cloud-averaged drift.
The adjoint is the *discrete* adjoint of that Euler map (the transpose of
its Jacobian), not a separate discretisation of the continuous costate
equation: this makes the assembled parameter gradient the exact gradient
of the discrete objective, so finite-difference checks pass at
machine-level tolerance, while the recursion still converges to the
continuous adjoint as the grid is refined.

Node convention (single source of truth): the Hamiltonian gradient at node
l pairs the state X_l with the costate P_{l+1}, because theta_{i,l} enters
the objective through the step from node l to node l+1 (and through the
running cost at node l).  The terminal node carries no drift: theta_{i,n}
never enters the discrete objective, so its entry in the drift array is
zero and the corresponding particles feel only the prior and the noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clouds import ParticleCloud
from .datasets import DataSample, Dataset
from .exceptions import NonFiniteCostateError, NonFiniteStateError
from .grids import TimeGrid
from .models import ModelSpec

__all__ = [
    "TrajectoryPair", "forward_paths", "adjoint_paths", "forward_solve",
    "adjoint_solve", "solve_trajectory_pair", "mean_field_drift",
    "hamiltonian_grad_at", "rk4_forward_solve",
]


@dataclass(frozen=True)
class TrajectoryPair:
    """Forward state path and adjoint path of one sample on the grid."""

    x_path: np.ndarray
    p_path: np.ndarray
    sample_id: int = 0

    def __post_init__(self):
        if self.x_path.shape != self.p_path.shape:
            raise ValueError("state and costate paths must share a shape")
        if not (np.all(np.isfinite(self.x_path))
                and np.all(np.isfinite(self.p_path))):
            raise ValueError("trajectory contains non-finite entries")


def _check_setup(model: ModelSpec, cloud: ParticleCloud, dataset: Dataset,
                 grid: TimeGrid) -> None:
    if cloud.grid != grid:
        raise ValueError("cloud and grid disagree")
    if cloud.dim_param != model.dim_param:
        raise ValueError("cloud parameter dimension does not match the model")
    if dataset.dim_state != model.dim_state:
        raise ValueError("dataset state dimension does not match the model")
    if model.dim_data and dataset.dim_data != model.dim_data:
        raise ValueError("dataset data dimension does not match the model")
    if dataset.is_path and dataset.zeta.shape[1] != grid.n_nodes:
        raise ValueError("path data must be sampled on the grid nodes")


def forward_paths(model: ModelSpec, cloud: ParticleCloud, dataset: Dataset,
                  grid: TimeGrid) -> np.ndarray:
    """Euler states for every sample, shape (N1, n_nodes, d).

    x_{l+1} = x_l + dt * mean_i phi_{t_l}(x_l, theta_{i,l}, zeta_l).
    """
    _check_setup(model, cloud, dataset, grid)
    n1 = dataset.n_samples
    x = np.empty((n1, grid.n_nodes, model.dim_state))
    x[:, 0, :] = dataset.xi
    theta = cloud.particles
    dt = grid.dt
    for l in range(grid.n_steps):
        zeta_l = dataset.zeta_node(l)[:, None, :] if model.dim_data else None
        drift = model.phi(grid.nodes[l], x[:, l, None, :],
                          theta[None, :, l, :], zeta_l).mean(axis=1)
        x[:, l + 1, :] = x[:, l, :] + dt * drift
        if not np.all(np.isfinite(x[:, l + 1, :])):
            bad = int(np.argwhere(~np.isfinite(x[:, l + 1, :]).all(axis=1))[0, 0])
            raise NonFiniteStateError(
                f"non-finite state at node {l + 1}, sample {bad} "
                "(step too large or model blow-up)")
    return x


def adjoint_paths(model: ModelSpec, cloud: ParticleCloud, dataset: Dataset,
                  x: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Discrete adjoint states for every sample, shape (N1, n_nodes, d).

    p_n = grad_x g(x_n, zeta); backward,
    p_l = p_{l+1} + dt * mean_i [ (grad_x phi_{t_l})^T p_{l+1}
                                  + grad_x f_{t_l} ]  evaluated at (x_l, theta_{i,l}).
    """
    _check_setup(model, cloud, dataset, grid)
    n1 = dataset.n_samples
    p = np.empty((n1, grid.n_nodes, model.dim_state))
    p[:, -1, :] = model.grad_x_g(x[:, -1, :], dataset.zeta)
    theta = cloud.particles
    dt = grid.dt
    for l in range(grid.n_steps - 1, -1, -1):
        zeta_l = dataset.zeta_node(l)[:, None, :] if model.dim_data else None
        jac = model.grad_x_phi(grid.nodes[l], x[:, l, None, :],
                               theta[None, :, l, :], zeta_l)
        fx = model.grad_x_f(grid.nodes[l], x[:, l, None, :],
                            theta[None, :, l, :], zeta_l)
        pull = np.einsum("kior,ko->kir", jac, p[:, l + 1, :]).mean(axis=1)
        p[:, l, :] = p[:, l + 1, :] + dt * (pull + fx.mean(axis=1))
        if not np.all(np.isfinite(p[:, l, :])):
            bad = int(np.argwhere(~np.isfinite(p[:, l, :]).all(axis=1))[0, 0])
            raise NonFiniteCostateError(
                f"non-finite costate at node {l}, sample {bad}")
    return p


def _single_sample_dataset(sample: DataSample) -> Dataset:
    return Dataset(xi=sample.xi[None, :],
                   zeta=sample.zeta[None, ...], kind="single")


def forward_solve(model: ModelSpec, cloud: ParticleCloud, sample: DataSample,
                  grid: TimeGrid) -> np.ndarray:
    """Forward state path for one sample, shape (n_nodes, d)."""
    return forward_paths(model, cloud, _single_sample_dataset(sample), grid)[0]


def adjoint_solve(model: ModelSpec, cloud: ParticleCloud, sample: DataSample,
                  x_path: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Adjoint path for one sample, shape (n_nodes, d)."""
    return adjoint_paths(model, cloud, _single_sample_dataset(sample),
                         x_path[None, ...], grid)[0]


def solve_trajectory_pair(model: ModelSpec, cloud: ParticleCloud,
                          sample: DataSample, grid: TimeGrid,
                          sample_id: int = 0) -> TrajectoryPair:
    """Forward and adjoint sweep for one sample bundled together."""
    x = forward_solve(model, cloud, sample, grid)
    p = adjoint_solve(model, cloud, sample, x, grid)
    return TrajectoryPair(x_path=x, p_path=p, sample_id=sample_id)


def hamiltonian_grad_at(model: ModelSpec, particles: np.ndarray,
                        dataset: Dataset, x: np.ndarray, p: np.ndarray,
                        grid: TimeGrid) -> np.ndarray:
    """Data-averaged Hamiltonian a-gradient at given particles and (X, P).

    Entry [i, l] is mean_k [ (grad_a phi_{t_l}(X_{k,l}, theta_{i,l}))^T P_{k,l+1}
    + grad_a f_{t_l}(X_{k,l}, theta_{i,l}) ]; the terminal row is zero per the
    node convention above.
    """
    n2 = particles.shape[0]
    out = np.zeros((n2, grid.n_nodes, model.dim_param))
    for l in range(grid.n_steps):
        zeta_l = dataset.zeta_node(l)[:, None, :] if model.dim_data else None
        gap = model.grad_a_phi(grid.nodes[l], x[:, l, None, :],
                               particles[None, :, l, :], zeta_l)
        fa = model.grad_a_f(grid.nodes[l], x[:, l, None, :],
                            particles[None, :, l, :], zeta_l)
        out[:, l, :] = (np.einsum("kiop,ko->kip", gap, p[:, l + 1, :])
                        + fa).mean(axis=0)
    return out


def mean_field_drift(model: ModelSpec, cloud: ParticleCloud, dataset: Dataset,
                     grid: TimeGrid) -> np.ndarray:
    """Drift array (N2, n_nodes, p) driving the Langevin dynamics.

    Scaled by dt/N2 this is the exact gradient of the discrete objective
    with respect to every particle coordinate.
    """
    x = forward_paths(model, cloud, dataset, grid)
    p = adjoint_paths(model, cloud, dataset, x, grid)
    return hamiltonian_grad_at(model, cloud.particles, dataset, x, p, grid)


def rk4_forward_solve(model: ModelSpec, cloud: ParticleCloud,
                      sample: DataSample, grid: TimeGrid) -> np.ndarray:
    """Classical RK4 forward pass for accuracy studies.

    The control and the data slice are held at their node-l values across
    each step (both are piecewise constant by construction), so this is
    RK4 applied to the frozen per-step vector field.  Excluded from all
    gradient paths: the adjoint is tied to the Euler map.
    """
    dataset = _single_sample_dataset(sample)
    _check_setup(model, cloud, dataset, grid)
    x = np.empty((grid.n_nodes, model.dim_state))
    x[0] = sample.xi
    theta = cloud.particles
    dt = grid.dt

    def field(t, state, l):
        zeta_l = dataset.zeta_node(l)[:, None, :] if model.dim_data else None
        return model.phi(t, state[:, None, :], theta[None, :, l, :],
                         zeta_l).mean(axis=1)

    for l in range(grid.n_steps):
        t = grid.nodes[l]
        y = x[l][None, :]
        k1 = field(t, y, l)
        k2 = field(t + 0.5 * dt, y + 0.5 * dt * k1, l)
        k3 = field(t + 0.5 * dt, y + 0.5 * dt * k2, l)
        k4 = field(t + dt, y + dt * k3, l)
        x[l + 1] = (y + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)[0]
        if not np.all(np.isfinite(x[l + 1])):
            raise NonFiniteStateError(f"non-finite state at node {l + 1}")
    return x
