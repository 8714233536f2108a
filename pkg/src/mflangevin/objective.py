"""Data-averaged cost, its regularised variant, and the exact discrete gradient."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clouds import ParticleCloud
from .datasets import Dataset
from .grids import TimeGrid
from .metrics import entropy_estimate
from .models import ModelSpec, PriorSpec
from .odes import forward_paths, mean_field_drift

__all__ = ["ObjectiveValue", "objective_J", "objective_Jsigma",
           "discrete_gradient", "finite_diff_gradient"]


@dataclass(frozen=True)
class ObjectiveValue:
    """Unregularised cost, entropy term, and their sum.

    ``ent_term`` is None when sigma = 0 and +inf when the entropy estimate
    is undefined (duplicate particles); ``j_sigma`` = j + ent_term holds
    exactly whenever the term is present.
    """

    j: float
    ent_term: float | None
    j_sigma: float

    @property
    def entropy_defined(self) -> bool:
        return self.ent_term is None or math.isfinite(self.ent_term)


def objective_J(model: ModelSpec, cloud: ParticleCloud, dataset: Dataset,
                grid: TimeGrid) -> float:
    """Discrete unregularised cost.

    Mean over samples of [ sum_{l<n} dt * mean_i f_{t_l}(X_l, theta_{i,l})
    + g(X_n, zeta) ] with X from the Euler forward pass; the running cost
    uses the left-Riemann rule, matching the forward convention.
    """
    x = forward_paths(model, cloud, dataset, grid)
    theta = cloud.particles
    running = 0.0
    for l in range(grid.n_steps):
        zeta_l = dataset.zeta_node(l)[:, None, :] if model.dim_data else None
        vals = model.f(grid.nodes[l], x[:, l, None, :],
                       theta[None, :, l, :], zeta_l)
        running += grid.dt * float(vals.mean())
    terminal = float(np.mean(model.g(x[:, -1, :], dataset.zeta)))
    return running + terminal


def objective_Jsigma(model: ModelSpec, cloud: ParticleCloud, dataset: Dataset,
                     grid: TimeGrid, sigma: float,
                     prior: PriorSpec) -> ObjectiveValue:
    """Regularised cost J + (sigma^2/2) * sum_{l<n} Ent(nu_l) dt.

    The entropy term exists for reporting only; the Langevin noise realises
    it in the dynamics, so no score estimate ever feeds back into training.
    At sigma = 0 the term is omitted entirely.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    j = objective_J(model, cloud, dataset, grid)
    if sigma == 0.0:
        return ObjectiveValue(j=j, ent_term=None, j_sigma=j)
    ent = 0.0
    for l in range(grid.n_steps):
        e = entropy_estimate(cloud, l, prior)
        if math.isinf(e):
            return ObjectiveValue(j=j, ent_term=math.inf, j_sigma=math.inf)
        ent += e * grid.dt
    term = 0.5 * sigma * sigma * ent
    return ObjectiveValue(j=j, ent_term=term, j_sigma=j + term)


def discrete_gradient(model: ModelSpec, cloud: ParticleCloud, dataset: Dataset,
                      grid: TimeGrid) -> np.ndarray:
    """Exact gradient of :func:`objective_J` in every particle coordinate.

    Equals (dt / N2) times the mean-field drift; the terminal node's block
    is zero because those coordinates do not enter the discrete objective.
    """
    drift = mean_field_drift(model, cloud, dataset, grid)
    return (grid.dt / cloud.n_particles) * drift


def finite_diff_gradient(model: ModelSpec, cloud: ParticleCloud,
                         dataset: Dataset, grid: TimeGrid,
                         step: float = 1e-5) -> np.ndarray:
    """Central differences of :func:`objective_J` per particle coordinate.

    The independent oracle for :func:`discrete_gradient`.  Costs
    2 * N2 * n_nodes * p objective evaluations; desk scale only.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    base = cloud.particles
    out = np.zeros_like(base)
    for i in range(base.shape[0]):
        for l in range(base.shape[1]):
            for c in range(base.shape[2]):
                hi = base.copy()
                lo = base.copy()
                hi[i, l, c] += step
                lo[i, l, c] -= step
                j_hi = objective_J(model, cloud.with_particles(hi), dataset, grid)
                j_lo = objective_J(model, cloud.with_particles(lo), dataset, grid)
                out[i, l, c] = (j_hi - j_lo) / (2.0 * step)
    return out
