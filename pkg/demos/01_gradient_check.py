"""Exact gradients from the adjoint sweep.

The parameter gradient assembled from one forward and one backward pass
is the exact gradient of the discrete objective, so it matches central
finite differences at machine-level tolerance while costing two sweeps
instead of thousands of objective evaluations.
"""

import numpy as np

from mflangevin import (TimeGrid, cloud_init, discrete_gradient,
                        finite_diff_gradient, generate_dataset,
                        make_builtin_model)

grid = TimeGrid(horizon=1.0, n_steps=4)
model = make_builtin_model("neural_ode_tanh", d=2, p_hidden=1, dim_data=2)
dataset = generate_dataset("regression", 2, 2, seed=101, grid=grid,
                           target="scaled")
cloud = cloud_init(3, grid, model.dim_param, ("gaussian", 0.0, 1.0), seed=0)

adjoint = discrete_gradient(model, cloud, dataset, grid)
numeric = finite_diff_gradient(model, cloud, dataset, grid, step=1e-5)

print("gradient array shape:", adjoint.shape)
print("objective evaluations used by the oracle:",
      2 * adjoint.size)
rel = np.max(np.abs(adjoint - numeric) / (1.0 + np.abs(numeric)))
print(f"max relative deviation adjoint vs finite differences: {rel:.3e}")
print("terminal-node rows are exactly zero:",
      bool(np.all(adjoint[:, -1, :] == 0.0)))
