"""Train a particle cloud on a one-dimensional regression task.

A one-hidden-layer residual model is fit by mean-field Langevin updates:
every particle is one hidden unit, the cloud is the network.  The history
records the plain cost J, the entropy-regularised cost, the drift norm,
and the cloud's second moment.
"""

from mflangevin import (TimeGrid, TrainerConfig, cloud_init, gaussian_prior,
                        generate_dataset, make_builtin_model, objective_J,
                        train)

grid = TimeGrid(horizon=0.25, n_steps=4)
model = make_builtin_model("one_layer_residual", d=1, p_hidden=1, dim_data=1)
dataset = generate_dataset("regression", 64, 1, seed=1, grid=grid,
                           target="tanh_shift")
init = cloud_init(256, grid, model.dim_param, ("gaussian", 0.0, 1.0), seed=2)

cfg = TrainerConfig(sigma=0.7, prior=gaussian_prior(1.0, model.dim_param),
                    gamma=5e-3, n_iters=800, seed=0, record_every=100)
cloud, history = train(model, dataset, grid, cfg, init)

print(f"{'iter':>6} {'s':>6} {'J':>10} {'J_sigma':>10} {'drift norm':>11}")
for it, s, j, js, gn in zip(history.iters, history.s, history.J,
                            history.Jsigma, history.grad_norm):
    print(f"{it:6d} {s:6.2f} {j:10.5f} {js:10.5f} {gn:11.5f}")

holdout = generate_dataset("regression", 2048, 1, seed=99, grid=grid,
                           target="tanh_shift")
print(f"\ntraining J: {objective_J(model, cloud, dataset, grid):.5f}")
print(f"holdout  J: {objective_J(model, cloud, holdout, grid):.5f}")
