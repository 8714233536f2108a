"""Strong rate of the training-time discretisation.

All runs consume the same Brownian path: increments are generated at the
reference resolution and coarser runs sum them.  The mean squared
deviation from the reference at the final training time then scales like
the square of the step.
"""

from mflangevin import (StudySetup, TimeGrid, TrainerConfig, gaussian_prior,
                        make_builtin_model, run_euler_study)

grid = TimeGrid(horizon=0.25, n_steps=4)
model = make_builtin_model("one_layer_residual", d=1, p_hidden=1, dim_data=1)
cfg = TrainerConfig(sigma=1.0, prior=gaussian_prior(2.0, model.dim_param),
                    gamma=4e-3, n_iters=100, seed=6, record_every=0)
setup = StudySetup(model=model, grid=grid, trainer=cfg, n_particles=32,
                   n_samples=8, dataset_kind="regression",
                   dataset_target="scaled", dataset_seed=13, init_seed=4)

report = run_euler_study(setup, gamma_list=[4e-3, 2e-3, 1e-3, 5e-4],
                         s_final=0.5, ref_divisor=8)

print(f"{'gamma':>8} {'MSE vs reference':>18}")
for g, m in zip(report.series["points"]["gamma"],
                report.series["points"]["mse"]):
    print(f"{g:8.0e} {m:18.3e}")
for line in report.summary_lines():
    print(line)
print("halving the step quarters the squared pathwise error")
