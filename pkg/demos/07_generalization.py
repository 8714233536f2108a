"""Generalisation gap against the training-set size.

Clouds trained on N1 samples are scored on a common holdout against a
long, large-cloud reference run.  With the optimisation error sources held
small and common across runs, the mean squared gap scales like 1/N1.
Desk-scale version of the full study (about a minute).
"""

from mflangevin import (StudySetup, TimeGrid, TrainerConfig, gaussian_prior,
                        make_builtin_model, run_generalization_study)

grid = TimeGrid(horizon=0.25, n_steps=4)
model = make_builtin_model("one_layer_residual", d=1, p_hidden=1, dim_data=1)
cfg = TrainerConfig(sigma=1.4, prior=gaussian_prior(1.0, model.dim_param),
                    gamma=1e-2, n_iters=600, seed=5, record_every=0)
setup = StudySetup(model=model, grid=grid, trainer=cfg, n_particles=128,
                   dataset_kind="regression", dataset_target="scaled",
                   dataset_seed=0, init_seed=3)

report = run_generalization_study(setup, n1_list=[8, 16, 32], holdout_n=1024,
                                  n_seeds=4, ref_particles=256,
                                  ref_samples=256, slope_bounds=(0.3, 1.7))

print(f"{'N1':>5} {'mean squared gap':>18}")
for n1, g in zip(report.series["points"]["n1"],
                 report.series["points"]["mean_sq_gap"]):
    print(f"{n1:5d} {g:18.3e}")
for line in report.summary_lines():
    print(line)
