"""Propagation of chaos: error against a large-system surrogate.

Runs with N2 particles and N1 samples share their initial particles,
Brownian increments, and data prefix with one large surrogate run, so the
mean squared paired distance isolates the finite-size error.  It scales
like 1/N1 + 1/N2.  Desk-scale version of the full study; expect a slope
near one (about half a minute).
"""

from mflangevin import (StudySetup, TimeGrid, TrainerConfig, gaussian_prior,
                        make_builtin_model, run_chaos_study)

grid = TimeGrid(horizon=0.25, n_steps=4)
model = make_builtin_model("one_layer_residual", d=1, p_hidden=1, dim_data=1)
cfg = TrainerConfig(sigma=1.4, prior=gaussian_prior(0.5, model.dim_param),
                    gamma=0.01, n_iters=100, seed=21, record_every=0)
setup = StudySetup(model=model, grid=grid, trainer=cfg,
                   dataset_kind="regression", dataset_target="tanh_shift",
                   dataset_seed=33, init_seed=9)

report = run_chaos_study(setup, n2_list=[8, 16, 32, 64], n1_list=[8, 32],
                         n_ref=512, n1_ref=256, n_reps=3, snapshot_every=5)

table = report.series["points"]
print(f"{'N1':>5} {'N2':>5} {'1/N1+1/N2':>10} {'MSE':>12}")
for n1, n2, inv, mse in zip(table["n1"], table["n2"], table["inv_sum"],
                            table["mse"]):
    print(f"{n1:5d} {n2:5d} {inv:10.4f} {mse:12.3e}")
for line in report.summary_lines():
    print(line)
