"""Command-line interface for training runs and the study harness.

Subcommands: train, grad-check, chaos-study, euler-study,
contraction-study, gibbs-check, generalization-study.  Every command
accepts --config (JSON; a built-in desk-scale default is used when
omitted), --seed (overrides the trainer seed), --out (output directory),
and --threads (parallelism over independent study points; outputs are
byte-identical at any thread count).
"""

from __future__ import annotations

import argparse
import json
import os

import numpy as np

from .clouds import cloud_to_csv
from .config import (build_setup, default_study_config, default_train_config,
                     load_config, parse_config, validate_study_section)
from .langevin import train
from .objective import discrete_gradient, finite_diff_gradient
from .studies import (run_chaos_study, run_contraction_study,
                      run_euler_study, run_generalization_study,
                      run_gibbs_check)

STUDY_COMMANDS = {
    "chaos-study": "chaos",
    "euler-study": "euler",
    "contraction-study": "contraction",
    "gibbs-check": "gibbs",
    "generalization-study": "generalization",
}


def _common_flags(sub):
    sub.add_argument("--config", default=None, help="JSON configuration file")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the trainer seed")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--threads", type=int, default=1,
                     help="worker threads for independent study points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mflangevin",
        description="Mean-field Langevin training and its verification studies")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ["train", "grad-check", *STUDY_COMMANDS]:
        _common_flags(subs.add_parser(name))
    return parser


def _run_train(args) -> int:
    if args.config is not None:
        config = load_config(args.config)
    else:
        config = parse_config(default_train_config())
    setup = build_setup(config, seed_override=args.seed)
    cfg = setup.trainer
    if cfg.record_every == 0:
        from dataclasses import replace
        cfg = replace(cfg, record_every=max(1, cfg.n_iters // 50))
    dataset = setup.make_dataset(setup.n_samples)
    init = setup.make_cloud(setup.n_particles)
    cloud, history = train(setup.model, dataset, setup.grid, cfg, init)
    os.makedirs(args.out, exist_ok=True)
    history.to_csv(os.path.join(args.out, "history.csv"))
    cloud_to_csv(cloud, os.path.join(args.out, "final_cloud.csv"))
    summary = {"command": "train", "config": setup.echo(),
               "final_J": history.J[-1] if history.J else None,
               "dataset_hash": dataset.content_hash()}
    with open(os.path.join(args.out, "train_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"train: {cfg.n_iters} iterations, outputs in {args.out}")
    if history.J:
        print(f"final J = {history.J[-1]:.6g}")
    return 0


def _run_grad_check(args) -> int:
    """Exact-gradient verification on seeded random instances."""
    from .clouds import cloud_init
    from .datasets import generate_dataset
    from .grids import TimeGrid
    from .models import make_builtin_model

    config = load_config(args.config) if args.config else None
    n_seeds, tol = 20, 1e-6
    worst = 0.0
    for seed in range(n_seeds):
        if config is None:
            grid = TimeGrid(1.0, 4)
            model = make_builtin_model("neural_ode_tanh", d=2, p_hidden=1,
                                       dim_data=2)
            dataset = generate_dataset("regression", 2, 2, 100 + seed, grid,
                                       target="scaled")
            cloud = cloud_init(3, grid, model.dim_param,
                               ("gaussian", 0.0, 1.0), seed=seed)
        else:
            setup = build_setup(config, seed_override=args.seed)
            grid, model = setup.grid, setup.model
            dataset = setup.make_dataset(setup.n_samples, seed_shift=seed)
            cloud = setup.make_cloud(setup.n_particles, seed_shift=seed)
        dg = discrete_gradient(model, cloud, dataset, grid)
        fd = finite_diff_gradient(model, cloud, dataset, grid)
        worst = max(worst, float(np.max(np.abs(dg - fd) / (1.0 + np.abs(fd)))))
    passed = worst <= tol
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "grad_check_summary.json"), "w") as fh:
        json.dump({"max_rel_deviation": worst, "tolerance": tol,
                   "n_seeds": n_seeds, "passed": passed}, fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
    tag = "PASS" if passed else "FAIL"
    print(f"[{tag}] grad-check: max relative deviation {worst:.3e} "
          f"(tolerance {tol}) over {n_seeds} seeds")
    return 0 if passed else 1


def _run_study(args, study_kind: str) -> int:
    if args.config is not None:
        config = load_config(args.config)
    else:
        config = parse_config(default_study_config(study_kind))
    study = validate_study_section(config, study_kind)
    setup = build_setup(config, seed_override=args.seed)
    threads = args.threads
    if study_kind == "chaos":
        report = run_chaos_study(
            setup, study.get("n2_list", [16, 32, 64, 128]),
            study.get("n1_list", [8, 32, 128]),
            n_ref=int(study.get("n_ref", 2048)),
            n1_ref=int(study.get("n1_ref", 512)),
            n_reps=int(study.get("n_reps", 3)),
            tail_fraction=float(study.get("tail_fraction", 0.25)),
            snapshot_every=int(study.get("snapshot_every", 5)),
            slope_bounds=(float(study.get("slope_lo", 0.7)),
                          float(study.get("slope_hi", 1.3))),
            threads=threads)
    elif study_kind == "euler":
        report = run_euler_study(
            setup, [float(g) for g in study.get("gamma_list",
                                                [4e-3, 2e-3, 1e-3, 5e-4])],
            s_final=float(study.get("s_final", 1.0)),
            ref_divisor=int(study.get("ref_divisor", 8)),
            slope_bounds=(float(study.get("slope_lo", 1.6)),
                          float(study.get("slope_hi", 2.4))),
            threads=threads)
    elif study_kind == "contraction":
        shift = float(study.get("shift", 2.0))
        pairs = [(("gaussian", 0.0, 1.0), ("gaussian", shift, 1.0))] \
            * int(study.get("n_pairs", 20))
        report = run_contraction_study(
            setup, pairs,
            rate_factor=float(study.get("rate_factor", 3.0)),
            probe_scale=float(study.get("probe_scale", 0.5)),
            threads=threads)
    elif study_kind == "gibbs":
        report = run_gibbs_check(
            setup, tv_threshold=float(study.get("tv_threshold", 0.1)),
            n_bins=int(study.get("n_bins", 64)),
            burn_in_fraction=float(study.get("burn_in_fraction", 0.5)),
            snapshot_every=study.get("snapshot_every"),
            sigma_sweep=tuple(study.get("sigma_sweep", ())))
    else:
        report = run_generalization_study(
            setup, study.get("n1_list", [8, 16, 32, 64]),
            int(study.get("holdout_n", 4096)),
            n_seeds=int(study.get("n_seeds", 6)),
            ref_particles=int(study.get("ref_particles", 512)),
            ref_samples=int(study.get("ref_samples", 512)),
            slope_bounds=(float(study.get("slope_lo", 0.6)),
                          float(study.get("slope_hi", 1.4))),
            threads=threads)
    report.write(args.out)
    for line in report.summary_lines():
        print(line)
    print(f"report written to {args.out} "
          f"({report.wall_clock:.1f}s)")
    return 0 if report.passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        return _run_train(args)
    if args.command == "grad-check":
        return _run_grad_check(args)
    return _run_study(args, STUDY_COMMANDS[args.command])


if __name__ == "__main__":
    raise SystemExit(main())
