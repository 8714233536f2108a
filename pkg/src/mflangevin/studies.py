"""Experiment harness: convergence, chaos, discretisation, and generalisation.

Each runner evolves particle clouds under configurations chosen so that one
theoretical property dominates the observable, then summarises the outcome
as fitted slopes or distances with explicit pass/fail thresholds.  All
randomness is keyed, so a report is a pure function of its configuration:
reruns are byte-identical regardless of thread count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .clouds import ParticleCloud, cloud_init
from .datasets import Dataset, generate_dataset
from .grids import TimeGrid
from .langevin import (TrainerConfig, coupled_pair_run, lipschitz_probe,
                       paired_distance, train)
from .models import ModelSpec
from .objective import objective_J
from .odes import adjoint_paths, forward_paths

__all__ = [
    "StudySetup", "StudyReport", "FitResult", "CheckResult",
    "run_chaos_study", "run_euler_study", "run_contraction_study",
    "run_gibbs_check", "run_generalization_study",
    "fit_loglog", "fit_rate", "histogram_tv", "gibbs_log_density",
]


@dataclass(frozen=True)
class StudySetup:
    """Shared ingredients of a study: model, grid, trainer, data recipe."""

    model: ModelSpec
    grid: TimeGrid
    trainer: TrainerConfig
    n_particles: int = 64
    n_samples: int = 8
    dataset_kind: str = "regression"
    dataset_target: str = "scaled"
    dataset_seed: int = 101
    init: tuple = ("gaussian", 0.0, 1.0)
    init_seed: int = 7

    def make_dataset(self, n: int, seed_shift: int = 0) -> Dataset:
        return generate_dataset(self.dataset_kind, n, self.model.dim_state,
                                self.dataset_seed + seed_shift, self.grid,
                                target=self.dataset_target)

    def make_cloud(self, n: int, seed_shift: int = 0,
                   init: tuple | None = None) -> ParticleCloud:
        return cloud_init(n, self.grid, self.model.dim_param,
                          init or self.init, seed=self.init_seed + seed_shift)

    def echo(self) -> dict:
        return {
            "model": {"kind": self.model.kind, "d": self.model.dim_state,
                      "p": self.model.dim_param, "dim_data": self.model.dim_data},
            "grid": {"horizon": self.grid.horizon, "n_steps": self.grid.n_steps},
            "trainer": {"sigma": self.trainer.sigma,
                        "kappa": self.trainer.prior.kappa,
                        "gamma": self.trainer.gamma,
                        "n_iters": self.trainer.n_iters,
                        "seed": self.trainer.seed,
                        "noise_dt": self.trainer.noise_dt},
            "n_particles": self.n_particles,
            "n_samples": self.n_samples,
            "dataset": {"kind": self.dataset_kind, "target": self.dataset_target,
                        "seed": self.dataset_seed},
            "init": list(self.init),
            "init_seed": self.init_seed,
        }


@dataclass(frozen=True)
class FitResult:
    name: str
    slope: float
    stderr: float
    lo: float
    hi: float

    @property
    def passed(self) -> bool:
        return self.lo <= self.slope <= self.hi


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    comparator: str = "<="

    @property
    def passed(self) -> bool:
        if self.comparator == "<=":
            return self.value <= self.threshold
        if self.comparator == ">=":
            return self.value >= self.threshold
        raise ValueError(f"unknown comparator {self.comparator!r}")


@dataclass
class StudyReport:
    """Structured record of one study run with explicit pass/fail lines."""

    kind: str
    config: dict
    series: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)
    fits: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    dataset_hash: str = ""
    seed: int = 0
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return (all(f.passed for f in self.fits)
                and all(c.passed for c in self.checks))

    def summary_lines(self) -> list[str]:
        lines = []
        for f in self.fits:
            tag = "PASS" if f.passed else "FAIL"
            lines.append(f"[{tag}] {self.kind}/{f.name}: slope={f.slope:.4f} "
                         f"(se={f.stderr:.4f}) target=[{f.lo}, {f.hi}]")
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            lines.append(f"[{tag}] {self.kind}/{c.name}: value={c.value:.6g} "
                         f"threshold {c.comparator} {c.threshold}")
        return lines

    def write(self, outdir) -> None:
        import os
        os.makedirs(outdir, exist_ok=True)
        for name, table in self.series.items():
            path = os.path.join(outdir, f"{self.kind}_{name}.csv")
            cols = list(table.keys())
            rows = len(next(iter(table.values()))) if table else 0
            with open(path, "w") as fh:
                fh.write(",".join(cols) + "\n")
                for r in range(rows):
                    fh.write(",".join(_fmt(table[c][r]) for c in cols) + "\n")
        for name, (xs, ys) in self.plots.items():
            path = os.path.join(outdir, f"{self.kind}_{name}.dat")
            with open(path, "w") as fh:
                for x, y in zip(xs, ys):
                    fh.write(f"{_fmt(x)} {_fmt(y)}\n")
        summary = {
            "kind": self.kind,
            "config": self.config,
            "fits": [{**asdict(f), "passed": f.passed} for f in self.fits],
            "checks": [{**asdict(c), "passed": c.passed} for c in self.checks],
            "passed": self.passed,
            "dataset_hash": self.dataset_hash,
            "seed": self.seed,
            "wall_clock_seconds": self.wall_clock,
        }
        with open(os.path.join(outdir, f"{self.kind}_summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _map_points(fn, points, threads: int):
    """Evaluate fn over points, optionally in a thread pool; order preserved.

    Every point is an independent deterministic computation, so the result
    does not depend on the executor or the thread count.
    """
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, points))
    return [fn(pt) for pt in points]


def fit_loglog(x, y):
    """Least-squares slope of log y against log x with its standard error.

    Nonpositive values (exact self-comparisons) are excluded; with fewer
    than two usable points the slope is reported as NaN.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return math.nan, math.inf
    return fit_rate(np.log(x[keep]), np.log(y[keep]))


def fit_rate(x, logy):
    """Least-squares slope of ``logy`` against ``x`` with its standard error."""
    x = np.asarray(x, dtype=float)
    logy = np.asarray(logy, dtype=float)
    design = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(design, logy, rcond=None)
    resid = logy - design @ coef
    dof = max(x.size - 2, 1)
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if sxx > 0 else math.inf
    return float(coef[0]), stderr


def _squared_paired(a: np.ndarray, b: np.ndarray, dt: float) -> float:
    return paired_distance(a, b, dt) ** 2


def _tail_iters(n_iters: int, snapshot_every: int, tail_fraction: float):
    cutoff = (1.0 - tail_fraction) * n_iters
    return [it for it in range(0, n_iters + 1, snapshot_every) if it >= cutoff] \
        or [n_iters]


def _snapshots_dict(history) -> dict:
    return {it: cloud for it, cloud in history.snapshots}


# ---------------------------------------------------------------------------
# propagation of chaos
# ---------------------------------------------------------------------------

def run_chaos_study(setup: StudySetup, n2_list, n1_list, *, n_ref: int = 2048,
                    n1_ref: int = 1024, n_reps: int = 1,
                    tail_fraction: float = 0.25, snapshot_every: int = 5,
                    slope_bounds=(0.7, 1.3), threads: int = 1) -> StudyReport:
    """Particle/data scaling of the distance to a large-system surrogate.

    The mean-field limit is approximated by one large run (``n_ref``
    particles, ``n1_ref`` training samples).  Because draws are keyed per
    particle and per sample, each studied run shares its initial particles,
    its Brownian increments, and its data prefix with the surrogate, so the
    mean squared paired distance estimates the chaos error directly.  The
    fitted slope of log MSE against log(1/N1 + 1/N2) is checked against
    ``slope_bounds``.
    """
    t0 = time.perf_counter()
    n2_list = sorted(n2_list)
    n1_list = sorted(n1_list)
    if not n2_list or not n1_list:
        raise ValueError("size lists must be nonempty")
    if max(n2_list) > n_ref or max(n1_list) > n1_ref:
        raise ValueError("surrogate sizes must dominate the studied sizes")
    cfg = setup.trainer
    tail = _tail_iters(cfg.n_iters, snapshot_every, tail_fraction)
    mse = np.zeros((len(n1_list), len(n2_list)))
    dataset_hash = ""
    for rep in range(n_reps):
        cfg_rep = replace(cfg, seed=cfg.seed + rep,
                          snapshot_every=snapshot_every, record_every=0)
        master = setup.make_dataset(n1_ref, seed_shift=rep)
        if rep == 0:
            dataset_hash = master.content_hash()
        ref_init = setup.make_cloud(n_ref, seed_shift=rep)
        _, ref_hist = train(setup.model, master, setup.grid, cfg_rep, ref_init)
        ref_snaps = _snapshots_dict(ref_hist)

        def point(idx):
            i1, i2 = idx
            ds = master.subset(n1_list[i1])
            init = setup.make_cloud(n2_list[i2], seed_shift=rep)
            _, hist = train(setup.model, ds, setup.grid, cfg_rep, init)
            snaps = _snapshots_dict(hist)
            vals = [_squared_paired(snaps[it].particles,
                                    ref_snaps[it].particles[:n2_list[i2]],
                                    setup.grid.dt) for it in tail]
            return float(np.mean(vals))

        points = [(i1, i2) for i1 in range(len(n1_list))
                  for i2 in range(len(n2_list))]
        for idx, val in zip(points, _map_points(point, points, threads)):
            mse[idx] += val / n_reps
    inv = np.array([[1.0 / n1 + 1.0 / n2 for n2 in n2_list] for n1 in n1_list])
    slope, stderr = fit_loglog(inv.ravel(), mse.ravel())
    report = StudyReport(kind="chaos", config={**setup.echo(),
                                               "n2_list": list(n2_list),
                                               "n1_list": list(n1_list),
                                               "n_ref": n_ref, "n1_ref": n1_ref,
                                               "n_reps": n_reps,
                                               "tail_fraction": tail_fraction,
                                               "snapshot_every": snapshot_every},
                         dataset_hash=dataset_hash, seed=cfg.seed)
    report.series["points"] = {
        "n1": [n1 for n1 in n1_list for _ in n2_list],
        "n2": list(n2_list) * len(n1_list),
        "inv_sum": list(inv.ravel()),
        "mse": list(mse.ravel()),
    }
    report.plots["mse_vs_inv"] = (inv.ravel(), mse.ravel())
    report.fits.append(FitResult("mse_slope", slope, stderr, *slope_bounds))
    report.wall_clock = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# training-time discretisation rate
# ---------------------------------------------------------------------------

def run_euler_study(setup: StudySetup, gamma_list, *, s_final: float = 1.0,
                    ref_divisor: int = 8, slope_bounds=(1.6, 2.4),
                    threads: int = 1) -> StudyReport:
    """Strong rate in the training-time step against a pathwise-coupled reference.

    Brownian increments are generated at the reference resolution and
    summed by coarser runs, so every run discretises the same path and the
    final-time mean squared deviation from the reference isolates the
    discretisation error.  The slope of log MSE against log gamma is
    checked against ``slope_bounds``.
    """
    t0 = time.perf_counter()
    gamma_list = sorted(gamma_list, reverse=True)
    if len(gamma_list) < 2:
        raise ValueError("need at least two step sizes")
    gamma_ref = min(gamma_list) / ref_divisor
    for g in gamma_list + [gamma_ref]:
        if abs(s_final / g - round(s_final / g)) > 1e-9:
            raise ValueError("every step size must divide the final time")
        if abs(g / gamma_ref - round(g / gamma_ref)) > 1e-9:
            raise ValueError("step sizes must be integer multiples of the "
                             "reference step")
    dataset = setup.make_dataset(setup.n_samples)
    init = setup.make_cloud(setup.n_particles)

    def run_at(gamma: float) -> np.ndarray:
        cfg = replace(setup.trainer, gamma=gamma,
                      n_iters=int(round(s_final / gamma)),
                      noise_dt=gamma_ref, record_every=0, snapshot_every=0)
        cloud, _ = train(setup.model, dataset, setup.grid, cfg, init)
        return cloud.particles

    ref = run_at(gamma_ref)
    finals = _map_points(run_at, list(gamma_list), threads)
    mse = np.array([_squared_paired(f, ref, setup.grid.dt) for f in finals])
    slope, stderr = fit_loglog(gamma_list, mse)
    report = StudyReport(kind="euler", config={**setup.echo(),
                                               "gamma_list": list(gamma_list),
                                               "gamma_ref": gamma_ref,
                                               "s_final": s_final},
                         dataset_hash=dataset.content_hash(),
                         seed=setup.trainer.seed)
    report.series["points"] = {"gamma": list(gamma_list), "mse": list(mse)}
    report.plots["mse_vs_gamma"] = (np.asarray(gamma_list), mse)
    report.fits.append(FitResult("mse_slope", slope, stderr, *slope_bounds))
    report.wall_clock = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# contraction under synchronous coupling
# ---------------------------------------------------------------------------

def run_contraction_study(setup: StudySetup, init_pairs=None, *,
                          n_pairs: int = 20, rate_factor: float = 3.0,
                          probe_scale: float = 0.5, fit_skip: float = 0.1,
                          floor: float = 1e-12, threads: int = 1) -> StudyReport:
    """Exponential contraction of coupled runs in the regularised regime.

    Each pair of initialisations evolves under identical noise; the slope
    of log squared distance in training time gives the empirical rate.
    Checks: every fitted slope is negative, and each rate is within
    ``rate_factor`` of sigma^2 kappa - 4 L where L is the empirical
    Lipschitz probe of the drift.
    """
    t0 = time.perf_counter()
    if init_pairs is None:
        init_pairs = [(("gaussian", 0.0, 1.0), ("gaussian", 2.0, 1.0))] * n_pairs
    cfg = setup.trainer
    dataset = setup.make_dataset(setup.n_samples)
    base = setup.make_cloud(setup.n_particles)
    l_hat = lipschitz_probe(setup.model, dataset, setup.grid, base,
                            n_probes=8, scale=probe_scale, seed=setup.init_seed)
    predicted = cfg.sigma ** 2 * cfg.prior.kappa - 4.0 * l_hat

    def pair_rate(item):
        k, (ia, ib) = item
        cfg_k = replace(cfg, seed=cfg.seed + k, record_every=0,
                        snapshot_every=0)
        ca = setup.make_cloud(setup.n_particles, seed_shift=2 * k, init=ia)
        cb = setup.make_cloud(setup.n_particles, seed_shift=2 * k + 1, init=ib)
        res = coupled_pair_run(setup.model, dataset, setup.grid, cfg_k, ca, cb)
        d2 = res.distance ** 2
        keep = d2 > floor * max(d2[0], 1e-300)
        keep[:max(1, int(fit_skip * len(d2)))] = False
        if keep.sum() < 3:
            return math.nan, res
        slope, _ = fit_rate(res.s[keep], np.log(d2[keep]))
        return slope, res

    results = _map_points(pair_rate, list(enumerate(init_pairs)), threads)
    slopes = np.array([r[0] for r in results])
    rates = -slopes
    n_negative = int(np.sum(slopes < 0))
    worst_ratio = 0.0
    if predicted > 0:
        ratios = np.maximum(rates / predicted, predicted / np.maximum(rates, 1e-300))
        worst_ratio = float(np.max(ratios))
    report = StudyReport(kind="contraction",
                         config={**setup.echo(), "n_pairs": len(init_pairs),
                                 "probe_scale": probe_scale,
                                 "lipschitz_probe": l_hat,
                                 "predicted_rate": predicted},
                         dataset_hash=dataset.content_hash(), seed=cfg.seed)
    report.series["rates"] = {
        "pair": list(range(len(init_pairs))),
        "fitted_rate": list(rates),
        "predicted_rate": [predicted] * len(init_pairs),
    }
    example = results[0][1]
    report.series["distance_pair0"] = {"s": list(example.s),
                                       "distance": list(example.distance)}
    report.plots["log_distance_pair0"] = (example.s, example.distance)
    report.checks.append(CheckResult("negative_slopes", float(n_negative),
                                     float(len(init_pairs)), comparator=">="))
    report.checks.append(CheckResult("rate_within_factor", worst_ratio,
                                     rate_factor))
    report.wall_clock = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# Gibbs stationarity
# ---------------------------------------------------------------------------

def gibbs_log_density(model: ModelSpec, cloud: ParticleCloud,
                      dataset: Dataset, grid: TimeGrid, node: int,
                      sigma: float, prior, a_grid: np.ndarray,
                      paths=None) -> np.ndarray:
    """Unnormalised stationary log density at one node, evaluated on a grid.

    log q_l(a) = -U(a) - (2/sigma^2) h_l(a) with h_l the data-averaged
    Hamiltonian at the cloud's own state and costate (the self-consistent
    field the particles feel).  The terminal node carries no drift, so its
    density is the prior itself.  Pass ``paths`` = (x, p) to reuse solved
    trajectories across nodes.
    """
    a = a_grid.reshape(-1, 1)
    base = prior.log_density(a)
    if node >= grid.n_steps:
        return base
    if paths is None:
        x = forward_paths(model, cloud, dataset, grid)
        p = adjoint_paths(model, cloud, dataset, x, grid)
    else:
        x, p = paths
    zeta_l = dataset.zeta_node(node)[None, :, :] if model.dim_data else None
    a_b = a[:, None, :]
    x_b = x[None, :, node, :]
    phi_val = model.phi(grid.nodes[node], x_b, a_b, zeta_l)
    f_val = model.f(grid.nodes[node], x_b, a_b, zeta_l)
    h = (np.einsum("gkd,kd->gk", phi_val, p[:, node + 1, :]) + f_val).mean(axis=1)
    return base - (2.0 / sigma ** 2) * h


def histogram_tv(samples: np.ndarray, log_density, n_bins: int = 64,
                 extend: float = 0.1, quad_per_bin: int = 16) -> float:
    """Total variation between a histogram and a density on the sample range.

    Bins are uniform over the particle range extended by ``extend`` (half
    on each side); the density is trapezoid-integrated per bin and
    normalised over the window.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    lo, hi = samples.min(), samples.max()
    pad = 0.5 * extend * (hi - lo)
    lo, hi = lo - pad, hi + pad
    edges = np.linspace(lo, hi, n_bins + 1)
    emp, _ = np.histogram(samples, bins=edges)
    emp = emp / emp.sum()
    fine = np.linspace(lo, hi, n_bins * quad_per_bin + 1)
    logd = np.asarray(log_density(fine), dtype=float)
    dens = np.exp(logd - logd.max())
    total = np.trapezoid(dens, fine)
    per_bin = np.array([
        np.trapezoid(dens[b * quad_per_bin:(b + 1) * quad_per_bin + 1],
                     fine[b * quad_per_bin:(b + 1) * quad_per_bin + 1])
        for b in range(n_bins)]) / total
    return 0.5 * float(np.abs(emp - per_bin).sum())


def _density_tv(log_q1, log_q2, lo: float, hi: float,
                n_quad: int = 4096) -> float:
    xs = np.linspace(lo, hi, n_quad)
    q1 = np.exp(log_q1(xs) - np.max(log_q1(xs)))
    q2 = np.exp(log_q2(xs) - np.max(log_q2(xs)))
    q1 /= np.trapezoid(q1, xs)
    q2 /= np.trapezoid(q2, xs)
    return 0.5 * float(np.trapezoid(np.abs(q1 - q2), xs))


def run_gibbs_check(setup: StudySetup, *, tv_threshold: float = 0.1,
                    n_bins: int = 64, burn_in_fraction: float = 0.5,
                    snapshot_every: int | None = None,
                    sigma_sweep=()) -> StudyReport:
    """Stationary law against the self-consistent Gibbs density (p = 1 only).

    Trains long, discards the first ``burn_in_fraction`` of iterations,
    pools the remaining snapshots per node, and compares the histogram to
    exp(-U - (2/sigma^2) h_l) computed from the final cloud.  The optional
    ``sigma_sweep`` reports how the Gibbs density approaches the prior as
    sigma grows.
    """
    t0 = time.perf_counter()
    if setup.model.dim_param != 1:
        raise ValueError("the density comparison requires dim_param == 1")
    cfg = setup.trainer
    if cfg.sigma <= 0:
        raise ValueError("stationarity check needs sigma > 0")
    if snapshot_every is None:
        snapshot_every = max(1, cfg.n_iters // 40)
    dataset = setup.make_dataset(setup.n_samples)
    init = setup.make_cloud(setup.n_particles)
    cfg_run = replace(cfg, record_every=0, snapshot_every=snapshot_every)
    final, hist = train(setup.model, dataset, setup.grid, cfg_run, init)
    cutoff = burn_in_fraction * cfg.n_iters
    pooled = {}
    for it, cloud in hist.snapshots:
        if it >= cutoff:
            for l in range(setup.grid.n_nodes):
                pooled.setdefault(l, []).append(cloud.particles[:, l, 0])
    x = forward_paths(setup.model, final, dataset, setup.grid)
    p = adjoint_paths(setup.model, final, dataset, x, setup.grid)
    tvs = []
    for l in range(setup.grid.n_nodes):
        samples = np.concatenate(pooled[l])

        def log_density(a, node=l):
            return gibbs_log_density(setup.model, final, dataset, setup.grid,
                                     node, cfg.sigma, cfg.prior, a,
                                     paths=(x, p))

        tvs.append(histogram_tv(samples, log_density, n_bins=n_bins))
    report = StudyReport(kind="gibbs",
                         config={**setup.echo(), "tv_threshold": tv_threshold,
                                 "n_bins": n_bins,
                                 "burn_in_fraction": burn_in_fraction,
                                 "snapshot_every": snapshot_every},
                         dataset_hash=dataset.content_hash(), seed=cfg.seed)
    report.series["per_node_tv"] = {"node": list(range(setup.grid.n_nodes)),
                                    "tv": tvs}
    report.plots["tv_per_node"] = (np.arange(setup.grid.n_nodes), np.array(tvs))
    report.checks.append(CheckResult("max_node_tv", float(max(tvs)),
                                     tv_threshold))
    if sigma_sweep:
        sweep_tv = []
        span = float(np.abs(final.particles).max()) + 4.0
        for s_val in sigma_sweep:
            cfg_s = replace(cfg_run, sigma=float(s_val))
            final_s, _ = train(setup.model, dataset, setup.grid, cfg_s, init)
            xs = forward_paths(setup.model, final_s, dataset, setup.grid)
            ps = adjoint_paths(setup.model, final_s, dataset, xs, setup.grid)
            worst = 0.0
            for l in range(setup.grid.n_steps):
                worst = max(worst, _density_tv(
                    lambda a, node=l, c=final_s, sv=s_val: gibbs_log_density(
                        setup.model, c, dataset, setup.grid, node, sv,
                        cfg.prior, a, paths=(xs, ps)),
                    lambda a: cfg.prior.log_density(a.reshape(-1, 1)),
                    -span, span))
            sweep_tv.append(worst)
        report.series["sigma_sweep"] = {"sigma": list(sigma_sweep),
                                        "max_tv_vs_prior": sweep_tv}
        monotone = all(b <= a + 1e-12 for a, b in zip(sweep_tv, sweep_tv[1:]))
        report.checks.append(CheckResult("sweep_monotone", float(monotone),
                                         1.0, comparator=">="))
    report.wall_clock = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# generalisation scaling
# ---------------------------------------------------------------------------

def run_generalization_study(setup: StudySetup, n1_list, holdout_n: int, *,
                             n_seeds: int = 8, ref_particles: int = 512,
                             ref_samples: int = 1024,
                             slope_bounds=(0.6, 1.4),
                             threads: int = 1) -> StudyReport:
    """Squared out-of-sample cost gap against the training-set size.

    A long, large-cloud run on a large independent dataset stands in for
    the population optimum; each point trains on the first N1 samples of a
    per-seed master set and evaluates the unregularised cost on a common
    holdout.  All runs share initial particles and Brownian increments
    (common random numbers), so the per-seed gap fluctuation isolates the
    statistical term attributed to the sample size while the optimisation
    errors stay small and largely cancel.  The fitted slope of log mean
    squared gap against log(1/N1) is checked against ``slope_bounds``.
    """
    t0 = time.perf_counter()
    n1_list = sorted(n1_list)
    if holdout_n < max(n1_list):
        raise ValueError("holdout must dominate the studied sizes")
    cfg = replace(setup.trainer, record_every=0, snapshot_every=0)
    holdout = setup.make_dataset(holdout_n, seed_shift=9000)
    ref_ds = setup.make_dataset(ref_samples, seed_shift=8000)
    ref_init = setup.make_cloud(ref_particles)
    ref_cloud, _ = train(setup.model, ref_ds, setup.grid, cfg, ref_init)
    j_ref = objective_J(setup.model, ref_cloud, holdout, setup.grid)
    init = setup.make_cloud(setup.n_particles)

    def point(item):
        rep, n1 = item
        master = setup.make_dataset(max(n1_list), seed_shift=100 + rep)
        cloud, _ = train(setup.model, master.subset(n1), setup.grid,
                         cfg, init)
        j = objective_J(setup.model, cloud, holdout, setup.grid)
        return (j - j_ref) ** 2

    points = [(rep, n1) for n1 in n1_list for rep in range(n_seeds)]
    gaps = np.array(_map_points(point, points, threads)).reshape(len(n1_list),
                                                                 n_seeds)
    mean_sq = gaps.mean(axis=1)
    slope, stderr = fit_loglog([1.0 / n1 for n1 in n1_list], mean_sq)
    report = StudyReport(kind="generalization",
                         config={**setup.echo(), "n1_list": list(n1_list),
                                 "holdout_n": holdout_n, "n_seeds": n_seeds,
                                 "ref_particles": ref_particles,
                                 "ref_samples": ref_samples,
                                 "j_ref": j_ref},
                         dataset_hash=holdout.content_hash(), seed=cfg.seed)
    report.series["points"] = {
        "n1": list(n1_list),
        "inv_n1": [1.0 / n1 for n1 in n1_list],
        "mean_sq_gap": list(mean_sq),
    }
    report.series["gaps"] = {
        "n1": [n1 for n1 in n1_list for _ in range(n_seeds)],
        "seed": list(range(n_seeds)) * len(n1_list),
        "sq_gap": list(gaps.ravel()),
    }
    report.plots["gap_vs_invn1"] = (np.array([1.0 / n for n in n1_list]),
                                    mean_sq)
    report.fits.append(FitResult("gap_slope", slope, stderr, *slope_bounds))
    report.wall_clock = time.perf_counter() - t0
    return report
