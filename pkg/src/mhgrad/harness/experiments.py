"""Replicated experiment runners.

Every replicate is an independent task whose random stream is derived from
``(seed, replicate, stream)``, so the tasks can be farmed out to any number
of worker processes.  Results are gathered in task order, which makes the
output independent of the worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from mhgrad.estimators import (
    Mode,
    estimate_from_moments,
    malliavin_sample,
    pathwise_sample,
    sample_grad_pair,
)
from mhgrad.greeks import (
    GbmSpec,
    delta_bump_sample,
    delta_malliavin_sample,
    delta_oracle,
    delta_pathwise_sample,
)
from mhgrad.harness.config import Experiment, ExperimentConfig, format_value
from mhgrad.harness.output import Table
from mhgrad.harness.seeding import derive_stream_seed
from mhgrad.losses import LossFn
from mhgrad.mixing import RIDGE_REL, lambda_star, moments_from_arrays
from mhgrad.models import CoupledGaussian1D
from mhgrad.oracle import QuadratureRule, true_gradient
from mhgrad.stats import PairedMoments, RunningMoments, merge_all

# stream ids, one per experiment family
TABLE1_STREAM = 1000
LAMBDA_STREAM = 2000
VARRED_STREAM = 3000
BATCH_REF_STREAM = 4000
BATCH_TRIAL_STREAM = 4001
GREEKS_STREAM = 5000
TIMING_STREAM = 6000

METHODS = (Mode.PATHWISE, Mode.MALLIAVIN, Mode.HYBRID)
TABLE1_LOSSES = ("hinge", "clipquad")
REF_CHUNK = 1 << 20


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _map(fn, tasks, workers: int):
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _sem(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan")


def _common_meta(cfg: ExperimentConfig) -> dict:
    meta = {f"config.{k}": v for k, v in cfg.items()}
    meta["weight"] = "normalized" if cfg.use_normalized else "raw"
    meta["ridge_rule"] = (
        format_value(cfg.ridge) if cfg.ridge is not None else f"{RIDGE_REL!r}*(v_path+v_mall+1e-30)"
    )
    meta["lambda_policy"] = (
        "split-batch: weight from first half applied to second half"
        if cfg.split_batch
        else "re-estimated per replicate on the same batch"
    )
    return meta


# -- synthetic coupled-Gaussian replicates ---------------------------------


def _synthetic_task(task):
    """One replicate: paired moments per loss, optionally split in halves."""
    theta, alpha, losses, n, seed, normalized, split = task
    model = CoupledGaussian1D(theta, alpha)
    eps = _rng(seed).standard_normal(n)
    out = {}
    for name in losses:
        pair = sample_grad_pair(model, LossFn.from_name(name), eps, normalized)
        if split:
            h = n // 2
            out[name] = (
                PairedMoments.from_arrays(pair.g_path[:h], pair.g_mall[:h]),
                PairedMoments.from_arrays(pair.g_path[h:], pair.g_mall[h:]),
            )
        else:
            out[name] = (PairedMoments.from_arrays(pair.g_path, pair.g_mall),)
    return out


def _estimates(parts, ridge, split):
    """Per-mode BatchEstimates for one replicate's moments."""
    full = merge_all(parts)
    est = {m: estimate_from_moments(full, m) for m in (Mode.PATHWISE, Mode.MALLIAVIN)}
    if split:
        lam = lambda_star(*parts[0].moments(), ridge)
        est[Mode.HYBRID] = estimate_from_moments(parts[1], Mode.HYBRID, lam=lam)
    else:
        est[Mode.HYBRID] = estimate_from_moments(full, Mode.HYBRID, ridge)
    return est


def _synthetic_runs(cfg, alpha, losses, stream):
    tasks = [
        (cfg.theta, alpha, tuple(losses), cfg.n_samples, derive_stream_seed(cfg.seed, r, stream),
         cfg.use_normalized, cfg.split_batch)
        for r in range(cfg.replicates)
    ]
    results = _map(_synthetic_task, tasks, cfg.workers)
    return {name: [_estimates(res[name], cfg.ridge, cfg.split_batch) for res in results] for name in losses}


def run_table1(cfg: ExperimentConfig) -> Table:
    """RMSE of each estimator's replicate estimates against the oracle gradient."""
    model = CoupledGaussian1D(cfg.theta, cfg.alpha)
    rule = QuadratureRule.gauss_hermite(cfg.n_nodes)
    runs = _synthetic_runs(cfg, cfg.alpha, TABLE1_LOSSES, TABLE1_STREAM)
    table = Table(
        ("loss", "method", "rmse", "rmse_se", "mean_estimate", "grad_ref", "bias",
         "per_sample_variance", "lambda_hat_mean", "lambda_hat_se", "n_samples", "replicates")
    )
    for name in TABLE1_LOSSES:
        g_true = true_gradient(model, LossFn.from_name(name), rule)
        lams = [e[Mode.HYBRID].lambda_hat for e in runs[name]]
        for mode in METHODS:
            g = np.array([e[mode].mean for e in runs[name]])
            sq = (g - g_true) ** 2
            rmse = math.sqrt(sq.mean())
            # delta method: se(sqrt(m)) = se(m) / (2 sqrt(m))
            rmse_se = _sem(sq) / (2 * rmse) if rmse > 0 else float("nan")
            table.rows.append(dict(
                loss=name, method=mode.value, rmse=rmse, rmse_se=rmse_se,
                mean_estimate=g.mean(), grad_ref=g_true, bias=g.mean() - g_true,
                per_sample_variance=np.mean([e[mode].variance for e in runs[name]]),
                lambda_hat_mean=float(np.mean(lams)), lambda_hat_se=_sem(lams),
                n_samples=cfg.n_samples, replicates=cfg.replicates,
            ))
    table.meta = _common_meta(cfg)
    table.meta["rmse_definition"] = "sqrt(mean over replicates of (estimate - grad_ref)^2)"
    table.meta["grad_ref"] = f"central difference of kink-split quadrature objective, n_nodes={cfg.n_nodes}"
    return table


def run_lambda_vs_alpha(cfg: ExperimentConfig) -> Table:
    table = Table(("alpha", "loss", "lambda_mean", "lambda_se", "band_lo", "band_hi", "replicates"))
    for alpha in cfg.alphas:
        # common random numbers across the alpha grid
        runs = _synthetic_runs(cfg, alpha, (cfg.loss,), LAMBDA_STREAM)[cfg.loss]
        lams = np.array([e[Mode.HYBRID].lambda_hat for e in runs])
        m, se = float(lams.mean()), _sem(lams)
        table.rows.append(dict(alpha=alpha, loss=cfg.loss, lambda_mean=m, lambda_se=se,
                               band_lo=m - 2 * se, band_hi=m + 2 * se, replicates=cfg.replicates))
    table.meta = _common_meta(cfg)
    return table


def run_var_reduction(cfg: ExperimentConfig) -> Table:
    """Within-replicate variance reduction of the hybrid vs. the better base estimator.

    Also reports the across-replicate variance of each estimator's batch
    mean (``rep_var_*``), which includes the noise of the estimated weight.
    """
    table = Table(
        ("alpha", "loss", "lambda_mean", "reduction_pct", "reduction_se", "band_lo", "band_hi",
         "var_path", "var_mall", "var_hybrid",
         "rep_var_path", "rep_var_mall", "rep_var_hybrid",
         "rep_var_se_path", "rep_var_se_mall", "rep_var_se_hybrid", "replicates")
    )
    for alpha in cfg.alphas:
        runs = _synthetic_runs(cfg, alpha, (cfg.loss,), VARRED_STREAM)[cfg.loss]
        v = {m: np.array([e[m].variance for e in runs]) for m in METHODS}
        red = 100.0 * (1.0 - v[Mode.HYBRID] / np.minimum(v[Mode.PATHWISE], v[Mode.MALLIAVIN]))
        row = dict(alpha=alpha, loss=cfg.loss,
                   lambda_mean=float(np.mean([e[Mode.HYBRID].lambda_hat for e in runs])),
                   reduction_pct=float(red.mean()), reduction_se=_sem(red),
                   var_path=float(v[Mode.PATHWISE].mean()), var_mall=float(v[Mode.MALLIAVIN].mean()),
                   var_hybrid=float(v[Mode.HYBRID].mean()), replicates=cfg.replicates)
        row["band_lo"] = row["reduction_pct"] - 2 * row["reduction_se"]
        row["band_hi"] = row["reduction_pct"] + 2 * row["reduction_se"]
        for m, key in zip(METHODS, ("path", "mall", "hybrid")):
            means = np.array([e[m].mean for e in runs])
            rv = float(means.var(ddof=1)) if means.size > 1 else float("nan")
            row[f"rep_var_{key}"] = rv
            # normal-theory standard error of a sample variance
            row[f"rep_var_se_{key}"] = rv * math.sqrt(2.0 / (means.size - 1)) if means.size > 1 else float("nan")
        table.rows.append(row)
    table.meta = _common_meta(cfg)
    table.meta["reduction_definition"] = "100*(1 - var_hybrid/min(var_path, var_mall)) per replicate"
    return table


# -- batch-size convergence of the mixing weight ---------------------------


def _ref_chunk_task(task):
    theta, alpha, loss, n, seed, normalized = task
    eps = _rng(seed).standard_normal(n)
    pair = sample_grad_pair(CoupledGaussian1D(theta, alpha), LossFn.from_name(loss), eps, normalized)
    return PairedMoments.from_arrays(pair.g_path, pair.g_mall)


def _batch_trial_task(task):
    theta, alpha, loss, b, trials, seed, normalized, ridge, lam_ref = task
    eps = _rng(seed).standard_normal((trials, b))
    pair = sample_grad_pair(CoupledGaussian1D(theta, alpha), LossFn.from_name(loss), eps, normalized)
    lam = lambda_star(*moments_from_arrays(pair.g_path, pair.g_mall, axis=-1), ridge)
    return (np.asarray(lam) - lam_ref) ** 2


def reference_lambda(cfg: ExperimentConfig, alpha=None) -> float:
    alpha = cfg.alpha if alpha is None else alpha
    sizes = [REF_CHUNK] * (cfg.ref_samples // REF_CHUNK)
    if cfg.ref_samples % REF_CHUNK:
        sizes.append(cfg.ref_samples % REF_CHUNK)
    tasks = [
        (cfg.theta, alpha, cfg.loss, n, derive_stream_seed(cfg.seed, i, BATCH_REF_STREAM), cfg.use_normalized)
        for i, n in enumerate(sizes)
    ]
    pm = merge_all(_map(_ref_chunk_task, tasks, cfg.workers))
    return float(lambda_star(*pm.moments(), cfg.ridge))


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def run_batch_mse(cfg: ExperimentConfig) -> Table:
    lam_ref = reference_lambda(cfg)
    tasks = [
        (cfg.theta, cfg.alpha, cfg.loss, b, cfg.trials, derive_stream_seed(cfg.seed, b, BATCH_TRIAL_STREAM),
         cfg.use_normalized, cfg.ridge, lam_ref)
        for b in cfg.batch_sizes
    ]
    sq = _map(_batch_trial_task, tasks, cfg.workers)
    mse = [float(s.mean()) for s in sq]
    slope = loglog_slope(cfg.batch_sizes, mse) if len(mse) > 1 and min(mse) > 0 else float("nan")
    table = Table(("batch_size", "mse", "mse_se", "lambda_ref", "slope", "trials"))
    for b, s, m in zip(cfg.batch_sizes, sq, mse):
        table.rows.append(dict(batch_size=b, mse=m, mse_se=_sem(s), lambda_ref=lam_ref, slope=slope, trials=cfg.trials))
    table.meta = _common_meta(cfg)
    table.meta["reference"] = f"lambda from {cfg.ref_samples} paired samples"
    return table


# -- option Delta ------------------------------------------------------------


def gbm_spec(cfg: ExperimentConfig, moneyness: float) -> GbmSpec:
    return GbmSpec(cfg.gbm_s0, cfg.gbm_mu, cfg.gbm_sigma, cfg.gbm_T, moneyness * cfg.gbm_s0)


def _greeks_task(task):
    spec, n, seed = task
    w = math.sqrt(spec.T) * _rng(seed).standard_normal(n)
    pm = PairedMoments.from_arrays(delta_pathwise_sample(spec, w), delta_malliavin_sample(spec, w))
    return pm, RunningMoments.from_array(delta_bump_sample(spec, w))


def run_greeks(cfg: ExperimentConfig) -> Table:
    rule = QuadratureRule.gauss_hermite(cfg.n_nodes)
    table = Table(("moneyness", "method", "delta_mean", "delta_se", "variance", "lambda_hat"))
    for i, mny in enumerate(cfg.moneyness):
        spec = gbm_spec(cfg, mny)
        tasks = [(spec, cfg.n_samples, derive_stream_seed(cfg.seed, r, GREEKS_STREAM + i)) for r in range(cfg.replicates)]
        results = _map(_greeks_task, tasks, cfg.workers)
        pms = [p for p, _ in results]
        pooled = merge_all(pms)
        v_path, v_mall, _ = pooled.moments()
        hyb = [estimate_from_moments(p, Mode.HYBRID, cfg.ridge) for p in pms]
        hyb_moments = merge_all(RunningMoments(e.n, e.mean, e.variance * (e.n - 1)) for e in hyb)
        bump = merge_all(b for _, b in results)
        n_total = pooled.n
        rows = [
            ("pathwise", pooled.mean_x, v_path, None),
            ("malliavin", pooled.mean_y, v_mall, None),
            ("hybrid", hyb_moments.mean, hyb_moments.variance, float(np.mean([e.lambda_hat for e in hyb]))),
            ("bump", bump.mean, bump.variance, None),
        ]
        for method, mean, var, lam in rows:
            table.rows.append(dict(moneyness=mny, method=method, delta_mean=mean,
                                   delta_se=math.sqrt(var / n_total), variance=var, lambda_hat=lam))
        table.rows.append(dict(moneyness=mny, method="oracle", delta_mean=delta_oracle(spec, rule),
                               delta_se=0.0, variance=0.0, lambda_hat=None))
    table.meta = _common_meta(cfg)
    table.meta["weight"] = "gbm W_T/(sigma*T*s0)"
    table.meta["gbm"] = (f"s0={cfg.gbm_s0!r},mu={cfg.gbm_mu!r},sigma={cfg.gbm_sigma!r},T={cfg.gbm_T!r},"
                         "K=moneyness*s0,undiscounted")
    table.meta["bump"] = "forward difference h=1e-4*s0 with common random numbers"
    return table


# -- cost accounting ----------------------------------------------------------


def run_timing(cfg: ExperimentConfig) -> Table:
    """Wall-clock cost of each estimator on a batch of ``n_samples`` draws.

    Timings are not deterministic; this experiment is excluded from the
    byte-identical rerun guarantee.
    """
    model = CoupledGaussian1D(cfg.theta, cfg.alpha)
    f = LossFn.from_name(cfg.loss)

    def path(eps):
        return pathwise_sample(model, f, eps).mean()

    def mall(eps):
        return malliavin_sample(model, f, eps, cfg.use_normalized).mean()

    def hybrid(eps):
        pair = sample_grad_pair(model, f, eps, cfg.use_normalized)
        return estimate_from_moments(PairedMoments.from_arrays(pair.g_path, pair.g_mall), Mode.HYBRID, cfg.ridge).mean

    times = {"pathwise": [], "malliavin": [], "hybrid": []}
    fns = {"pathwise": path, "malliavin": mall, "hybrid": hybrid}
    for r in range(cfg.replicates):
        eps = _rng(derive_stream_seed(cfg.seed, r, TIMING_STREAM)).standard_normal(cfg.n_samples)
        for name, fn in fns.items():
            t0 = time.perf_counter()
            fn(eps)
            times[name].append(time.perf_counter() - t0)
    base = float(np.mean(times["pathwise"]))
    table = Table(("method", "seconds_mean", "seconds_se", "overhead_pct"))
    for name, ts in times.items():
        m = float(np.mean(ts))
        table.rows.append(dict(method=name, seconds_mean=m, seconds_se=_sem(ts), overhead_pct=100 * (m / base - 1)))
    table.meta = _common_meta(cfg)
    table.meta["deterministic"] = "false"
    return table


RUNNERS = {
    Experiment.TABLE1: run_table1,
    Experiment.LAMBDA_VS_ALPHA: run_lambda_vs_alpha,
    Experiment.BATCH_MSE: run_batch_mse,
    Experiment.VAR_REDUCTION: run_var_reduction,
    Experiment.GREEKS: run_greeks,
    Experiment.TIMING: run_timing,
}


def run(cfg: ExperimentConfig) -> Table:
    return RUNNERS[cfg.experiment](cfg)
