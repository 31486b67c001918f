"""Twin-experiment orchestration: truth, observations, filtering, scoring.

Randomness discipline: every replicate owns four independent substreams
(truth-and-observation noise, ensemble initialisation, synthetic draws,
rank tie-breaking), spawned from the base seed by (replicate, role) keys.
Changing the synthetic ensemble therefore never perturbs the truth or the
observations, and any single replicate can be reproduced in isolation.
"""

import csv
import io
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .climatology import TargetCovariance, generate_climatology
from .config import ExperimentConfig, gamma_policy_from_dict, gamma_policy_label
from .ensemble import Ensemble, ObservationOperator, ObservationRecord
from .errors import ConfigError, IntegrationBlowupError
from .filters import run_analysis
from .metrics import RankHistogram, RunMetrics, kl_from_uniform, rank_histogram, spatiotemporal_rmse
from .models import integrate_block

__all__ = [
    "ROLES",
    "substream",
    "climatology_rng",
    "build_operator",
    "build_noise_covariance",
    "resolve_target",
    "simulate_truth_and_observations",
    "run_replicate",
    "run_twin_experiment",
    "run_sweep",
    "write_results",
    "ReplicateResult",
    "ExperimentResult",
]

ROLES = ("truth_obs", "ensemble_init", "synthetic", "ties")

# Spawn key reserved for experiment-global draws (climatology generation);
# a 1-tuple can never collide with the (replicate, role) 2-tuples.
_GLOBAL_KEY = 0

DIVERGENCE_WINDOW = 50
DIVERGENCE_THRESHOLD = 100.0

TRUTH_SPINUP_TIME = 10.0


def substream(base_seed, replicate, role):
    """Independent generator for one (replicate, role) pair."""
    idx = ROLES.index(role)
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(replicate, idx))
    return np.random.default_rng(seq)


def climatology_rng(base_seed):
    """Experiment-global generator used only for climatology generation."""
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(_GLOBAL_KEY,))
    return np.random.default_rng(seq)


def _square_block(x):
    return np.asarray(x, dtype=np.float64) ** 2


def build_operator(cfg):
    n = cfg.model.dimension
    if cfg.operator == "identity":
        return ObservationOperator.identity(n)
    return ObservationOperator(
        apply=_square_block, observed_dim=n, linear=False, vectorized=True
    )


def build_noise_covariance(cfg, observed_dim):
    noise = cfg.noise
    if noise["type"] == "scalar":
        return float(noise["value"]) * np.eye(observed_dim)
    values = np.asarray(noise["values"], dtype=np.float64)
    if values.shape[0] != observed_dim:
        raise ConfigError(
            "diagonal noise has %d entries but the operator yields %d"
            % (values.shape[0], observed_dim)
        )
    return np.diag(values)


def resolve_target(cfg):
    """Load or generate the climatological target covariance for a config.

    Generation draws from the experiment-global stream, so the same base
    seed always reproduces the same target.
    """
    clim = cfg.climatology
    if clim["source"] == "file":
        return TargetCovariance.load(clim["path"])
    return generate_climatology(
        cfg.model,
        snapshots=clim["snapshots"],
        spinup_steps=clim["spinup_steps"],
        interval_steps=clim["interval_steps"],
        rng=climatology_rng(cfg.base_seed),
        mode=clim["mode"],
    )


def simulate_truth_and_observations(cfg, operator, noise_cov, rng):
    """One truth trajectory plus noisy observations of it.

    The initial condition is forcing + standard normal, integrated
    TRUTH_SPINUP_TIME model time units onto the attractor.  Returns
    (initial_truth, truths, observations) with truths[k] the state after
    assimilation cycle k.
    """
    n = cfg.model.dimension
    spinup_steps = int(round(TRUTH_SPINUP_TIME / cfg.model.step))
    state = cfg.model.forcing + rng.standard_normal(n)
    state = integrate_block(state, cfg.model, spinup_steps)
    initial = state.copy()
    m = operator.observed_dim
    chol = np.linalg.cholesky(noise_cov)
    truths = np.empty((cfg.steps, n))
    observations = np.empty((cfg.steps, m))
    for k in range(cfg.steps):
        state = integrate_block(state, cfg.model, cfg.steps_per_cycle)
        truths[k] = state
        clean = operator.apply_block(state[:, None])[:, 0]
        observations[k] = clean + chol @ rng.standard_normal(m)
    return initial, truths, observations


@dataclass
class ReplicateResult:
    """Scores and traces for one replicate."""

    replicate: int
    metrics: RunMetrics
    gamma_trace: np.ndarray
    histogram: RankHistogram


@dataclass
class ExperimentResult:
    """All replicates of one configuration plus pooled summaries."""

    config: ExperimentConfig
    replicates: list

    def pooled_histogram(self):
        hist = self.replicates[0].histogram
        for rep in self.replicates[1:]:
            hist = hist.merge(rep.histogram)
        return hist

    def aggregate(self):
        rmses = np.array([r.metrics.rmse for r in self.replicates])
        kls = np.array([r.metrics.kl for r in self.replicates])
        gammas = np.array([r.metrics.mean_gamma for r in self.replicates])
        diverged = sum(r.metrics.diverged for r in self.replicates)
        finite_g = gammas[np.isfinite(gammas)]
        pooled = self.pooled_histogram()
        pooled_kl = (
            kl_from_uniform(pooled) if pooled.total > 0 else float("inf")
        )
        with np.errstate(invalid="ignore"):
            std_rmse = float(rmses.std(ddof=1)) if rmses.shape[0] > 1 else 0.0
        return {
            "replicates": len(self.replicates),
            "mean_rmse": float(rmses.mean()),
            "std_rmse": std_rmse,
            "mean_kl": float(kls.mean()),
            "mean_gamma": float(finite_g.mean()) if finite_g.size else float("nan"),
            "pooled_kl": float(pooled_kl),
            "diverged_count": int(diverged),
        }

    def mean_gamma_trace(self):
        traces = np.stack([r.gamma_trace for r in self.replicates])
        with np.errstate(invalid="ignore"):
            return np.nanmean(traces, axis=0)


def run_replicate(cfg, replicate, target=None):
    """Run one twin experiment replicate and score it.

    RMSE pools the post-spinup analysis-mean errors; the rank histogram
    tracks the configured state variable in the analysis ensemble.  A run
    is flagged diverged (scores become infinite) when any state goes
    non-finite or the windowed RMSE explodes.
    """
    operator = build_operator(cfg)
    noise_cov = build_noise_covariance(cfg, operator.observed_dim)
    rng_truth = substream(cfg.base_seed, replicate, "truth_obs")
    rng_init = substream(cfg.base_seed, replicate, "ensemble_init")
    rng_syn = substream(cfg.base_seed, replicate, "synthetic")
    rng_ties = substream(cfg.base_seed, replicate, "ties")
    initial, truths, observations = simulate_truth_and_observations(
        cfg, operator, noise_cov, rng_truth
    )
    n = cfg.model.dimension
    n_mem = cfg.ensemble_size
    members = initial[:, None] + rng_init.standard_normal((n, n_mem))
    scored = cfg.steps - cfg.spinup
    gamma_trace = np.full(cfg.steps, np.nan)
    step_mse = np.full(cfg.steps, np.nan)
    scored_means = np.empty((scored, n))
    rank_members = np.empty((scored, n_mem))
    rank_truth = np.empty(scored)
    diverged = False
    k_done = 0
    for k in range(cfg.steps):
        t = (k + 1) * cfg.dt
        try:
            members = integrate_block(
                members, cfg.model, cfg.steps_per_cycle, t0=k * cfg.dt
            )
        except IntegrationBlowupError:
            diverged = True
            break
        record = ObservationRecord(
            values=observations[k], covariance=noise_cov, time=t
        )
        result = run_analysis(
            Ensemble(members=members, time=t),
            record,
            operator,
            cfg.filter,
            target=target,
            rng=rng_syn,
        )
        members = result.ensemble.members
        gamma_trace[k] = result.gamma
        err = result.mean - truths[k]
        step_mse[k] = float((err**2).mean())
        if k >= cfg.spinup:
            i = k - cfg.spinup
            scored_means[i] = result.mean
            rank_members[i] = members[cfg.rank_variable]
            rank_truth[i] = truths[k, cfg.rank_variable]
        k_done = k + 1
        window = step_mse[max(0, k + 1 - DIVERGENCE_WINDOW) : k + 1]
        if np.sqrt(window.mean()) > DIVERGENCE_THRESHOLD or not np.isfinite(
            step_mse[k]
        ):
            diverged = True
            break
    post = gamma_trace[cfg.spinup :]
    finite_g = post[np.isfinite(post)]
    mean_gamma = float(finite_g.mean()) if finite_g.size else float("nan")
    if diverged or k_done < cfg.steps:
        metrics = RunMetrics(
            rmse=float("inf"), kl=float("inf"), mean_gamma=mean_gamma, diverged=True
        )
        hist = RankHistogram(counts=np.zeros(n_mem + 1, dtype=np.int64))
        return ReplicateResult(
            replicate=replicate,
            metrics=metrics,
            gamma_trace=gamma_trace,
            histogram=hist,
        )
    rmse = spatiotemporal_rmse(scored_means, truths[cfg.spinup :])
    hist = rank_histogram(rank_members, rank_truth, rng=rng_ties)
    kl = kl_from_uniform(hist)
    metrics = RunMetrics(rmse=rmse, kl=kl, mean_gamma=mean_gamma, diverged=False)
    return ReplicateResult(
        replicate=replicate, metrics=metrics, gamma_trace=gamma_trace, histogram=hist
    )


def _replicate_task(args):
    cfg, replicate, target = args
    return run_replicate(cfg, replicate, target=target)


def _needs_target(cfg):
    return cfg.filter.variant.startswith("shrink")


def run_twin_experiment(cfg, target=None, jobs=1):
    """Run every replicate of one configuration.

    Results are ordered by replicate index whatever the worker scheduling,
    so aggregates never depend on execution order.
    """
    if target is None and _needs_target(cfg):
        target = resolve_target(cfg)
    tasks = [(cfg, rep, target) for rep in range(cfg.replicates)]
    if jobs > 1 and cfg.replicates > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            replicates = list(pool.map(_replicate_task, tasks))
    else:
        replicates = [_replicate_task(t) for t in tasks]
    return ExperimentResult(config=cfg, replicates=replicates)


_AXIS_ORDER = ("ensemble_size", "synthetic_size", "inflation", "gamma")


def run_sweep(cfg, jobs=1):
    """Cartesian product over the sweep axes of a config.

    Every cell shares the base seed, hence the same truth and observations,
    so cells differ only in the filter under test.  Returns the list of
    per-cell ExperimentResults in deterministic axis order.
    """
    if not cfg.sweep:
        raise ConfigError("config has no sweep section")
    axes = [(name, cfg.sweep[name]) for name in _AXIS_ORDER if name in cfg.sweep]
    target = None
    results = []
    for combo in itertools.product(*(values for _, values in axes)):
        cell = cfg
        for (name, _), value in zip(axes, combo):
            if name == "gamma":
                new_filter = replace(cell.filter, gamma=gamma_policy_from_dict(value))
                cell = cell.with_overrides(filter=new_filter)
            elif name in ("synthetic_size", "inflation"):
                new_filter = replace(cell.filter, **{name: value})
                cell = cell.with_overrides(filter=new_filter)
            else:
                cell = cell.with_overrides(ensemble_size=int(value))
        cell = cell.with_overrides(experiment_id=None, sweep=None)
        if target is None and _needs_target(cell):
            target = resolve_target(cell)
        results.append(run_twin_experiment(cell, target=target, jobs=jobs))
    return results


def _fmt(value):
    """Shortest round-trip decimal for floats; empty for nan; 'inf' as is."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return repr(float(value))
    return str(value)


def _row_prefix(cfg):
    return [
        cfg.label(),
        cfg.filter.variant,
        str(cfg.ensemble_size),
        str(cfg.filter.synthetic_size)
        if cfg.filter.variant.startswith("shrink")
        else "",
        _fmt(float(cfg.filter.inflation)),
        gamma_policy_label(cfg.filter.gamma)
        if cfg.filter.variant.startswith("shrink")
        else "",
    ]

RESULT_COLUMNS = [
    "experiment",
    "variant",
    "N",
    "M",
    "alpha",
    "gamma_policy",
    "replicate",
    "rmse",
    "kl",
    "mean_gamma",
    "diverged",
]

AGGREGATE_COLUMNS = [
    "experiment",
    "variant",
    "N",
    "M",
    "alpha",
    "gamma_policy",
    "replicates",
    "mean_rmse",
    "std_rmse",
    "mean_kl",
    "mean_gamma",
    "pooled_kl",
    "diverged_count",
]


def render_results_csv(results):
    """Per-replicate rows for one or more ExperimentResults."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for result in results:
        prefix = _row_prefix(result.config)
        for rep in result.replicates:
            writer.writerow(
                prefix
                + [
                    str(rep.replicate),
                    _fmt(rep.metrics.rmse),
                    _fmt(rep.metrics.kl),
                    _fmt(rep.metrics.mean_gamma),
                    _fmt(rep.metrics.diverged),
                ]
            )
    return buf.getvalue()


def render_aggregate_csv(results):
    """One row per configuration."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(AGGREGATE_COLUMNS)
    for result in results:
        agg = result.aggregate()
        writer.writerow(
            _row_prefix(result.config)
            + [
                str(agg["replicates"]),
                _fmt(agg["mean_rmse"]),
                _fmt(agg["std_rmse"]),
                _fmt(agg["mean_kl"]),
                _fmt(agg["mean_gamma"]),
                _fmt(agg["pooled_kl"]),
                str(agg["diverged_count"]),
            ]
        )
    return buf.getvalue()


def render_gamma_trace_csv(results):
    """Per-step gamma averaged over replicates, one column per experiment."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    labels = [r.config.label() for r in results]
    writer.writerow(["step"] + labels)
    traces = [r.mean_gamma_trace() for r in results]
    steps = max(t.shape[0] for t in traces)
    for k in range(steps):
        row = [str(k)]
        for trace in traces:
            row.append(_fmt(float(trace[k])) if k < trace.shape[0] else "")
        writer.writerow(row)
    return buf.getvalue()


def write_results(results, outdir, config=None):
    """Write results.csv, aggregate.csv, gamma_trace.csv and the resolved
    config into a directory.  Identical inputs give identical bytes."""
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "results.csv"), "w") as fh:
        fh.write(render_results_csv(results))
    with open(os.path.join(outdir, "aggregate.csv"), "w") as fh:
        fh.write(render_aggregate_csv(results))
    if any(r.config.filter.variant.startswith("shrink") for r in results):
        with open(os.path.join(outdir, "gamma_trace.csv"), "w") as fh:
            fh.write(render_gamma_trace_csv(results))
    if config is not None:
        config.save(os.path.join(outdir, "config.yaml"))
