"""Ensemble transform analyses: plain, localized, and covariance-shrinkage.

All variants share the same skeleton: decompose the forecast into mean and
scaled anomalies, inflate, build the posterior transform from observation-
space anomalies, then reassemble members as mean + sqrt(N-1) * anomalies.
Innovation-covariance solves always go through a Cholesky factor; matrix
square roots floor negative eigenvalues at zero and report the clipped mass
in the diagnostics.
"""

from dataclasses import dataclass, field

import numpy as np

from .climatology import DISTRIBUTIONS, SyntheticEnsembleSpec, sample_synthetic
from .ensemble import AnomalySet, Ensemble, decompose, inflate, observe
from .errors import ConfigError, GammaBoundError, InflationError, UnsupportedRError
from .linalg import floored_eigh, spd_factor, spd_solve, symmetric_sqrt, truncated_pinv
from .shrinkage import GammaPolicy, estimate_gamma
from .taper import TAPER_KINDS, ring_distance, taper_weights

__all__ = [
    "VARIANTS",
    "FilterConfig",
    "TransformResult",
    "ExtendedAnomalySet",
    "build_extended",
    "etkf_analysis",
    "shrinkage_etkf_analysis",
    "split_shrinkage_analysis",
    "letkf_analysis",
    "run_analysis",
]

VARIANTS = ("etkf", "letkf", "shrink_symmetric", "shrink_lowrank", "shrink_split")


@dataclass(frozen=True)
class FilterConfig:
    """Which analysis to run and the knobs it needs.

    gamma / synthetic_size / distribution matter only for the shrink
    variants; taper / radius only for localized ones.  recenter_analysis
    re-centers analysis anomaly columns post hoc (off by default: the
    transforms preserve centering analytically).  localize_extended applies
    classical domain localization to the extended ensemble of the shrink
    variants.
    """

    variant: str = "etkf"
    inflation: float = 1.0
    gamma: GammaPolicy = field(default_factory=GammaPolicy)
    synthetic_size: int = 100
    distribution: str = "gaussian"
    taper: str = "gaspari_cohn"
    radius: float = 4.0
    recenter_analysis: bool = False
    localize_extended: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(
                "variant must be one of %r, got %r" % (VARIANTS, self.variant)
            )
        if self.inflation < 1.0:
            raise InflationError(
                "inflation factor must be >= 1, got %r" % (self.inflation,)
            )
        if self.taper not in TAPER_KINDS:
            raise ConfigError(
                "taper must be one of %r, got %r" % (TAPER_KINDS, self.taper)
            )
        if self.radius <= 0.0:
            raise ConfigError("localization radius must be positive")
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(
                "distribution must be one of %r, got %r"
                % (DISTRIBUTIONS, self.distribution)
            )
        if self.variant.startswith("shrink"):
            SyntheticEnsembleSpec(self.synthetic_size, self.distribution)
            if self.variant == "shrink_split" and self.localize_extended:
                raise ConfigError("localize_extended is not supported for shrink_split")

    def synthetic_spec(self):
        return SyntheticEnsembleSpec(self.synthetic_size, self.distribution)


@dataclass
class TransformResult:
    """Output of one analysis step.

    gamma and mu are nan for variants without shrinkage.  diagnostics holds
    named scalars (sphericity, transform condition number, floored
    eigenvalue mass).  synthetic_anomalies carries the transformed synthetic
    block when the variant produces one.
    """

    ensemble: Ensemble
    mean: np.ndarray
    gamma: float
    mu: float
    diagnostics: dict
    synthetic_anomalies: np.ndarray | None = None


@dataclass
class ExtendedAnomalySet:
    """Dynamic and synthetic anomalies merged with sqrt shrinkage weights."""

    state: np.ndarray
    observed: np.ndarray
    dynamic_size: int
    synthetic_size: int
    gamma: float


def build_extended(anomalies, synthetic_state, synthetic_observed, gamma):
    """Concatenate [sqrt(1-gamma) A | sqrt(gamma) Asyn] and likewise in
    observation space.  gamma must lie in [0, 1)."""
    if not 0.0 <= gamma < 1.0:
        raise GammaBoundError("gamma must lie in [0, 1), got %r" % (gamma,))
    sc = np.sqrt(1.0 - gamma)
    sg = np.sqrt(gamma)
    state = np.hstack([sc * anomalies.state, sg * synthetic_state])
    observed = np.hstack([sc * anomalies.observed, sg * synthetic_observed])
    return ExtendedAnomalySet(
        state=state,
        observed=observed,
        dynamic_size=anomalies.state.shape[1],
        synthetic_size=synthetic_state.shape[1],
        gamma=gamma,
    )


def _posterior_eigh(z, r):
    """Eigendecomposition of I - Z^T S^{-1} Z with S = Z Z^T + R.

    Returns (w, v, floored_mass, s_factor) with eigenvalues descending and
    floored at zero.
    """
    s = z @ z.T + r
    s_factor = spd_factor(s, "innovation covariance")
    g = np.eye(z.shape[1]) - z.T @ spd_solve(s_factor, z)
    w, v, mass = floored_eigh(g)
    return w, v, mass, s_factor


def _condition(w):
    """Condition number of the transform sqrt from its Gramian eigenvalues."""
    if w.shape[0] == 0 or w[0] <= 0.0 or w[-1] <= 0.0:
        return float("inf")
    return float(np.sqrt(w[0] / w[-1]))


def _inflated_parts(forecast, record, operator, inflation):
    mean, a = decompose(forecast)
    z, d, obs_mean = observe(forecast, operator, record)
    anoms = inflate(AnomalySet(a, z, mean, obs_mean), inflation)
    return anoms, d


def _assemble(mean_a, a_a, size, time):
    members = mean_a[:, None] + np.sqrt(size - 1.0) * a_a
    return Ensemble(members=members, time=time)


def etkf_analysis(forecast, record, operator, inflation=1.0):
    """Plain ensemble transform analysis with a symmetric square root."""
    anoms, d = _inflated_parts(forecast, record, operator, inflation)
    a, z = anoms.state, anoms.observed
    w, v, mass, _ = _posterior_eigh(z, record.covariance)
    t = (v * np.sqrt(w)) @ v.T
    a_a = a @ t
    z_a = z @ t
    r_factor = spd_factor(record.covariance, "R")
    mean_a = anoms.mean + a_a @ (z_a.T @ spd_solve(r_factor, d))
    diagnostics = {"transform_cond": _condition(w), "floored_mass": mass}
    return TransformResult(
        ensemble=_assemble(mean_a, a_a, forecast.size, forecast.time),
        mean=mean_a,
        gamma=float("nan"),
        mu=float("nan"),
        diagnostics=diagnostics,
    )


def _synthetic_blocks(anoms, record, operator, target, config, rng, state_dim):
    """Estimate (gamma, mu), draw the synthetic ensemble, and return its
    anomaly blocks along with the estimate."""
    n_mem = anoms.size
    inflated_members = anoms.mean[:, None] + np.sqrt(n_mem - 1.0) * anoms.state
    est = estimate_gamma(config.gamma, inflated_members, target, state_dim)
    x_syn = sample_synthetic(
        anoms.mean, est.mu, target, config.synthetic_spec(), rng
    )
    syn_ens = Ensemble(members=x_syn, time=0.0)
    _, syn_a = decompose(syn_ens)
    syn_z, _, _ = observe(syn_ens, operator, record)
    return est, syn_a, syn_z


def shrinkage_etkf_analysis(forecast, record, operator, target, config, rng):
    """Shrinkage analysis on the extended ensemble.

    The dynamic ensemble is augmented with synthetic members drawn from
    N(mean, mu P); the transform is computed for the extended anomalies and
    the N analysis anomalies are read back either from the first N columns
    of the symmetric square root (shrink_symmetric) or from the N leading
    eigenpairs (shrink_lowrank), both rescaled by 1/sqrt(1-gamma).
    """
    anoms, d = _inflated_parts(forecast, record, operator, config.inflation)
    n, n_mem = anoms.state.shape
    est, syn_a, syn_z = _synthetic_blocks(
        anoms, record, operator, target, config, rng, n
    )
    gamma = est.gamma
    ext = build_extended(anoms, syn_a, syn_z, gamma)
    w, v, mass, _ = _posterior_eigh(ext.observed, record.covariance)
    r_factor = spd_factor(record.covariance, "R")
    rinv_d = spd_solve(r_factor, d)
    g = (v * w) @ v.T
    mean_a = anoms.mean + ext.state @ (g @ (ext.observed.T @ rinv_d))
    scale = 1.0 / np.sqrt(1.0 - gamma)
    if config.variant == "shrink_lowrank":
        a_a = scale * (ext.state @ (v[:, :n_mem] * np.sqrt(w[:n_mem])))
    else:
        t = (v * np.sqrt(w)) @ v.T
        a_a = scale * (ext.state @ t[:, :n_mem])
    if config.recenter_analysis:
        a_a = a_a - a_a.mean(axis=1, keepdims=True)
    diagnostics = {
        "transform_cond": _condition(w),
        "floored_mass": mass,
        "sphericity": est.sphericity_hat
        if est.sphericity_hat is not None
        else float("nan"),
    }
    return TransformResult(
        ensemble=_assemble(mean_a, a_a, n_mem, forecast.time),
        mean=mean_a,
        gamma=gamma,
        mu=est.mu,
        diagnostics=diagnostics,
        synthetic_anomalies=syn_a,
    )


def split_shrinkage_analysis(forecast, record, operator, target, config, rng):
    """Shrinkage analysis with separate synthetic and dynamic transforms.

    The innovation covariance blends both ensembles,
    S = gamma Zsyn Zsyn^T + (1-gamma) Z Z^T + R.  The synthetic block is
    contracted by Tsyn = sqrt(I - gamma Zsyn^T S^{-1} Zsyn).  The dynamic
    transform additionally carries the cross coupling through the projector
    A^+ Asyn, where A^+ is the pseudo-inverse of the dynamic anomalies
    truncated to their N-1 independent columns.  The mean update splits the
    same way, gamma through the synthetic analysis anomalies plus (1-gamma)
    through the dynamic ones.

    When the dynamic anomalies do not span the synthetic ones (N - 1 < rank
    of the target) the inner matrix can go indefinite; its negative
    eigenvalues are floored and reported as floored_mass.
    """
    anoms, d = _inflated_parts(forecast, record, operator, config.inflation)
    n, n_mem = anoms.state.shape
    est, syn_a, syn_z = _synthetic_blocks(
        anoms, record, operator, target, config, rng, n
    )
    gamma = est.gamma
    if not 0.0 <= gamma < 1.0:
        raise GammaBoundError("gamma must lie in [0, 1), got %r" % (gamma,))
    a, z = anoms.state, anoms.observed
    s = gamma * (syn_z @ syn_z.T) + (1.0 - gamma) * (z @ z.T) + record.covariance
    s_factor = spd_factor(s, "innovation covariance")
    m_syn = syn_z.shape[1]
    g_syn = np.eye(m_syn) - gamma * (syn_z.T @ spd_solve(s_factor, syn_z))
    t_syn, mass_syn = symmetric_sqrt(g_syn)
    syn_a_post = syn_a @ t_syn
    syn_z_post = syn_z @ t_syn
    a_pinv = truncated_pinv(a, n_mem - 1)
    proj = a_pinv @ syn_a
    cross = proj @ (syn_z.T @ spd_solve(s_factor, z))
    g_phys = (
        np.eye(n_mem)
        - (1.0 - gamma) * (z.T @ spd_solve(s_factor, z))
        - gamma * (cross + cross.T)
    )
    t_phys, mass_phys = symmetric_sqrt(g_phys)
    a_a = a @ t_phys
    z_a = z @ t_phys
    if config.recenter_analysis:
        a_a = a_a - a_a.mean(axis=1, keepdims=True)
    r_factor = spd_factor(record.covariance, "R")
    rinv_d = spd_solve(r_factor, d)
    mean_a = (
        anoms.mean
        + gamma * (syn_a_post @ (syn_z_post.T @ rinv_d))
        + (1.0 - gamma) * (a_a @ (z_a.T @ rinv_d))
    )
    w_phys = np.linalg.eigvalsh(0.5 * (g_phys + g_phys.T))
    diagnostics = {
        "transform_cond": _condition(np.clip(w_phys[::-1], 0.0, None)),
        "floored_mass": mass_syn + mass_phys,
        "sphericity": est.sphericity_hat
        if est.sphericity_hat is not None
        else float("nan"),
    }
    return TransformResult(
        ensemble=_assemble(mean_a, a_a, n_mem, forecast.time),
        mean=mean_a,
        gamma=gamma,
        mu=est.mu,
        diagnostics=diagnostics,
        synthetic_anomalies=syn_a_post,
    )


def _site_distances(forecast, record, distances, grid_metric):
    n = forecast.dimension
    m = record.values.shape[0]
    if distances is not None:
        distances = np.asarray(distances, dtype=np.float64)
        if distances.shape != (n, m):
            raise ConfigError(
                "distances must be (n, m) = %r, got %r" % ((n, m), distances.shape)
            )
        return distances
    if grid_metric is None:
        if m != n:
            raise ConfigError(
                "cannot infer site distances for m != n; pass distances "
                "or a grid metric"
            )
        grid_metric = ring_distance(n)
    sites = np.arange(n, dtype=np.float64)
    obs_sites = np.arange(m, dtype=np.float64)
    return np.asarray(
        grid_metric(sites[:, None], obs_sites[None, :]), dtype=np.float64
    )


def letkf_analysis(forecast, record, operator, config, distances=None, grid_metric=None):
    """Domain-localized transform analysis, one local problem per site.

    Requires diagonal R.  Observation weights come from the configured taper
    of distance / radius; zero-weight observations are dropped from the
    local problem, and the taper enters by scaling each retained
    observation's precision.  Sites with no observations in range keep their
    forecast mean and anomalies.
    """
    r_diag = record.diagonal_r
    if r_diag is None:
        raise UnsupportedRError("localized analysis requires diagonal R")
    anoms, d = _inflated_parts(forecast, record, operator, config.inflation)
    a, z = anoms.state, anoms.observed
    n, n_mem = a.shape
    dist = _site_distances(forecast, record, distances, grid_metric)
    weights = taper_weights(config.taper, dist, config.radius)
    mean_a = np.empty(n)
    a_a = np.empty_like(a)
    worst_cond = 1.0
    total_mass = 0.0
    eye = np.eye(n_mem)
    for j in range(n):
        sel = weights[j] > 0.0
        if not sel.any():
            mean_a[j] = anoms.mean[j]
            a_a[j] = a[j]
            continue
        z_l = z[sel]
        precision = weights[j, sel] / r_diag[sel]
        s_l = z_l @ z_l.T + np.diag(r_diag[sel] / weights[j, sel])
        s_factor = spd_factor(s_l, "local innovation covariance")
        g = eye - z_l.T @ spd_solve(s_factor, z_l)
        w, v, mass = floored_eigh(g)
        t = (v * np.sqrt(w)) @ v.T
        row = a[j] @ t
        z_post = z_l @ t
        mean_a[j] = anoms.mean[j] + row @ (z_post.T @ (precision * d[sel]))
        a_a[j] = row
        worst_cond = max(worst_cond, _condition(w))
        total_mass += mass
    diagnostics = {"transform_cond": worst_cond, "floored_mass": total_mass}
    return TransformResult(
        ensemble=_assemble(mean_a, a_a, n_mem, forecast.time),
        mean=mean_a,
        gamma=float("nan"),
        mu=float("nan"),
        diagnostics=diagnostics,
    )


def localized_shrinkage_analysis(
    forecast, record, operator, target, config, rng, distances=None, grid_metric=None
):
    """Domain localization applied to the extended ensemble.

    Same per-site machinery as :func:`letkf_analysis` but each local
    transform acts on the extended anomalies; rows of the analysis anomalies
    are read back per the configured shrink variant.
    """
    r_diag = record.diagonal_r
    if r_diag is None:
        raise UnsupportedRError("localized analysis requires diagonal R")
    anoms, d = _inflated_parts(forecast, record, operator, config.inflation)
    n, n_mem = anoms.state.shape
    est, syn_a, syn_z = _synthetic_blocks(
        anoms, record, operator, target, config, rng, n
    )
    gamma = est.gamma
    ext = build_extended(anoms, syn_a, syn_z, gamma)
    dist = _site_distances(forecast, record, distances, grid_metric)
    weights = taper_weights(config.taper, dist, config.radius)
    scale = 1.0 / np.sqrt(1.0 - gamma)
    size_ext = ext.state.shape[1]
    eye = np.eye(size_ext)
    mean_a = np.empty(n)
    a_a = np.empty((n, n_mem))
    total_mass = 0.0
    for j in range(n):
        sel = weights[j] > 0.0
        if not sel.any():
            mean_a[j] = anoms.mean[j]
            a_a[j] = anoms.state[j]
            continue
        z_l = ext.observed[sel]
        precision = weights[j, sel] / r_diag[sel]
        s_l = z_l @ z_l.T + np.diag(r_diag[sel] / weights[j, sel])
        s_factor = spd_factor(s_l, "local innovation covariance")
        g = eye - z_l.T @ spd_solve(s_factor, z_l)
        w, v, mass = floored_eigh(g)
        mean_a[j] = anoms.mean[j] + ext.state[j] @ (
            ((v * w) @ v.T) @ (z_l.T @ (precision * d[sel]))
        )
        if config.variant == "shrink_lowrank":
            a_a[j] = scale * (ext.state[j] @ (v[:, :n_mem] * np.sqrt(w[:n_mem])))
        else:
            t = (v * np.sqrt(w)) @ v.T
            a_a[j] = scale * (ext.state[j] @ t[:, :n_mem])
        total_mass += mass
    if config.recenter_analysis:
        a_a = a_a - a_a.mean(axis=1, keepdims=True)
    diagnostics = {
        "transform_cond": float("nan"),
        "floored_mass": total_mass,
        "sphericity": est.sphericity_hat
        if est.sphericity_hat is not None
        else float("nan"),
    }
    return TransformResult(
        ensemble=_assemble(mean_a, a_a, n_mem, forecast.time),
        mean=mean_a,
        gamma=gamma,
        mu=est.mu,
        diagnostics=diagnostics,
        synthetic_anomalies=syn_a,
    )


def run_analysis(
    forecast,
    record,
    operator,
    config,
    target=None,
    rng=None,
    distances=None,
    grid_metric=None,
):
    """Dispatch one analysis step according to the configured variant."""
    if config.variant == "etkf":
        return etkf_analysis(forecast, record, operator, config.inflation)
    if config.variant == "letkf":
        return letkf_analysis(
            forecast, record, operator, config, distances=distances, grid_metric=grid_metric
        )
    if target is None:
        raise ConfigError("variant %r needs a target covariance" % (config.variant,))
    if rng is None:
        raise ConfigError("variant %r needs an rng for synthetic draws" % (config.variant,))
    if config.variant == "shrink_split":
        return split_shrinkage_analysis(forecast, record, operator, target, config, rng)
    if config.localize_extended:
        return localized_shrinkage_analysis(
            forecast,
            record,
            operator,
            target,
            config,
            rng,
            distances=distances,
            grid_metric=grid_metric,
        )
    return shrinkage_etkf_analysis(forecast, record, operator, target, config, rng)
