"""Shrinkage-weight estimators and the policies that select them.

All estimators work from the singular values of the target-whitened
anomalies (see :func:`enshrink.climatology.whiten`), so nothing here forms
an n-by-n covariance except the closed-form rule, which is quadratic in the
state by construction.
"""

from dataclasses import dataclass

import numpy as np

from .climatology import scaling_mu, whiten
from .errors import ConfigError, ZeroCovarianceError

__all__ = [
    "GammaPolicy",
    "ShrinkageEstimate",
    "sphericity",
    "rblw_gamma",
    "closed_form_gamma",
    "estimate_gamma",
]

POLICY_KINDS = ("static", "rblw", "closed_form")

# Transforms scale by 1/(1 - gamma), so gamma must stay away from 1.
GAMMA_CEILING = 1.0 - 1e-6


@dataclass(frozen=True)
class GammaPolicy:
    """How the shrinkage weight is chosen each analysis step.

    ``static`` uses the fixed ``value``; ``rblw`` and ``closed_form`` adapt
    to the forecast ensemble.
    """

    kind: str = "rblw"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(
                "gamma policy must be one of %r, got %r" % (POLICY_KINDS, self.kind)
            )
        if self.kind == "static":
            if self.value is None:
                raise ConfigError("static gamma policy needs a value")
            if not 0.0 <= self.value < 1.0:
                raise ConfigError(
                    "static gamma must lie in [0, 1), got %r" % (self.value,)
                )
        elif self.value is not None:
            raise ConfigError("%r policy takes no value" % (self.kind,))


@dataclass(frozen=True)
class ShrinkageEstimate:
    """One step's shrinkage decision and the statistics behind it."""

    gamma: float
    mu: float
    sphericity_hat: float | None
    policy: str


def sphericity(singular_values, state_dim):
    """Departure of the whitened covariance from a multiple of the identity.

    For whitened covariance C (eigenvalues sigma^2) this is
    (n tr(C^2) / tr(C)^2 - 1) / (n - 1): zero when C is spherical, one when
    it is rank-1, computed entirely from the singular values.
    """
    if state_dim < 2:
        raise ValueError("state dimension must be at least 2")
    s2 = np.asarray(singular_values, dtype=np.float64) ** 2
    trace = s2.sum()
    if trace <= 0.0:
        raise ZeroCovarianceError("whitened spectrum sums to zero")
    trace_sq = (s2**2).sum()
    return (state_dim * trace_sq / trace**2 - 1.0) / (state_dim - 1.0)


def rblw_gamma(sphericity_hat, state_dim, effective_size):
    """Rao-Blackwellised Ledoit-Wolf shrinkage weight.

    ``effective_size`` is the anomaly count N - 1.  A spherical sample
    (sphericity below 1e-12) pins gamma to 1; otherwise the weight is
    clamped into [0, 1].
    """
    if state_dim < 2:
        raise ValueError("state dimension must be at least 2")
    if effective_size < 2:
        raise ValueError("effective sample size must be at least 2")
    if sphericity_hat <= 1e-12:
        return 1.0
    n_eff = float(effective_size)
    n = float(state_dim)
    lead = (n_eff - 2.0) / (n_eff * (n_eff + 2.0))
    vary = ((n + 1.0) * n_eff - 2.0) / (
        sphericity_hat * n_eff * (n_eff + 2.0) * (n - 1.0)
    )
    return min(lead + vary, 1.0)


def closed_form_gamma(members, target_dense):
    """Closed-form shrinkage weight from fourth moments of the members.

    ``target_dense`` is the dense covariance the sample is shrunk toward.
    The numerator estimates the variance of the sample covariance; the
    denominator is the squared Frobenius distance between the sample
    covariance and the target.  The ratio is clamped into [0, 1]; a target
    equal to the sample covariance gives 1.
    """
    members = np.asarray(members, dtype=np.float64)
    n_mem = members.shape[1]
    if n_mem < 2:
        raise ValueError("need at least 2 members")
    mean = members.mean(axis=1)
    devs = members - mean[:, None]
    cov = (devs @ devs.T) / (n_mem - 1.0)
    fourth = float((np.sum(devs**2, axis=0) ** 2).sum())
    num = fourth / n_mem**2 - float((cov**2).sum()) / n_mem
    den = float(((cov - target_dense) ** 2).sum())
    if den == 0.0:
        return 1.0
    return float(np.clip(num / den, 0.0, 1.0))


def estimate_gamma(policy, ensemble_members, target, state_dim):
    """Resolve a policy into a concrete (gamma, mu) pair for one step.

    ``ensemble_members`` must already carry any inflation; mu always comes
    from the whitened trace so the synthetic draw matches the inflated
    forecast spread.  Adaptive gammas are capped just below 1 because the
    transforms rescale by 1/(1 - gamma).
    """
    n_mem = ensemble_members.shape[1]
    mean = ensemble_members.mean(axis=1)
    anoms = (ensemble_members - mean[:, None]) / np.sqrt(n_mem - 1.0)
    sing = whiten(target, anoms)
    mu = scaling_mu(sing, state_dim)
    if policy.kind == "static":
        return ShrinkageEstimate(
            gamma=float(policy.value), mu=mu, sphericity_hat=None, policy=policy.kind
        )
    if policy.kind == "rblw":
        u_hat = sphericity(sing, state_dim)
        gamma = rblw_gamma(u_hat, state_dim, n_mem - 1)
        gamma = min(gamma, GAMMA_CEILING)
        return ShrinkageEstimate(
            gamma=gamma, mu=mu, sphericity_hat=u_hat, policy=policy.kind
        )
    # closed_form: shrink toward the mu-scaled target, consistent with the
    # synthetic ensemble actually drawn from N(mean, mu P).
    gamma = closed_form_gamma(ensemble_members, mu * target.dense())
    gamma = min(gamma, GAMMA_CEILING)
    return ShrinkageEstimate(gamma=gamma, mu=mu, sphericity_hat=None, policy=policy.kind)
