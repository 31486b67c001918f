"""Sphericity, RBLW, and closed-form shrinkage weights against dense oracles."""

import numpy as np
import pytest

from enshrink.climatology import TargetCovariance, whiten
from enshrink.errors import ConfigError, ZeroCovarianceError
from enshrink.shrinkage import (
    GAMMA_CEILING,
    GammaPolicy,
    closed_form_gamma,
    estimate_gamma,
    rblw_gamma,
    sphericity,
)


def sphericity_dense(c):
    """Reference sphericity from a dense whitened covariance matrix."""
    n = c.shape[0]
    tr = np.trace(c)
    tr2 = np.trace(c @ c)
    return (n * tr2 / tr**2 - 1.0) / (n - 1.0)


def closed_form_loop(members, target):
    """Scalar-loop re-derivation of the closed-form weight."""
    n, n_mem = members.shape
    mean = members.mean(axis=1)
    devs = members - mean[:, None]
    cov = devs @ devs.T / (n_mem - 1.0)
    num = 0.0
    for k in range(n_mem):
        norm4 = 0.0
        for i in range(n):
            norm4 += devs[i, k] ** 2
        num += norm4**2
    num = num / n_mem**2
    frob = 0.0
    for i in range(n):
        for j in range(n):
            frob += cov[i, j] ** 2
    num -= frob / n_mem
    den = 0.0
    for i in range(n):
        for j in range(n):
            den += (cov[i, j] - target[i, j]) ** 2
    if den == 0.0:
        return 1.0
    return float(np.clip(num / den, 0.0, 1.0))


def test_sphericity_spherical_is_zero():
    assert sphericity(np.full(6, 2.0), 6) == pytest.approx(0.0, abs=1e-14)


def test_sphericity_rank_one_is_one():
    s = np.zeros(10)
    s[0] = 3.0
    assert sphericity(s, 10) == pytest.approx(1.0, abs=1e-14)


def test_sphericity_matches_dense_oracle():
    rng = np.random.default_rng(60)
    for _ in range(30):
        n = int(rng.integers(2, 11))
        k = int(rng.integers(2, 11))
        b = rng.standard_normal((n, k))
        c = b @ b.T
        s = np.linalg.svd(b, compute_uv=False)
        assert abs(sphericity(s, n) - sphericity_dense(c)) < 1e-10


def test_sphericity_zero_spectrum_raises():
    with pytest.raises(ZeroCovarianceError):
        sphericity(np.zeros(4), 4)


def test_rblw_spherical_clamp_is_exactly_one():
    assert rblw_gamma(0.0, 8, 4) == 1.0
    assert rblw_gamma(1e-13, 8, 4) == 1.0


def test_rblw_matches_direct_formula():
    rng = np.random.default_rng(61)
    for _ in range(30):
        n = int(rng.integers(2, 11))
        n_eff = int(rng.integers(2, 20))
        u = float(rng.uniform(1e-3, 1.5))
        lead = (n_eff - 2.0) / (n_eff * (n_eff + 2.0))
        vary = ((n + 1.0) * n_eff - 2.0) / (u * n_eff * (n_eff + 2.0) * (n - 1.0))
        assert abs(rblw_gamma(u, n, n_eff) - min(lead + vary, 1.0)) < 1e-10


def test_rblw_large_sphericity_limit():
    # as sphericity grows the weight tends to (n_eff - 2) / (n_eff (n_eff + 2))
    got = rblw_gamma(1e12, 8, 4)
    assert got == pytest.approx(2.0 / 24.0, abs=1e-10)


def test_rblw_decreasing_in_sphericity():
    vals = [rblw_gamma(u, 10, 6) for u in (0.05, 0.2, 0.5, 0.9)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert all(0.0 <= v <= 1.0 for v in vals)


def test_closed_form_matches_scalar_loop():
    rng = np.random.default_rng(62)
    for _ in range(20):
        n = int(rng.integers(2, 8))
        n_mem = int(rng.integers(2, 10))
        members = rng.standard_normal((n, n_mem)) * rng.uniform(0.5, 2.0)
        target = rng.standard_normal((n, n))
        target = target @ target.T
        assert abs(
            closed_form_gamma(members, target) - closed_form_loop(members, target)
        ) < 1e-10


def test_closed_form_target_equal_to_sample_gives_one():
    rng = np.random.default_rng(63)
    members = rng.standard_normal((4, 6))
    devs = members - members.mean(axis=1)[:, None]
    cov = devs @ devs.T / 5.0
    assert closed_form_gamma(members, cov) == 1.0


def test_closed_form_shrinks_with_sample_size():
    # with a target away from the truth, a larger sample trusts itself more:
    # the numerator (sampling noise) decays while the denominator stays put
    rng = np.random.default_rng(64)
    root = np.sqrt(np.array([3.0, 2.0, 1.0, 0.5]))
    target = np.eye(4)
    small = [
        closed_form_gamma(root[:, None] * rng.standard_normal((4, 50)), target)
        for _ in range(30)
    ]
    large = [
        closed_form_gamma(root[:, None] * rng.standard_normal((4, 500)), target)
        for _ in range(30)
    ]
    gap = np.mean(small) - np.mean(large)
    spread = np.sqrt(np.var(small) / 30 + np.var(large) / 30)
    assert gap > 3.0 * spread


def test_gamma_policy_validation():
    with pytest.raises(ConfigError):
        GammaPolicy(kind="static")
    with pytest.raises(ConfigError):
        GammaPolicy(kind="static", value=1.0)
    with pytest.raises(ConfigError):
        GammaPolicy(kind="rblw", value=0.3)
    with pytest.raises(ConfigError):
        GammaPolicy(kind="magic")


def test_estimate_gamma_static_passes_value_and_mu():
    rng = np.random.default_rng(65)
    target = TargetCovariance(basis=np.eye(5), spectrum=np.full(5, 2.0))
    members = rng.standard_normal((5, 4))
    est = estimate_gamma(GammaPolicy("static", 0.3), members, target, 5)
    assert est.gamma == 0.3
    assert est.sphericity_hat is None
    mean = members.mean(axis=1)
    anoms = (members - mean[:, None]) / np.sqrt(3.0)
    sing = whiten(target, anoms)
    assert est.mu == pytest.approx(float((sing**2).sum() / 5.0), rel=1e-12)


def test_estimate_gamma_rblw_capped_below_one():
    # nearly spherical whitened spread drives raw RBLW to 1; the estimate
    # must stay strictly below so the 1/(1-gamma) rescale is finite
    rng = np.random.default_rng(66)
    target = TargetCovariance(basis=np.eye(3), spectrum=np.ones(3))
    members = np.eye(3, 4) + 1e-9 * rng.standard_normal((3, 4))
    est = estimate_gamma(GammaPolicy("rblw"), members, target, 3)
    assert est.gamma <= GAMMA_CEILING < 1.0


def test_estimate_gamma_closed_form_uses_scaled_target():
    # closed_form shrinks toward mu * P; equality holds when the sample
    # covariance is exactly that matrix
    rng = np.random.default_rng(67)
    target = TargetCovariance(basis=np.eye(4), spectrum=np.array([2.0, 1.5, 1.0, 0.5]))
    members = rng.standard_normal((4, 6))
    est = estimate_gamma(GammaPolicy("closed_form"), members, target, 4)
    assert 0.0 <= est.gamma <= GAMMA_CEILING
    assert est.mu > 0.0
