"""Target covariance estimation, whitening, and synthetic sampling."""

import numpy as np
import pytest

from conftest import random_orthogonal
from enshrink.climatology import (
    SyntheticEnsembleSpec,
    TargetCovariance,
    generate_climatology,
    sample_synthetic,
    scaling_mu,
    whiten,
)
from enshrink.errors import (
    DegenerateClimatologyError,
    EnsembleSizeError,
    InvalidScaleError,
)
from enshrink.models import ModelConfig


def test_from_samples_recovers_low_rank_structure():
    # samples confined to one direction give a rank-1 target along it
    rng = np.random.default_rng(40)
    direction = np.array([3.0, 0.0, 4.0]) / 5.0
    samples = direction[:, None] * rng.standard_normal(500)[None, :]
    target = TargetCovariance.from_samples(samples)
    assert target.rank == 1
    assert np.abs(np.abs(target.basis[:, 0] @ direction) - 1.0) < 1e-10


def test_from_samples_rejects_constant_block():
    with pytest.raises(DegenerateClimatologyError):
        TargetCovariance.from_samples(np.ones((4, 50)))


def test_from_samples_monte_carlo_spectrum():
    # large-sample spectrum of N(0, diag(5,4,3,2,1)) draws
    rng = np.random.default_rng(41)
    spectrum = np.array([5.0, 4.0, 3.0, 2.0, 1.0])
    samples = np.sqrt(spectrum)[:, None] * rng.standard_normal((5, 100_000))
    target = TargetCovariance.from_samples(samples)
    assert target.rank == 5
    assert np.abs(target.spectrum - spectrum).max() < 0.05 * spectrum.max()


def test_dense_matches_two_pass_covariance():
    rng = np.random.default_rng(42)
    samples = rng.standard_normal((6, 300)) * rng.uniform(0.5, 3.0, size=(6, 1))
    target = TargetCovariance.from_samples(samples)
    devs = samples - samples.mean(axis=1)[:, None]
    cov = devs @ devs.T / (samples.shape[1] - 1)
    assert np.abs(target.dense() - cov).max() < 1e-8


def test_sqrt_factor_reproduces_dense():
    rng = np.random.default_rng(43)
    samples = rng.standard_normal((5, 200))
    target = TargetCovariance.from_samples(samples)
    f = target.sqrt_factor()
    assert np.allclose(f @ f.T, target.dense(), atol=1e-10)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(44)
    target = TargetCovariance.from_samples(rng.standard_normal((4, 100)))
    path = tmp_path / "target.npz"
    target.save(path)
    back = TargetCovariance.load(path)
    assert np.array_equal(back.basis, target.basis)
    assert np.array_equal(back.spectrum, target.spectrum)


def test_generate_climatology_l96_variance_scale():
    cfg = ModelConfig(dimension=12, forcing=8.0, step=0.05)
    target = generate_climatology(
        cfg, snapshots=400, spinup_steps=100, rng=np.random.default_rng(45)
    )
    assert target.dimension == 12
    # chaotic regime: per-site climatological variance is order 10
    site_var = np.diag(target.dense())
    assert 2.0 < site_var.mean() < 40.0


def test_generate_climatology_modes_agree_statistically():
    cfg = ModelConfig(dimension=8, forcing=8.0, step=0.05)
    t1 = generate_climatology(
        cfg, snapshots=600, spinup_steps=100, rng=np.random.default_rng(46)
    )
    t2 = generate_climatology(
        cfg,
        snapshots=600,
        spinup_steps=150,
        rng=np.random.default_rng(47),
        mode="independent",
    )
    v1, v2 = np.diag(t1.dense()).mean(), np.diag(t2.dense()).mean()
    assert 0.5 < v1 / v2 < 2.0


def test_whiten_identity_target_equals_plain_svd():
    rng = np.random.default_rng(48)
    target = TargetCovariance(basis=np.eye(5), spectrum=np.ones(5))
    a = rng.standard_normal((5, 7))
    assert np.allclose(
        whiten(target, a), np.linalg.svd(a, compute_uv=False), atol=1e-12
    )


def test_whiten_invariant_under_target_rotation():
    # whitened singular values only see P^{-1/2} A, so rotating both the
    # target basis and the anomalies together changes nothing
    rng = np.random.default_rng(49)
    spectrum = np.array([4.0, 2.0, 1.0, 0.5])
    a = rng.standard_normal((4, 6))
    t1 = TargetCovariance(basis=np.eye(4), spectrum=spectrum)
    q = random_orthogonal(rng, 4)
    t2 = TargetCovariance(basis=q, spectrum=spectrum)
    assert np.allclose(whiten(t1, a), whiten(t2, q @ a), atol=1e-10)


def test_scaling_mu_hand_case():
    # singular values (2, 1) over dimension 4: mu = (4 + 1) / 4
    assert scaling_mu(np.array([2.0, 1.0]), 4) == pytest.approx(1.25)


def test_scaling_mu_uses_state_dimension():
    s = np.array([1.0, 1.0])
    assert scaling_mu(s, 2) == pytest.approx(1.0)
    assert scaling_mu(s, 8) == pytest.approx(0.25)


def test_sample_synthetic_rejects_bad_mu():
    target = TargetCovariance(basis=np.eye(2), spectrum=np.ones(2))
    spec = SyntheticEnsembleSpec(size=4)
    with pytest.raises(InvalidScaleError):
        sample_synthetic(np.zeros(2), 0.0, target, spec, np.random.default_rng(0))


def test_sample_synthetic_stays_in_target_subspace():
    rng = np.random.default_rng(50)
    basis = np.zeros((5, 2))
    basis[0, 0] = 1.0
    basis[2, 1] = 1.0
    target = TargetCovariance(basis=basis, spectrum=np.array([2.0, 1.0]))
    mean = np.full(5, 3.0)
    draws = sample_synthetic(mean, 1.0, target, SyntheticEnsembleSpec(size=40), rng)
    devs = draws - mean[:, None]
    assert np.abs(devs[[1, 3, 4]]).max() < 1e-12


def test_sample_synthetic_gaussian_covariance():
    rng = np.random.default_rng(51)
    q = random_orthogonal(rng, 4)
    target = TargetCovariance(basis=q, spectrum=np.array([3.0, 2.0, 1.0, 0.5]))
    mu = 1.7
    spec = SyntheticEnsembleSpec(size=60_000)
    draws = sample_synthetic(np.zeros(4), mu, target, spec, rng)
    cov = draws @ draws.T / spec.size
    expect = mu * target.dense()
    assert np.linalg.norm(cov - expect) / np.linalg.norm(expect) < 0.05


def test_sample_synthetic_laplace_covariance_and_tails():
    rng = np.random.default_rng(52)
    target = TargetCovariance(basis=np.eye(3), spectrum=np.array([2.0, 1.0, 0.5]))
    spec = SyntheticEnsembleSpec(size=120_000, distribution="laplace")
    draws = sample_synthetic(np.zeros(3), 1.0, target, spec, rng)
    cov = draws @ draws.T / spec.size
    expect = target.dense()
    assert np.linalg.norm(cov - expect) / np.linalg.norm(expect) < 0.05
    # exponential scale mixture has positive excess kurtosis per coordinate
    x = draws[0] / np.sqrt(2.0)
    kurt = (x**4).mean() / (x**2).mean() ** 2 - 3.0
    assert kurt > 1.0


def test_synthetic_spec_validation():
    with pytest.raises(EnsembleSizeError):
        SyntheticEnsembleSpec(size=1)
    with pytest.raises(ValueError):
        SyntheticEnsembleSpec(size=4, distribution="cauchy")


def test_target_validation_rejects_nonorthonormal_basis():
    with pytest.raises(ValueError):
        TargetCovariance(basis=2.0 * np.eye(3), spectrum=np.ones(3))
    with pytest.raises(DegenerateClimatologyError):
        TargetCovariance(basis=np.eye(3), spectrum=np.array([1.0, 0.0, -1.0]))
