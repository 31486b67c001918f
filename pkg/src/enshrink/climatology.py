"""Climatological target covariances and synthetic-ensemble sampling.

The target covariance P is stored in factored form P = U diag(L) U^T with
orthonormal basis U (n, r) and strictly positive spectrum L, so whitening
and sampling never touch an explicit n-by-n inverse square root.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClimatologyError, EnsembleSizeError, InvalidScaleError
from .models import integrate_block

__all__ = [
    "TargetCovariance",
    "SyntheticEnsembleSpec",
    "generate_climatology",
    "whiten",
    "scaling_mu",
    "sample_synthetic",
]

DISTRIBUTIONS = ("gaussian", "laplace")


@dataclass(frozen=True)
class TargetCovariance:
    """Factored covariance P = basis diag(spectrum) basis^T.

    basis    : (n, r) orthonormal columns.
    spectrum : (r,) strictly positive, descending.
    mean     : optional length-n climatological mean.
    """

    basis: np.ndarray
    spectrum: np.ndarray
    mean: np.ndarray | None = None

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=np.float64)
        spectrum = np.asarray(self.spectrum, dtype=np.float64)
        if basis.ndim != 2 or spectrum.ndim != 1 or basis.shape[1] != spectrum.shape[0]:
            raise ValueError("basis (n, r) and spectrum (r,) must agree on r")
        if spectrum.shape[0] == 0 or spectrum.min() <= 0.0:
            raise DegenerateClimatologyError("spectrum must be strictly positive")
        gram = basis.T @ basis
        if np.abs(gram - np.eye(basis.shape[1])).max() > 1e-8:
            raise ValueError("basis columns must be orthonormal")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "spectrum", spectrum)
        if self.mean is not None:
            object.__setattr__(
                self, "mean", np.asarray(self.mean, dtype=np.float64)
            )

    @property
    def dimension(self):
        return self.basis.shape[0]

    @property
    def rank(self):
        return self.spectrum.shape[0]

    def dense(self):
        """Materialise P as an (n, n) array (small-n diagnostics only)."""
        return (self.basis * self.spectrum) @ self.basis.T

    def sqrt_factor(self):
        """An (n, r) factor F with F F^T = P."""
        return self.basis * np.sqrt(self.spectrum)

    @classmethod
    def from_samples(cls, samples, rel_threshold=1e-10):
        """Build from an (n, K) sample block via the thin SVD of the centred
        anomalies; directions below ``rel_threshold`` of the leading singular
        value are dropped."""
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] < 2:
            raise ValueError("need an (n, K) block with K >= 2")
        mean = samples.mean(axis=1)
        anoms = (samples - mean[:, None]) / np.sqrt(samples.shape[1] - 1.0)
        u, s, _ = np.linalg.svd(anoms, full_matrices=False)
        if s.shape[0] == 0 or s[0] <= 0.0:
            raise DegenerateClimatologyError("samples carry no variance")
        keep = s > rel_threshold * s[0]
        if not keep.any():
            raise DegenerateClimatologyError("samples carry no variance")
        return cls(basis=u[:, keep], spectrum=s[keep] ** 2, mean=mean)

    @classmethod
    def from_dense(cls, p, rel_threshold=1e-10, mean=None):
        """Build from a dense symmetric PSD matrix, dropping tiny eigenvalues."""
        p = np.asarray(p, dtype=np.float64)
        w, v = np.linalg.eigh(0.5 * (p + p.T))
        if w.max() <= 0.0:
            raise DegenerateClimatologyError("matrix has no positive spectrum")
        keep = w > rel_threshold * w.max()
        order = np.argsort(w[keep])[::-1]
        return cls(basis=v[:, keep][:, order], spectrum=w[keep][order], mean=mean)

    def save(self, path):
        payload = {"basis": self.basis, "spectrum": self.spectrum}
        if self.mean is not None:
            payload["mean"] = self.mean
        np.savez(path, **payload)

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            mean = data["mean"] if "mean" in data.files else None
            return cls(basis=data["basis"], spectrum=data["spectrum"], mean=mean)


@dataclass(frozen=True)
class SyntheticEnsembleSpec:
    """How to draw the synthetic ensemble: member count and tail family."""

    size: int = 100
    distribution: str = "gaussian"

    def __post_init__(self):
        if self.size < 2:
            raise EnsembleSizeError(
                "synthetic ensemble needs at least 2 members, got %d" % self.size
            )
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                "distribution must be one of %r, got %r"
                % (DISTRIBUTIONS, self.distribution)
            )


def generate_climatology(
    config,
    snapshots=2000,
    spinup_steps=200,
    interval_steps=1,
    rng=None,
    mode="trajectory",
    rel_threshold=1e-10,
):
    """Estimate a climatological covariance for the configured model.

    ``trajectory`` mode (the default) spins one run ``spinup_steps`` model
    steps onto the attractor and then collects ``snapshots`` states
    ``interval_steps`` model steps apart.  ``independent`` mode instead
    spins up ``snapshots`` separate runs from perturbed initial conditions
    and keeps their final states, trading a much longer integration for
    samples with no serial correlation.
    """
    if mode not in ("trajectory", "independent"):
        raise ValueError("mode must be 'trajectory' or 'independent'")
    if snapshots < 2:
        raise ValueError("need at least 2 snapshots")
    if rng is None:
        rng = np.random.default_rng(0)
    n = config.dimension
    if mode == "independent":
        block = config.forcing + rng.standard_normal((n, snapshots))
        samples = integrate_block(block, config, spinup_steps)
    else:
        state = config.forcing + rng.standard_normal(n)
        state = integrate_block(state, config, spinup_steps)
        samples = np.empty((n, snapshots))
        for k in range(snapshots):
            state = integrate_block(state, config, interval_steps)
            samples[:, k] = state
    return TargetCovariance.from_samples(samples, rel_threshold=rel_threshold)


def whiten(target, anomalies):
    """Singular values of the target-whitened anomalies.

    Computes the thin SVD of diag(L)^(-1/2) U^T A, an (r, N) array, and
    returns its singular values (length min(r, N), descending).  These are
    the square roots of the eigenvalues of the whitened sample covariance.
    """
    anomalies = np.asarray(anomalies, dtype=np.float64)
    b = (target.basis.T @ anomalies) / np.sqrt(target.spectrum)[:, None]
    return np.linalg.svd(b, compute_uv=False)


def scaling_mu(singular_values, state_dim):
    """Scale factor mu = trace of the whitened covariance over the state
    dimension (the state dimension, not the anomaly count)."""
    if state_dim < 1:
        raise ValueError("state dimension must be positive")
    singular_values = np.asarray(singular_values, dtype=np.float64)
    return float((singular_values**2).sum() / state_dim)


def sample_synthetic(mean, mu, target, spec, rng):
    """Draw an (n, M) synthetic ensemble with covariance mu * P about mean.

    gaussian : columns are N(mean, mu P).
    laplace  : a Gaussian scale mixture; per member, w ~ Exp(1) then the
               column is N(mean, mu w P).  Mixture covariance is still mu P,
               with heavier tails.  The scale draws w are taken before the
               Gaussian block, which pins the stream layout.
    """
    if mu <= 0.0:
        raise InvalidScaleError("synthetic scale mu must be positive, got %r" % (mu,))
    mean = np.asarray(mean, dtype=np.float64)
    factor = target.sqrt_factor()
    if spec.distribution == "laplace":
        w = rng.exponential(1.0, spec.size)
        xi = rng.standard_normal((target.rank, spec.size))
        cols = factor @ (xi * np.sqrt(mu * w)[None, :])
    else:
        xi = rng.standard_normal((target.rank, spec.size))
        cols = np.sqrt(mu) * (factor @ xi)
    return mean[:, None] + cols
