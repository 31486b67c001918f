"""Ensemble containers and the mean/anomaly/observation algebra.

Anomalies carry the 1/sqrt(N-1) scaling throughout, so ``A @ A.T`` is the
sample covariance with no further normalisation.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EnsembleSizeError, InflationError, ObservationOperatorError

__all__ = [
    "Ensemble",
    "AnomalySet",
    "ObservationOperator",
    "ObservationRecord",
    "decompose",
    "observe",
    "inflate",
]


@dataclass
class Ensemble:
    """An (n, N) block of state columns tagged with model time."""

    members: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=np.float64)
        if self.members.ndim != 2:
            raise ValueError("members must be an (n, N) array")
        if self.members.shape[1] < 2:
            raise EnsembleSizeError(
                "need at least 2 members, got %d" % self.members.shape[1]
            )
        if not np.all(np.isfinite(self.members)):
            raise ValueError("ensemble members must be finite")

    @property
    def dimension(self):
        return self.members.shape[0]

    @property
    def size(self):
        return self.members.shape[1]


@dataclass
class AnomalySet:
    """Scaled state/observation anomalies of one forecast ensemble.

    ``state`` is (n, N) and ``observed`` is (m, N), both scaled by
    1/sqrt(N-1) about their own means.  ``inflation`` records the
    multiplicative factor already applied.
    """

    state: np.ndarray
    observed: np.ndarray
    mean: np.ndarray
    observed_mean: np.ndarray
    inflation: float = 1.0

    @property
    def size(self):
        return self.state.shape[1]


@dataclass
class ObservationOperator:
    """Maps a length-n state to a length-m observation.

    ``apply`` acts on a single state vector.  When ``vectorized`` is true it
    may also act column-wise on an (n, N) block; when ``matrix`` is given the
    operator is linear and the block path is a plain matmul.
    """

    apply: callable
    observed_dim: int
    linear: bool = False
    vectorized: bool = False
    matrix: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_matrix(cls, h):
        h = np.asarray(h, dtype=np.float64)
        if h.ndim != 2:
            raise ValueError("H must be a 2-d matrix")
        return cls(
            apply=lambda x: h @ x,
            observed_dim=h.shape[0],
            linear=True,
            vectorized=True,
            matrix=h,
        )

    @classmethod
    def identity(cls, n):
        return cls(
            apply=lambda x: np.asarray(x, dtype=np.float64).copy(),
            observed_dim=n,
            linear=True,
            vectorized=True,
            matrix=np.eye(n),
        )

    def apply_block(self, members):
        """Observe every column of an (n, N) block, returning (m, N)."""
        if self.matrix is not None:
            out = self.matrix @ members
        elif self.vectorized:
            out = np.asarray(self.apply(members), dtype=np.float64)
        else:
            cols = []
            for k in range(members.shape[1]):
                try:
                    cols.append(np.asarray(self.apply(members[:, k]), dtype=np.float64))
                except Exception as exc:
                    raise ObservationOperatorError(
                        "observation operator failed on member %d: %s" % (k, exc)
                    ) from exc
            out = np.stack(cols, axis=1)
        if out.shape != (self.observed_dim, members.shape[1]):
            raise ObservationOperatorError(
                "operator returned shape %r, expected %r"
                % (out.shape, (self.observed_dim, members.shape[1]))
            )
        return out


@dataclass
class ObservationRecord:
    """An observation vector with its error covariance R (SPD) and time."""

    values: np.ndarray
    covariance: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.covariance = np.asarray(self.covariance, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("observation values must be a vector")
        m = self.values.shape[0]
        if self.covariance.shape != (m, m):
            raise ValueError("R must be (m, m) matching the observation")
        scale = max(1.0, np.abs(self.covariance).max())
        if np.abs(self.covariance - self.covariance.T).max() > 1e-10 * scale:
            raise ValueError("R must be symmetric")

    @property
    def diagonal_r(self):
        """Diagonal of R if R is diagonal, else None."""
        off = self.covariance - np.diag(np.diag(self.covariance))
        if np.abs(off).max() > 0.0:
            return None
        return np.diag(self.covariance).copy()


def decompose(ensemble):
    """Split an ensemble into its mean and scaled anomalies.

    Returns ``(mean, A)`` with ``A = (X - mean 1^T) / sqrt(N - 1)``.
    """
    members = ensemble.members
    n_mem = members.shape[1]
    if n_mem < 2:
        raise EnsembleSizeError("need at least 2 members to form anomalies")
    mean = members.mean(axis=1)
    anoms = (members - mean[:, None]) / np.sqrt(n_mem - 1.0)
    return mean, anoms


def observe(ensemble, operator, record):
    """Observe an ensemble and difference it against a record.

    Returns ``(Z, d, observed_mean)`` where Z holds scaled observation-space
    anomalies about the observed mean and ``d = y - observed_mean`` is the
    innovation.
    """
    obs_members = operator.apply_block(ensemble.members)
    if record.values.shape[0] != operator.observed_dim:
        raise ObservationOperatorError(
            "observation has length %d but operator yields %d"
            % (record.values.shape[0], operator.observed_dim)
        )
    n_mem = obs_members.shape[1]
    observed_mean = obs_members.mean(axis=1)
    z = (obs_members - observed_mean[:, None]) / np.sqrt(n_mem - 1.0)
    d = record.values - observed_mean
    return z, d, observed_mean


def inflate(anomalies, factor):
    """Scale state and observed anomalies by a factor >= 1, means untouched."""
    if factor < 1.0:
        raise InflationError("inflation factor must be >= 1, got %r" % (factor,))
    return AnomalySet(
        state=factor * anomalies.state,
        observed=factor * anomalies.observed,
        mean=anomalies.mean,
        observed_mean=anomalies.observed_mean,
        inflation=anomalies.inflation * factor,
    )
