"""Verification metrics: spatio-temporal RMSE, rank histograms, KL scores."""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyHistogramError

__all__ = [
    "RankHistogram",
    "RunMetrics",
    "spatiotemporal_rmse",
    "rank_histogram",
    "kl_from_uniform",
]


@dataclass
class RankHistogram:
    """Counts of truth ranks within ensemble member values (N+1 bins)."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 1 or self.counts.shape[0] < 2:
            raise ValueError("counts must be a vector with at least 2 bins")
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")

    @property
    def bins(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def frequencies(self):
        total = self.total
        if total == 0:
            raise EmptyHistogramError("histogram holds no samples")
        return self.counts / total

    def merge(self, other):
        """Pool counts with another histogram over the same bin layout."""
        if other.bins != self.bins:
            raise ValueError(
                "cannot merge histograms with %d and %d bins" % (self.bins, other.bins)
            )
        return RankHistogram(counts=self.counts + other.counts)


@dataclass
class RunMetrics:
    """Summary scores for one filter run."""

    rmse: float
    kl: float
    mean_gamma: float
    diverged: bool


def spatiotemporal_rmse(means, truths, normalize=True):
    """Root mean squared error pooled over time and state.

    ``means`` and ``truths`` are (K, n) stacks (or matching sequences).
    With ``normalize`` false, returns the plain root of the summed squares
    instead of the per-entry mean, as a diagnostic.
    """
    means = np.asarray(means, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if means.shape != truths.shape:
        raise ValueError(
            "shape mismatch: means %r vs truths %r" % (means.shape, truths.shape)
        )
    if means.ndim == 1:
        means = means[None, :]
        truths = truths[None, :]
    if means.size == 0:
        raise ValueError("need at least one scored step")
    sq = float(((means - truths) ** 2).sum())
    if not normalize:
        return float(np.sqrt(sq))
    return float(np.sqrt(sq / means.size))


def rank_histogram(members, truths, var_index=None, rng=None):
    """Rank of the truth within each step's member values, binned.

    Either pass aligned sequences of ensembles and truth state vectors with
    ``var_index`` picking the tracked state variable, or pass the extracted
    values directly: ``members`` as a (K, N) array of one variable across K
    steps and N members, ``truths`` as the matching (K,) array.  The rank
    counts members strictly below the truth; among exactly tied members the
    truth's placement is uniform random, so pass a seeded generator for
    reproducibility.  Returns a RankHistogram with N+1 bins.
    """
    if var_index is not None:
        member_values = np.stack([e.members[var_index] for e in members])
        truth_values = np.asarray(
            [np.asarray(t, dtype=np.float64)[var_index] for t in truths]
        )
    else:
        member_values = np.asarray(members, dtype=np.float64)
        truth_values = np.asarray(truths, dtype=np.float64)
    if member_values.ndim != 2 or truth_values.shape != (member_values.shape[0],):
        raise ValueError("expected (K, N) member values and (K,) truths")
    if rng is None:
        rng = np.random.default_rng()
    n_mem = member_values.shape[1]
    counts = np.zeros(n_mem + 1, dtype=np.int64)
    below = (member_values < truth_values[:, None]).sum(axis=1)
    ties = (member_values == truth_values[:, None]).sum(axis=1)
    for lo, t in zip(below, ties):
        rank = lo + (int(rng.integers(0, t + 1)) if t else 0)
        counts[rank] += 1
    return RankHistogram(counts=counts)


def kl_from_uniform(hist, smoothed=True):
    """KL divergence of the rank histogram from the uniform distribution.

    Zero for a perfectly flat histogram, log(bins) for a point mass.  When
    ``smoothed`` and any bin is empty, additive smoothing with
    epsilon = 1/(2 total) keeps the divergence finite; otherwise empty bins
    simply drop out of the sum.
    """
    total = hist.total
    if total == 0:
        raise EmptyHistogramError("histogram holds no samples")
    bins = hist.bins
    counts = hist.counts.astype(np.float64)
    if smoothed and (hist.counts == 0).any():
        eps = 1.0 / (2.0 * total)
        freq = (counts + eps) / (total + bins * eps)
    else:
        freq = counts / total
    pos = freq > 0.0
    return float((freq[pos] * np.log(freq[pos] * bins)).sum())
