"""Localization taper functions and grid distance helpers."""

import numpy as np

__all__ = [
    "gaspari_cohn",
    "operational",
    "taper",
    "taper_weights",
    "ring_distance",
    "TAPER_KINDS",
]

TAPER_KINDS = ("gaspari_cohn", "operational")


def _as_scaled(k):
    k = np.asarray(k, dtype=np.float64)
    if np.any(k < 0.0):
        raise ValueError("scaled distance must be non-negative")
    return k


def gaspari_cohn(k):
    """Fifth-order piecewise-rational compactly supported correlation.

    ``k`` is distance over the localization half-width; support ends at
    k = 2.  Accepts scalars or arrays.
    """
    k = _as_scaled(k)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    out = np.zeros_like(k)
    inner = k <= 1.0
    ki = k[inner]
    out[inner] = (
        1.0
        - (5.0 / 3.0) * ki**2
        + (5.0 / 8.0) * ki**3
        + 0.5 * ki**4
        - 0.25 * ki**5
    )
    outer = (k > 1.0) & (k < 2.0)
    ko = k[outer]
    out[outer] = (
        4.0
        - 5.0 * ko
        + (5.0 / 3.0) * ko**2
        + (5.0 / 8.0) * ko**3
        - 0.5 * ko**4
        + (1.0 / 12.0) * ko**5
        - (2.0 / 3.0) / ko
    )
    return float(out[0]) if scalar else out


def operational(k):
    """Piecewise-cubic taper: flat at 1 out to k = 1, then a steep
    polynomial rolloff hitting 0 at k = 5/4."""
    k = _as_scaled(k)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    out = np.zeros_like(k)
    out[k <= 1.0] = 1.0
    mid = (k > 1.0) & (k <= 1.25)
    km = k[mid]
    out[mid] = (5.0 - 4.0 * km) ** 2 * (8.0 * km - 7.0)
    return float(out[0]) if scalar else out


_TAPERS = {"gaspari_cohn": gaspari_cohn, "operational": operational}


def taper(kind, k):
    """Evaluate a taper by name at an already-scaled distance k."""
    if kind not in _TAPERS:
        raise ValueError("taper kind must be one of %r, got %r" % (TAPER_KINDS, kind))
    return _TAPERS[kind](k)


def taper_weights(kind, distances, radius):
    """Taper values for raw distances under a localization radius.

    An infinite radius gives weight 1 everywhere.
    """
    if kind not in _TAPERS:
        raise ValueError("taper kind must be one of %r, got %r" % (TAPER_KINDS, kind))
    if radius <= 0.0:
        raise ValueError("localization radius must be positive")
    distances = np.asarray(distances, dtype=np.float64)
    if np.isinf(radius):
        return np.ones_like(distances)
    return _TAPERS[kind](distances / radius)


def ring_distance(n):
    """Distance on a cyclic grid of n sites: min(|i-j|, n-|i-j|).

    Returns a callable of two site indices, vectorized over either.
    """

    def dist(i, j):
        raw = np.abs(np.asarray(i, dtype=np.float64) - np.asarray(j, dtype=np.float64))
        return np.minimum(raw, n - raw)

    return dist
