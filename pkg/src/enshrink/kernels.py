"""Hot integration kernels for the Lorenz '96 model.

Two interchangeable backends are provided: a pure-numpy one and a
numba-compiled one.  Both evaluate the same floating-point expressions in
the same order, so they produce bitwise-identical trajectories.  The active
backend is chosen once at import time; set the environment variable
``ENSHRINK_DISABLE_NUMBA=1`` to force the numpy path (it is also used
automatically when numba is not installed).

Kernels operate on 2-d arrays of shape ``(n, cols)`` so that a whole
ensemble advances in one call.  Higher-level wrappers live in
:mod:`enshrink.models`.
"""

import os

import numpy as np

__all__ = [
    "HAVE_NUMBA",
    "NUMBA_ACTIVE",
    "l96_tendency2d",
    "l96_tendency_numpy",
    "rk4_l96",
    "rk4_l96_numpy",
]


def l96_tendency_numpy(y, forcing):
    """Lorenz '96 tendency for a block of states, numpy backend.

    y : (n, cols) array, one state per column.
    """
    ym1 = np.roll(y, 1, axis=0)
    ym2 = np.roll(y, 2, axis=0)
    yp1 = np.roll(y, -1, axis=0)
    return -ym1 * (ym2 - yp1) - y + forcing


def rk4_l96_numpy(y, forcing, h, steps):
    """Advance a block of states with classical RK4, numpy backend."""
    y = y.copy()
    hh = h / 2.0
    h6 = h / 6.0
    for _ in range(steps):
        k1 = l96_tendency_numpy(y, forcing)
        k2 = l96_tendency_numpy(y + hh * k1, forcing)
        k3 = l96_tendency_numpy(y + hh * k2, forcing)
        k4 = l96_tendency_numpy(y + h * k3, forcing)
        y = y + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _tendency_fill(y, forcing, out):
        n, cols = y.shape
        for i in range(n):
            im1 = i - 1 if i >= 1 else n - 1
            im2 = i - 2 if i >= 2 else i - 2 + n
            ip1 = i + 1 if i + 1 < n else 0
            for j in range(cols):
                out[i, j] = -y[im1, j] * (y[im2, j] - y[ip1, j]) - y[i, j] + forcing

    @numba.njit(cache=True)
    def rk4_l96_numba(y0, forcing, h, steps):
        y = y0.copy()
        n, cols = y.shape
        k1 = np.empty((n, cols))
        k2 = np.empty((n, cols))
        k3 = np.empty((n, cols))
        k4 = np.empty((n, cols))
        yt = np.empty((n, cols))
        hh = h / 2.0
        h6 = h / 6.0
        for _ in range(steps):
            _tendency_fill(y, forcing, k1)
            for i in range(n):
                for j in range(cols):
                    yt[i, j] = y[i, j] + hh * k1[i, j]
            _tendency_fill(yt, forcing, k2)
            for i in range(n):
                for j in range(cols):
                    yt[i, j] = y[i, j] + hh * k2[i, j]
            _tendency_fill(yt, forcing, k3)
            for i in range(n):
                for j in range(cols):
                    yt[i, j] = y[i, j] + h * k3[i, j]
            _tendency_fill(yt, forcing, k4)
            for i in range(n):
                for j in range(cols):
                    y[i, j] = y[i, j] + h6 * (
                        ((k1[i, j] + 2.0 * k2[i, j]) + 2.0 * k3[i, j]) + k4[i, j]
                    )
        return y

    def l96_tendency_numba(y, forcing):
        out = np.empty_like(y)
        _tendency_fill(y, forcing, out)
        return out

else:  # pragma: no cover - exercised only without numba
    rk4_l96_numba = None
    l96_tendency_numba = None


_flag = os.environ.get("ENSHRINK_DISABLE_NUMBA", "").strip().lower()
NUMBA_ACTIVE = HAVE_NUMBA and _flag in ("", "0", "false", "no")

if NUMBA_ACTIVE:
    l96_tendency2d = l96_tendency_numba
    rk4_l96 = rk4_l96_numba
else:
    l96_tendency2d = l96_tendency_numpy
    rk4_l96 = rk4_l96_numpy
