"""Backend agreement: the compiled kernels must match pure numpy bitwise."""

import os
import subprocess
import sys

import numpy as np
import pytest

from enshrink import kernels


def test_tendency_backends_bitwise_equal():
    if not kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(4, 41))
        cols = int(rng.integers(1, 8))
        y = np.ascontiguousarray(rng.standard_normal((n, cols)))
        a = kernels.l96_tendency_numpy(y, 8.0)
        b = kernels.l96_tendency_numba(y, 8.0)
        assert np.array_equal(a, b)


def test_rk4_backends_bitwise_equal():
    if not kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(12)
    for _ in range(10):
        n = int(rng.integers(4, 41))
        cols = int(rng.integers(1, 6))
        steps = int(rng.integers(1, 30))
        y = np.ascontiguousarray(rng.standard_normal((n, cols)) + 8.0)
        a = kernels.rk4_l96_numpy(y, 8.0, 0.05, steps)
        b = kernels.rk4_l96_numba(y, 8.0, 0.05, steps)
        assert np.array_equal(a, b)


def test_disable_flag_selects_numpy_backend():
    code = (
        "from enshrink import kernels; "
        "print(kernels.NUMBA_ACTIVE, kernels.rk4_l96 is kernels.rk4_l96_numpy)"
    )
    env = dict(os.environ, ENSHRINK_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.split() == ["False", "True"]
