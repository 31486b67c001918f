"""Eigen-based square roots, SPD solves, and the truncated pseudo-inverse."""

import numpy as np
import pytest

from conftest import random_spd
from enshrink.errors import SingularInnovationError
from enshrink.linalg import (
    floored_eigh,
    spd_factor,
    spd_solve,
    symmetric_sqrt,
    truncated_pinv,
)


def test_symmetric_sqrt_diagonal_hand_case():
    root, mass = symmetric_sqrt(np.diag([4.0, 9.0]))
    assert np.allclose(root, np.diag([2.0, 3.0]), atol=1e-14)
    assert mass == 0.0


def test_symmetric_sqrt_multiplies_back():
    rng = np.random.default_rng(30)
    for _ in range(20):
        m = int(rng.integers(1, 10))
        mat = random_spd(rng, m)
        root, mass = symmetric_sqrt(mat)
        assert mass == 0.0
        assert np.allclose(root, root.T, atol=1e-12)
        err = np.linalg.norm(root @ root - mat) / np.linalg.norm(mat)
        assert err < 1e-9


def test_floored_eigh_orders_descending_and_floors():
    mat = np.diag([1.0, -0.5, 3.0])
    w, v, mass = floored_eigh(mat)
    assert np.array_equal(w, np.array([3.0, 1.0, 0.0]))
    assert mass == 0.5
    # eigenvectors still diagonalize the clipped matrix
    assert np.allclose((v * w) @ v.T, np.diag([1.0, 0.0, 3.0]), atol=1e-12)


def test_floored_eigh_rejects_asymmetric():
    with pytest.raises(ValueError):
        floored_eigh(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_spd_solve_matches_direct_solve():
    rng = np.random.default_rng(31)
    mat = random_spd(rng, 6)
    rhs = rng.standard_normal((6, 3))
    factor = spd_factor(mat)
    assert np.allclose(spd_solve(factor, rhs), np.linalg.solve(mat, rhs), atol=1e-9)


def test_spd_factor_rejects_indefinite():
    with pytest.raises(SingularInnovationError):
        spd_factor(np.diag([1.0, -1.0]), "test matrix")


def test_truncated_pinv_full_rank_square():
    rng = np.random.default_rng(32)
    mat = random_spd(rng, 5)
    inv = truncated_pinv(mat, 5)
    assert np.allclose(inv @ mat, np.eye(5), atol=1e-8)


def test_truncated_pinv_respects_rank_cap():
    # rank-2 truncation of a diagonal keeps only the two largest directions
    mat = np.diag([4.0, 2.0, 1.0])
    inv = truncated_pinv(mat, 2)
    assert np.allclose(inv, np.diag([0.25, 0.5, 0.0]), atol=1e-12)


def test_truncated_pinv_satisfies_penrose_on_tall():
    rng = np.random.default_rng(33)
    a = rng.standard_normal((7, 3))
    inv = truncated_pinv(a, 3)
    assert np.allclose(a @ inv @ a, a, atol=1e-10)
    assert np.allclose(inv @ a @ inv, inv, atol=1e-10)
