"""Dense linear-algebra helpers shared by the transform filters."""

import numpy as np
import scipy.linalg

from .errors import SingularInnovationError

__all__ = [
    "floored_eigh",
    "symmetric_sqrt",
    "spd_factor",
    "spd_solve",
    "truncated_pinv",
]


def _check_symmetric(mat, tol=1e-10):
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expected a square matrix, got shape %r" % (mat.shape,))
    scale = max(1.0, np.abs(mat).max())
    if np.abs(mat - mat.T).max() > tol * scale:
        raise ValueError("matrix is not symmetric within tolerance %g" % tol)
    return mat


def floored_eigh(mat, tol=1e-10):
    """Eigendecompose a symmetric matrix, flooring eigenvalues at zero.

    Returns ``(w, v, floored_mass)`` with eigenvalues descending and
    ``floored_mass`` the total amount clipped away (sum of the magnitudes of
    the negative eigenvalues).  Raises ValueError on asymmetric input.
    """
    mat = _check_symmetric(mat, tol)
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    floored_mass = float(-w[w < 0.0].sum())
    w = np.clip(w, 0.0, None)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order], floored_mass


def symmetric_sqrt(mat, tol=1e-10):
    """Symmetric square root with eigenvalue flooring at zero.

    Returns ``(root, floored_mass)``.  ``root`` is symmetric PSD and equals
    V sqrt(max(w, 0)) V^T.
    """
    w, v, floored_mass = floored_eigh(mat, tol)
    root = (v * np.sqrt(w)) @ v.T
    return root, floored_mass


def spd_factor(mat, label="matrix"):
    """Cholesky-factor an SPD matrix for repeated solves."""
    try:
        return scipy.linalg.cho_factor(np.asarray(mat, dtype=np.float64), lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SingularInnovationError("%s is not positive definite: %s" % (label, exc)) from exc


def spd_solve(factor, rhs):
    """Solve against a factor from :func:`spd_factor`."""
    return scipy.linalg.cho_solve(factor, rhs)


def truncated_pinv(mat, rank, rel_tol=1e-12):
    """Moore-Penrose pseudo-inverse keeping exactly ``rank`` leading singular
    values (any of them smaller than ``rel_tol`` times the largest are still
    dropped, the usual pseudo-inverse convention)."""
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    rank = min(rank, s.shape[0])
    cut = s[:rank].copy()
    good = cut > rel_tol * (s[0] if s.shape[0] else 0.0)
    inv = np.zeros_like(cut)
    inv[good] = 1.0 / cut[good]
    return (vt[:rank].T * inv) @ u[:, :rank].T
