"""Orthonormalization under a covariance form and small helpers around it."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .errors import IllConditioned


def gram_schmidt(vectors: NDArray[np.float64], form: NDArray[np.float64],
                 tol: float = 1e-9) -> NDArray[np.float64]:
    """Orthonormalize the columns of ``vectors`` under ``<u, v> = u.T @ form @ v``.

    Classical Gram-Schmidt with a second re-orthogonalization pass per
    column, which keeps the result orthonormal to working precision where a
    single pass drifts once the Gram matrix is badly conditioned.

    Parameters
    ----------
    vectors : ndarray, shape (n, k)
        Columns to orthonormalize. Their span must be one on which ``form`` is
        positive definite.
    form : ndarray, shape (n, n)
        Symmetric positive-semidefinite matrix defining the inner product.
    tol : float
        A column whose squared norm after projection falls below
        ``tol`` times its squared norm before projection is treated as
        dependent on the previous ones.

    Returns
    -------
    ndarray, shape (n, k)
        Columns ``e_j`` with ``e.T @ form @ e = I`` spanning the same flag of
        subspaces as the input.

    Raises
    ------
    IllConditioned
        If some column is (numerically) in the span of its predecessors, or
        has zero length under ``form``.
    """
    n, k = vectors.shape
    out = np.zeros((n, k))
    for j in range(k):
        w = np.array(vectors[:, j], dtype=float)
        norm0 = float(w @ form @ w)
        if not norm0 > 0.0:
            raise IllConditioned(f"column {j} has non-positive squared length {norm0:.3g}")
        for _ in range(2):
            if j:
                w -= out[:, :j] @ (out[:, :j].T @ (form @ w))
        norm = float(w @ form @ w)
        if not norm > tol * norm0:
            raise IllConditioned(
                f"Gram-Schmidt pivot {norm:.3g} at column {j} is below tolerance"
            )
        out[:, j] = w / np.sqrt(norm)
    return out


def reflection_to(u: NDArray[np.float64]) -> NDArray[np.float64]:
    """Orthogonal matrix whose first column is the unit vector ``u``.

    A Householder reflection, with the reflecting vector chosen to avoid
    cancellation; when that choice would send ``e_1`` to ``-u`` the first
    column is flipped back.
    """
    k = len(u)
    e1 = np.zeros(k)
    e1[0] = 1.0
    if u[0] >= 0.0:
        w = e1 + u
        H = np.eye(k) - 2.0 * np.outer(w, w) / (w @ w)
        H[:, 0] *= -1.0
    else:
        w = e1 - u
        H = np.eye(k) - 2.0 * np.outer(w, w) / (w @ w)
    return H


def null_space(a: NDArray[np.float64], tol: float) -> NDArray[np.float64]:
    """Orthonormal basis (as columns) of the null space of the matrix ``a``.

    Singular values at most ``tol`` times the largest one (floored at
    ``tol`` in absolute terms for an all-zero matrix) count as zero.
    """
    a = np.atleast_2d(a)
    rows, cols = a.shape
    if cols == 0:
        return np.zeros((0, 0))
    _, s, vt = np.linalg.svd(a)
    smax = float(s[0]) if s.size else 0.0
    if smax == 0.0:
        return np.eye(cols)
    r = int(np.sum(s > tol * smax))
    return vt[r:].T.copy()
