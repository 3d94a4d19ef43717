"""Dense linear-algebra primitives shared by the model-construction machinery.

Conventions: matrices are 2-d float ndarrays; ``vec`` stacks columns
(column-major), matching the identity K_{mn} vec(A) = vec(A^T).
"""

import numpy as np
from numpy import kron  # noqa: F401  (re-exported; block (i,j) of kron(a, b) is a[i,j]*b)
from scipy import linalg as sla

# Default numerical tolerances.  PD is judged on the smallest eigenvalue of
# the symmetrized input; inputs more asymmetric than SYMMETRY_TOL are rejected
# rather than silently averaged.
PD_TOL = 1e-10
SYMMETRY_TOL = 1e-9

__all__ = [
    "PD_TOL",
    "SYMMETRY_TOL",
    "kron",
    "vec",
    "unvec",
    "commutation_matrix",
    "exchange_matrix",
    "symmetrize",
    "is_positive_definite",
    "gaussian_condition",
]


def vec(a):
    """Stack the columns of ``a`` into a single 1-d vector."""
    return np.asarray(a, dtype=float).reshape(-1, order="F")


def unvec(x, rows, cols):
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    return np.asarray(x, dtype=float).reshape((rows, cols), order="F")


def commutation_matrix(m, n):
    """Permutation matrix K with K @ vec(A) = vec(A.T) for every m x n A.

    Parameters
    ----------
    m, n : int
        Row and column counts of the matrices K acts on; both >= 1.
    """
    if m < 1 or n < 1:
        raise ValueError("commutation_matrix requires m, n >= 1")
    K = np.zeros((m * n, m * n))
    for i in range(m):
        for j in range(n):
            # vec(A) puts A[i, j] at j*m + i; vec(A.T) puts it at i*n + j
            K[i * n + j, j * m + i] = 1.0
    return K


def exchange_matrix(m):
    """m x m matrix with ones on the anti-diagonal, zeros elsewhere."""
    if m < 1:
        raise ValueError("exchange_matrix requires m >= 1")
    return np.fliplr(np.eye(m))


def symmetrize(a, tol=SYMMETRY_TOL):
    """Return (a + a.T)/2, rejecting inputs asymmetric beyond ``tol``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix, got shape %s" % (a.shape,))
    gap = np.max(np.abs(a - a.T)) if a.size else 0.0
    if gap > tol:
        raise ValueError(
            "matrix is asymmetric beyond tolerance (max |a - a.T| = %.3g > %.3g)"
            % (gap, tol)
        )
    return 0.5 * (a + a.T)


def is_positive_definite(a, tol=PD_TOL):
    """True iff the smallest eigenvalue of the symmetrized input exceeds ``tol``.

    Raises ``ValueError`` when the input is asymmetric beyond the symmetry
    tolerance; symmetrization only absorbs roundoff, not modelling errors.
    """
    s = symmetrize(a)
    return bool(np.linalg.eigvalsh(s)[0] > tol)


def gaussian_condition(cov, head, tail):
    """Conditional law of the ``head`` block of a Gaussian given the ``tail`` block.

    Parameters
    ----------
    cov : ndarray
        Symmetric covariance matrix.
    head, tail : sequence of int
        Disjoint index lists selecting the conditioned and conditioning
        coordinates.  ``tail`` may be empty, in which case the marginal
        covariance of ``head`` is returned with a zero-width coefficient.

    Returns
    -------
    coeff : ndarray, shape (len(head), len(tail))
        Regression coefficient Sigma_{head,tail} Sigma_{tail}^{-1}; the
        conditional mean is ``coeff @ x_tail``.
    cond_cov : ndarray, shape (len(head), len(head))
        Schur complement Sigma_{head} - coeff Sigma_{tail,head}.
    """
    cov = symmetrize(cov)
    head = np.asarray(head, dtype=int)
    tail = np.asarray(tail, dtype=int)
    if head.size and tail.size and np.intersect1d(head, tail).size:
        raise ValueError("head and tail index sets overlap")
    s_hh = cov[np.ix_(head, head)]
    if tail.size == 0:
        return np.zeros((head.size, 0)), s_hh.copy()
    s_ht = cov[np.ix_(head, tail)]
    s_tt = cov[np.ix_(tail, tail)]
    try:
        # symmetric factorization solve; never form the explicit inverse
        coeff = sla.solve(s_tt, s_ht.T, assume_a="sym").T
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise np.linalg.LinAlgError(
            "singular conditioning block (%d indices): %s" % (tail.size, exc)
        ) from exc
    cond_cov = s_hh - coeff @ s_ht.T
    return coeff, 0.5 * (cond_cov + cond_cov.T)
