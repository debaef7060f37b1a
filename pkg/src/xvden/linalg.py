"""Dense linear algebra used by the back-end models.

Matrices and vectors are plain ``numpy.float64`` arrays (row-major, the
numpy default).  The three operations here are the only linear algebra the
rest of the package relies on: matrix products with shape checking, an SPD
Cholesky factorization with a defined failure mode, and the multivariate
Gaussian log-density evaluated through that factorization.

All functions are pure: they never mutate their arguments.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NotPositiveDefiniteError, ShapeError

logger = logging.getLogger(__name__)

# Relative asymmetry beyond which cholesky_spd warns before symmetrizing.
SYMMETRY_RTOL = 1e-10

LOG_2PI = math.log(2.0 * math.pi)


def _as_float64(a, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} contains non-finite entries")
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` with explicit inner-dimension checking.

    Raises:
        ShapeError: if the inner dimensions disagree.
    """
    a = _as_float64(a, "a", 2)
    b = _as_float64(b, "b", 2)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"inner dimensions disagree: {a.shape[0]}x{a.shape[1]} @ {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def cholesky_spd(s) -> np.ndarray:
    """Lower-triangular Cholesky factor L of a symmetric positive-definite S.

    Inputs asymmetric beyond ``SYMMETRY_RTOL`` (relative to the largest
    entry) are symmetrized as (S + S^T)/2 with a logged warning; mildly
    asymmetric inputs are symmetrized silently for numerical hygiene.

    Raises:
        NotPositiveDefiniteError: on a non-positive pivot.  Callers that own
            an estimated covariance are expected to floor it and retry.
    """
    s = _as_float64(s, "S", 2)
    n, m = s.shape
    if n != m:
        raise ShapeError(f"S must be square, got {n}x{m}")
    scale = np.max(np.abs(s)) if n else 0.0
    asym = np.max(np.abs(s - s.T)) if n else 0.0
    if scale > 0 and asym > SYMMETRY_RTOL * scale:
        logger.warning(
            "cholesky_spd: input asymmetric (rel %.3e), symmetrizing", asym / scale
        )
    s = 0.5 * (s + s.T)
    try:
        return np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from exc


def chol_solve(chol_lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve S x = b given the lower Cholesky factor of S.

    ``b`` may be a vector or a matrix of stacked right-hand-side columns.
    """
    y = solve_triangular(chol_lower, b, lower=True)
    return solve_triangular(chol_lower.T, y, lower=False)


def chol_logdet(chol_lower: np.ndarray) -> float:
    """log det S from the diagonal of its lower Cholesky factor."""
    return 2.0 * float(np.sum(np.log(np.diag(chol_lower))))


def gaussian_logpdf(x, mu, s) -> float:
    """Multivariate normal log-density log N(x; mu, S) for SPD S.

    Computed as -[d ln(2 pi) + ln det S + (x-mu)^T S^{-1} (x-mu)] / 2 via
    Cholesky: the log-determinant from the factor's diagonal and the
    quadratic form from one triangular solve.

    Raises:
        NotPositiveDefiniteError: propagated from the factorization.
        ShapeError: if dimensions disagree.
    """
    x = _as_float64(x, "x", 1)
    mu = _as_float64(mu, "mu", 1)
    s = _as_float64(s, "S", 2)
    d = x.shape[0]
    if mu.shape[0] != d or s.shape != (d, d):
        raise ShapeError(
            f"dimension mismatch: x has dim {d}, mu {mu.shape[0]}, S {s.shape}"
        )
    chol = cholesky_spd(s)
    z = solve_triangular(chol, x - mu, lower=True)
    return -0.5 * (d * LOG_2PI + chol_logdet(chol) + float(z @ z))


def gaussian_logpdf_many(xs: np.ndarray, mu: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Row-wise log N(x_i; mu, S) for a stack of vectors ``xs`` (n x d)."""
    xs = _as_float64(xs, "xs", 2)
    d = xs.shape[1]
    chol = cholesky_spd(s)
    z = solve_triangular(chol, (xs - mu).T, lower=True)
    quad = np.sum(z * z, axis=0)
    return -0.5 * (d * LOG_2PI + chol_logdet(chol) + quad)
