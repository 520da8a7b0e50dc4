# kherd/utils/numerics.py
"""
Dense linear-algebra primitives, multivariate normal density and sampling,
and the seeded random-number contract shared by every module.

All randomness flows through `derive_rng`: one run seed, many named
sub-streams (see `RngStream`), so parallel or reordered work never shares a
generator.
"""

import logging
from typing import Optional

import numpy as np
from scipy import linalg

from kherd.constants import NumericTolerance, LogMessage, ErrorMessage
from kherd.exceptions import (
    NotPositiveDefinite, NotSymmetric, NonFiniteValue, DimensionMismatch)

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


def derive_rng(seed: int, stream: int = 0, *keys: int) -> np.random.Generator:
    """
    Build the generator for one named sub-stream of a run seed.

    Args:
        seed: Run seed (unsigned 64-bit)
        stream: Sub-stream id, usually an `RngStream` constant
        keys: Further integers (repeat index, chunk index...)

    Returns:
        np.random.Generator: identical (seed, stream, keys) give identical draws
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),) + tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(sequence))


def as_vec(x, dim: Optional[int] = None) -> np.ndarray:
    """Coerce to a finite 1-D float vector, optionally of a given dimension."""
    vec = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(vec)):
        raise NonFiniteValue(ErrorMessage.NON_FINITE)
    if dim is not None and vec.shape[0] != dim:
        raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=dim, got=vec.shape[0]))
    return vec


def as_points(x, dim: Optional[int] = None) -> np.ndarray:
    """Coerce to a finite (n, d) float matrix; a single vector becomes one row."""
    points = np.asarray(x, dtype=float)
    if points.ndim == 1:
        points = points.reshape(1, -1) if points.size else points.reshape(0, 0)
    if points.ndim != 2:
        raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected='a matrix', got=points.ndim))
    if not np.all(np.isfinite(points)):
        raise NonFiniteValue(ErrorMessage.NON_FINITE)
    if dim is not None and points.shape[1] != dim:
        raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=dim, got=points.shape[1]))
    return points


def as_sym_matrix(m, dim: Optional[int] = None) -> np.ndarray:
    """Coerce to a square float matrix symmetric to within 1e-12 relative tolerance."""
    matrix = np.asarray(m, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected='a square matrix', got=matrix.shape))
    if dim is not None and matrix.shape[0] != dim:
        raise DimensionMismatch(ErrorMessage.DIMENSION_MISMATCH.format(expected=dim, got=matrix.shape[0]))
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteValue(ErrorMessage.NON_FINITE)
    if not matrix.size:
        return matrix
    scale = np.max(np.abs(matrix))
    gap = np.max(np.abs(matrix - matrix.T))
    if gap > NumericTolerance.SYMMETRY_RTOL * scale:
        raise NotSymmetric(ErrorMessage.NOT_SYMMETRIC.format(gap=gap))
    return matrix


def _checked_cholesky(matrix: np.ndarray) -> np.ndarray:
    """Lower factor, or NotPositiveDefinite when a pivot falls under the floor."""
    floor = NumericTolerance.PIVOT_FLOOR * max(np.max(np.diag(matrix)), 0.0)
    try:
        lower = linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError:
        raise NotPositiveDefinite(ErrorMessage.NOT_POSITIVE_DEFINITE.format(pivot=float('nan')))
    pivots = np.diag(lower) ** 2
    if pivots.size and (np.min(pivots) <= floor or np.min(pivots) <= 0.0):
        raise NotPositiveDefinite(ErrorMessage.NOT_POSITIVE_DEFINITE.format(pivot=np.min(pivots)))
    return lower


def cholesky(m) -> np.ndarray:
    """
    Lower-triangular L with L·Lᵀ = m.

    A near-singular matrix gets one retry with 1e-10·I added before failing.

    Raises:
        NotPositiveDefinite: a pivot is not positive even after the jitter
        NotSymmetric: m is not symmetric
    """
    matrix = as_sym_matrix(m)
    try:
        return _checked_cholesky(matrix)
    except NotPositiveDefinite as first:
        jitter = NumericTolerance.CHOLESKY_JITTER
        logger.warning(LogMessage.CHOLESKY_JITTER.format(pivot=float(np.min(np.diag(matrix))), jitter=jitter))
        try:
            return _checked_cholesky(matrix + jitter * np.eye(matrix.shape[0]))
        except NotPositiveDefinite:
            raise first


def psd_factor(m) -> np.ndarray:
    """
    Factor F with F·Fᵀ = m for a positive semidefinite m.

    Unlike `cholesky` this accepts singular covariances (the all-zero matrix
    gives F = 0), which makes point-mass components sample exactly.
    """
    matrix = as_sym_matrix(m)
    if not np.any(matrix):
        return np.zeros_like(matrix)
    try:
        return _checked_cholesky(matrix)
    except NotPositiveDefinite:
        pass
    eigvals, eigvecs = np.linalg.eigh(matrix)
    scale = max(np.max(np.abs(eigvals)), 1.0)
    if np.min(eigvals) < -NumericTolerance.PSD_EIGEN_FLOOR * scale:
        raise NotPositiveDefinite(ErrorMessage.NOT_POSITIVE_DEFINITE.format(pivot=np.min(eigvals)))
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def log_det_from_cholesky(lower: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(lower))))


def mvn_logpdf(x, mean, cov) -> float:
    """Log density of N(mean, cov) at x."""
    mean = as_vec(mean)
    x = as_vec(x, mean.shape[0])
    lower = cholesky(as_sym_matrix(cov, mean.shape[0]))
    z = linalg.solve_triangular(lower, x - mean, lower=True)
    d = mean.shape[0]
    return float(-0.5 * (d * LOG_2PI + log_det_from_cholesky(lower) + z @ z))


def mvn_sample(rng: np.random.Generator, mean, cov, n: int) -> np.ndarray:
    """
    Draw n rows from N(mean, cov).

    Returns:
        np.ndarray: shape (n, d); bit-identical for a fixed generator state
    """
    if n < 0:
        raise ValueError(f"Sample count must be non-negative, got {n}")
    mean = as_vec(mean)
    factor = psd_factor(as_sym_matrix(cov, mean.shape[0]))
    z = rng.standard_normal((n, mean.shape[0]))
    return mean + z @ factor.T
