"""Dense symmetric eigen-decomposition and multivariate normal sampling.

The sampling transform for N(m, sigma^2 C) needs C = B diag(d^2) B^T with
orthogonal B.  Eigenvalues are floored before the square root so that the
transform stays valid even when an update pushes C indefinite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractError, RngStream

# Floor applied to eigenvalues before sqrt; keeps the sampling transform
# positive definite after aggressive covariance updates.
EIGENVALUE_FLOOR = 1e-20


class NumericalError(ArithmeticError):
    """Raised when matrix contents or strategy state degenerate numerically."""


def enforce_symmetry(c: np.ndarray) -> np.ndarray:
    """Return (C + C^T) / 2. Idempotent."""
    c = np.asarray(c, dtype=float)
    return (c + c.T) / 2.0


@dataclass
class EigenDecomp:
    """Orthogonal basis (columns = eigenvectors) and per-axis scales sqrt(eigenvalue)."""

    basis: np.ndarray
    scale: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.scale**2) @ self.basis.T

    def inv_sqrt(self) -> np.ndarray:
        """C^{-1/2} = B diag(1/d) B^T."""
        return (self.basis / self.scale) @ self.basis.T


def sym_eigen(c: np.ndarray) -> EigenDecomp:
    """Eigen-decompose a symmetric matrix, flooring eigenvalues at EIGENVALUE_FLOOR."""
    c = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(c)):
        raise NumericalError("matrix contains non-finite entries")
    values, vectors = np.linalg.eigh(enforce_symmetry(c))
    values = np.maximum(values, EIGENVALUE_FLOOR)
    return EigenDecomp(basis=vectors, scale=np.sqrt(values))


def mvn_sample_batch(m: np.ndarray, sigma: float, e: EigenDecomp, n: int, rng: RngStream) -> np.ndarray:
    """Draw n rows from N(m, sigma^2 B diag(d^2) B^T)."""
    if not sigma > 0:
        raise ContractError("sigma must be positive")
    z = rng.normal(size=(n, m.size))
    return m + sigma * (z * e.scale) @ e.basis.T


def mvn_sample(m: np.ndarray, sigma: float, e: EigenDecomp, rng: RngStream) -> np.ndarray:
    """Draw one sample m + sigma * B (d .* z), z standard normal."""
    return mvn_sample_batch(m, sigma, e, 1, rng)[0]
