"""Small dense SPD algebra for the weighted ridge regression.

Maintains a Gram matrix M (starting at the identity) together with its
inverse under nonnegative rank-1 updates. The inverse is kept current via
the Sherman-Morrison identity and rebuilt from M by direct inversion every
REBUILD_EVERY updates to cap floating-point drift.
"""

from __future__ import annotations

import numpy as np


class LinalgError(ValueError):
    """Invalid linear-algebra parameters."""


REBUILD_EVERY = 10_000


class SpdState:
    """Symmetric positive-definite Gram matrix with a maintained inverse."""

    def __init__(self, dim: int):
        if dim < 1:
            raise LinalgError(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        self.m = np.eye(dim)
        self.m_inv = np.eye(dim)
        self.updates = 0

    def copy(self) -> "SpdState":
        out = SpdState(self.dim)
        out.m = self.m.copy()
        out.m_inv = self.m_inv.copy()
        out.updates = self.updates
        return out

    def rank1_update(self, x: np.ndarray, scale: float) -> "SpdState":
        """M <- M + scale * x x^T, with the inverse updated in O(d^2)."""
        if scale < 0:
            raise LinalgError(f"scale must be >= 0, got {scale}")
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise LinalgError(f"expected vector of dim {self.dim}, got {x.shape}")
        if scale == 0.0:
            return self
        self.m += scale * np.outer(x, x)
        minv_x = self.m_inv @ x
        denom = 1.0 + scale * float(x @ minv_x)
        self.m_inv -= (scale / denom) * np.outer(minv_x, minv_x)
        self.updates += 1
        if self.updates % REBUILD_EVERY == 0:
            self.m_inv = np.linalg.inv(self.m)
        return self

    def mahalanobis_inv_norm(self, x: np.ndarray) -> float:
        """sqrt(x^T M^-1 x); the confidence radius of direction x."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise LinalgError(f"expected vector of dim {self.dim}, got {x.shape}")
        q = float(x @ self.m_inv @ x)
        return np.sqrt(q) if q > 0.0 else 0.0

    def mahalanobis_inv_norms(self, xs: np.ndarray) -> np.ndarray:
        """Row-wise sqrt(x^T M^-1 x) for a stack of vectors (k, dim)."""
        xs = np.asarray(xs, dtype=np.float64)
        q = np.einsum("ij,jk,ik->i", xs, self.m_inv, xs)
        return np.sqrt(np.maximum(q, 0.0))

    def solve_theta(self, b: np.ndarray, sigma: float) -> np.ndarray:
        """Closed-form weighted ridge estimate sigma^-2 M^-1 b."""
        if sigma <= 0:
            raise LinalgError(f"sigma must be > 0, got {sigma}")
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.dim,):
            raise LinalgError(f"expected vector of dim {self.dim}, got {b.shape}")
        return (self.m_inv @ b) / sigma**2
