"""Real symmetric eigensolvers and spectral-theorem matrix functions.

Two backends are available for every solver:

``"lapack"`` (default)
    ``scipy.linalg.eigh_tridiagonal`` / ``numpy.linalg.eigh``.
``"ql"``
    Self-contained implicit-shift QL iteration, preceded by Householder
    reduction for dense input. Slower, but independent of LAPACK, and used as
    a cross-check in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .model import TridiagonalOperator

__all__ = [
    "EigenDecomposition",
    "EigenConvergenceError",
    "eig_tridiagonal",
    "eig_dense",
    "eigvals_tridiagonal",
    "matrix_function",
    "trace_function",
    "decomposition_errors",
    "tridiagonalize",
    "tql2",
]

MAX_SWEEPS = 50


class EigenConvergenceError(RuntimeError):
    def __init__(self, order: int, index: int, context: str = ""):
        self.order = order
        self.index = index
        msg = f"QL iteration did not converge for eigenvalue {index} of a matrix of order {order}"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def order(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        return matrix_function(self, lambda x: x)


def _as_tridiagonal(T) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(T, TridiagonalOperator):
        return np.asarray(T.diagonal, dtype=float), T.off_diagonal
    d, e = T
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    if e.shape != (max(len(d) - 1, 0),):
        raise ValueError("off-diagonal must have length order - 1")
    return d, e


def tql2(d, e, vectors: np.ndarray | None = None, max_sweeps: int = MAX_SWEEPS, context: str = ""):
    """Implicit-shift QL on the symmetric tridiagonal ``(d, e)``.

    ``vectors`` (default identity) is multiplied on the right by the
    accumulated rotations, so passing the Householder basis yields the
    eigenvectors of the original dense matrix. Returns unsorted ``(d, z)``.
    """
    d = np.array(d, dtype=float)
    n = len(d)
    if n == 0:
        raise ValueError("order must be >= 1")
    e_ = np.zeros(n)
    e_[: n - 1] = e
    # rows of zt are eigenvector columns, rotations touch two contiguous rows
    zt = np.eye(n) if vectors is None else np.array(vectors, dtype=float).T.copy()
    eps = np.finfo(float).eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e_[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_sweeps:
                raise EigenConvergenceError(n, l, context)
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e_[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e_[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e_[i]
                b = c * e_[i]
                r = math.hypot(f, g)
                e_[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e_[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi = zt[i].copy()
                zt[i] = c * zi - s * zt[i + 1]
                zt[i + 1] = s * zi + c * zt[i + 1]
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e_[l] = g
            e_[m] = 0.0
    return d, zt.T


def tridiagonalize(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Householder reduction ``A = Q T Q^T``; returns ``(diag T, offdiag T, Q)``."""
    a = np.array(A, dtype=float)
    n = a.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1:, k]
        norm_x = np.linalg.norm(x)
        if norm_x == 0.0:
            continue
        alpha = -math.copysign(norm_x, x[0])
        v = x.copy()
        v[0] -= alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        a[k + 1:, :] -= 2.0 * np.outer(v, v @ a[k + 1:, :])
        a[:, k + 1:] -= 2.0 * np.outer(a[:, k + 1:] @ v, v)
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v)
    return np.diag(a).copy(), np.diag(a, 1).copy(), q


def _sorted(values, vectors) -> EigenDecomposition:
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(np.asarray(values)[order], np.asarray(vectors)[:, order])


def eig_tridiagonal(T, method: str = "lapack", max_sweeps: int = MAX_SWEEPS, context: str = "") -> EigenDecomposition:
    """Eigen-decomposition of a symmetric tridiagonal matrix.

    ``T`` is a :class:`TridiagonalOperator` or a ``(diagonal, off_diagonal)`` pair.
    """
    d, e = _as_tridiagonal(T)
    if len(d) == 0:
        raise ValueError("order must be >= 1")
    if method == "lapack":
        if len(d) == 1:
            return EigenDecomposition(d.copy(), np.ones((1, 1)))
        w, v = scipy.linalg.eigh_tridiagonal(d, e)
        return EigenDecomposition(w, v)
    if method == "ql":
        w, v = tql2(d, e, max_sweeps=max_sweeps, context=context)
        return _sorted(w, v)
    raise ValueError(f"unknown eigensolver method {method!r}")


def eigvals_tridiagonal(T) -> np.ndarray:
    d, e = _as_tridiagonal(T)
    if len(d) == 1:
        return d.copy()
    return scipy.linalg.eigvalsh_tridiagonal(d, e)


def eig_dense(A, method: str = "lapack", max_sweeps: int = MAX_SWEEPS, context: str = "") -> EigenDecomposition:
    """Eigen-decomposition of a dense real symmetric matrix."""
    a = np.asarray(A, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got shape {a.shape}")
    if method == "lapack":
        w, v = np.linalg.eigh(a)
        return EigenDecomposition(w, v)
    if method == "ql":
        d, e, q = tridiagonalize(a)
        w, v = tql2(d, e, vectors=q, max_sweeps=max_sweeps, context=context)
        return _sorted(w, v)
    raise ValueError(f"unknown eigensolver method {method!r}")


def _apply(f: Callable, values: np.ndarray) -> np.ndarray:
    fv = np.asarray(f(values), dtype=float)
    if fv.shape != values.shape:
        fv = np.broadcast_to(fv, values.shape).astype(float)
    bad = ~np.isfinite(fv)
    if np.any(bad):
        raise ValueError(f"function is not finite at eigenvalue {values[np.argmax(bad)]!r}")
    return fv


def matrix_function(E: EigenDecomposition, f: Callable) -> np.ndarray:
    """``Q f(Lambda) Q^T``, symmetrized exactly."""
    fv = _apply(f, E.values)
    out = (E.vectors * fv) @ E.vectors.T
    return 0.5 * (out + out.T)


def trace_function(E: EigenDecomposition | np.ndarray, f: Callable) -> float:
    """``sum_k f(lambda_k)`` with compensated summation.

    Accepts a decomposition or a bare array of eigenvalues.
    """
    values = E.values if isinstance(E, EigenDecomposition) else np.asarray(E, dtype=float)
    return math.fsum(_apply(f, values))


def decomposition_errors(A, E: EigenDecomposition) -> dict:
    """Residual, orthogonality and trace errors of a decomposition of ``A``."""
    a = np.asarray(A, dtype=float)
    resid = a @ E.vectors - E.vectors * E.values
    return {
        "residual": float(np.max(np.linalg.norm(resid, axis=0))),
        "orthogonality": float(np.max(np.abs(E.vectors.T @ E.vectors - np.eye(E.order)))),
        "trace": abs(math.fsum(E.values) - math.fsum(np.diag(a))),
        "norm": float(np.linalg.norm(a, 2)) if a.size else 0.0,
    }
