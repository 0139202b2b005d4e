"""Lowest eigenpairs of a Hermitian fiber pencil ``K x = lam M x``.

The iterative path is ARPACK in shift-invert mode about ``sigma = -1`` (the
pencil is positive semidefinite, so ``K + M`` is positive definite) followed by a
Rayleigh-Ritz step on the returned basis, which makes the vectors exactly
M-orthonormal inside eigenvalue clusters.  The dense path is LAPACK's
generalized Hermitian solver and doubles as the test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from roomgap.errors import CapExceeded, DimensionExceeded, NoConvergence

DENSE_CAP = 3000
SHIFT = -1.0
CLUSTER_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, M-orthonormal
    residuals: np.ndarray  # ||K x - lam M x|| / ||M x||
    method: str  # "DENSE" or "ITERATIVE"

    def clusters(self, rtol: float = CLUSTER_RTOL):
        """Index groups of eigenvalues equal within ``rtol`` (relative, floor 1)."""
        groups, cur = [], [0]
        lam = self.eigenvalues
        for i in range(1, len(lam)):
            if abs(lam[i] - lam[i - 1]) <= rtol * max(1.0, abs(lam[i])):
                cur.append(i)
            else:
                groups.append(cur)
                cur = [i]
        groups.append(cur)
        return groups


def _residuals(K, M, lam, X):
    MX = M @ X
    R = K @ X - MX * lam[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(MX, axis=0)


def _dense(pencil_K, pencil_M, k=None):
    K = pencil_K.toarray() if sp.issparse(pencil_K) else np.asarray(pencil_K)
    M = pencil_M.toarray() if sp.issparse(pencil_M) else np.asarray(pencil_M)
    sub = None if k is None else (0, k - 1)
    return sla.eigh(K, M, subset_by_index=sub)


def dense_oracle(pencil, cap: int = DENSE_CAP) -> np.ndarray:
    """Full ascending spectrum by dense reduction; for validation only."""
    n = pencil.K.shape[0]
    if n > cap:
        raise CapExceeded(f"dimension {n} exceeds dense cap {cap}", dim=n, cap=cap)
    return sla.eigh(pencil.K.toarray(), pencil.M.toarray(), eigvals_only=True)


def _start_vector(n, dtype):
    # deterministic, no component orthogonal by symmetry to low modes
    t = np.arange(n, dtype=float)
    v = 1.0 + 0.5 * np.sin(0.7 * t) + 0.25 * np.cos(1.3 * t)
    return v.astype(dtype)


def solve_lowest(pencil, k: int, tol: float = 1e-8, method: str = "auto", dense_below: int = 300,
                 max_restarts: int = 3) -> EigenResult:
    """The ``k`` lowest eigenpairs with residual at most ``tol``."""
    K, M = pencil.K, pencil.M
    n = K.shape[0]
    if k < 1 or k > n:
        raise DimensionExceeded(f"k={k} outside 1..{n}", k=k, dim=n)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method == "dense" or (method == "auto" and (n <= dense_below or k >= n - 2)):
        if n > DENSE_CAP:
            raise CapExceeded(f"dimension {n} exceeds dense cap {DENSE_CAP}", dim=n, cap=DENSE_CAP)
        lam, X = _dense(K, M, k)
        res = _residuals(K, M, lam, X)
        if np.any(res > tol):
            raise NoConvergence("dense solver residual above tolerance", max_residual=float(res.max()))
        return EigenResult(lam, X, res, "DENSE")

    A = (K - SHIFT * M).tocsc()
    lu = spla.splu(A)
    op = spla.LinearOperator(A.shape, matvec=lu.solve, dtype=A.dtype)
    v0 = _start_vector(n, A.dtype)
    extra = 2
    history = []
    for attempt in range(max_restarts + 1):
        nev = min(k + extra, n - 2)
        ncv = min(n - 1, max(2 * nev + 1, 20))
        try:
            _, V = spla.eigsh(K, nev, M, sigma=SHIFT, which="LM", OPinv=op, v0=v0, ncv=ncv,
                              tol=1e-14, maxiter=50 * n)
        except spla.ArpackNoConvergence as exc:
            history.append({"attempt": attempt, "nev": nev, "ncv": ncv, "arpack": str(exc)})
            extra *= 2
            continue
        # Rayleigh-Ritz on the Krylov basis
        Kr = V.conj().T @ (K @ V)
        Mr = V.conj().T @ (M @ V)
        Kr = 0.5 * (Kr + Kr.conj().T)
        Mr = 0.5 * (Mr + Mr.conj().T)
        lam, Y = sla.eigh(Kr, Mr)
        X = V @ Y
        lam, X = lam[:k], X[:, :k]
        res = _residuals(K, M, lam, X)
        history.append({"attempt": attempt, "nev": nev, "ncv": ncv, "max_residual": float(res.max())})
        if np.all(res <= tol):
            return EigenResult(lam, X, res, "ITERATIVE")
        extra *= 2
    raise NoConvergence("shift-invert iteration did not reach the residual tolerance",
                        history=history, tol=tol)


def residual_check(pencil, result: EigenResult) -> float:
    """Recompute the largest residual of ``result`` against ``pencil``."""
    return float(_residuals(pencil.K, pencil.M, result.eigenvalues, result.eigenvectors).max())
