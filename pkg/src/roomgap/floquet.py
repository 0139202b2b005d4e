"""Quasi-periodic reduction of the assembled pencil.

Right-boundary unknowns are eliminated with ``u_right = exp(i*phi) * u_left``.
Writing ``u = T v`` for the injection ``T`` of reduced unknowns, the fiber pencil
is ``(T^H K T, T^H M T)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from roomgap.errors import PairingMismatch
from roomgap.fem import AssembledPair


@dataclass(frozen=True, eq=False)
class FiberPencil:
    K: sp.csr_matrix
    M: sp.csr_matrix
    phi: float
    back_map: np.ndarray  # reduced index -> mesh vertex
    T: sp.csr_matrix  # full = T @ reduced

    @property
    def dim(self) -> int:
        return self.K.shape[0]

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Nodal values on every mesh vertex for reduced vector(s) ``x``."""
        return self.T @ x


def _check_pairing(n: int, left: np.ndarray, right: np.ndarray) -> None:
    if len(left) != len(right) or len(left) == 0:
        raise PairingMismatch("left and right boundary lists differ in length", n_left=len(left), n_right=len(right))
    both = np.concatenate([left, right])
    if len(np.unique(both)) != len(both):
        raise PairingMismatch("boundary lists overlap or repeat vertices")
    if both.min() < 0 or both.max() >= n:
        raise PairingMismatch("boundary vertex index out of range")


def injection(n: int, pairing: Tuple[Sequence[int], Sequence[int]], phi: float):
    """Sparse ``T`` (n x n_reduced) and the reduced->vertex map."""
    left = np.asarray(pairing[0], dtype=np.int64)
    right = np.asarray(pairing[1], dtype=np.int64)
    _check_pairing(n, left, right)
    keep = np.ones(n, dtype=bool)
    keep[right] = False
    back_map = np.flatnonzero(keep)
    reduced = np.full(n, -1, dtype=np.int64)
    reduced[back_map] = np.arange(len(back_map))
    phase = np.exp(1j * phi)
    rows = np.concatenate([back_map, right])
    cols = np.concatenate([reduced[back_map], reduced[left]])
    vals = np.concatenate([np.ones(len(back_map), dtype=complex), np.full(len(right), phase)])
    T = sp.csr_matrix((vals, (rows, cols)), shape=(n, len(back_map)))
    return T, back_map


def _hermitian_part(A: sp.spmatrix) -> sp.csr_matrix:
    H = ((A + A.conj().T) * 0.5).tocsr()
    H.sort_indices()
    return H


def apply_quasiperiodic(pair: AssembledPair, pairing, phi: float) -> FiberPencil:
    """Fiber pencil at phase ``phi`` with ``u(x1 = width) = exp(i*phi) u(x1 = 0)``."""
    n = pair.K.shape[0]
    T, back_map = injection(n, pairing, float(phi))
    TH = T.conj().T.tocsr()
    K = _hermitian_part(TH @ pair.K @ T)
    M = _hermitian_part(TH @ pair.M @ T)
    return FiberPencil(K=K, M=M, phi=float(phi), back_map=back_map, T=T)


def brillouin_grid(n: int) -> np.ndarray:
    """Uniform phases ``2*pi*j/n``, ``j = 0..n-1`` (2*pi excluded)."""
    if n < 2:
        raise ValueError("need at least 2 phase samples")
    return 2.0 * np.pi * np.arange(n) / n
