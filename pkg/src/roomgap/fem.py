"""P1 stiffness and weighted mass matrices on a period-cell mesh.

The pencil ``(K, M)`` with ``K = int grad u . grad v`` and
``M = int u v / rho`` discretises ``-rho * Laplacian`` with Neumann conditions
everywhere: no boundary terms are assembled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np
import scipy.sparse as sp

from roomgap.errors import ZeroVector
from roomgap.geometry import Region
from roomgap.mesh import PeriodCellMesh

_P1_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def element_stiffness(p: np.ndarray) -> np.ndarray:
    """Stiffness matrices for triangles ``p`` of shape (m, 3, 2); returns (m, 3, 3)."""
    p = np.asarray(p, dtype=float)
    # rotated opposite edges: grad(phi_i) = J (p_{i+2} - p_{i+1}) / (2A)
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    area2 = e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0])
    return np.einsum("mik,mjk->mij", e, e) / (2.0 * area2[:, None, None])


def element_mass(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return area[:, None, None] * _P1_MASS


def _scatter(m: PeriodCellMesh, local: np.ndarray) -> sp.csr_matrix:
    n = m.n_vertices
    rows = np.repeat(m.triangles, 3, axis=1).ravel()
    cols = np.tile(m.triangles, (1, 3)).ravel()
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_stiffness(m: PeriodCellMesh) -> sp.csr_matrix:
    return _scatter(m, element_stiffness(m.vertices[m.triangles]))


def assemble_mass_parts(m: PeriodCellMesh):
    """Mass matrices ``(M_outside, M_room)`` with unit weight, same sparsity pattern."""
    local = element_mass(m.vertices[m.triangles])
    room = (m.tags == Region.ROOM)[:, None, None]
    return _scatter(m, np.where(room, 0.0, local)), _scatter(m, np.where(room, local, 0.0))


def assemble_mass(m: PeriodCellMesh, rho_room: float) -> sp.csr_matrix:
    """Mass matrix for the weight ``1/rho`` (``rho = rho_room`` in rooms, 1 elsewhere)."""
    if not rho_room > 0:
        raise ValueError("rho_room must be positive")
    outside, room = assemble_mass_parts(m)
    return (outside + room * (1.0 / float(rho_room))).tocsr()


@dataclass(frozen=True, eq=False)
class AssembledPair:
    K: sp.csr_matrix
    M: sp.csr_matrix
    dof_map: np.ndarray  # vertex -> dof index (identity for P1)
    rho_values: Dict[Region, float]


def assemble_pair(m: PeriodCellMesh, rho_room: float) -> AssembledPair:
    rho = float(rho_room)
    return AssembledPair(
        K=assemble_stiffness(m),
        M=assemble_mass(m, rho),
        dof_map=np.arange(m.n_vertices),
        rho_values={Region.STRIP: 1.0, Region.PASSAGE: 1.0, Region.ROOM: rho},
    )


def rayleigh_quotient(K, M, x) -> float:
    x = np.asarray(x)
    if not np.any(x):
        raise ZeroVector("Rayleigh quotient of the zero vector")
    num = np.vdot(x, K @ x).real
    den = np.vdot(x, M @ x).real
    return max(num, 0.0) / den
