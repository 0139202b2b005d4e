import numpy as np
import pytest
import scipy.sparse as sp

from roomgap.eig import dense_oracle, residual_check, solve_lowest
from roomgap.errors import CapExceeded, DimensionExceeded
from roomgap.fem import assemble_pair, rayleigh_quotient
from roomgap.floquet import FiberPencil, apply_quasiperiodic
from roomgap.geometry import WaveguideParams, build_cell, validate_params
from roomgap.mesh import refine, triangulate

from conftest import preset_mesh


def pencil(K, M):
    K, M = sp.csr_matrix(np.atleast_2d(K)), sp.csr_matrix(np.atleast_2d(M))
    n = K.shape[0]
    return FiberPencil(K, M, 0.0, np.arange(n), sp.identity(n, format="csr"))


def plain_pencil(phi, eps=1, target=1 / 16):
    m = triangulate(build_cell(validate_params(WaveguideParams.plain_strip(eps, 1))), target)
    return m, apply_quasiperiodic(assemble_pair(m, 1.0), m.pairing(), phi)


def test_tiny_oracles():
    assert np.allclose(dense_oracle(pencil([[2.0]], [[1.0]])), [2.0])
    assert np.allclose(dense_oracle(pencil(np.diag([0.0, 3.0]), np.eye(2))), [0.0, 3.0])


def test_cap():
    with pytest.raises(CapExceeded):
        dense_oracle(pencil(np.eye(5), np.eye(5)), cap=4)


def test_dimension_exceeded():
    with pytest.raises(DimensionExceeded):
        solve_lowest(pencil(np.eye(3), np.eye(3)), 4)


def test_constant_ground_state():
    _, fp = plain_pencil(0.0)
    res = solve_lowest(fp, 4)
    assert abs(res.eigenvalues[0]) < 1e-10
    x = res.eigenvectors[:, 0]
    assert np.ptp(np.abs(x)) < 1e-8


def test_first_nonzero_is_pi_squared():
    _, fp = plain_pencil(0.0, target=1 / 32)
    lam = solve_lowest(fp, 4).eigenvalues
    # (2 pi m)^2 + (n pi)^2 with a = L = 1: 0, pi^2, then 4 pi^2 (three times)
    assert lam[1] == pytest.approx(np.pi ** 2, rel=1e-2)


@pytest.mark.parametrize("phi", [0.0, 1.1, np.pi])
def test_iterative_matches_dense(phi):
    params, m = preset_mesh("1/8")
    fp = apply_quasiperiodic(assemble_pair(m, params.rho_room), m.pairing(), phi)
    it = solve_lowest(fp, 8, method="iterative")
    assert it.method == "ITERATIVE"
    ref = dense_oracle(fp)[:8]
    assert np.allclose(it.eigenvalues, ref, rtol=1e-8, atol=1e-10)


def test_result_invariants():
    params, m = preset_mesh("1/8")
    fp = apply_quasiperiodic(assemble_pair(m, params.rho_room), m.pairing(), 0.9)
    res = solve_lowest(fp, 8, tol=1e-9)
    assert np.all(np.diff(res.eigenvalues) >= 0) and res.eigenvalues[0] >= -1e-9
    assert np.all(res.residuals <= 1e-9)
    X = res.eigenvectors
    gram = X.conj().T @ (fp.M @ X)
    assert np.abs(gram - np.eye(8)).max() <= 1e-10
    assert residual_check(fp, res) == pytest.approx(res.residuals.max(), abs=1e-12)
    quotients = [rayleigh_quotient(fp.K, fp.M, X[:, j]) for j in range(8)]
    assert min(quotients) == pytest.approx(res.eigenvalues[0], abs=1e-10)


def test_residual_grows_linearly():
    params, m = preset_mesh("1/8")
    fp = apply_quasiperiodic(assemble_pair(m, params.rho_room), m.pairing(), 0.5)
    res = solve_lowest(fp, 2)
    x, lam = res.eigenvectors[:, 1], res.eigenvalues[1]
    d = np.random.default_rng(3).standard_normal(fp.dim)
    d /= np.linalg.norm(d)

    def r(t):
        y = x + t * d
        return np.linalg.norm(fp.K @ y - lam * (fp.M @ y)) / np.linalg.norm(fp.M @ y)

    assert r(2e-4) / r(1e-4) == pytest.approx(2.0, rel=0.05)
    z = np.random.default_rng(4).standard_normal(fp.dim)
    assert r(0) < 1e-8 < 1e-2 < np.linalg.norm(fp.K @ z - lam * (fp.M @ z)) / np.linalg.norm(fp.M @ z)


def test_clusters_degenerate_pair():
    _, fp = plain_pencil(0.0, target=1 / 16)
    res = solve_lowest(fp, 5)
    groups = res.clusters(rtol=1e-6)
    # 4 pi^2 appears for m = +-1 (n = 0) and m = 0 (n = 2)
    assert [len(g) for g in groups][:2] == [1, 1]


@pytest.mark.parametrize("phi", [0.0, 2.0])
def test_monotone_under_refinement(phi):
    params, m = preset_mesh("1/4", 1 / 8)
    pair = assemble_pair(m, params.rho_room)
    r = refine(m)
    coarse = solve_lowest(apply_quasiperiodic(pair, m.pairing(), phi), 6).eigenvalues
    fine = solve_lowest(apply_quasiperiodic(assemble_pair(r, params.rho_room), r.pairing(), phi), 6).eigenvalues
    assert np.all(fine <= coarse + 1e-10)
