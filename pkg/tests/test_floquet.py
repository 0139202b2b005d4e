import numpy as np
import pytest

from roomgap.eig import dense_oracle, solve_lowest
from roomgap.errors import PairingMismatch
from roomgap.fem import assemble_pair
from roomgap.floquet import apply_quasiperiodic, brillouin_grid

from conftest import preset_mesh


@pytest.fixture(scope="module")
def coarse():
    params, m = preset_mesh("1/4", 1 / 8)
    return m, assemble_pair(m, params.rho_room)


def hermitian_defect(A):
    return abs(A - A.conj().T).max() / abs(A).max()


@pytest.mark.parametrize("phi", [0.0, 0.7, np.pi, 5.1])
def test_hermitian_and_nonnegative(coarse, phi):
    m, pair = coarse
    fp = apply_quasiperiodic(pair, m.pairing(), phi)
    assert hermitian_defect(fp.K) < 1e-13 and hermitian_defect(fp.M) < 1e-13
    lam = dense_oracle(fp)
    assert lam.min() > -1e-10


def test_phase_zero_real_with_constant_kernel(coarse):
    m, pair = coarse
    fp = apply_quasiperiodic(pair, m.pairing(), 0.0)
    assert abs(fp.K.imag).max() == 0 and abs(fp.M.imag).max() == 0
    assert np.abs(fp.K @ np.ones(fp.dim)).max() < 1e-12


def test_phase_pi_real(coarse):
    m, pair = coarse
    fp = apply_quasiperiodic(pair, m.pairing(), np.pi)
    assert abs(fp.K.imag).max() < 1e-15
    # a right-boundary vertex's interior coupling reappears on its left partner with flipped sign
    left, right = m.pairing()
    on_boundary = set(left) | set(right)
    where = {v: i for i, v in enumerate(fp.back_map)}
    checked = 0
    for lv, rv in zip(left, right):
        row = pair.K[rv].toarray().ravel()
        for j in np.flatnonzero(row):
            if j not in on_boundary and pair.K[lv, j] == 0:
                assert fp.K[where[lv], where[j]] == pytest.approx(-row[j])
                checked += 1
    assert checked > 0


def test_reduced_dimension(coarse):
    m, pair = coarse
    fp = apply_quasiperiodic(pair, m.pairing(), 1.0)
    assert fp.dim == m.n_vertices - len(m.pairing()[1])


def test_time_reversal(coarse):
    m, pair = coarse
    for phi in (0.4, 1.9):
        a = dense_oracle(apply_quasiperiodic(pair, m.pairing(), phi))
        b = dense_oracle(apply_quasiperiodic(pair, m.pairing(), 2 * np.pi - phi))
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9)


def test_expand_satisfies_constraint(coarse):
    m, pair = coarse
    phi = 1.3
    fp = apply_quasiperiodic(pair, m.pairing(), phi)
    u = fp.expand(solve_lowest(fp, 3).eigenvectors)
    left, right = m.pairing()
    assert np.allclose(u[right], np.exp(1j * phi) * u[left])


def test_pairing_mismatch(coarse):
    m, pair = coarse
    left, right = m.pairing()
    with pytest.raises(PairingMismatch):
        apply_quasiperiodic(pair, (left, right[:-1]), 0.0)
    with pytest.raises(PairingMismatch):
        apply_quasiperiodic(pair, (left, left), 0.0)


def test_brillouin_grid():
    assert np.allclose(brillouin_grid(4), [0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert np.allclose(brillouin_grid(2), [0, np.pi])
    g = brillouin_grid(8)
    assert np.allclose(np.sort(np.mod(2 * np.pi - g, 2 * np.pi)), g)
    with pytest.raises(ValueError):
        brillouin_grid(1)
