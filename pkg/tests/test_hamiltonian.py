from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import dense_hamiltonian
from rovibpol.hamiltonian import (
    BasisError, BasisState, assemble_cos, assemble_dipole_z, assemble_h, enumerate_basis,
    exchange_permutation, parity_labels,
)
from rovibpol.moldata import bundled


def test_basis_counts():
    assert len(enumerate_basis(bundled("mixed", N_max=1, J_max=1))) == 32
    assert len(enumerate_basis(bundled("mixed", N_max=1, J_max=20))) == 3528
    one = bundled("mixed", N_max=0, J_max=0, v_max=0)
    one = one.replace(molecules=one.molecules[:1], truncation=type(one.truncation)((0,), (0,), "zero"))
    assert len(enumerate_basis(one)) == 1


def test_basis_order_and_m_restriction():
    b = enumerate_basis(bundled("mixed", N_max=1, J_max=1, M_total=0))
    Ns = [s.N for s in b]
    assert Ns == sorted(Ns)
    assert all(sum(M for _, _, M in s.mol) == 0 for s in b)
    full = enumerate_basis(bundled("mixed", N_max=1, J_max=1, M_total=None))
    assert len(full) == 2 * (2 * 4) ** 2
    assert len(b) < len(full)


def test_empty_basis_rejected():
    with pytest.raises(BasisError):
        enumerate_basis(bundled("mixed", N_max=1, J_max=0, M_total=3))


def test_energy_zero_and_known_elements(small_mixed):
    b = enumerate_basis(small_mixed)
    H = assemble_h(small_mixed, b).toarray()
    i = b.index
    g0 = i[BasisState(0, ((0, 0, 0), (0, 0, 0)))]
    assert H[g0, g0] == 0.0
    a = i[BasisState(1, ((0, 0, 0), (0, 0, 0)))]
    c = i[BasisState(0, ((0, 1, 0), (0, 0, 0)))]
    assert H[a, c] == pytest.approx(-33.26 / math.sqrt(3), rel=1e-14)
    d = assemble_dipole_z(small_mixed, b).toarray()
    e = i[BasisState(0, ((1, 1, 0), (0, 0, 0)))]
    assert d[g0, c] == pytest.approx(0.42858 / math.sqrt(3), rel=1e-14)
    assert d[g0, e] == pytest.approx(0.027055 / math.sqrt(3), rel=1e-14)


def test_against_dense_oracle(small_mixed):
    b = enumerate_basis(small_mixed)
    H = assemble_h(small_mixed, b).toarray()
    m1, m2 = small_mixed.molecules
    labels, ref = dense_hamiltonian(
        [m1.E_vib, m2.E_vib], [m1.B_v, m2.B_v], [m1.mu, m2.mu], small_mixed.cavity.omega_c,
        small_mixed.cavity.g, small_mixed.cavity.reference_mu, 1, 1, 1)
    perm = [b.index[BasisState(N, ((v1, J1, 0), (v2, J2, 0)))] for N, v1, J1, v2, J2 in labels]
    mine = H[np.ix_(perm, perm)]
    # quadrature leaves ~1e-17 residue on forbidden elements
    assert np.array_equal(mine != 0, np.abs(ref) > 1e-13)
    # equal up to the last bit of the summation order
    assert np.allclose(mine, ref, rtol=4e-16, atol=1e-14)


def test_against_dense_oracle_larger():
    spec = bundled("identical", N_max=2, J_max=3, g=66.6)
    b = enumerate_basis(spec)
    H = assemble_h(spec, b).toarray()
    m1, m2 = spec.molecules
    labels, ref = dense_hamiltonian(
        [m1.E_vib, m2.E_vib], [m1.B_v, m2.B_v], [m1.mu, m2.mu], spec.cavity.omega_c, spec.cavity.g,
        spec.cavity.reference_mu, 2, 1, 3)
    perm = [b.index[BasisState(N, ((v1, J1, 0), (v2, J2, 0)))] for N, v1, J1, v2, J2 in labels]
    assert np.allclose(H[np.ix_(perm, perm)], ref, rtol=4e-16, atol=1e-13)


def _selection_ok(s, t, photon):
    changed = [k for k in range(len(s.mol)) if s.mol[k] != t.mol[k]]
    if len(changed) != 1:
        return False
    (v, J, M), (vp, Jp, Mp) = s.mol[changed[0]], t.mol[changed[0]]
    dN = abs(s.N - t.N)
    return M == Mp and abs(J - Jp) == 1 and (dN == 1 if photon else dN == 0)


@pytest.mark.parametrize("M_total", ["zero", None])
def test_selection_rules_and_symmetry(M_total):
    spec = bundled("mixed", N_max=2, J_max=2, M_total=M_total)
    b = enumerate_basis(spec)
    for op, photon in ((assemble_h(spec, b), True), (assemble_dipole_z(spec, b), False)):
        A = op.tocsr()
        assert (abs(A - A.T)).nnz == 0
        for r, c in zip(op.rows, op.cols):
            if r != c:
                assert _selection_ok(b[r], b[c], photon)
    qn = b.quantum_numbers()
    Mtot = qn[:, 3::3].sum(axis=1)
    H = assemble_h(spec, b)
    assert np.all(Mtot[H.rows] == Mtot[H.cols])


def test_zero_coupling_limit():
    spec = bundled("mixed", N_max=2, J_max=4, g=0.0)
    b = enumerate_basis(spec)
    H = assemble_h(spec, b).toarray()
    expected = np.sort([s.N * spec.cavity.omega_c
                        + sum(m.rovib_energy(v, J) for m, (v, J, _) in zip(spec.molecules, s.mol))
                        for s in b])
    assert np.abs(np.linalg.eigvalsh(H) - expected).max() < 1e-10


def test_parity_conserved_and_flipped():
    spec = bundled("mixed", N_max=2, J_max=4)
    b = enumerate_basis(spec)
    p = parity_labels(b)
    H, d = assemble_h(spec, b), assemble_dipole_z(spec, b)
    assert np.all(p[H.rows] == p[H.cols])
    assert np.all(p[d.rows] != p[d.cols])


def test_exchange_symmetry_only_for_identical():
    spec = bundled("identical", N_max=2, J_max=3)
    b = enumerate_basis(spec)
    P = exchange_permutation(spec, b)
    H = assemble_h(spec, b).toarray()
    assert np.abs(H[np.ix_(P, P)] - H).max() < 1e-11
    assert exchange_permutation(bundled("mixed", J_max=3), enumerate_basis(bundled("mixed", J_max=3))) is None


def test_cos_operator_is_photon_and_vibration_diagonal():
    spec = bundled("mixed", N_max=1, J_max=3)
    b = enumerate_basis(spec)
    C = assemble_cos(spec, b, 1)
    for r, c in zip(C.rows, C.cols):
        assert b[r].N == b[c].N and b[r].mol[0] == b[c].mol[0] and b[r].mol[1][0] == b[c].mol[1][0]


def test_permanent_dipole_switch():
    spec = bundled("mixed", N_max=1, J_max=2)
    off = spec.replace(permanent_dipole_coupling=False)
    b = enumerate_basis(spec)
    Hoff = assemble_h(off, b)
    for r, c in zip(Hoff.rows, Hoff.cols):
        if r != c:
            assert any(s[0] != t[0] for s, t in zip(b[r].mol, b[c].mol))


def test_matrix_market_round_trip(tmp_path):
    import scipy.io

    spec = bundled("mixed", N_max=1, J_max=2)
    b = enumerate_basis(spec)
    H = assemble_h(spec, b)
    H.write_matrix_market(tmp_path / "h.mtx", comment="test")
    back = scipy.io.mmread(str(tmp_path / "h.mtx")).toarray()
    assert np.array_equal(back, H.toarray())


@given(st.integers(0, 2), st.integers(0, 4), st.floats(0, 300))
def test_nnz_bound(N_max, J_max, g):
    spec = bundled("mixed", N_max=max(N_max, 1), J_max=J_max, g=g)
    b = enumerate_basis(spec)
    H = assemble_h(spec, b).tocsr()
    per_row = np.diff(H.indptr)
    bound = 1 + 2 * spec.n_mol * 2 * (1 + 1) * 2  # molecules x v' x J' x N'
    assert per_row.max() <= bound
