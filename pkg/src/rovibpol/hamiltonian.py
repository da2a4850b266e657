"""Direct-product (diabatic) basis and sparse operator assembly.

Basis kets are |N> prod_i |v_i J_i M_i>. Operators couple one molecule at a
time; the cavity term changes N by one, the lab-frame dipole leaves N alone.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np
import scipy.io
import scipy.sparse as sp

from .angular import AngularKet, cos_theta_element
from .moldata import SystemSpec


class BasisState(NamedTuple):
    N: int
    mol: tuple[tuple[int, int, int], ...]  # (v, J, M) per molecule

    def label(self) -> str:
        inner = ",".join(f"{v}{J}{M:+d}" if M else f"{v}{J}" for v, J, M in self.mol)
        return f"|N={self.N};{inner}>"


class BasisError(ValueError):
    pass


@dataclass(frozen=True)
class Basis:
    states: tuple[BasisState, ...]
    n_mol: int

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[BasisState]:
        return iter(self.states)

    def __getitem__(self, k: int) -> BasisState:
        return self.states[k]

    @property
    def index(self) -> dict[BasisState, int]:
        idx = self.__dict__.get("_index")
        if idx is None:
            idx = {s: k for k, s in enumerate(self.states)}
            object.__setattr__(self, "_index", idx)
        return idx

    def quantum_numbers(self) -> np.ndarray:
        """Integer table, columns N, v1, J1, M1, v2, J2, M2, ..."""
        return np.array([[s.N, *itertools.chain(*s.mol)] for s in self.states], dtype=int)


def _rotor_kets(J_max: int, M_mode) -> list[tuple[int, int]]:
    out = []
    for J in range(J_max + 1):
        Ms = [0] if M_mode == "zero" else range(-J, J + 1)
        out.extend((J, M) for M in Ms)
    return out


def enumerate_basis(spec: SystemSpec) -> Basis:
    """Ordered basis: N outermost, then molecule 1 (v, J, M), molecule 2, ..."""
    tr = spec.truncation
    per_mol = []
    for i in range(spec.n_mol):
        rot = _rotor_kets(tr.J_max[i], tr.M_total)
        per_mol.append([(v, J, M) for v in range(tr.v_max[i] + 1) for J, M in rot])
    states = []
    for N in range(spec.cavity.N_max + 1):
        for combo in itertools.product(*per_mol):
            if isinstance(tr.M_total, int) and not isinstance(tr.M_total, bool):
                if sum(M for _, _, M in combo) != tr.M_total:
                    continue
            states.append(BasisState(N, tuple(combo)))
    if not states:
        raise BasisError("truncation leaves an empty basis")
    return Basis(tuple(states), spec.n_mol)


@dataclass(frozen=True)
class SparseSymMatrix:
    """Real symmetric matrix stored as lower-triangle COO entries."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.rows < self.cols):
            raise ValueError("entries must lie in the lower triangle")
        if not np.all(np.isfinite(self.vals)):
            raise ValueError("non-finite matrix entry")

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def tocsr(self) -> sp.csr_matrix:
        off = self.rows != self.cols
        r = np.concatenate([self.rows, self.cols[off]])
        c = np.concatenate([self.cols, self.rows[off]])
        v = np.concatenate([self.vals, self.vals[off]])
        return sp.csr_matrix((v, (r, c)), shape=(self.dim, self.dim))

    def toarray(self) -> np.ndarray:
        return self.tocsr().toarray()

    def diagonal(self) -> np.ndarray:
        d = np.zeros(self.dim)
        on = self.rows == self.cols
        np.add.at(d, self.rows[on], self.vals[on])
        return d

    def write_matrix_market(self, path: str | Path, comment: str = "") -> None:
        lower = sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(self.dim, self.dim))
        scipy.io.mmwrite(str(path), lower, comment=comment, symmetry="symmetric")


def _from_entries(dim: int, entries: dict[tuple[int, int], float]) -> SparseSymMatrix:
    keys = [k for k, v in entries.items() if v != 0.0]
    if keys:
        r, c = np.array(keys, dtype=np.int64).T
    else:
        r = c = np.zeros(0, dtype=np.int64)
    vals = np.array([entries[k] for k in keys], dtype=float)
    order = np.lexsort((c, r))
    return SparseSymMatrix(dim, r[order], c[order], vals[order])


def _check(spec: SystemSpec, basis: Basis) -> None:
    if basis.n_mol != spec.n_mol:
        raise BasisError("basis and spec disagree on the number of molecules")
    tr = spec.truncation
    for s in (basis[0], basis[-1]):
        if s.N > spec.cavity.N_max or any(
            v > tr.v_max[i] or J > tr.J_max[i] for i, (v, J, _) in enumerate(s.mol)
        ):
            raise BasisError(f"basis state {s.label()} outside the system truncation")


def _one_molecule_couplings(spec: SystemSpec, basis: Basis, i: int, dN: int, weights):
    """Yield (row, col, value) for bra > ket pairs where only molecule i (and
    possibly N by ``dN``) changes; value = weights[v, v'] * <J M|cos|J' M>."""
    index = basis.index
    v_max = spec.truncation.v_max[i]
    for k, s in enumerate(basis):
        v, J, M = s.mol[i]
        for Jp in (J - 1, J + 1):
            if Jp < abs(M):
                continue
            c = cos_theta_element(AngularKet(J, M), AngularKet(Jp, M))
            if c == 0.0:
                continue
            for vp in range(v_max + 1):
                w = weights[v, vp]
                if w == 0.0:
                    continue
                for Np in ((s.N - 1, s.N + 1) if dN else (s.N,)):
                    mol = s.mol[:i] + ((vp, Jp, M),) + s.mol[i + 1:]
                    kp = index.get(BasisState(Np, mol))
                    if kp is None or kp >= k:
                        continue
                    photon = np.sqrt(max(s.N, Np)) if dN else 1.0
                    yield k, kp, w * c * photon


def assemble_h(spec: SystemSpec, basis: Basis) -> SparseSymMatrix:
    """Cavity Hamiltonian in cm^-1 (no rotating-wave approximation)."""
    _check(spec, basis)
    entries: dict[tuple[int, int], float] = {}
    for k, s in enumerate(basis):
        e = s.N * spec.cavity.omega_c
        for m, (v, J, _) in zip(spec.molecules, s.mol):
            e += m.rovib_energy(v, J)
        entries[(k, k)] = e
    for i in range(spec.n_mol):
        weights = -spec.coupling(i)
        for r, c, val in _one_molecule_couplings(spec, basis, i, 1, weights):
            entries[(r, c)] = entries.get((r, c), 0.0) + val
    return _from_entries(len(basis), entries)


def assemble_dipole_z(spec: SystemSpec, basis: Basis) -> SparseSymMatrix:
    """Lab-frame z dipole sum_i mu_i cos(theta_i), atomic units."""
    _check(spec, basis)
    entries: dict[tuple[int, int], float] = {}
    for i in range(spec.n_mol):
        weights = spec.molecules[i].mu_array()
        for r, c, val in _one_molecule_couplings(spec, basis, i, 0, weights):
            entries[(r, c)] = entries.get((r, c), 0.0) + val
    return _from_entries(len(basis), entries)


def assemble_cos(spec: SystemSpec, basis: Basis, i: int) -> SparseSymMatrix:
    """cos(theta_i) on molecule i, identity elsewhere."""
    _check(spec, basis)
    n_v = spec.truncation.v_max[i] + 1
    entries = {(r, c): val for r, c, val in _one_molecule_couplings(spec, basis, i, 0, np.eye(n_v))}
    return _from_entries(len(basis), entries)


def exchange_permutation(spec: SystemSpec, basis: Basis) -> np.ndarray | None:
    """Index map for swapping molecules 1 and 2, or None when they differ."""
    if spec.n_mol != 2 or spec.molecules[0] != spec.molecules[1]:
        return None
    tr = spec.truncation
    if tr.v_max[0] != tr.v_max[1] or tr.J_max[0] != tr.J_max[1]:
        return None
    index = basis.index
    return np.array([index[BasisState(s.N, (s.mol[1], s.mol[0]))] for s in basis])


def parity_labels(basis: Basis) -> np.ndarray:
    """(-1)^(N + sum J_i): conserved by the cavity Hamiltonian, flipped by d_z."""
    qn = basis.quantum_numbers()
    total = qn[:, 0] + qn[:, 2::3].sum(axis=1)
    return np.where(total % 2 == 0, 1, -1)
