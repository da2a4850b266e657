"""Polariton eigenstates of the cavity Hamiltonian and their character."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .hamiltonian import Basis, SparseSymMatrix, exchange_permutation, parity_labels
from .lanczos import lanczos_lowest
from .moldata import SystemSpec

DENSE_LIMIT = 4000


@dataclass(frozen=True)
class PolaritonState:
    energy: float
    coeffs: np.ndarray
    character: np.ndarray | None = None  # (ground, mol_1 .. mol_n, photonic)


def symmetry_blocks(spec: SystemSpec, basis: Basis, parity: bool = True,
                    exchange: bool = True) -> list[sp.csr_matrix]:
    """Orthonormal column bases of subspaces invariant under H.

    Parity (-1)^(N + sum J) is always conserved. When the two molecules are
    identical the exchange-even and -odd combinations are split as well, which
    also fixes the gauge of exchange-degenerate pairs.
    """
    n = len(basis)
    groups = [np.arange(n)]
    if parity:
        lab = parity_labels(basis)
        groups = [np.flatnonzero(lab == 1), np.flatnonzero(lab == -1)]
    perm = exchange_permutation(spec, basis) if exchange else None
    if perm is None:
        out = []
        for g in groups:
            if len(g):
                out.append(sp.csr_matrix((np.ones(len(g)), (g, np.arange(len(g)))), shape=(n, len(g))))
        return out

    out = []
    r2 = 1.0 / np.sqrt(2.0)
    for g in groups:
        gset = g
        p = perm[gset]
        fixed = gset[p == gset]
        lo = gset[gset < p]
        hi = perm[lo]
        for sign in (1.0, -1.0):
            rows, cols, vals = [], [], []
            col = 0
            if sign > 0:
                rows += list(fixed)
                cols += list(range(len(fixed)))
                vals += [1.0] * len(fixed)
                col = len(fixed)
            c = np.arange(col, col + len(lo))
            rows += list(lo) + list(hi)
            cols += list(c) + list(c)
            vals += [r2] * len(lo) + [sign * r2] * len(lo)
            ncol = col + len(lo)
            if ncol:
                out.append(sp.csr_matrix((vals, (rows, cols)), shape=(n, ncol)))
    return out


@dataclass
class PolaritonSet:
    energies: np.ndarray
    vectors: np.ndarray  # columns
    basis: Basis | None = None

    def __len__(self) -> int:
        return len(self.energies)

    def __getitem__(self, k: int) -> PolaritonState:
        ch = character(self.vectors[:, k], self.basis) if self.basis is not None else None
        return PolaritonState(float(self.energies[k]), self.vectors[:, k], ch)

    def characters(self) -> np.ndarray:
        return character_matrix(self.vectors, self.basis)

    def report(self, path: str | Path, top: int = 3, limit: int | None = None) -> None:
        """Eigen-report JSON: energy, character weights and leading basis kets."""
        chars = self.characters()
        labels = [s.label() for s in self.basis]
        items = []
        n = len(self) if limit is None else min(limit, len(self))
        for k in range(n):
            amp = self.vectors[:, k]
            lead = np.argsort(-np.abs(amp))[:top]
            items.append({
                "index": k,
                "energy_cm1": float(self.energies[k]),
                "character": {name: float(w) for name, w in zip(class_names(self.basis.n_mol), chars[k])},
                "leading": [{"ket": labels[i], "amplitude": float(amp[i])} for i in lead],
            })
        Path(path).write_text(json.dumps({"states": items}, indent=2) + "\n", encoding="utf-8")


def _as_csr(H) -> sp.csr_matrix:
    if isinstance(H, SparseSymMatrix):
        return H.tocsr()
    return sp.csr_matrix(H)


def diagonalize(
    H,
    k: int | None = None,
    *,
    blocks: Sequence[sp.spmatrix] | None = None,
    method: str = "auto",
    basis: Basis | None = None,
    dense_limit: int = DENSE_LIMIT,
    tol: float = 1e-10,
) -> PolaritonSet:
    """Ascending eigenpairs of a real symmetric matrix.

    ``k=None`` asks for the full spectrum (dense only). Within each invariant
    block the dense LAPACK solver is used up to ``dense_limit`` rows, the
    restarted Lanczos solver above it; ``method`` forces either one.
    """
    if method not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown method {method!r}")
    Hs = _as_csr(H)
    n = Hs.shape[0]
    if blocks is None:
        blocks = [sp.identity(n, format="csr")]
    es, vs = [], []
    for Q in blocks:
        Q = sp.csr_matrix(Q)
        Hb = (Q.T @ Hs @ Q).tocsr()
        nb = Hb.shape[0]
        kb = nb if k is None else min(k, nb)
        use_dense = method == "dense" or (method == "auto" and (nb <= dense_limit or kb >= nb - 1))
        if k is None and not use_dense:
            raise ValueError("the full spectrum needs the dense solver")
        if use_dense:
            e, y = np.linalg.eigh(Hb.toarray())
            e, y = e[:kb], y[:, :kb]
        else:
            nrm = float(abs(Hb).sum(axis=1).max())
            e, y = lanczos_lowest(lambda x: Hb @ x, nb, kb, tol=tol, norm_estimate=nrm)
        es.append(e)
        vs.append(np.asarray(Q @ y))
    E = np.concatenate(es)
    X = np.concatenate(vs, axis=1)
    order = np.argsort(E, kind="stable")
    if k is not None:
        order = order[:k]
    return PolaritonSet(E[order], X[:, order], basis)


def polaritons(spec: SystemSpec, basis: Basis, H: SparseSymMatrix, k: int | None = None,
               **kw) -> PolaritonSet:
    """Symmetry-blocked diagonalization of the assembled Hamiltonian."""
    return diagonalize(H, k, blocks=symmetry_blocks(spec, basis), basis=basis, **kw)


def class_names(n_mol: int) -> list[str]:
    return ["ground"] + [f"mol{i + 1}" for i in range(n_mol)] + ["photonic"]


def class_weights(basis: Basis) -> np.ndarray:
    """(n_basis, n_mol + 2) membership weights; rows sum to one.

    Vibrationally excited kets are shared between molecules in proportion to
    their quanta; kets with no vibrational quanta are ground (N = 0) or
    photonic (N >= 1)."""
    qn = basis.quantum_numbers()
    n_mol = basis.n_mol
    v = qn[:, 1::3]
    total = v.sum(axis=1)
    out = np.zeros((len(basis), n_mol + 2))
    excited = total > 0
    out[excited, 1:1 + n_mol] = v[excited] / total[excited, None]
    out[~excited & (qn[:, 0] == 0), 0] = 1.0
    out[~excited & (qn[:, 0] > 0), -1] = 1.0
    return out


def character(coeffs: np.ndarray, basis: Basis) -> np.ndarray:
    return character_matrix(np.asarray(coeffs)[:, None], basis)[0]


def character_matrix(vectors: np.ndarray, basis: Basis) -> np.ndarray:
    w = np.abs(vectors) ** 2
    return (w.T @ class_weights(basis))


def exchange_expectation(vectors: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """<x|P12|x> for each column."""
    return np.einsum("ik,ik->k", vectors, vectors[perm])
