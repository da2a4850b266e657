"""Vibrational polaritonic energy surfaces over the rotor angles.

V_rot is the vibro-photonic Hamiltonian with the rotational kinetic energy
removed: the cos(theta_i) operator is replaced by its value at fixed angles.
Channels |N; v1 v2 ...> are ordered by total quanta, photon first, so the
leading 4x4 block for two molecules is |00;0>, |00;1>, |10;0>, |01;0>.
"""
from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss, legvander
from scipy.optimize import minimize

from .moldata import SystemSpec


class DegeneracyError(RuntimeError):
    pass


def channels(spec: SystemSpec) -> list[tuple[int, tuple[int, ...]]]:
    """Vibro-photonic channels (N, (v1, v2, ...))."""
    tr = spec.truncation
    vib = itertools.product(*(range(vm + 1) for vm in tr.v_max))
    out = [(N, v) for v in vib for N in range(spec.cavity.N_max + 1)]
    out.sort(key=lambda c: (c[0] + sum(c[1]), -c[0], tuple(-x for x in c[1])))
    return out


@dataclass(frozen=True)
class VrotTerms:
    """V_rot(theta) = diag + sum_i cos(theta_i) * coupling[i]."""

    diag: np.ndarray
    coupling: np.ndarray  # (n_mol, n, n)
    channels: tuple

    def matrix(self, cosines: np.ndarray) -> np.ndarray:
        """Batched matrix; ``cosines`` has shape (..., n_mol)."""
        cosines = np.asarray(cosines, dtype=float)
        out = np.einsum("...i,ijk->...jk", cosines, self.coupling)
        out += np.diag(self.diag)
        return out


def vrot_terms(spec: SystemSpec, n_block: int | None = None) -> VrotTerms:
    chans = channels(spec)
    if n_block is None:
        n_block = len(chans)
    if n_block > len(chans) or n_block < 1:
        raise ValueError(f"n_block={n_block} but only {len(chans)} vibro-photonic channels")
    chans = chans[:n_block]
    index = {c: k for k, c in enumerate(chans)}
    diag = np.array(
        [N * spec.cavity.omega_c + sum(m.E_vib[v] for m, v in zip(spec.molecules, vs))
         for N, vs in chans]
    )
    coup = np.zeros((spec.n_mol, n_block, n_block))
    for i in range(spec.n_mol):
        g = spec.coupling(i)
        for k, (N, vs) in enumerate(chans):
            for Np in (N - 1, N + 1):
                for vp in range(spec.truncation.v_max[i] + 1):
                    kp = index.get((Np, vs[:i] + (vp,) + vs[i + 1:]))
                    if kp is not None:
                        coup[i, k, kp] = -g[vs[i], vp] * np.sqrt(max(N, Np))
    return VrotTerms(diag, coup, tuple(chans))


def build_vrot(spec: SystemSpec, point: Sequence[float], n_block: int | None = 4) -> np.ndarray:
    """Dense V_rot (cm^-1) at rotor angles ``point`` (radians)."""
    terms = vrot_terms(spec, n_block)
    if len(point) != spec.n_mol:
        raise ValueError(f"need {spec.n_mol} angles, got {len(point)}")
    return terms.matrix(np.cos(np.asarray(point, dtype=float)))


def _align(prev: np.ndarray, cur: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip columns of ``cur`` to have non-negative overlap with ``prev``."""
    ov = np.einsum("...ij,...ij->...j", prev, cur)
    s = np.where(ov < 0, -1.0, 1.0)
    return cur * s[..., None, :], np.abs(ov)


@dataclass
class SurfaceField:
    theta1: np.ndarray
    theta2: np.ndarray
    energies: np.ndarray  # (n1, n2, n_states), ascending
    vectors: np.ndarray  # (n1, n2, n_channels, n_states), columns eigenvectors
    gauge_break: np.ndarray = field(repr=False)  # (n1, n2, n_states) |overlap| < 0.5
    terms: VrotTerms | None = field(default=None, repr=False)

    @property
    def excited(self) -> np.ndarray:
        """The three surfaces above the ground one (numbered 1, 2, 3)."""
        return self.energies[..., 1:4]

    def write_csv(self, path: str | Path) -> None:
        n = self.energies.shape[-1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["theta1", "theta2"] + [f"E{k}" for k in range(n)])
            for a, t1 in enumerate(self.theta1):
                for b, t2 in enumerate(self.theta2):
                    w.writerow([f"{t1:.10f}", f"{t2:.10f}"]
                               + [f"{e:.10f}" for e in self.energies[a, b]])


def surfaces(spec: SystemSpec, resolution: int = 201, n_block: int = 4) -> SurfaceField:
    """Eigenvalues and sign-smoothed eigenvectors of V_rot on a uniform grid
    over [0, pi]^2."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if spec.n_mol != 2:
        raise ValueError("surfaces are defined for two molecules")
    terms = vrot_terms(spec, n_block)
    t = np.linspace(0.0, np.pi, resolution)
    c = np.cos(t)
    # exact zero at pi/2 keeps the decoupled lines exact
    c[np.isclose(t, np.pi / 2, atol=1e-14, rtol=0)] = 0.0
    cos_grid = np.stack(np.meshgrid(c, c, indexing="ij"), axis=-1)
    E, U = np.linalg.eigh(terms.matrix(cos_grid))

    brk = np.zeros(E.shape, dtype=bool)
    for a in range(1, resolution):
        U[a, 0], ov = _align(U[a - 1, 0], U[a, 0])
        brk[a, 0] = ov < 0.5
    for b in range(1, resolution):
        U[:, b], ov = _align(U[:, b - 1], U[:, b])
        brk[:, b] = ov < 0.5
    return SurfaceField(t, t.copy(), E, U, brk, terms)


# ------------------------------------------------------------ degeneracies


@dataclass(frozen=True)
class Degeneracy:
    theta1: float
    theta2: float
    pair: tuple[int, int]
    gap: float
    exponent: float
    kind: str  # "conical", "second-order", "avoided" or "other"

    @property
    def point(self) -> tuple[float, float]:
        return (self.theta1, self.theta2)

    def to_dict(self) -> dict:
        return {"theta1": self.theta1, "theta2": self.theta2, "pair": list(self.pair),
                "gap_cm1": self.gap, "exponent": self.exponent, "kind": self.kind}


def _gap_fn(terms: VrotTerms, pair: tuple[int, int]):
    a, b = pair

    def gap(x: np.ndarray) -> np.ndarray:
        e = np.linalg.eigvalsh(terms.matrix(np.cos(np.asarray(x))))
        return e[..., b] - e[..., a]

    return gap


def gap_exponent(terms: VrotTerms, point, pair, radii=None, n_dir: int = 8) -> np.ndarray:
    """Log-log slope of the gap versus distance, one per direction."""
    if radii is None:
        radii = np.geomspace(1e-4, 1e-2, 9)
    gap = _gap_fn(terms, pair)
    phis = np.arange(n_dir) * np.pi / n_dir
    dirs = np.stack([np.cos(phis), np.sin(phis)], axis=-1)
    pts = np.asarray(point)[None, None, :] + radii[None, :, None] * dirs[:, None, :]
    g = gap(pts)
    slopes = []
    for row in g:
        ok = row > 0
        if ok.sum() < 3:
            slopes.append(np.nan)
            continue
        slopes.append(np.polyfit(np.log(radii[ok]), np.log(row[ok]), 1)[0])
    return np.array(slopes)


def _classify(slopes: np.ndarray) -> tuple[float, str]:
    if np.any(~np.isfinite(slopes)):
        return float("nan"), "other"
    med = float(np.median(slopes))
    if np.all(np.abs(slopes - 1.0) <= 0.1):
        return med, "conical"
    if np.all(np.abs(slopes - 2.0) <= 0.2):
        return med, "second-order"
    return med, "other"


def locate_degeneracies(
    field: SurfaceField,
    pair: tuple[int, int],
    threshold: float = 1e-6,
    report_gap: float | None = None,
) -> list[Degeneracy]:
    """Refine local minima of the gap between adjacent states ``pair``
    (indices into the V_rot spectrum; 0 is the ground surface).

    Minima refined below ``threshold`` cm^-1 are classified by their gap
    exponent. Minima above it are returned as "avoided" when ``report_gap``
    admits them. Raises DegeneracyError when nothing qualifies.
    """
    a, b = pair
    if b != a + 1:
        raise ValueError("pair must be adjacent states (a, a+1)")
    terms = field.terms
    gap = field.energies[..., b] - field.energies[..., a]
    n1, n2 = gap.shape
    padded = np.pad(gap, 1, constant_values=np.inf)
    is_min = np.ones_like(gap, dtype=bool)
    strict = np.zeros_like(gap, dtype=bool)
    for da, db in itertools.product((-1, 0, 1), repeat=2):
        if da == db == 0:
            continue
        nb = padded[1 + da:1 + da + n1, 1 + db:1 + db + n2]
        is_min &= gap <= nb
        strict |= gap < nb
    is_min &= strict

    gap_of = _gap_fn(terms, pair)
    h = field.theta1[1] - field.theta1[0]
    found: list[Degeneracy] = []
    for ia, ib in np.argwhere(is_min):
        x0 = np.array([field.theta1[ia], field.theta2[ib]])
        res = minimize(
            lambda x: float(gap_of(np.clip(x, 0, np.pi)) ** 2),
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-26, "maxiter": 4000,
                     "initial_simplex": [x0, x0 + [h, 0], x0 + [0, h]]},
        )
        x = np.clip(res.x, 0, np.pi)
        g = float(gap_of(x))
        if any(np.hypot(*(x - d.point)) < 1e-4 for d in found):
            continue
        if g < threshold:
            exp, kind = _classify(gap_exponent(terms, x, pair))
        elif report_gap is not None and g < report_gap:
            exp, kind = float("nan"), "avoided"
        else:
            continue
        found.append(Degeneracy(float(x[0]), float(x[1]), (a, b), g, exp, kind))
    if not found:
        raise DegeneracyError(f"no gap minima below threshold for pair {pair}")
    found.sort(key=lambda d: (d.theta1, d.theta2))
    return found


def write_metadata(path: str | Path, spec: SystemSpec, field: SurfaceField,
                   degeneracies: Sequence[Degeneracy]) -> None:
    payload = {
        "system": spec.name,
        "g_cm1": spec.cavity.g,
        "omega_c_cm1": spec.cavity.omega_c,
        "resolution": len(field.theta1),
        "n_block": field.energies.shape[-1],
        "channels": [f"N={N};v={''.join(map(str, v))}" for N, v in field.terms.channels],
        "degeneracies": [d.to_dict() for d in degeneracies],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


# --------------------------------------------- full model on an angular grid


def legendre_dvr(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes, weights and the orthogonal FBR->DVR matrix
    (rows: nodes, columns: normalized P_J, J < n)."""
    x, w = leggauss(n)
    norm = np.sqrt((2 * np.arange(n) + 1) / 2.0)
    T = np.sqrt(w)[:, None] * legvander(x, n - 1) * norm[None, :]
    return x, w, T


def full_model_matrix(spec: SystemSpec, n_nodes: int | None = None) -> np.ndarray:
    """T_rot + V_rot for two molecules with M = 0, in a Gauss-Legendre DVR of
    ``n_nodes`` points per angle (default J_max + 1). Returned in cm^-1."""
    if spec.n_mol != 2:
        raise ValueError("full-model route implemented for two molecules")
    if n_nodes is None:
        n_nodes = max(spec.truncation.J_max) + 1
    terms = vrot_terms(spec)
    x, _, T = legendre_dvr(n_nodes)
    L2 = T @ np.diag(np.arange(n_nodes) * (np.arange(n_nodes) + 1.0)) @ T.T
    nc = len(terms.channels)
    n = n_nodes
    cos_grid = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
    V = terms.matrix(cos_grid)  # (n, n, nc, nc)
    H = np.zeros((nc, n, n, nc, n, n))
    eye = np.eye(n)
    for k, (_, vs) in enumerate(terms.channels):
        B1 = spec.molecules[0].B_v[vs[0]]
        B2 = spec.molecules[1].B_v[vs[1]]
        H[k, :, :, k, :, :] += B1 * np.einsum("ac,bd->abcd", L2, eye)
        H[k, :, :, k, :, :] += B2 * np.einsum("ac,bd->abcd", eye, L2)
    idx = np.arange(n)
    # advanced indices are split by slices, so the node axes come first
    H[:, idx[:, None], idx[None, :], :, idx[:, None], idx[None, :]] += V
    dim = nc * n * n
    return H.reshape(dim, dim)


def full_model_eigenvalues(spec: SystemSpec, k: int, n_nodes: int | None = None) -> np.ndarray:
    from scipy.linalg import eigh

    H = full_model_matrix(spec, n_nodes)
    return eigh(H, eigvals_only=True, subset_by_index=[0, k - 1])
