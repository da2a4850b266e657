"""Laser-driven wavepacket propagation in the diabatic product basis.

The Hamiltonian is kept in cm^-1 and time in fs, so the propagator phase is
2 pi c * E * t. The laser couples through the lab-frame z dipole.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss, legvander

from .hamiltonian import Basis, SparseSymMatrix, assemble_cos
from .moldata import CM1_TO_RAD_PER_FS, HARTREE_CM1, SystemSpec
from .vpes import vrot_terms


class StepSizeError(RuntimeError):
    pass


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class Pulse:
    E0: float  # a.u.
    wavenumber: float  # cm^-1
    duration: float = 60.0  # fs, total support of the envelope
    shape: str = "sin2"
    phase: float = 0.0
    t0: float = 0.0

    def __post_init__(self) -> None:
        if self.E0 < 0 or not self.duration > 0:
            raise ValueError("pulse needs E0 >= 0 and a positive duration")
        if self.shape not in ("sin2", "gaussian"):
            raise ValueError(f"unknown envelope {self.shape!r}")

    @property
    def t_end(self) -> float:
        return self.t0 + self.duration

    def envelope(self, t):
        s = (np.asarray(t, dtype=float) - self.t0) / self.duration
        inside = (s >= 0) & (s <= 1)
        if self.shape == "sin2":
            env = np.sin(np.pi * s) ** 2
        else:
            # fwhm = duration / 3, centred, cut to the support
            sigma = self.duration / 3 / (2 * np.sqrt(2 * np.log(2)))
            env = np.exp(-0.5 * ((s - 0.5) * self.duration / sigma) ** 2)
        return np.where(inside, env, 0.0)

    def __call__(self, t):
        """Field in a.u."""
        w = self.wavenumber * CM1_TO_RAD_PER_FS
        return self.E0 * self.envelope(t) * np.cos(w * (np.asarray(t, dtype=float) - self.t0) + self.phase)


@dataclass
class WavePacket:
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=complex)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def expm_krylov(
    matvec: Callable[[np.ndarray], np.ndarray],
    v: np.ndarray,
    tau: float,
    *,
    m_max: int = 40,
    tol: float = 1e-13,
) -> np.ndarray:
    """exp(-i tau A) v for Hermitian A via a Lanczos subspace, substepping
    when ``m_max`` vectors do not reach ``tol``."""
    out = np.array(v, dtype=complex)
    remaining = tau
    step = tau
    while abs(remaining) > 0:
        step = remaining if abs(step) > abs(remaining) else step
        res = _krylov_step(matvec, out, step, m_max, tol)
        if res is None:
            step *= 0.5
            continue
        out = res
        remaining -= step
    return out


def _krylov_step(matvec, v, tau, m_max, tol):
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return v.copy()
    n = len(v)
    m_max = min(m_max, n)
    V = np.zeros((m_max + 1, n), dtype=complex)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    V[0] = v / beta0
    for j in range(m_max):
        w = matvec(V[j])
        alpha[j] = np.vdot(V[j], w).real
        # full reorthogonalization keeps the projected propagator unitary
        w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        m = j + 1
        T = np.diag(alpha[:m]) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
        theta, S = np.linalg.eigh(T)
        c = S @ (np.exp(-1j * tau * theta) * S[0])
        # a posteriori error: weight leaking past the subspace
        err = beta[j] * abs(c[-1])
        if err < tol or beta[j] < 1e-14:
            return beta0 * (c @ V[:m])
        V[j + 1] = w / beta[j]
    return None


@dataclass
class Trajectory:
    times: np.ndarray
    field: np.ndarray
    norm: np.ndarray
    energy: np.ndarray  # <H_0> in cm^-1
    states: np.ndarray | None = None  # (n_times, dim) complex
    observables: dict = field(default_factory=dict)

    def write_csv(self, path: str | Path, populations: np.ndarray | None = None,
                  orientations: Sequence[np.ndarray] = ()) -> None:
        cols = ["time_fs", "field_au"]
        data = [self.times, self.field]
        if populations is not None:
            for a in range(populations.shape[1]):
                cols.append(f"p{a}")
                data.append(populations[:, a])
        for i, o in enumerate(orientations):
            cols.append(f"cos_theta{i + 1}")
            data.append(o)
        cols += ["norm", "energy_cm1"]
        data += [self.norm, self.energy]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in zip(*data):
                w.writerow([f"{x:.12g}" for x in row])


_CF4_A1 = (3 - 2 * np.sqrt(3)) / 12
_CF4_A2 = (3 + 2 * np.sqrt(3)) / 12
_CF4_C = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)


class Propagator:
    """Short-time propagator for H(t) = H0 - E(t) d (cm^-1)."""

    def __init__(self, H: SparseSymMatrix | sp.spmatrix, dipole: SparseSymMatrix | sp.spmatrix,
                 pulse: Pulse | None, m_max: int = 40, tol: float = 1e-13):
        self.H = H.tocsr() if isinstance(H, SparseSymMatrix) else sp.csr_matrix(H)
        self.d = (dipole.tocsr() if isinstance(dipole, SparseSymMatrix) else sp.csr_matrix(dipole)) * HARTREE_CM1
        self.pulse = pulse
        self.m_max = m_max
        self.tol = tol
        # spectral shift halves the Krylov work; the phase is restored below
        diag = self.H.diagonal()
        self.shift = 0.5 * (diag.min() + diag.max())
        self.Hs = (self.H - self.shift * sp.identity(self.H.shape[0], format="csr")).tocsr()

    def field(self, t):
        return 0.0 if self.pulse is None else self.pulse(t)

    def _exp(self, psi, dt, h_weight, d_weight):
        if d_weight == 0.0:
            mv = lambda x: self.Hs @ x
        else:
            mv = lambda x: self.Hs @ x - (d_weight / h_weight) * (self.d @ x)
        out = expm_krylov(mv, psi, CM1_TO_RAD_PER_FS * h_weight * dt, m_max=self.m_max, tol=self.tol)
        return out * np.exp(-1j * CM1_TO_RAD_PER_FS * h_weight * dt * self.shift)

    def step(self, psi: np.ndarray, t: float, dt: float) -> np.ndarray:
        if self.pulse is None or t >= self.pulse.t_end or t + dt <= self.pulse.t0:
            return self._exp(psi, dt, 1.0, 0.0)
        e1 = float(self.field(t + _CF4_C[0] * dt))
        e2 = float(self.field(t + _CF4_C[1] * dt))
        # commutator-free 4th-order Magnus: two exponentials of 0.5 H0 - f d
        psi = self._exp(psi, dt, 0.5, _CF4_A2 * e1 + _CF4_A1 * e2)
        return self._exp(psi, dt, 0.5, _CF4_A1 * e1 + _CF4_A2 * e2)

    def run(self, psi0: np.ndarray, t0: float, t1: float, dt: float,
            sample_dt: float | None = None, keep_states: bool = True,
            dt_free: float | None = None) -> Trajectory:
        sample_dt = sample_dt or dt
        dt_free = dt_free or sample_dt
        psi = np.array(psi0, dtype=complex)
        t = t0
        samples = np.arange(t0, t1 + 1e-9, sample_dt)
        times, fields, norms, energies, states = [], [], [], [], []

        def record(tt, p):
            times.append(tt)
            fields.append(float(self.field(tt)))
            norms.append(np.linalg.norm(p))
            energies.append(float(np.vdot(p, self.H @ p).real))
            if keep_states:
                states.append(p.copy())

        record(t, psi)
        for ts in samples[1:]:
            while t < ts - 1e-12:
                in_pulse = self.pulse is not None and t < self.pulse.t_end
                h = dt if in_pulse else dt_free
                if in_pulse:
                    h = min(h, self.pulse.t_end - t) if t + h > self.pulse.t_end else h
                h = min(h, ts - t)
                psi = self.step(psi, t, h)
                t += h
            t = ts
            record(t, psi)
        return Trajectory(np.array(times), np.array(fields), np.array(norms), np.array(energies),
                          np.array(states) if keep_states else None)


def propagate(
    spec: SystemSpec,
    H: SparseSymMatrix,
    d_z: SparseSymMatrix,
    pulse: Pulse | None,
    psi0: WavePacket,
    dt: float,
    t_end: float,
    *,
    sample_dt: float | None = None,
    dt_free: float | None = None,
    keep_states: bool = True,
    check_step: bool = False,
) -> Trajectory:
    """Integrate i dC/dt = (H - E(t) d_z) C from psi0.time to ``t_end``.

    During the pulse a 4th-order commutator-free Magnus step of size ``dt``
    is used; afterwards single Krylov exponentials of ``dt_free``."""
    if abs(psi0.norm - 1) > 1e-8:
        raise ValueError("initial wave packet must be normalized")
    if pulse is not None and pulse.E0 > 0:
        period = 1.0 / (pulse.wavenumber * CM1_TO_RAD_PER_FS / (2 * np.pi))
        if dt > period / 20:
            raise StepSizeError(f"dt={dt} fs gives fewer than 20 steps per optical cycle ({period:.3f} fs)")
    prop = Propagator(H, d_z, pulse)
    if check_step and pulse is not None:
        t_chk = min(pulse.t_end, t_end)
        a = prop.run(psi0.coeffs, psi0.time, t_chk, dt, t_chk - psi0.time, keep_states=True)
        b = prop.run(psi0.coeffs, psi0.time, t_chk, dt / 2, t_chk - psi0.time, keep_states=True)
        diff = np.linalg.norm(a.states[-1] - b.states[-1])
        if diff > 1e-6:
            raise StepSizeError(f"step halving changes the state by {diff:.2e} (dt={dt} fs)")
    return prop.run(psi0.coeffs, psi0.time, t_end, dt, sample_dt, keep_states, dt_free)


# ------------------------------------------------------------ observables


def orientation(traj: Trajectory, spec: SystemSpec, basis: Basis, molecule: int) -> np.ndarray:
    """<cos theta_i>(t) for molecule index ``molecule`` (0-based)."""
    if traj.states is None:
        raise ValueError("trajectory was run without keep_states")
    C = assemble_cos(spec, basis, molecule).tocsr()
    S = traj.states
    return np.einsum("ti,ti->t", S.conj(), (C @ S.T).T).real


@dataclass
class AdiabaticProjector:
    """Projectors onto V_rot eigenstates, evaluated on a Gauss-Legendre
    product grid in (cos theta_1, cos theta_2)."""

    nodes: np.ndarray
    weights: np.ndarray
    legendre: np.ndarray  # (n_nodes, J_max + 1) normalized P_J at nodes
    vectors: np.ndarray  # (n, n, n_chan, n_surf) eigenvectors at node pairs
    energies: np.ndarray  # (n, n, n_surf)
    channel_of: np.ndarray  # per basis state: channel index
    J1: np.ndarray
    J2: np.ndarray
    n_channels: int
    n_block: int

    @property
    def n_surfaces(self) -> int:
        return self.vectors.shape[-1]

    def grid_amplitudes(self, coeffs: np.ndarray) -> np.ndarray:
        """(n_chan, n, n) wavefunction at the quadrature nodes, weighted by
        sqrt(w1 w2) so that plain sums give integrals."""
        J_dim = self.legendre.shape[1]
        C = np.zeros((self.n_channels, J_dim, J_dim), dtype=complex)
        C[self.channel_of, self.J1, self.J2] = coeffs
        P = self.legendre * np.sqrt(self.weights)[:, None]
        return np.einsum("aj,cjk,bk->cab", P, C, P)

    def populations(self, coeffs: np.ndarray) -> np.ndarray:
        psi = self.grid_amplitudes(coeffs)
        proj = np.einsum("abcs,cab->abs", self.vectors, psi)
        return (np.abs(proj) ** 2).sum(axis=(0, 1))


def build_projector(spec: SystemSpec, basis: Basis, n_block: int | None = 4,
                    n_nodes: int | None = None) -> AdiabaticProjector:
    """Adiabatic projector for two molecules with all M_i = 0.

    The leading ``n_block`` channels are rotated to the local V_rot
    eigenvectors; any remaining channels are kept as diabatic projectors so
    that the populations always sum to the norm. ``n_block=None`` uses the
    full vibro-photonic V_rot."""
    if spec.n_mol != 2:
        raise ValueError("adiabatic projector implemented for two molecules")
    if spec.truncation.M_total != "zero":
        raise ValueError("adiabatic projector needs all M_i = 0")
    J_max = max(spec.truncation.J_max)
    n = n_nodes or J_max + 1
    if n < J_max + 1:
        raise QuadratureError(f"{n} nodes cannot integrate J_max={J_max} products exactly")
    full = vrot_terms(spec)
    nc = len(full.channels)
    nb = nc if n_block is None else n_block
    block = vrot_terms(spec, nb)
    x, w = leggauss(n)
    norm = np.sqrt((2 * np.arange(J_max + 1) + 1) / 2.0)
    P = legvander(x, J_max) * norm
    cos_grid = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
    Eb, Ub = np.linalg.eigh(block.matrix(cos_grid))
    vecs = np.zeros((n, n, nc, nc))
    vecs[:, :, :nb, :nb] = Ub
    for k in range(nb, nc):
        vecs[:, :, k, k] = 1.0
    energies = np.concatenate([Eb, np.broadcast_to(full.diag[nb:], (n, n, nc - nb))], axis=-1)
    chan_index = {c: k for k, c in enumerate(full.channels)}
    qn = basis.quantum_numbers()
    channel_of = np.array([chan_index[(N, (v1, v2))] for N, v1, _, _, v2, _, _ in qn])
    return AdiabaticProjector(x, w, P, vecs, energies, channel_of, qn[:, 2], qn[:, 5], nc, nb)


def adiabatic_populations(traj: Trajectory, projector: AdiabaticProjector,
                          check: bool = False, spec: SystemSpec | None = None,
                          basis: Basis | None = None) -> np.ndarray:
    """p^(a)(t) for every surface; rows sum to the wavepacket norm squared."""
    if traj.states is None:
        raise ValueError("trajectory was run without keep_states")
    pops = np.array([projector.populations(s) for s in traj.states])
    if check:
        if spec is None or basis is None:
            raise ValueError("node-doubling check needs spec and basis")
        fine = build_projector(spec, basis, projector.n_block, 2 * len(projector.nodes))
        ref = np.array([fine.populations(s) for s in traj.states[:: max(1, len(traj.states) // 10)]])
        diff = np.abs(ref - pops[:: max(1, len(traj.states) // 10)]).max()
        if diff > 1e-6:
            raise QuadratureError(f"populations change by {diff:.2e} when doubling quadrature nodes")
    return pops


def auto_projector(spec: SystemSpec, basis: Basis, states: np.ndarray,
                   threshold: float = 1e-3) -> AdiabaticProjector:
    """n_block = 4 projector, extended to the full V_rot manifold when the
    population left in the remaining channels exceeds ``threshold``."""
    proj = build_projector(spec, basis, 4)
    if proj.n_channels == 4:
        return proj
    rest = max(proj.populations(s)[4:].sum() for s in states)
    return proj if rest <= threshold else build_projector(spec, basis, None)


def ground_state(spec: SystemSpec, basis: Basis, H: SparseSymMatrix) -> WavePacket:
    from .polaritons import polaritons

    P = polaritons(spec, basis, H, k=1, method="lanczos")
    v = P.vectors[:, 0]
    v = v * np.sign(v[np.argmax(np.abs(v))])
    return WavePacket(v.astype(complex), 0.0)
