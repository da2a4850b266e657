"""Independent reference implementations used only by the tests.

Nothing here imports the package's numerical kernels: angular factors come
from ladder-operator Clebsch-Gordan construction or quadrature, eigenvalues
from cyclic Jacobi rotations.
"""
from __future__ import annotations

import functools
import itertools
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import lpmv


# ---------------------------------------------------------- Clebsch-Gordan


def _jz_jpm(j: int):
    ms = np.arange(j, -j - 1, -1)
    jp = np.zeros((len(ms), len(ms)))
    for k in range(1, len(ms)):
        m = ms[k]
        jp[k - 1, k] = math.sqrt(j * (j + 1) - m * (m + 1))
    return ms, np.diag(ms.astype(float)), jp, jp.T


@functools.lru_cache(maxsize=None)
def clebsch_gordan_table(j1: int, j2: int) -> dict:
    """{(m1, m2, J, M): <j1 m1 j2 m2 | J M>} by building |J J> as the J^2
    eigenvector in the M = J subspace (Condon-Shortley sign) and lowering."""
    m1s, z1, p1, l1 = _jz_jpm(j1)
    m2s, z2, p2, l2 = _jz_jpm(j2)
    I1, I2 = np.eye(len(m1s)), np.eye(len(m2s))
    Jz = np.kron(z1, I2) + np.kron(I1, z2)
    Jp = np.kron(p1, I2) + np.kron(I1, p2)
    Jm = Jp.T
    J2 = Jm @ Jp + Jz @ Jz + Jz
    pairs = list(itertools.product(m1s, m2s))
    M_of = np.array([a + b for a, b in pairs])
    table = {}
    for J in range(abs(j1 - j2), j1 + j2 + 1):
        sub = np.flatnonzero(M_of == J)
        w, v = np.linalg.eigh(J2[np.ix_(sub, sub)])
        k = np.argmin(abs(w - J * (J + 1)))
        top = np.zeros(len(pairs))
        top[sub] = v[:, k]
        # sign: <j1 j1, j2 J-j1 | J J> > 0
        lead = [i for i in sub if pairs[i][0] == max(pairs[s][0] for s in sub)][0]
        top *= np.sign(top[lead])
        state = top
        for M in range(J, -J - 1, -1):
            for i in np.flatnonzero(np.abs(state) > 0):
                table[(int(pairs[i][0]), int(pairs[i][1]), J, M)] = float(state[i])
            if M > -J:
                # lowering fixes the phase; the J^2 eigenvector in the next M
                # block removes round-off that lowering would amplify
                lowered = Jm @ state
                sub = np.flatnonzero(M_of == M - 1)
                w, v = np.linalg.eigh(J2[np.ix_(sub, sub)])
                vec = v[:, np.argmin(abs(w - J * (J + 1)))]
                state = np.zeros(len(pairs))
                state[sub] = vec * np.sign(vec @ lowered[sub])
    return table


def wigner3j_oracle(j1, j2, j3, m1, m2, m3) -> float:
    if m1 + m2 + m3 != 0 or not abs(j1 - j2) <= j3 <= j1 + j2:
        return 0.0
    cg = clebsch_gordan_table(j1, j2).get((m1, m2, j3, -m3), 0.0)
    return (-1) ** (j1 - j2 - m3) / math.sqrt(2 * j3 + 1) * cg


# ---------------------------------------------------- quadrature cos(theta)


def _norm_assoc_legendre(J: int, M: int, x: np.ndarray) -> np.ndarray:
    """Theta part of Y_JM, normalized so that int |f|^2 dx = 1 on [-1, 1]."""
    am = abs(M)
    c = math.sqrt((2 * J + 1) / 2 * math.factorial(J - am) / math.factorial(J + am))
    return c * lpmv(am, J, x)


def cos_element_quadrature(J: int, M: int, Jp: int, Mp: int, n: int = 64) -> float:
    if M != Mp:
        return 0.0
    x, w = leggauss(n)
    return float(np.sum(w * _norm_assoc_legendre(J, M, x) * x * _norm_assoc_legendre(Jp, M, x)))


# ------------------------------------------------------------ dense model


def dense_hamiltonian(E_vib, B_v, mu, omega_c, g, mu_ref, N_max, v_max, J_max):
    """Brute-force H over |N; v1 J1; v2 J2> with all M = 0, element by element.

    Returns (labels, H) where labels are (N, v1, J1, v2, J2)."""
    labels = [(N, v1, J1, v2, J2)
              for N in range(N_max + 1)
              for v1 in range(v_max + 1) for J1 in range(J_max + 1)
              for v2 in range(v_max + 1) for J2 in range(J_max + 1)]
    n = len(labels)
    H = np.zeros((n, n))
    scale = g / mu_ref
    for a, (N, v1, J1, v2, J2) in enumerate(labels):
        H[a, a] = (E_vib[0][v1] + B_v[0][v1] * J1 * (J1 + 1)
                   + E_vib[1][v2] + B_v[1][v2] * J2 * (J2 + 1) + N * omega_c)
        for b, (Np, w1, K1, w2, K2) in enumerate(labels):
            if abs(N - Np) != 1:
                continue
            ph = math.sqrt(max(N, Np))
            if (w2, K2) == (v2, J2):
                H[a, b] -= scale * mu[0][v1][w1] * cos_element_quadrature(J1, 0, K1, 0) * ph
            if (w1, K1) == (v1, J1):
                H[a, b] -= scale * mu[1][v2][w2] * cos_element_quadrature(J2, 0, K2, 0) * ph
    return labels, H


def jacobi_eigenvalues(A: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Cyclic Jacobi rotations on a copy of a real symmetric matrix."""
    A = np.array(A, dtype=float)
    n = len(A)
    for _ in range(max_sweeps):
        off = math.sqrt(2 * np.sum(np.triu(A, 1) ** 2))
        if off < tol * max(1.0, np.abs(A).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                R = np.eye(n)
                R[p, p] = R[q, q] = c
                R[p, q] = s
                R[q, p] = -s
                A = R.T @ A @ R
    return np.sort(np.diag(A))


# ---------------------------------------------------- V_rot by inspection


def vrot_4x4(cos1, cos2, E_vib1, E_vib2, omega_c, g, mu1, mu2, mu_ref):
    """Leading block in the order |00;0>, |00;1>, |10;0>, |01;0>, written out
    entry by entry. Broadcasts over array-valued cosines."""
    cos1, cos2 = np.broadcast_arrays(np.asarray(cos1, dtype=float), np.asarray(cos2, dtype=float))
    s = g / mu_ref
    V = np.zeros(cos1.shape + (4, 4))
    V[..., 0, 0] = E_vib1[0] + E_vib2[0]
    V[..., 1, 1] = E_vib1[0] + E_vib2[0] + omega_c
    V[..., 2, 2] = E_vib1[1] + E_vib2[0]
    V[..., 3, 3] = E_vib1[0] + E_vib2[1]
    V[..., 0, 1] = V[..., 1, 0] = -s * (mu1[0][0] * cos1 + mu2[0][0] * cos2)
    V[..., 1, 2] = V[..., 2, 1] = -s * mu1[0][1] * cos1
    V[..., 1, 3] = V[..., 3, 1] = -s * mu2[0][1] * cos2
    return V


def plaquette_flip_count(matrix_fn, states: tuple[int, int], n: int = 400) -> int:
    """Number of grid plaquettes around which both ``states`` change sign
    under parallel transport (a pi Berry phase for each)."""
    t = np.linspace(0, np.pi, n)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    _, U = np.linalg.eigh(matrix_fn(np.cos(T1), np.cos(T2)))

    def ov(a, b):
        return np.einsum("...ks,...ks->...s", a, b)

    c00, c10, c11, c01 = U[:-1, :-1], U[1:, :-1], U[1:, 1:], U[:-1, 1:]
    loop = np.sign(ov(c00, c10)) * np.sign(ov(c10, c11)) * np.sign(ov(c11, c01)) * np.sign(ov(c01, c00))
    a, b = states
    return int(np.sum((loop[..., a] < 0) & (loop[..., b] < 0)))


# ----------------------------------------------------------------- Rabi


class FlatPulse:
    """Constant-amplitude cos carrier switched on at t = 0; duck-types the
    package's Pulse for the propagator."""

    t0 = 0.0
    t_end = 1e9

    def __init__(self, E0: float, wavenumber: float):
        self.E0 = E0
        self.w = 2 * math.pi * 2.99792458e-5 * wavenumber  # rad/fs

    def __call__(self, t):
        return self.E0 * np.cos(self.w * np.asarray(t, dtype=float))


def rabi_period_fs(coupling_cm1: float) -> float:
    """Resonant rotating-wave Rabi period for <1|-E d|2> amplitude V (cm^-1)
    driven by a cos carrier: Omega = V, P_2 = sin^2(Omega t / 2)."""
    c_cm_per_fs = 2.99792458e-5
    return 1.0 / (c_cm_per_fs * coupling_cm1)
