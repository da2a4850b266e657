"""Nonadiabatic couplings, ADT angles and topological D-matrices around
closed circular contours in rotor-angle space."""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .moldata import SystemSpec
from .vpes import Degeneracy, vrot_terms

MatrixFn = Callable[[np.ndarray], np.ndarray]  # (..., 2) points -> (..., n, n)


class ContourError(ValueError):
    pass


@dataclass(frozen=True)
class Contour:
    center: tuple[float, float]
    radius: float
    n_samples: int = 512

    def __post_init__(self) -> None:
        if self.n_samples < 64:
            raise ContourError("a contour needs at least 64 samples")
        if not self.radius > 0:
            raise ContourError("radius must be positive")

    @property
    def phis(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_samples) / self.n_samples

    def points(self, phis: np.ndarray | None = None) -> np.ndarray:
        p = self.phis if phis is None else phis
        c = np.asarray(self.center)
        return c + self.radius * np.stack([np.cos(p), np.sin(p)], axis=-1)

    def check_inside(self, lo: float = 0.0, hi: float = np.pi) -> None:
        cx, cy = self.center
        if min(cx - lo, cy - lo, hi - cx, hi - cy) < self.radius:
            raise ContourError(f"contour {self} leaves the domain [{lo}, {hi}]^2")

    def reversed(self) -> "ReversedContour":
        return ReversedContour(self.center, self.radius, self.n_samples)

    def refined(self) -> "Contour":
        return type(self)(self.center, self.radius, 2 * self.n_samples)


class ReversedContour(Contour):
    """Same circle traversed clockwise from the same start point."""

    @property
    def phis(self) -> np.ndarray:
        return -super().phis


def vrot_matrix_fn(spec: SystemSpec, n_block: int = 4) -> MatrixFn:
    terms = vrot_terms(spec, n_block)
    return lambda pts: terms.matrix(np.cos(pts))


def _canonical_sign(U: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column positive."""
    k = np.argmax(np.abs(U), axis=0)
    s = np.sign(U[k, np.arange(U.shape[1])])
    return U * s


def eigenframes(matrix_fn: MatrixFn, contour: Contour, flip_seed: int | None = None):
    """Eigenpairs along the contour, sign-smoothed by successive overlaps and
    anchored to a canonical sign at phi = 0."""
    E, U = np.linalg.eigh(matrix_fn(contour.points()))
    if flip_seed is not None:
        rng = np.random.default_rng(flip_seed)
        U = U * rng.choice([-1.0, 1.0], size=(U.shape[0], 1, U.shape[2]))
    U[0] = _canonical_sign(U[0])
    for k in range(1, len(U)):
        ov = np.einsum("ij,ij->j", U[k - 1], U[k])
        U[k] *= np.where(ov < 0, -1.0, 1.0)
    return E, U


@dataclass
class TauTrace:
    phis: np.ndarray
    states: tuple[int, ...]
    tau: np.ndarray  # (n_samples, n, n): <psi_i | d/dphi | psi_j>
    energies: np.ndarray

    def pair(self, i: int, j: int) -> np.ndarray:
        a, b = self.states.index(i), self.states.index(j)
        return self.tau[:, a, b]


def _tau_from_frames(U: np.ndarray, step: float) -> np.ndarray:
    nxt = np.roll(U, -1, axis=0)
    prv = np.roll(U, 1, axis=0)
    # wrap-around neighbours may carry the topological sign flip: align locally
    for nb in (nxt, prv):
        ov = np.einsum("kij,kij->kj", U, nb)
        nb *= np.where(ov < 0, -1.0, 1.0)[:, None, :]
    dU = (nxt - prv) / (2 * step)
    tau = np.einsum("kai,kaj->kij", U, dU)
    # the symmetric part is pure O(step^2) truncation error
    return 0.5 * (tau - tau.transpose(0, 2, 1))


def tau_along_contour(
    matrix_fn: MatrixFn,
    contour: Contour,
    states: Sequence[int],
    degeneracies: Sequence[Degeneracy] | Sequence[tuple[float, float]] = (),
    flip_seed: int | None = None,
) -> TauTrace:
    """d/dphi couplings between the selected adiabatic states by central
    differences of the smoothed eigenvector field."""
    for d in degeneracies:
        p = np.asarray(d.point if isinstance(d, Degeneracy) else d)
        dist = abs(np.hypot(*(p - contour.center)) - contour.radius)
        if dist < 1e-4:
            phi = np.arctan2(*(p - contour.center)[::-1]) % (2 * np.pi)
            raise ContourError(f"contour passes {dist:.2e} rad from a degeneracy at phi={phi:.4f}")
    states = tuple(states)
    E, U = eigenframes(matrix_fn, contour, flip_seed)
    phis = contour.phis
    step = phis[1] - phis[0]
    tau = _tau_from_frames(U[:, :, list(states)], step)
    return TauTrace(phis, states, tau, E[:, list(states)])


def _closed_trapezoid(y: np.ndarray, step: float) -> tuple[float, np.ndarray]:
    """Integral over a periodic sample set and its running partial sums
    (gamma(phi_k) = integral from 0 to phi_k)."""
    inc = 0.5 * (y + np.roll(y, -1)) * step
    partial = np.concatenate([[0.0], np.cumsum(inc)[:-1]])
    return float(inc.sum()), partial


def topological_phase(trace: TauTrace, pair: tuple[int, int]) -> tuple[float, np.ndarray]:
    """alpha (units of pi) and the ADT angle gamma(phi) in radians."""
    y = trace.pair(*pair)
    step = trace.phis[1] - trace.phis[0]
    total, gamma = _closed_trapezoid(y, step)
    return total / np.pi, gamma


def converged_phase(matrix_fn: MatrixFn, contour: Contour, pair: tuple[int, int],
                    tol: float = 1e-3, max_samples: int = 1 << 15, **kw):
    """Double the sampling until alpha moves by less than ``tol`` (units of pi)."""
    trace = tau_along_contour(matrix_fn, contour, pair, **kw)
    alpha, gamma = topological_phase(trace, pair)
    while contour.n_samples < max_samples:
        contour = contour.refined()
        trace = tau_along_contour(matrix_fn, contour, pair, **kw)
        a2, gamma = topological_phase(trace, pair)
        if abs(a2 - alpha) < tol:
            return a2, gamma, trace
        alpha = a2
    raise ContourError(f"alpha not converged at {contour.n_samples} samples")


def _polar(M: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(M)
    return u @ vt


@dataclass
class TopologyReport:
    contour: Contour
    states: tuple[int, ...]
    D: np.ndarray
    adt_diagonal: np.ndarray  # (n_samples + 1, n) diagonal of A(phi)
    alphas: dict = field(default_factory=dict)  # pair -> alpha/pi
    gammas: dict = field(default_factory=dict)  # pair -> gamma(phi)
    phis: np.ndarray | None = None
    isolation_ratio: float = np.inf
    warnings: list = field(default_factory=list)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.D)

    @property
    def K(self) -> int:
        return int(np.sum(self.diagonal < 0))

    @property
    def quantized(self) -> bool:
        off = self.D - np.diag(self.diagonal)
        return bool(np.all(np.abs(np.abs(self.diagonal) - 1) <= 0.02) and np.all(np.abs(off) < 0.05))

    def to_dict(self) -> dict:
        return {
            "contour": {"center": list(self.contour.center), "radius": self.contour.radius,
                        "n_samples": self.contour.n_samples},
            "states": list(self.states),
            "D": self.D.tolist(),
            "D_diagonal": self.diagonal.tolist(),
            "K": self.K,
            "quantized": self.quantized,
            "alpha_over_pi": {f"{a},{b}": v for (a, b), v in self.alphas.items()},
            "isolation_ratio": self.isolation_ratio,
            "warnings": list(self.warnings),
        }

    def write(self, json_path: str | Path, csv_path: str | Path | None = None) -> None:
        Path(json_path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        if csv_path is None:
            return
        pairs = list(self.gammas)
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["phi"] + [f"gamma_{a}{b}" for a, b in pairs]
                       + [f"A_{s}{s}" for s in self.states])
            for k, phi in enumerate(self.phis):
                w.writerow([f"{phi:.10f}"] + [f"{self.gammas[p][k]:.10f}" for p in pairs]
                           + [f"{x:.10f}" for x in self.adt_diagonal[k]])


def d_matrix(
    matrix_fn: MatrixFn,
    contour: Contour,
    states: Sequence[int],
    flip_seed: int | None = None,
) -> TopologyReport:
    """Transport the adiabatic frame of ``states`` around the contour.

    Each step solves grad A + tau A = 0 to second order: the frame is carried
    to the next point by the orthogonal polar factor of the overlap matrix.
    D is the frame mismatch at closure, expressed in the initial basis."""
    states = tuple(states)
    E, U_all = eigenframes(matrix_fn, contour, flip_seed)
    U = U_all[:, :, list(states)]
    n = len(U)
    # smooth continuation of the field to phi = 2 pi; differs from U[0] by
    # the sign flips that D records
    ov = np.einsum("ij,ij->j", U[n - 1], U[0])
    U_end = U[0] * np.where(ov < 0, -1.0, 1.0)
    frame = U[0].copy()
    diag = [np.ones(len(states))]
    for k in range(1, n + 1):
        Uk = U[k] if k < n else U_end
        frame = Uk @ _polar(Uk.T @ frame)
        diag.append(np.diag(Uk.T @ frame))
    D = U_end.T @ frame

    # isolation: couplings from the manifold to excluded states must be weak
    step = contour.phis[1] - contour.phis[0]
    closing = contour.phis[0] + 2 * np.pi * np.sign(step)
    report = TopologyReport(contour, states, D, np.array(diag), phis=np.append(contour.phis, closing))
    outside = [k for k in range(U_all.shape[2]) if k not in states]
    if outside:
        tau_all = _tau_from_frames(U_all, step)
        leak = np.abs(tau_all[:, list(states)][:, :, outside]).max()
        report.isolation_ratio = float(1.0 / max(leak, 1e-300))
        if report.isolation_ratio < 10:
            msg = f"manifold {states} not isolated (max |tau| to excluded states = {leak:.3f})"
            report.warnings.append(msg)
            warnings.warn(msg, stacklevel=2)
    if not report.quantized:
        report.warnings.append("D is not quantized: off-diagonal or |diagonal| deviates")

    trace = _tau_from_frames(U, step)
    for a in range(len(states) - 1):
        pair = (states[a], states[a + 1])
        total, gamma = _closed_trapezoid(trace[:, a, a + 1], step)
        report.alphas[pair] = total / np.pi
        report.gammas[pair] = np.append(gamma, total)
    return report


def default_radius(target: Sequence[float], others: Sequence[Sequence[float]],
                   lo: float = 0.0, hi: float = np.pi, clearance: float = 3.0) -> float:
    """Largest radius keeping ``clearance`` x radius away from every other
    degeneracy and the circle inside the domain."""
    t = np.asarray(target)
    r = min(t[0] - lo, t[1] - lo, hi - t[0], hi - t[1])
    for o in others:
        d = float(np.hypot(*(np.asarray(o) - t)))
        if d > 1e-9:
            r = min(r, d / clearance)
    return float(r)


def enclosing_contour(targets: Sequence[Sequence[float]], others: Sequence[Sequence[float]],
                      n_samples: int = 512, lo: float = 0.0, hi: float = np.pi) -> Contour:
    """Circle around all ``targets`` whose edge sits midway between the
    farthest target and the nearest excluded degeneracy."""
    pts = np.asarray(targets, dtype=float)
    c = pts.mean(axis=0)
    inner = np.max(np.hypot(*(pts - c).T))
    outer = min([np.hypot(*(np.asarray(o) - c)) for o in others] or [np.inf])
    edge = min(c[0] - lo, c[1] - lo, hi - c[0], hi - c[1])
    r = min(0.5 * (inner + outer), edge)
    if not inner < r < outer:
        raise ContourError("cannot separate the target degeneracies from the others")
    return Contour((float(c[0]), float(c[1])), float(r), n_samples)
