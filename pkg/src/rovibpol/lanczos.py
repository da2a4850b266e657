"""Thick-restart Lanczos for the lowest eigenpairs of a real symmetric
operator, with full reorthogonalization."""
from __future__ import annotations

from typing import Callable

import numpy as np


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, iterations: int):
        super().__init__(f"{msg} (after {iterations} restarts)")
        self.iterations = iterations


def _orthogonalize(V: np.ndarray, w: np.ndarray) -> np.ndarray:
    # two passes of classical Gram-Schmidt
    for _ in range(2):
        w = w - V @ (V.T @ w)
    return w


def lanczos_lowest(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    k: int,
    *,
    tol: float = 1e-10,
    norm_estimate: float | None = None,
    max_basis: int | None = None,
    max_restarts: int = 500,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``k`` eigenpairs; residuals ||Hx - lx|| <= tol * ||H||."""
    if k >= dim:
        raise ValueError("k must be smaller than the dimension; use a dense solver")
    m = min(dim, max_basis or max(2 * k + 30, 80))
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    V = np.zeros((dim, m))
    W = np.zeros((dim, m))
    V[:, 0] = v / np.linalg.norm(v)
    W[:, 0] = matvec(V[:, 0])
    j = 1
    hnorm = norm_estimate
    keep = min(k + max(10, k // 2), m - 2)

    for restart in range(max_restarts + 1):
        while j < m:
            w = _orthogonalize(V[:, :j], W[:, j - 1])
            beta = np.linalg.norm(w)
            if beta < 1e-14 * (hnorm or 1.0):
                # invariant subspace: continue with a fresh random direction
                w = _orthogonalize(V[:, :j], rng.standard_normal(dim))
                beta = np.linalg.norm(w)
            V[:, j] = w / beta
            W[:, j] = matvec(V[:, j])
            j += 1
        T = V.T @ W
        T = 0.5 * (T + T.T)
        theta, S = np.linalg.eigh(T)
        if hnorm is None:
            hnorm = max(abs(theta[0]), abs(theta[-1]))
        X = V @ S[:, :k]
        R = W @ S[:, :k] - X * theta[:k]
        res = np.linalg.norm(R, axis=0)
        if np.all(res <= tol * hnorm):
            return theta[:k], X
        # thick restart on the lowest Ritz vectors, extended by the residual
        # direction of the last Krylov vector
        f = _orthogonalize(V, W[:, m - 1])
        nf = np.linalg.norm(f)
        Vk = V @ S[:, :keep]
        Wk = W @ S[:, :keep]
        V[:, :keep] = Vk
        W[:, :keep] = Wk
        if nf < 1e-14 * hnorm:
            f = _orthogonalize(V[:, :keep], rng.standard_normal(dim))
            nf = np.linalg.norm(f)
        V[:, keep] = f / nf
        W[:, keep] = matvec(V[:, keep])
        j = keep + 1
    raise ConvergenceError(f"Lanczos: {k} eigenpairs not converged, max residual {res.max():.3e}",
                           max_restarts)
