"""Light-dressed absorption: stick spectra between polariton states and
broadened envelopes."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .hamiltonian import SparseSymMatrix
from .polaritons import PolaritonSet, character_matrix


@dataclass(frozen=True)
class SpectrumLine:
    wavenumber: float
    intensity: float
    final: int
    character_rgb: tuple[float, float, float]  # (mol 1, mol 2, photonic)

    @property
    def rgb(self) -> tuple[float, float, float]:
        """Display colour: red mol 2, green photonic, blue mol 1."""
        m1, m2, ph = self.character_rgb
        return (m2, ph, m1)


def transition_amplitudes(states: PolaritonSet, dipole: SparseSymMatrix, initial: int = 0) -> np.ndarray:
    d = dipole.tocsr()
    return states.vectors.T @ (d @ states.vectors[:, initial])


def stick_spectrum(
    states: PolaritonSet,
    dipole: SparseSymMatrix,
    initial: int = 0,
    window: tuple[float, float] | None = None,
    min_intensity: float = 0.0,
) -> list[SpectrumLine]:
    """Absorption lines |<l|d_z|k>|^2 at E_l - E_k for final states in
    ``window`` (cm^-1)."""
    amp = transition_amplitudes(states, dipole, initial)
    de = states.energies - states.energies[initial]
    lo, hi = window if window is not None else (-np.inf, np.inf)
    sel = np.flatnonzero((de >= lo) & (de <= hi) & (np.arange(len(de)) != initial))
    chars = character_matrix(states.vectors[:, sel], states.basis) if states.basis is not None else None
    lines = []
    for n, l in enumerate(sel):
        inten = float(amp[l] ** 2)
        if inten < min_intensity:
            continue
        if chars is not None:
            c = chars[n]
            excited = np.array([c[1], c[2] if len(c) > 3 else 0.0, c[-1]])
            tot = excited.sum()
            rgb = tuple(float(x) for x in (excited / tot if tot > 0 else excited))
        else:
            rgb = (0.0, 0.0, 0.0)
        lines.append(SpectrumLine(float(de[l]), inten, int(l), rgb))
    return lines


def envelope(
    lines: Sequence[SpectrumLine],
    fwhm: float,
    shape: str = "gaussian",
    sampling: float = 0.1,
    grid: np.ndarray | None = None,
    pad: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Sum of area-normalized line shapes weighted by intensity."""
    if not fwhm > 0:
        raise ValueError("fwhm must be positive")
    pos = np.array([ln.wavenumber for ln in lines])
    inten = np.array([ln.intensity for ln in lines])
    if grid is None:
        pad = 5 * fwhm if pad is None else pad
        lo, hi = (pos.min() - pad, pos.max() + pad) if len(pos) else (0.0, 1.0)
        grid = np.arange(lo, hi + 0.5 * sampling, sampling)
    x = grid[:, None] - pos[None, :]
    if shape == "gaussian":
        sigma = fwhm / (2 * np.sqrt(2 * np.log(2)))
        prof = np.exp(-0.5 * (x / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))
    elif shape == "lorentzian":
        hw = 0.5 * fwhm
        prof = hw / np.pi / (x ** 2 + hw ** 2)
    else:
        raise ValueError(f"unknown line shape {shape!r}")
    return grid, prof @ inten


def write_sticks(path: str | Path, lines: Sequence[SpectrumLine]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["wavenumber", "intensity", "w_mol1", "w_mol2", "w_phot"])
        for ln in lines:
            w.writerow([f"{ln.wavenumber:.6f}", f"{ln.intensity:.10e}",
                        *(f"{c:.6f}" for c in ln.character_rgb)])


def write_envelope(path: str | Path, grid: np.ndarray, curve: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["wavenumber", "intensity"])
        for x, y in zip(grid, curve):
            w.writerow([f"{x:.4f}", f"{y:.10e}"])
