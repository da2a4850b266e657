"""Angular-momentum algebra for linear rotors.

Everything here works with integer angular momenta only; the rotor states
are spherical harmonics |J M>.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt

import numpy as np


@dataclass(frozen=True)
class AngularKet:
    J: int
    M: int = 0

    def __post_init__(self) -> None:
        if self.J < 0 or abs(self.M) > self.J:
            raise ValueError(f"invalid angular ket |J={self.J}, M={self.M}>")


def _triangle(a: int, b: int, c: int) -> bool:
    return abs(a - b) <= c <= a + b


@lru_cache(maxsize=65536)
def wigner3j(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    """Wigner 3-j symbol from the Racah formula in exact rational arithmetic.

    Selection-rule violations give 0.0 rather than raising.
    """
    if m1 + m2 + m3 != 0 or not _triangle(j1, j2, j3):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    if min(j1, j2, j3) < 0:
        return 0.0

    kmin = max(0, j2 - j3 - m1, j1 - j3 + m2)
    kmax = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    series = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            factorial(k)
            * factorial(j1 + j2 - j3 - k)
            * factorial(j1 - m1 - k)
            * factorial(j2 + m2 - k)
            * factorial(j3 - j2 + m1 + k)
            * factorial(j3 - j1 - m2 + k)
        )
        series += Fraction((-1) ** k, den)
    if series == 0:
        return 0.0

    # squared prefactor: triangle coefficient times the (j +/- m)! products
    pref2 = Fraction(
        factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3),
        factorial(j1 + j2 + j3 + 1),
    ) * (
        factorial(j1 + m1) * factorial(j1 - m1)
        * factorial(j2 + m2) * factorial(j2 - m2)
        * factorial(j3 + m3) * factorial(j3 - m3)
    )
    magnitude = sqrt(float(pref2 * series * series))
    sign = (-1) ** ((j1 - j2 - m3) % 2)
    return sign * magnitude if series > 0 else -sign * magnitude


def cos_theta_element(bra: AngularKet, ket: AngularKet) -> float:
    """<J M|cos(theta)|J' M'> for spherical harmonics."""
    if bra.M != ket.M or abs(bra.J - ket.J) != 1:
        return 0.0
    J, Jp = bra.J, ket.J
    phase = -1.0 if ket.M % 2 else 1.0
    return (
        sqrt((2 * J + 1) * (2 * Jp + 1))
        * phase
        * wigner3j(J, 1, Jp, bra.M, 0, -ket.M)
        * wigner3j(J, 1, Jp, 0, 0, 0)
    )


def rot_energy(B: float, J: int) -> float:
    """Rigid-rotor term value B J(J+1), same units as B."""
    return B * J * (J + 1)


def cos_matrix(J_max: int, M: int = 0) -> np.ndarray:
    """Dense cos(theta) matrix over |J M>, J = |M| .. J_max (tridiagonal)."""
    Js = range(abs(M), J_max + 1)
    n = len(Js)
    out = np.zeros((n, n))
    for a, J in enumerate(Js[:-1]):
        v = cos_theta_element(AngularKet(J, M), AngularKet(J + 1, M))
        out[a, a + 1] = out[a + 1, a] = v
    return out
