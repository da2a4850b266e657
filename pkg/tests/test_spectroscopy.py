from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rovibpol.hamiltonian import assemble_dipole_z, assemble_h, enumerate_basis
from rovibpol.moldata import bundled
from rovibpol.polaritons import polaritons
from rovibpol.spectroscopy import (
    SpectrumLine, envelope, stick_spectrum, transition_amplitudes, write_envelope, write_sticks,
)


def _spectrum(name, g, J_max=8, window=(2850.0, 3000.0)):
    spec = bundled(name, g=g, J_max=J_max)
    b = enumerate_basis(spec)
    P = polaritons(spec, b, assemble_h(spec, b))
    d = assemble_dipole_z(spec, b)
    return P, d, stick_spectrum(P, d, window=window)


def test_unit_gaussian_peak():
    grid, y = envelope([SpectrumLine(100.0, 1.0, 0, (1, 0, 0))], 10.0, grid=np.array([100.0]))
    assert y[0] == pytest.approx(2 * math.sqrt(math.log(2) / math.pi) / 10, rel=1e-12)


def test_unit_lorentzian_peak_and_area():
    line = [SpectrumLine(0.0, 1.0, 0, (1, 0, 0))]
    grid, y = envelope(line, 4.0, "lorentzian", grid=np.array([0.0]))
    assert y[0] == pytest.approx(2 / (math.pi * 4.0))
    grid, y = envelope(line, 4.0, "gaussian", sampling=0.01)
    assert np.trapezoid(y, grid) == pytest.approx(1.0, abs=1e-6)


def test_two_far_lines_identical_bumps():
    lines = [SpectrumLine(0.0, 1.0, 0, (1, 0, 0)), SpectrumLine(500.0, 1.0, 1, (0, 1, 0))]
    grid, y = envelope(lines, 10.0, sampling=0.5)
    a = y[np.abs(grid - 0) <= 30]
    b = y[np.abs(grid - 500) <= 30]
    assert np.allclose(a, b, atol=1e-14)


def test_bad_envelope_arguments():
    with pytest.raises(ValueError):
        envelope([], 0.0)
    with pytest.raises(ValueError):
        envelope([SpectrumLine(0.0, 1.0, 0, (1, 0, 0))], 1.0, shape="voigt")


def test_zero_coupling_single_line():
    P, d, lines = _spectrum("identical", 1e-4)
    top = max(lines, key=lambda l: l.intensity)
    assert top.wavenumber == pytest.approx(2926.1, abs=0.01)
    total = sum(l.intensity for l in lines)
    assert top.intensity / total > 0.99


def test_weak_coupling_identical_one_dominant_several_minor():
    P, d, lines = _spectrum("identical", 33.26)
    s = sorted((l.intensity for l in lines), reverse=True)
    assert s[0] > 2 * s[1]
    assert sum(1 for x in s[1:] if x > 1e-3 * s[0]) >= 2


def test_mixed_split_unequal():
    P, d, lines = _spectrum("mixed", 66.6)
    band = sorted((l for l in lines if 2915 < l.wavenumber < 2935), key=lambda l: -l.intensity)
    assert band[0].intensity > 1.1 * band[1].intensity


@pytest.mark.parametrize("name", ["mixed", "identical"])
def test_sum_rule(name):
    P, d, _ = _spectrum(name, 133.2, J_max=6)
    amp = transition_amplitudes(P, d)
    x = P.vectors[:, 0]
    dx = d.tocsr() @ x
    assert np.sum(amp ** 2) == pytest.approx(dx @ dx, abs=1e-8)
    lines = stick_spectrum(P, d)
    assert sum(l.intensity for l in lines) + amp[0] ** 2 == pytest.approx(dx @ dx, abs=1e-8)


def test_parity_selection_in_weak_limit():
    spec = bundled("identical", g=1e-6, J_max=6)
    b = enumerate_basis(spec)
    P = polaritons(spec, b, assemble_h(spec, b))
    amp = transition_amplitudes(P, assemble_dipole_z(spec, b))
    qn = b.quantum_numbers()
    jsum = qn[:, 2] + qn[:, 5]
    even = (P.vectors ** 2 * (jsum % 2 == 0)[:, None]).sum(axis=0) > 0.999
    assert np.abs(amp[even]).max() < 1e-8


def test_positions_are_eigenvalue_differences():
    P, d, lines = _spectrum("mixed", 66.6, J_max=5)
    for l in lines:
        assert l.wavenumber == P.energies[l.final] - P.energies[0]
        assert l.intensity >= 0
        assert sum(l.character_rgb) == pytest.approx(1.0, abs=1e-12)
        r, g, b = l.rgb
        assert (r, g, b) == (l.character_rgb[1], l.character_rgb[2], l.character_rgb[0])


@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 5)), min_size=1, max_size=6),
       st.floats(0.5, 20))
def test_envelope_nonnegative_and_linear(items, fwhm):
    lines = [SpectrumLine(p, h, k, (1, 0, 0)) for k, (p, h) in enumerate(items)]
    grid, y = envelope(lines, fwhm, sampling=0.5)
    assert np.all(y >= 0)
    doubled = [SpectrumLine(l.wavenumber, 2 * l.intensity, l.final, l.character_rgb) for l in lines]
    _, y2 = envelope(doubled, fwhm, grid=grid)
    assert np.allclose(y2, 2 * y)


def test_writers(tmp_path):
    P, d, lines = _spectrum("mixed", 66.6, J_max=4)
    write_sticks(tmp_path / "s.csv", lines)
    grid, y = envelope(lines, 15.0)
    write_envelope(tmp_path / "e.csv", grid, y)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "wavenumber,intensity,w_mol1,w_mol2,w_phot"
    assert len((tmp_path / "e.csv").read_text().splitlines()) == len(grid) + 1
