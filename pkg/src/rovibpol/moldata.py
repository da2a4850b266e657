"""Molecular and cavity constants, configuration files, unit conversion.

Energies are cm^-1 measured from the all-molecules-in-v=0 level with the
photonic zero-point energy dropped. Dipole matrix elements are atomic units.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import constants as sc

# ---------------------------------------------------------------- units

HARTREE_CM1 = sc.physical_constants["hartree-inverse meter relationship"][0] / 100.0
HARTREE_EV = sc.physical_constants["Hartree energy in eV"][0]
AU_TIME_FS = sc.physical_constants["atomic unit of time"][0] * 1e15
AU_FIELD_VM = sc.physical_constants["atomic unit of electric field"][0]
# angular frequency (rad/fs) of a 1 cm^-1 energy: 2 pi c
CM1_TO_RAD_PER_FS = 2.0 * np.pi * sc.c * 100.0 * 1e-15

_ENERGY = {"cm-1": 1.0, "hartree": HARTREE_CM1, "ev": HARTREE_CM1 / HARTREE_EV}
_TIME = {"fs": 1.0, "ps": 1000.0, "au-time": AU_TIME_FS}
_FIELD = {"au-field": 1.0, "v/m": 1.0 / AU_FIELD_VM}

_ALIASES = {
    "cm^-1": "cm-1", "cm⁻¹": "cm-1", "cm1": "cm-1", "wavenumber": "cm-1",
    "eh": "hartree", "a.u.-time": "au-time", "au_time": "au-time",
    "a.u.-field": "au-field", "au_field": "au-field", "v m^-1": "v/m",
}


class UnitError(ValueError):
    pass


def _unit(name: str) -> str:
    key = name.strip().lower()
    return _ALIASES.get(key, key)


def convert(value: float, from_unit: str, to_unit: str) -> float:
    """Convert between energy (cm-1, hartree, eV), time (fs, ps, a.u.) or
    field (a.u., V/m) units. Mixed dimensions raise UnitError."""
    a, b = _unit(from_unit), _unit(to_unit)
    for table in (_ENERGY, _TIME, _FIELD):
        if a in table and b in table:
            return value * table[a] / table[b]
    raise UnitError(f"cannot convert {from_unit!r} to {to_unit!r}")


def inverse_rotational_constant(period_ps: float) -> float:
    """Rotational constant (cm^-1) whose hbar/B time equals ``period_ps``."""
    return 1.0 / (CM1_TO_RAD_PER_FS * period_ps * 1000.0)


# ---------------------------------------------------------------- specs


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending field path."""


@dataclass(frozen=True)
class MoleculeSpec:
    label: str
    E_vib: tuple[float, ...]
    B_v: tuple[float, ...]
    mu: tuple[tuple[float, ...], ...]

    @property
    def n_vib(self) -> int:
        return len(self.E_vib)

    def mu_array(self) -> np.ndarray:
        return np.asarray(self.mu, dtype=float)

    def rovib_energy(self, v: int, J: int) -> float:
        return self.E_vib[v] + self.B_v[v] * J * (J + 1)


@dataclass(frozen=True)
class CavitySpec:
    omega_c: float
    g: float
    N_max: int
    reference_mu: float

    @property
    def field_scale(self) -> float:
        """sqrt(hbar omega_c / eps0 V) in cm^-1 per a.u. of dipole."""
        return self.g / self.reference_mu


@dataclass(frozen=True)
class Truncation:
    v_max: tuple[int, ...]
    J_max: tuple[int, ...]
    M_total: str | int | None = "zero"


@dataclass(frozen=True)
class SystemSpec:
    molecules: tuple[MoleculeSpec, ...]
    cavity: CavitySpec
    truncation: Truncation
    name: str = ""
    permanent_dipole_coupling: bool = True
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def n_mol(self) -> int:
        return len(self.molecules)

    def coupling(self, i: int) -> np.ndarray:
        """Cavity coupling matrix (cm^-1) for molecule i over its v levels."""
        g = self.cavity.field_scale * self.molecules[i].mu_array()
        if not self.permanent_dipole_coupling:
            g = g - np.diag(np.diag(g))
        return g

    def replace(self, **changes: Any) -> "SystemSpec":
        """Copy with overrides; accepts ``g``, ``omega_c``, ``N_max``,
        ``v_max``, ``J_max``, ``M_total`` as shortcuts."""
        cav = self.cavity
        cav_changes = {k: changes.pop(k) for k in ("g", "omega_c", "N_max") if k in changes}
        if cav_changes:
            cav = CavitySpec(**{**cav.__dict__, **cav_changes})
        tr = self.truncation
        tr_changes = {}
        for k in ("v_max", "J_max"):
            if k in changes:
                tr_changes[k] = _per_molecule(changes.pop(k), self.n_mol, k)
        if "M_total" in changes:
            tr_changes["M_total"] = changes.pop("M_total")
        if tr_changes:
            tr = Truncation(**{**tr.__dict__, **tr_changes})
        data = {**self.__dict__, "cavity": cav, "truncation": tr, **changes}
        out = SystemSpec(**data)
        _validate_truncation(out)
        return out


def _per_molecule(value: Any, n: int, path: str) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        if len(value) != n:
            raise ConfigError(f"{path}: expected {n} entries, got {len(value)}")
        return tuple(int(x) for x in value)
    return (int(value),) * n


def _validate_truncation(spec: SystemSpec) -> None:
    tr = spec.truncation
    for i, (vm, jm) in enumerate(zip(tr.v_max, tr.J_max)):
        if vm < 0 or jm < 0:
            raise ConfigError(f"truncation: negative limit for molecule {i}")
        if vm >= spec.molecules[i].n_vib:
            raise ConfigError(
                f"truncation.v_max[{i}]: {vm} exceeds data for molecule "
                f"{spec.molecules[i].label!r} ({spec.molecules[i].n_vib} levels)"
            )
    if not (tr.M_total in ("zero", None) or isinstance(tr.M_total, int)):
        raise ConfigError(f"truncation.M_total: unsupported value {tr.M_total!r}")
    if spec.cavity.N_max < 0:
        raise ConfigError("cavity.N_max: must be non-negative")
    if not spec.cavity.omega_c > 0:
        raise ConfigError("cavity.omega_c: must be positive")
    if spec.cavity.g < 0:
        raise ConfigError("cavity.g: must be non-negative")


def _molecule_from_dict(d: dict, path: str) -> MoleculeSpec:
    try:
        label = str(d["label"])
        E = tuple(float(x) for x in d["E_vib_cm1"])
        B = tuple(float(x) for x in d["B_v_cm1"])
        mu = tuple(tuple(float(x) for x in row) for row in d["mu_au"])
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}: missing") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    n = len(E)
    if n == 0:
        raise ConfigError(f"{path}.E_vib_cm1: empty")
    if len(B) != n:
        raise ConfigError(f"{path}.B_v_cm1: length {len(B)} != {n}")
    if len(mu) != n or any(len(r) != n for r in mu):
        raise ConfigError(f"{path}.mu_au: must be {n}x{n}")
    for v, b in enumerate(B):
        if not b > 0:
            raise ConfigError(f"{path}.B_v_cm1[{v}]: must be positive, got {b}")
    m = np.asarray(mu)
    if not np.array_equal(m, m.T):
        bad = np.argwhere(m != m.T)[0]
        raise ConfigError(f"{path}.mu_au[{bad[0]}][{bad[1]}]: matrix not symmetric")
    return MoleculeSpec(label, E, B, mu)


def system_from_dict(d: dict) -> SystemSpec:
    if not isinstance(d, dict):
        raise ConfigError("<root>: expected an object")
    mols_raw = d.get("molecules")
    if not isinstance(mols_raw, list) or not mols_raw:
        raise ConfigError("molecules: need a non-empty list")
    mols = tuple(_molecule_from_dict(m, f"molecules[{i}]") for i, m in enumerate(mols_raw))

    cav = d.get("cavity")
    if not isinstance(cav, dict):
        raise ConfigError("cavity: missing")
    try:
        omega = float(cav["omega_c_cm1"])
        g = float(cav["g_cm1"])
        N_max = int(cav["N_max"])
    except KeyError as exc:
        raise ConfigError(f"cavity.{exc.args[0]}: missing") from None
    if not omega > 0:
        raise ConfigError("cavity.omega_c_cm1: must be positive")
    if g < 0:
        raise ConfigError("cavity.g_cm1: must be non-negative")
    if N_max < 1:
        raise ConfigError("cavity.N_max: must be at least 1")
    if "reference_mu00_au" in cav:
        mu_ref = float(cav["reference_mu00_au"])
    else:
        ref = cav.get("reference", mols[0].label)
        matches = [m for m in mols if m.label == ref]
        if not matches:
            raise ConfigError(f"cavity.reference: no molecule labelled {ref!r}")
        mu_ref = matches[0].mu[0][0]
    if not mu_ref > 0:
        raise ConfigError("cavity.reference_mu00_au: must be positive")

    tr = d.get("truncation", {})
    n = len(mols)
    spec = SystemSpec(
        molecules=mols,
        cavity=CavitySpec(omega, g, N_max, mu_ref),
        truncation=Truncation(
            v_max=_per_molecule(tr.get("v_max", 1), n, "truncation.v_max"),
            J_max=_per_molecule(tr.get("J_max", 20), n, "truncation.J_max"),
            M_total=tr.get("M_total", "zero"),
        ),
        name=str(d.get("name", "")),
        permanent_dipole_coupling=bool(d.get("permanent_dipole_coupling", True)),
    )
    _validate_truncation(spec)
    return spec


def system_to_dict(spec: SystemSpec) -> dict:
    return {
        "name": spec.name,
        "molecules": [
            {
                "label": m.label,
                "E_vib_cm1": list(m.E_vib),
                "B_v_cm1": list(m.B_v),
                "mu_au": [list(r) for r in m.mu],
            }
            for m in spec.molecules
        ],
        "cavity": {
            "omega_c_cm1": spec.cavity.omega_c,
            "g_cm1": spec.cavity.g,
            "N_max": spec.cavity.N_max,
            "reference_mu00_au": spec.cavity.reference_mu,
        },
        "truncation": {
            "v_max": list(spec.truncation.v_max),
            "J_max": list(spec.truncation.J_max),
            "M_total": spec.truncation.M_total,
        },
        "permanent_dipole_coupling": spec.permanent_dipole_coupling,
    }


def load_system(path: str | Path) -> SystemSpec:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<root>: invalid JSON ({exc})") from None
    return system_from_dict(raw)


def dump_system(spec: SystemSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(system_to_dict(spec), indent=2) + "\n", encoding="utf-8")


BUNDLED = {
    "mixed": "hcl35_hcl37.json",
    "identical": "hcl35_hcl35.json",
    "identical37": "hcl37_hcl37.json",
}


def bundled_path(name: str) -> Path:
    """Path of a bundled system file, by short name or file name."""
    fname = BUNDLED.get(name, name)
    ref = resources.files("rovibpol") / "data" / fname
    if not ref.is_file():
        raise ConfigError(f"no bundled system {name!r}")
    return Path(str(ref))


def bundled(name: str, **overrides: Any) -> SystemSpec:
    spec = load_system(bundled_path(name))
    return spec.replace(**overrides) if overrides else spec


def molecules_from_labels(labels: Sequence[str]) -> tuple[MoleculeSpec, ...]:
    """Single-molecule data keyed by label, taken from the bundled files."""
    table = {}
    for fname in BUNDLED.values():
        for m in load_system(bundled_path(fname)).molecules:
            table.setdefault(m.label, m)
    return tuple(table[label] for label in labels)
