"""Command-line driver: ``rovibpol {spectrum,vpes,topology,dynamics,reproduce-paper,rerun}``.

Every run writes its artifacts plus ``manifest.json`` into ``--out``. The
manifest holds the resolved system and parameters, so ``rerun`` can repeat
the job without the original config.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

THREADS_ENV = "ROVIBPOL_THREADS"
EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4
log = logging.getLogger("rovibpol")


def _set_threads(n: int | None) -> None:
    n = n or os.environ.get(THREADS_ENV)
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def content_hash(system: dict, params: dict) -> str:
    return hashlib.sha256(_canonical({"system": system, "params": params}).encode()).hexdigest()


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _resolve_system(args):
    from .moldata import ConfigError, bundled, load_system, system_from_dict

    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        spec = system_from_dict(data["system"] if "manifest_version" in data else data)
    elif args.system:
        spec = bundled(args.system)
    else:
        raise ConfigError("give --config or --system")
    over = {}
    if args.coupling is not None:
        over["g"] = args.coupling
    if args.j_max is not None:
        over["J_max"] = args.j_max
    if args.n_max is not None:
        over["N_max"] = args.n_max
    return spec.replace(**over) if over else spec


# ------------------------------------------------------------- subcommands


def run_spectrum(spec, p: dict, out: Path) -> list[str]:
    from . import hamiltonian as hm
    from .plotting import stick_plot
    from .polaritons import polaritons
    from .spectroscopy import envelope, stick_spectrum, write_envelope, write_sticks

    basis = hm.enumerate_basis(spec)
    H = hm.assemble_h(spec, basis)
    states = polaritons(spec, basis, H)
    lines = stick_spectrum(states, hm.assemble_dipole_z(spec, basis), window=tuple(p["window"]),
                           min_intensity=p["min_intensity"])
    grid, curve = envelope(lines, p["fwhm"], p["shape"], grid=None) if lines else ([], [])
    write_sticks(out / "sticks.csv", lines)
    write_envelope(out / "envelope.csv", grid, curve)
    states.report(out / "eigen_report.json", limit=p["report_states"])
    stick_plot(out / "spectrum.svg", [l.wavenumber for l in lines], [l.intensity for l in lines],
               [l.rgb for l in lines], (grid, curve) if lines else None,
               title=f"{spec.name} g={spec.cavity.g:g} cm-1")
    return ["sticks.csv", "envelope.csv", "eigen_report.json", "spectrum.svg"]


def run_vpes(spec, p: dict, out: Path) -> list[str]:
    from .plotting import heat_map
    from .vpes import DegeneracyError, locate_degeneracies, surfaces, write_metadata

    field = surfaces(spec, p["grid"], p["n_block"])
    field.write_csv(out / "surfaces.csv")
    found = []
    for a in range(1, field.energies.shape[-1] - 1):
        try:
            found += locate_degeneracies(field, (a, a + 1))
        except DegeneracyError:
            log.info("no degeneracy for pair (%d,%d)", a, a + 1)
    write_metadata(out / "degeneracies.json", spec, field, found)
    files = ["surfaces.csv", "degeneracies.json"]
    for s in range(1, field.energies.shape[-1]):
        name = f"surface{s}.svg"
        heat_map(out / name, field.theta1, field.theta2, field.energies[..., s], title=f"surface {s}")
        files.append(name)
    return files


def run_topology(spec, p: dict, out: Path) -> list[str]:
    from .plotting import line_plot
    from .topology import Contour, d_matrix, vrot_matrix_fn

    contour = Contour(tuple(p["center"]), p["radius"], p["samples"])
    contour.check_inside()
    states = tuple(p["states"]) if isinstance(p["states"], list) else tuple(range(1, 1 + p["states"]))
    report = d_matrix(vrot_matrix_fn(spec, p["n_block"]), contour, states)
    report.write(out / "topology.json", out / "gamma.csv")
    pairs = list(report.gammas)
    line_plot(out / "gamma.svg", report.phis, [report.gammas[q] for q in pairs],
              [f"gamma {a},{b}" for a, b in pairs], "phi", "gamma / rad")
    return ["topology.json", "gamma.csv", "gamma.svg"]


def run_dynamics(spec, p: dict, out: Path) -> list[str]:
    import numpy as np

    from . import dynamics as dy
    from . import hamiltonian as hm
    from .plotting import line_plot

    basis = hm.enumerate_basis(spec)
    H = hm.assemble_h(spec, basis)
    d = hm.assemble_dipole_z(spec, basis)
    pulse = dy.Pulse(p["E0"], p["carrier"], p["duration"], p["shape"], p["phase"])
    psi0 = dy.ground_state(spec, basis, H)
    traj = dy.propagate(spec, H, d, pulse, psi0, p["dt"], p["t_end"], sample_dt=p["sample_dt"],
                        dt_free=p["sample_dt"], check_step=p["check_step"])
    proj = dy.auto_projector(spec, basis, traj.states[:: max(1, len(traj.times) // 50)])
    pops = dy.adiabatic_populations(traj, proj)
    cos = [dy.orientation(traj, spec, basis, i) for i in range(spec.n_mol)]
    traj.write_csv(out / "trajectory.csv", pops, cos)
    t_ps = traj.times / 1000
    line_plot(out / "populations.svg", t_ps, [pops[:, a] for a in range(min(4, pops.shape[1]))],
              [f"p{a}" for a in range(4)], "t / ps", "population")
    line_plot(out / "orientation.svg", t_ps, cos, [m.label for m in spec.molecules], "t / ps", "<cos theta>")
    summary = {
        "projector_block": proj.n_block,
        "post_pulse_ground_population": float(pops[np.searchsorted(traj.times, pulse.t_end), 0]),
        "max_norm_drift": float(np.abs(traj.norm - 1).max()),
    }
    (out / "dynamics_summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return ["trajectory.csv", "populations.svg", "orientation.svg", "dynamics_summary.json"]


def run_reproduce(spec, p: dict, out: Path) -> list[str]:
    """Figure battery: surfaces, contours, spectra and dynamics for both
    systems. ``quick`` trims J_max and the trajectory length."""
    from .moldata import bundled
    from .topology import enclosing_contour
    from .vpes import locate_degeneracies, surfaces

    quick = p["quick"]
    files: list[str] = []

    def sub(name, fn, spec_, params):
        d = out / name
        d.mkdir(parents=True, exist_ok=True)
        files.extend(f"{name}/{f}" for f in fn(spec_, params, d))

    g = p["coupling"]
    mixed = bundled("mixed", g=g)
    ident = bundled("identical", g=g)
    grid = 101 if quick else 201
    sub("fig1_vpes_mixed", run_vpes, mixed, {"grid": grid, "n_block": 4})
    sub("fig2_vpes_identical", run_vpes, ident, {"grid": grid, "n_block": 4})

    field = surfaces(mixed, grid)
    d12 = locate_degeneracies(field, (1, 2))
    d23 = locate_degeneracies(field, (2, 3))
    allpts = [d.point for d in d12 + d23]
    from .topology import default_radius

    for tag, target in (("A_12", d12[0]), ("B_23", d23[0])):
        others = [q for q in allpts if q != target.point]
        r = default_radius(target.point, others)
        sub(f"fig3{tag}", run_topology, mixed,
            {"center": list(target.point), "radius": r, "samples": 512, "states": [1, 2, 3], "n_block": 4})
    c = enclosing_contour([d12[0].point, d23[0].point], [d12[1].point, d23[1].point])
    sub("fig3CD_two_lici", run_topology, mixed,
        {"center": list(c.center), "radius": c.radius, "samples": 512, "states": [1, 2, 3], "n_block": 4})
    sub("fig4_identical_contour", run_topology, ident,
        {"center": [1.5707963267948966, 1.5707963267948966], "radius": 0.7, "samples": 512,
         "states": [1, 2, 3], "n_block": 4})

    J_spec = 10 if quick else 20
    for gs in ([1e-3, 66.6, 133.2] if quick else [1e-3, 66.6, 133.2, 199.8, 266.4]):
        for name in ("identical", "mixed"):
            sub(f"fig4_spectrum_{name}_g{gs:g}", run_spectrum, bundled(name, g=gs, J_max=J_spec),
                {"window": [2850.0, 3000.0], "fwhm": 15.0, "shape": "gaussian", "min_intensity": 0.0,
                 "report_states": 40})

    dyn = dict(DYNAMICS_DEFAULTS, t_end=600.0 if quick else 5000.0)
    for name in ("identical", "mixed", "identical37"):
        sub(f"fig5_dynamics_{name}", run_dynamics,
            bundled(name, g=133.2, J_max=10 if quick else 20), dyn)
    return files


DYNAMICS_DEFAULTS = {
    "E0": 0.1 / 2 ** 0.5, "carrier": 2926.1, "duration": 60.0, "shape": "sin2", "phase": 0.0,
    "dt": 0.1, "t_end": 3000.0, "sample_dt": 5.0, "check_step": False,
}

RUNNERS = {
    "spectrum": run_spectrum,
    "vpes": run_vpes,
    "topology": run_topology,
    "dynamics": run_dynamics,
    "reproduce-paper": run_reproduce,
}


def _params(args) -> dict:
    cmd = args.command
    if cmd == "spectrum":
        return {"window": list(args.window), "fwhm": args.fwhm, "shape": args.shape,
                "min_intensity": args.min_intensity, "report_states": args.report_states}
    if cmd == "vpes":
        return {"grid": args.grid, "n_block": args.n_block}
    if cmd == "topology":
        return {"center": list(args.center), "radius": args.radius, "samples": args.samples,
                "states": args.states, "n_block": args.n_block}
    if cmd == "dynamics":
        return {"E0": args.E0, "carrier": args.carrier, "duration": args.duration, "shape": args.shape,
                "phase": args.phase, "dt": args.dt, "t_end": args.t_end, "sample_dt": args.sample_dt,
                "check_step": args.check_step}
    return {"quick": args.quick, "coupling": args.coupling if args.coupling is not None else 33.26}


def execute(command: str, spec, params: dict, out: Path) -> Path:
    """Run one job and write its manifest; returns the manifest path."""
    from . import __version__
    from .moldata import system_to_dict

    out.mkdir(parents=True, exist_ok=True)
    system = system_to_dict(spec)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    files = RUNNERS[command](spec, params, out)
    manifest = {
        "manifest_version": 1,
        "tool": "rovibpol",
        "version": __version__,
        "command": command,
        "params": params,
        "system": system,
        "input_hash": content_hash(system, params),
        "outputs": {f: _file_hash(out / f) for f in files},
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rovibpol", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="system JSON or a manifest.json from an earlier run")
        p.add_argument("--system", choices=["mixed", "identical", "identical37"],
                       help="bundled system (default: mixed)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, help=f"BLAS threads (default ${THREADS_ENV})")
        p.add_argument("--coupling", type=float, help="override g in cm-1")
        p.add_argument("--j-max", type=int, dest="j_max")
        p.add_argument("--n-max", type=int, dest="n_max")

    p = sub.add_parser("spectrum", help="light-dressed stick spectrum and envelope")
    common(p)
    p.add_argument("--window", type=float, nargs=2, default=[2850.0, 3000.0])
    p.add_argument("--fwhm", type=float, default=15.0)
    p.add_argument("--shape", choices=["gaussian", "lorentzian"], default="gaussian")
    p.add_argument("--min-intensity", type=float, default=0.0)
    p.add_argument("--report-states", type=int, default=40)

    p = sub.add_parser("vpes", help="polaritonic surfaces and degeneracies")
    common(p)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--n-block", type=int, default=4)

    p = sub.add_parser("topology", help="topological phases and D matrix on a circle")
    common(p)
    p.add_argument("--center", type=float, nargs=2, required=True, metavar=("THETA1", "THETA2"))
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--states", type=int, default=3, help="number of excited surfaces, from 1")
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--n-block", type=int, default=4)

    p = sub.add_parser("dynamics", help="laser-driven propagation")
    common(p)
    d = DYNAMICS_DEFAULTS
    p.add_argument("--E0", type=float, default=d["E0"], help="peak field, a.u.")
    p.add_argument("--carrier", type=float, default=d["carrier"], help="cm-1")
    p.add_argument("--duration", type=float, default=d["duration"], help="envelope support, fs")
    p.add_argument("--shape", choices=["sin2", "gaussian"], default=d["shape"])
    p.add_argument("--phase", type=float, default=d["phase"])
    p.add_argument("--dt", type=float, default=d["dt"], help="step during the pulse, fs")
    p.add_argument("--t-end", type=float, default=d["t_end"], dest="t_end")
    p.add_argument("--sample-dt", type=float, default=d["sample_dt"], dest="sample_dt")
    p.add_argument("--check-step", action="store_true", help="verify dt by step halving")

    p = sub.add_parser("reproduce-paper", help="run the full figure battery")
    common(p)
    p.add_argument("--quick", action="store_true", help="J_max 10 and short trajectories")

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default="out")
    p.add_argument("--threads", type=int)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    _set_threads(args.threads)

    import numpy as np

    from .dynamics import QuadratureError, StepSizeError
    from .lanczos import ConvergenceError
    from .moldata import ConfigError, system_from_dict
    from .topology import ContourError
    from .vpes import DegeneracyError

    try:
        if args.command == "rerun":
            m = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
            if m.get("manifest_version") != 1:
                raise ConfigError("not a rovibpol manifest")
            spec = system_from_dict(m["system"])
            command, params = m["command"], m["params"]
        else:
            if not args.config and not args.system:
                args.system = "mixed"
            spec = _resolve_system(args)
            command, params = args.command, _params(args)
        path = execute(command, spec, params, Path(args.out))
        print(path)
        return 0
    except (ConfigError, KeyError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegeneracyError, ContourError, ConvergenceError, StepSizeError, QuadratureError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
