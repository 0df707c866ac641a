"""
Command-line entry point.

Usage::

    spinmerism COMMAND [--config FILE] [--out DIR] [--format csv|json|both]
               [--threads N] [--tol-degeneracy X] [--absolute] [--verbose]

Commands: spectrum, project, ts-diagram, sweep, heisenberg, dump-basis.
Outputs go to ``DIR/COMMAND.csv`` and ``DIR/COMMAND.json``. Errors print
one line ``spinmerism: error[KIND]: message`` on stderr and exit with the
code listed in :data:`EXIT_CODES`.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .cispace import CILevel, OrbitalPartition, generate
from .eigensolve import DEGENERACY_TOL, assign_spin, diagonalize, group_degenerate
from .errors import (ConfigError, ConvergenceError, FcidumpError, ParameterError,
                     ProjectorError, SpinLabelError, TrackingError)
from .fileio import (REQUIRED, ConfigSpec, atomic_write, csv_text, json_text, load_config,
                     parse_orbitals, read_fcidump, timestamp)
from .fockspace import SectorSpec, build_sector_basis
from .ligandfield import FE2_DEFAULT, RacahParameters, d_shell_integrals, tanabe_sugano
from .models import (HEISENBERG_U, LIGANDS, METAL, NOMINAL_METAL_COUNT, SWEEPABLE,
                     SpinmerismParams, build_heisenberg_dimer, build_hubbard_dimer,
                     build_spinmerism, fit_heisenberg, sweep_spinmerism)
from .secondq import Fragment, IntegralSet, build_hamiltonian, build_total_s2
from .spinproj import build_projectors, projection_table
from .units import to_cm1, to_hartree

__all__ = ["run_command", "main", "EXIT_CODES", "COMMANDS"]

log = logging.getLogger("spinmerism")

EXIT_CODES = {"ok": 0, "internal": 1, "usage": 2, "config": 3, "parse": 4, "solver": 5}
COMMANDS = ("spectrum", "project", "ts-diagram", "sweep", "heisenberg", "dump-basis")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spinmerism", description="Exact diagonalization and local-spin analysis.")
    p.add_argument("--version", action="version", version=f"spinmerism {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--out", metavar="DIR", default=".")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--threads", type=int, default=1, metavar="N")
    p.add_argument("--tol-degeneracy", type=float, default=DEGENERACY_TOL, metavar="X",
                   help="degeneracy tolerance in hartree")
    p.add_argument("--absolute", action="store_true",
                   help="report absolute energies in hartree instead of cm^-1 above the ground state")
    p.add_argument("--verbose", action="store_true")
    return p


# ---------------------------------------------------------------------------
# configuration grammar

MODEL_KINDS = {
    "spinmerism": ("A", "B", "C", "Dq", "eps_L", "U_L", "t_ML", "K_ML", "K_LL", "exchange"),
    "heisenberg": ("J", "U"),
    "hubbard": ("U", "t"),
    "dshell": ("A", "B", "C", "Dq", "n_electrons"),
    "fcidump": ("path",),
}


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise ValueError("must be a positive integer")
    return v


def _model_section(default_kind: str) -> dict:
    keys = {"kind": (str, default_kind)}
    for k in sorted({k for ks in MODEL_KINDS.values() for k in ks}):
        conv = str if k in ("exchange", "path") else int if k == "n_electrons" else float
        keys[k] = (conv, None)
    return keys


def _spec_for(command: str) -> ConfigSpec:
    spec = ConfigSpec()
    if command in ("spectrum", "project", "heisenberg", "sweep"):
        kind = "heisenberg" if command == "heisenberg" else "spinmerism"
        spec.section("model", **_model_section(kind))
    if command in ("spectrum", "project", "heisenberg"):
        spec.section("sector", nalpha=(int, None), nbeta=(int, None))
        spec.section("solver", nroots=(_positive_int, None))
    if command == "project":
        spec.section("fragments", a=(parse_orbitals, None), b=(parse_orbitals, None),
                     name_a=(str, None), name_b=(str, None), nominal_a=(int, None))
    if command == "heisenberg":
        spec.section("heisenberg", max_energy_cm1=(float, None))
    if command == "sweep":
        spec.section("sweep", vary=(str, "Dq"), start=(float, 2200.0), stop=(float, 2500.0),
                     num=(_positive_int, 31), block=(str, "xz"))
    if command == "ts-diagram":
        spec.section("ts", n_electrons=(int, 6), B=(float, FE2_DEFAULT.B), C=(float, FE2_DEFAULT.C),
                     start=(float, 0.0), stop=(float, 4.0), num=(_positive_int, 61))
    if command == "dump-basis":
        spec.section("sector", norb=(int, REQUIRED), nalpha=(int, REQUIRED), nbeta=(int, REQUIRED))
        spec.section("ci", level=(str, "FCI"), inactive=(parse_orbitals, None),
                     active=(parse_orbitals, None), virtual=(parse_orbitals, None))
    return spec


def _get(sec, key, default):
    return default if sec.get(key) is None else sec[key]


def _build_model(sec: dict):
    """Integrals and defaults for one ``[model]`` section, plus its effective values."""
    kind = sec["kind"]
    if kind not in MODEL_KINDS:
        raise ConfigError(f"[model] kind = {kind!r}; choose from {', '.join(MODEL_KINDS)}")
    extra = [k for k, v in sec.items() if k != "kind" and v is not None and k not in MODEL_KINDS[kind]]
    if extra:
        raise ConfigError(f"[model] keys {', '.join(extra)} do not apply to kind {kind}")
    echo = {"kind": kind}
    frags = None
    if kind == "spinmerism":
        d = SpinmerismParams()
        rp = RacahParameters(B=_get(sec, "B", d.rp.B), C=_get(sec, "C", d.rp.C), A=_get(sec, "A", d.rp.A))
        p = SpinmerismParams(rp=rp, **{k: _get(sec, k, getattr(d, k))
                                       for k in ("Dq", "eps_L", "U_L", "t_ML", "K_ML", "K_LL", "exchange")})
        echo.update(p.as_dict())
        ints, sector = build_spinmerism(p), SectorSpec(7, 4, 4)
        frags = (METAL, LIGANDS, NOMINAL_METAL_COUNT)
        return ints, sector, frags, echo, p
    if kind == "heisenberg":
        J, U = _get(sec, "J", 60.0), _get(sec, "U", HEISENBERG_U)
        echo.update(J=J, U=U)
        ints = build_heisenberg_dimer(J, U)
        sector = SectorSpec(2, 1, 1)
    elif kind == "hubbard":
        U, t = _get(sec, "U", 40000.0), _get(sec, "t", 10000.0)
        echo.update(U=U, t=t)
        ints, sector = build_hubbard_dimer(to_hartree(U), to_hartree(t)), SectorSpec(2, 1, 1)
    elif kind == "dshell":
        n = _get(sec, "n_electrons", 6)
        if not 1 <= n <= 9:
            raise ConfigError(f"[model] n_electrons = {n} outside 1..9")
        rp = RacahParameters(B=_get(sec, "B", FE2_DEFAULT.B), C=_get(sec, "C", FE2_DEFAULT.C),
                             A=_get(sec, "A", 0.0))
        dq = _get(sec, "Dq", 0.0)
        echo.update(A=rp.A, B=rp.B, C=rp.C, Dq=dq, n_electrons=n)
        ints, sector = d_shell_integrals(rp, dq), SectorSpec(5, (n + 1) // 2, n // 2)
    else:
        if sec.get("path") is None:
            raise ConfigError("[model] kind = fcidump needs path")
        data = read_fcidump(sec["path"])
        echo.update(path=sec["path"])
        ints = data.ints
        sector = SectorSpec(ints.norb, (data.nelec + data.ms2) // 2, (data.nelec - data.ms2) // 2)
    if kind in ("heisenberg", "hubbard"):
        frags = (Fragment((0,), "A"), Fragment((1,), "B"), 1)
    elif sector.norb >= 2:
        frags = (Fragment(tuple(range(sector.norb // 2)), "A"),
                 Fragment(tuple(range(sector.norb // 2, sector.norb)), "B"), None)
    return ints, sector, frags, echo, None


def _sector(cfg: dict, default: SectorSpec) -> SectorSpec:
    sec = cfg.get("sector", {})
    return SectorSpec(default.norb, _get(sec, "nalpha", default.nalpha), _get(sec, "nbeta", default.nbeta))


# ---------------------------------------------------------------------------
# commands

def _solve(ints: IntegralSet, sector: SectorSpec, nroots, tol):
    basis = build_sector_basis(sector)
    spectrum = diagonalize(build_hamiltonian(basis, ints), k=nroots)
    spectrum = assign_spin(spectrum, build_total_s2(basis), sz=sector.sz, degeneracy_tol=tol)
    return basis, spectrum


def _energies(spectrum, absolute: bool):
    e = spectrum.eigenvalues
    return e.copy() if absolute else to_cm1(e - e[0])


def _energy_name(absolute: bool) -> str:
    return "energy_hartree" if absolute else "energy_cm1"


def _spectrum_block(spectrum, absolute, tol):
    e = _energies(spectrum, absolute)
    level = np.empty(len(spectrum), dtype=int)
    for k, g in enumerate(group_degenerate(spectrum.eigenvalues, tol)):
        level[g] = k
    return [{"index": i, "energy": float(e[i]), "multiplicity": int(spectrum.multiplicities[i]),
             "level": int(level[i])} for i in range(len(spectrum))]


def cmd_spectrum(cfg, args):
    ints, default_sector, _, echo, _ = _build_model(cfg["model"])
    sector = _sector(cfg, default_sector)
    nroots = cfg["solver"]["nroots"]
    _, spectrum = _solve(ints, sector, nroots, args.tol_degeneracy)
    rows = _spectrum_block(spectrum, args.absolute, args.tol_degeneracy)
    name = _energy_name(args.absolute)
    csv_out = (["index", name, "multiplicity", "level"],
               [[r["index"], r["energy"], r["multiplicity"], r["level"]] for r in rows])
    effective = {"model": echo, "sector": _sector_echo(sector), "solver": {"nroots": nroots}}
    return effective, {"spectrum": rows}, csv_out


def _sector_echo(sector: SectorSpec) -> dict:
    return {"norb": sector.norb, "nalpha": sector.nalpha, "nbeta": sector.nbeta}


def cmd_project(cfg, args):
    ints, default_sector, frags, echo, _ = _build_model(cfg["model"])
    sector = _sector(cfg, default_sector)
    fsec = cfg["fragments"]
    if frags is None and (fsec["a"] is None or fsec["b"] is None):
        raise ConfigError("[fragments] a and b are required for this model")
    fa, fb, nominal = frags if frags else (None, None, None)
    fa = Fragment(fsec["a"], _get(fsec, "name_a", "A")) if fsec["a"] is not None else \
        Fragment(fa.orbitals, _get(fsec, "name_a", fa.name))
    fb = Fragment(fsec["b"], _get(fsec, "name_b", "B")) if fsec["b"] is not None else \
        Fragment(fb.orbitals, _get(fsec, "name_b", fb.name))
    nominal = _get(fsec, "nominal_a", nominal)
    for f in (fa, fb):
        f.check(sector.norb)
    nroots = cfg["solver"]["nroots"]
    basis, spectrum = _solve(ints, sector, nroots, args.tol_degeneracy)
    table = projection_table(spectrum, build_projectors(basis, fa), build_projectors(basis, fb),
                             nominal=nominal, names=(fa.name, fb.name))
    cols = table.columns()
    recs = table.records()
    if args.absolute:
        cols[0] = "energy_hartree"
        for r, e in zip(recs, spectrum.eigenvalues):
            r[0] = float(e)
    rows = _spectrum_block(spectrum, args.absolute, args.tol_degeneracy)
    effective = {"model": echo, "sector": _sector_echo(sector), "solver": {"nroots": nroots},
                 "fragments": {"a": list(fa.orbitals), "b": list(fb.orbitals), "name_a": fa.name,
                               "name_b": fb.name, "nominal_a": nominal}}
    block = {"columns": ["state"] + cols, "rows": [[i] + r for i, r in enumerate(recs)]}
    return effective, {"spectrum": rows, "projection": block}, (cols, recs)


def _executor(args):
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    return ThreadPoolExecutor(args.threads) if args.threads > 1 else nullcontext(None)


def cmd_ts_diagram(cfg, args):
    t = cfg["ts"]
    if t["num"] < 2 or not t["stop"] > t["start"]:
        raise ConfigError("[ts] needs num >= 2 and stop > start")
    rp = RacahParameters(B=t["B"], C=t["C"])
    xs = np.linspace(t["start"], t["stop"], t["num"])
    with _executor(args) as ex:
        ts = tanabe_sugano(t["n_electrons"], rp, xs, degeneracy_tol=args.tol_degeneracy, executor=ex)
    header, rows = ts.table()
    doc = {"ts_diagram": {
        "n_electrons": ts.n_electrons,
        "curves": [{"label": c.label, "multiplicity": c.multiplicity, "degeneracy": c.degeneracy,
                    "flagged_intervals": [list(map(int, f)) for f in c.flagged]} for c in ts.curves],
        "ground_multiplicity": [int(m) for m in ts.ground_multiplicity()],
        "crossings": [{"kind": c.kind, "dq_over_b": c.dq_over_b, "energy": c.energy,
                       "labels": [str(x) for x in c.labels], "slopes": list(c.slopes),
                       "bracket": list(c.bracket)} for c in ts.crossings],
    }}
    effective = {"ts": dict(t)}
    return effective, doc, (header, rows)


def cmd_sweep(cfg, args):
    _, _, _, echo, params = _build_model(cfg["model"])
    if params is None:
        raise ConfigError("sweep needs [model] kind = spinmerism")
    s = cfg["sweep"]
    if s["vary"] not in SWEEPABLE:
        raise ConfigError(f"[sweep] vary = {s['vary']!r}; choose from {', '.join(SWEEPABLE)}")
    if s["num"] < 3 or not s["stop"] > s["start"]:
        raise ConfigError("[sweep] needs num >= 3 and stop > start")
    xs = np.linspace(s["start"], s["stop"], s["num"])
    with _executor(args) as ex:
        res = sweep_spinmerism(params, s["vary"], xs, block=s["block"],
                               degeneracy_tol=args.tol_degeneracy, executor=ex)
    pairs = sorted({k for p in res.points for w in p.weights for k in w})
    header = [s["vary"], "state", "energy_cm1"] + [f"w_Fe{_fmt_spin(a)}_L{_fmt_spin(b)}" for a, b in pairs] \
        + ["ct_weight"]
    rows = []
    for p in res.points:
        for k in range(2):
            rows.append([p.value, f"Q{k + 1}", p.energies[k]] +
                        [float(p.weights[k].get(ab, 0.0)) for ab in pairs] + [p.ct_weights[k]])
    doc = {"sweep": {
        "vary": res.vary, "block": res.block,
        "grid_min_gap_cm1": res.min_gap_cm1, "grid_min_gap_at": res.min_gap_at,
        "septet_min_weight": float(np.nanmin([p.septet_weight for p in res.points]))
        if any(np.isfinite(p.septet_weight) for p in res.points) else None,
        "crossing": res.crossing.as_dict() if res.crossing else None,
    }}
    effective = {"model": echo, "sweep": dict(s)}
    return effective, doc, (header, rows)


def _fmt_spin(s: float) -> str:
    from .spinproj import format_spin
    return format_spin(s)


def cmd_heisenberg(cfg, args):
    ints, default_sector, _, echo, _ = _build_model(cfg["model"])
    sector = _sector(cfg, default_sector)
    nroots = cfg["solver"]["nroots"]
    _, spectrum = _solve(ints, sector, nroots, args.tol_degeneracy)
    fit = fit_heisenberg(spectrum, cfg["heisenberg"]["max_energy_cm1"])
    doc = {"spectrum": _spectrum_block(spectrum, args.absolute, args.tol_degeneracy),
           "heisenberg": {"J_cm1": fit.J, "residual_cm1": fit.residual, "convention": "H = -2J S1.S2",
                          "levels": [{"S": s, "energy_cm1": e} for s, e in fit.levels]}}
    effective = {"model": echo, "sector": _sector_echo(sector), "solver": {"nroots": nroots},
                 "heisenberg": dict(cfg["heisenberg"])}
    return effective, doc, (["J_cm1", "residual_cm1"], [[fit.J, fit.residual]])


def cmd_dump_basis(cfg, args):
    s = cfg["sector"]
    spec = SectorSpec(s["norb"], s["nalpha"], s["nbeta"])
    c = cfg["ci"]
    blocks = [c["inactive"], c["active"], c["virtual"]]
    level = CILevel.parse(c["level"])
    if any(b is not None for b in blocks):
        part = OrbitalPartition(*[b or () for b in blocks])
        basis = generate(part, level, spec).basis
    elif level is not CILevel.FCI:
        raise ConfigError("[ci] level other than FCI needs inactive/active/virtual")
    else:
        basis = build_sector_basis(spec)
    rows = [[i, d.alpha, d.beta, d.to_string(spec.norb)] for i, d in enumerate(basis)]
    doc = {"basis": {"dimension": len(basis), "restricted": bool(basis.restricted),
                     "norb": spec.norb, "nalpha": spec.nalpha, "nbeta": spec.nbeta}}
    effective = {"sector": dict(s), "ci": {k: (list(v) if isinstance(v, tuple) else v) for k, v in c.items()}}
    return effective, doc, (["index", "alpha", "beta", "occupation"], rows)


HANDLERS = {
    "spectrum": cmd_spectrum,
    "project": cmd_project,
    "ts-diagram": cmd_ts_diagram,
    "sweep": cmd_sweep,
    "heisenberg": cmd_heisenberg,
    "dump-basis": cmd_dump_basis,
}


# ---------------------------------------------------------------------------

def _classify(exc: BaseException) -> str:
    if isinstance(exc, UsageError):
        return "usage"
    if isinstance(exc, FcidumpError):
        return "parse"
    if isinstance(exc, (ConfigError, ParameterError)):
        return "config"
    if isinstance(exc, (ConvergenceError, SpinLabelError, ProjectorError, TrackingError)):
        return "solver"
    return "internal"


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parser().parse_args(argv)
    except UsageError as exc:
        print(f"spinmerism: error[usage]: {exc}", file=sys.stderr)
        return EXIT_CODES["usage"]
    except SystemExit as exc:          # --help / --version
        return int(exc.code or 0)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                            format="spinmerism: %(message)s")
    try:
        cfg = load_config(args.config, _spec_for(args.command))
        effective, doc, (header, rows) = HANDLERS[args.command](cfg, args)
        out = Path(args.out)
        meta = {"program": "spinmerism", "version": __version__, "command": args.command,
                "config": effective,
                "options": {"absolute": args.absolute, "tol_degeneracy": args.tol_degeneracy},
                "energy_unit": "hartree" if args.absolute else "cm-1 above ground state",
                "timestamp": timestamp()}
        if args.format in ("csv", "both"):
            atomic_write(out / f"{args.command}.csv", csv_text(header, rows))
            log.info("wrote %s", out / f"{args.command}.csv")
        if args.format in ("json", "both"):
            atomic_write(out / f"{args.command}.json", json_text({"metadata": meta, **doc}))
            log.info("wrote %s", out / f"{args.command}.json")
    except Exception as exc:  # noqa: BLE001 - every failure maps to an exit code
        kind = _classify(exc)
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"spinmerism: error[{kind}]: {msg}", file=sys.stderr)
        if args.verbose and kind == "internal":
            log.exception("traceback")
        return EXIT_CODES[kind]
    return EXIT_CODES["ok"]


def main():
    sys.exit(run_command())
