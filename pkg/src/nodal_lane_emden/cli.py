"""Command-line driver: solve, validate, kelvin, sweep, hyperbola, ground-state.

Exit codes: 0 ok, 1 validation failure, 2 usage or input error,
3 non-convergence (artifacts are still written).

Configs are TOML files with an ``[exponents]`` table (N and one of p, q;
rationals as strings such as "12/5"), an optional ``[symmetry]`` table
(omit it for a radial run) and a ``[solve]`` table whose keys are the
remaining SolveConfig fields.  ``[sweep]`` holds ``given`` and ``values``
for the sweep command.  Environment: NLE_OUTPUT_ROOT (default ``runs``)
and NLE_THREADS (default 1).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
import tomli
from threadpoolctl import threadpool_limits

from . import __version__
from .discretize import FieldFormatError, load_field, save_field
from .exponents import Exponents, hyperbola_complete
from .functional import energy
from .inversion import decay_exponent, default_window, inversion_defect, second_component, system_residual
from .kelvin import isometry_defect, kelvin_constant, rational_sweep
from .solver import SolveConfig, SolveResult, continuation_sweep, ground_state_radial, minimize_equivariant
from .symmetry import SymmetrySpec, symmetrize_values

log = logging.getLogger("nodal_lane_emden")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2, 3
METRIC_TOL = 1e-12
IDENTITY_TOL = 1e-12
NEHARI_TOL = 1e-10


class ConfigError(ValueError):
    """Malformed config; the message names the line or the offending field."""


class UsageError(ValueError):
    pass


# ------------------------------------------------------------------ output

def fmt(x) -> str:
    return format(float(x), ".17g")


def _json17(obj, indent: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad, sub = " " * indent, " " * (indent + 2)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else json.dumps(str(x))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{sub}{json.dumps(str(k))}: {_json17(v, indent + 2)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(_json17(v, indent + 2) for v in obj) + "]"
    return json.dumps(str(obj))


def write_json(path: Path, obj) -> Path:
    path.write_text(_json17(obj) + "\n")
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclasses.dataclass
class RunManifest:
    command: str
    config: dict
    version: str
    inputs: list
    outputs: dict          # relative path -> sha256
    wall_time: float
    checks: dict           # check name -> bool

    def write(self, directory: Path) -> Path:
        return write_json(directory / "manifest.json", dataclasses.asdict(self))

    @classmethod
    def read(cls, directory: Path) -> "RunManifest":
        return cls(**json.loads((directory / "manifest.json").read_text()))


# ------------------------------------------------------------------ config

def _number(x, where: str):
    if isinstance(x, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(x, (int, float)):
        return Fraction(x) if isinstance(x, int) else x
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"{where}: cannot read {x!r} as a number") from None
    raise ConfigError(f"{where}: expected a number, got {type(x).__name__}")


def parse_exponents(table: dict, where: str = "[exponents]") -> Exponents:
    unknown = set(table) - {"N", "p", "q"}
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    if "N" not in table or not isinstance(table["N"], int) or isinstance(table["N"], bool):
        raise ConfigError(f"{where}.N: an integer dimension is required")
    given = [k for k in ("p", "q") if k in table]
    if len(given) != 1:
        raise ConfigError(f"{where}: give exactly one of p or q")
    k = given[0]
    try:
        return hyperbola_complete(table["N"], **{k: _number(table[k], f"{where}.{k}")})
    except ValueError as err:
        raise ConfigError(f"{where}: {err}") from None


_SOLVE_FIELDS = {f.name: f for f in dataclasses.fields(SolveConfig)}
_SOLVE_SKIP = ("exponents", "symmetry")


def _coerce(name: str, value):
    default = _SOLVE_FIELDS[name].default
    where = f"[solve].{name}"
    if name == "seeds":
        if not isinstance(value, list) or not all(isinstance(s, str) for s in value):
            raise ConfigError(f"{where}: expected a list of strings")
        return tuple(value)
    if name in ("gauge_radius",):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if name == "init_path":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string path")
        return value
    if isinstance(default, bool) or isinstance(value, bool):
        raise ConfigError(f"{where}: booleans are not accepted here")
    if isinstance(default, int):
        if not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    return value


def config_from_dict(raw: dict) -> SolveConfig:
    unknown = set(raw) - {"exponents", "symmetry", "solve", "sweep"}
    if unknown:
        raise ConfigError(f"unknown table(s) {sorted(unknown)}")
    if "exponents" not in raw:
        raise ConfigError("missing [exponents] table")
    e = parse_exponents(raw["exponents"])
    sym = None
    if "symmetry" in raw:
        t = dict(raw["symmetry"])
        bad = set(t) - {"j", "lambda_kind", "haar_samples"}
        if bad:
            raise ConfigError(f"[symmetry]: unknown field(s) {sorted(bad)}")
        try:
            sym = SymmetrySpec(e.N, int(t.get("j", 1)), t.get("lambda_kind", "auto"),
                               int(t.get("haar_samples", 4)))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"[symmetry]: {err}") from None
    kw = {}
    for name, value in raw.get("solve", {}).items():
        if name not in _SOLVE_FIELDS or name in _SOLVE_SKIP:
            allowed = sorted(set(_SOLVE_FIELDS) - set(_SOLVE_SKIP))
            raise ConfigError(f"[solve].{name}: unknown field (allowed: {', '.join(allowed)})")
        kw[name] = _coerce(name, value)
    try:
        return SolveConfig(e, sym, **kw)
    except ValueError as err:
        raise ConfigError(f"[solve]: {err}") from None


def load_config(path) -> tuple:
    """Return (SolveConfig, raw dict); ConfigError on any problem."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror}") from None
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from None
    try:
        return config_from_dict(raw), raw
    except ConfigError as err:
        raise ConfigError(f"{path}: {err}") from None


def config_snapshot(cfg: SolveConfig) -> dict:
    out = cfg.as_dict()
    out["rho0"] = cfg.rho0
    return out


# ------------------------------------------------------------------ solve

def _out_dir(arg: Optional[str], cfg_path: Path) -> Path:
    root = Path(os.environ.get("NLE_OUTPUT_ROOT", "runs"))
    d = Path(arg) if arg else root / cfg_path.stem
    d.mkdir(parents=True, exist_ok=True)
    return d


def result_metrics(res: SolveResult) -> dict:
    u, v = res.field, res.v
    r1, r2 = system_residual(u, v)
    rep = res.report
    m = {k: val for k, val in res.metrics().items()}
    m["nehari_defect_relative"] = rep.nehari_defect / rep.seminorm_qp if rep.seminorm_qp else 0.0
    m["residual_1"], m["residual_2"] = r1, r2
    m["identity_defect"] = inversion_defect(u, v)
    m["v_sign_change"] = bool(v.values.max() > 0 > v.values.min())
    try:
        win = default_window(u)
        m["decay_slopes"] = [decay_exponent(u, win, absolute=True), decay_exponent(v, win, absolute=True)]
    except ValueError:
        m["decay_slopes"] = None
    return m


def write_result(res: SolveResult, cfg: SolveConfig, out: Path) -> dict:
    """Field dumps, metrics and trace; returns {relative path: sha256}."""
    files = [save_field(res.field, out / "u.lefd"), save_field(res.v, out / "v.lefd")]
    files += [out / "u.lefd.json", out / "v.lefd.json"]
    files.append(write_json(out / "metrics.json", result_metrics(res)))
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "energy"])
        for k, J in enumerate(res.trace, 1):
            w.writerow([k, fmt(J)])
    files.append(out / "trace.csv")
    files.append(write_json(out / "config.json", config_snapshot(cfg)))
    return {p.name: sha256(p) for p in files}


def _run_solve(args, radial: bool) -> int:
    cfg_path = Path(args.config)
    cfg, _ = load_config(cfg_path)
    out = _out_dir(args.out, cfg_path)
    t0 = time.perf_counter()
    if radial or cfg.symmetry is None:
        res = ground_state_radial(cfg)
    else:
        res = minimize_equivariant(cfg)
    hashes = write_result(res, cfg, out)
    m = json.loads((out / "metrics.json").read_text())
    checks = {"converged": res.converged,
              "nehari": abs(m["nehari_defect_relative"]) <= NEHARI_TOL,
              "identity": m["identity_defect"] <= IDENTITY_TOL}
    if cfg.symmetry is not None and not radial:
        checks["sign_change"] = res.sign_change and m["v_sign_change"]
    RunManifest("ground-state" if radial else "solve", config_snapshot(cfg), __version__,
                [str(cfg_path)], hashes, time.perf_counter() - t0, checks).write(out)
    print(f"energy      {fmt(res.energy)}")
    print(f"converged   {res.converged} ({res.message})")
    print(f"iterations  {res.iterations} descent + {res.newton_steps} Newton")
    print(f"residual_1  {fmt(m['residual_1'])}")
    print(f"sign_change {res.sign_change}")
    print(f"output      {out}")
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_solve(args) -> int:
    return _run_solve(args, radial=False)


def cmd_ground_state(args) -> int:
    return _run_solve(args, radial=True)


# ------------------------------------------------------------------ validate

def _rel(a, b) -> float:
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def validate_dir(directory) -> dict:
    """Re-run the invariant ledger on a solve directory.

    Returns {check: (passed, detail)}.  Raises UsageError when the
    directory is not a solve output.
    """
    d = Path(directory)
    if not (d / "manifest.json").exists():
        raise UsageError(f"{d}: no manifest.json")
    man = RunManifest.read(d)
    out = {}
    bad = [name for name, h in man.outputs.items() if not (d / name).exists() or sha256(d / name) != h]
    out["hashes"] = (not bad, "mismatch: " + ", ".join(bad) if bad else f"{len(man.outputs)} files")
    try:
        u, v = load_field(d / "u.lefd"), load_field(d / "v.lefd")
        stored = json.loads((d / "metrics.json").read_text())
    except (OSError, FieldFormatError, json.JSONDecodeError, KeyError, ValueError) as err:
        out["load"] = (False, str(err))
        return out
    rep = energy(u)
    worst = max(_rel(getattr(rep, k), stored[k]) for k in
                ("seminorm_qp", "lp_norm_p", "energy", "nehari_defect", "quotient"))
    out["energy_reproduced"] = (worst <= METRIC_TOL, f"max rel diff {worst:.2e}")
    ndef = abs(rep.nehari_defect) / rep.seminorm_qp if rep.seminorm_qp else 0.0
    out["nehari"] = (ndef <= NEHARI_TOL, f"relative defect {ndef:.2e}")
    if u.symmetry is not None and u.symmetry.j >= 1:
        vals = u.values
        gap = float(np.abs(symmetrize_values(vals, u.grid, u.symmetry) - vals).max())
        scale = float(np.abs(vals).max()) or 1.0
        out["equivariance"] = (gap <= 1e-12 * scale, f"max |Pu - u| / |u| = {gap / scale:.2e}")
    r1, r2 = system_residual(u, v)
    worst = max(_rel(r1, stored["residual_1"]), _rel(r2, stored["residual_2"]))
    out["system_residuals"] = (worst <= METRIC_TOL, f"residual_1 {r1:.3e}, residual_2 {r2:.3e}")
    idef = inversion_defect(u, second_component(u))
    sdef = inversion_defect(u, v)
    out["inversion_identity"] = (max(idef, sdef) <= IDENTITY_TOL,
                                 f"pointwise {idef:.2e}, stored v {sdef:.2e}")
    return out


def cmd_validate(args) -> int:
    checks = validate_dir(args.directory)
    for name, (ok, detail) in checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name:20s} {detail}")
    return EXIT_OK if all(ok for ok, _ in checks.values()) else EXIT_FAIL


# ------------------------------------------------------------------ kelvin

def _given(args) -> dict:
    if (args.p is None) == (args.q is None):
        raise UsageError("give exactly one of --p or --q")
    k = "p" if args.p is not None else "q"
    return {k: _number(getattr(args, k), f"--{k}")}


def cmd_kelvin(args) -> int:
    if args.sweep:
        rows = []
        for e in rational_sweep(args.N, args.count):
            rep = kelvin_constant(e)
            rows.append((e, rep))
        print(f"{'q':>12} {'p':>12} {'C':>26} zero")
        for e, rep in rows:
            print(f"{str(e.q):>12} {str(e.p):>12} {fmt(rep.constant_C):>26} {rep.is_zero}")
        print(f"zero rows: {sum(rep.is_zero for _, rep in rows)} of {len(rows)}")
        return EXIT_OK
    try:
        e = hyperbola_complete(args.N, **_given(args))
    except (ValueError, ConfigError) as err:
        raise UsageError(str(err)) from None
    rep = kelvin_constant(e)
    rep.isometry_defect = isometry_defect(e, args.resolution)
    if args.json:
        print(_json17(dataclasses.asdict(rep)))
    else:
        print(f"N={e.N} p={e.p} q={e.q}")
        for k in ("alpha", "A", "B", "constant_C", "isometry_defect"):
            print(f"{k:16s} {fmt(getattr(rep, k))}")
        print(f"{'is_zero':16s} {rep.is_zero}")
    return EXIT_OK


# ------------------------------------------------------------------ sweep

def sweep_values(raw: dict) -> tuple:
    t = raw.get("sweep")
    if t is None:
        raise ConfigError("missing [sweep] table")
    given = t.get("given", "q")
    if given not in ("p", "q"):
        raise ConfigError("[sweep].given must be 'p' or 'q'")
    values = t.get("values")
    if not isinstance(values, list) or not values:
        raise ConfigError("[sweep].values must be a non-empty list")
    out = []
    for k, x in enumerate(values):
        val = _number(x, f"[sweep].values[{k}]")
        if val in out:
            log.warning("duplicate sweep value %s dropped", x)
            continue
        out.append(val)
    return given, out


def cmd_sweep(args) -> int:
    cfg_path = Path(args.config)
    cfg, raw = load_config(cfg_path)
    given, values = sweep_values(raw)
    out = _out_dir(args.out, cfg_path)
    t0 = time.perf_counter()
    entries = continuation_sweep(cfg, values, given=given)
    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "p", "q", "energy", "residual", "system_merit", "converged", "error"])
        for val, ent in zip(values, entries):
            res = ent.result
            e = ent.exponents
            w.writerow([cfg.exponents.N, e.p if e else "", e.q if e else val,
                        fmt(res.energy) if res else "", fmt(res.residual) if res else "",
                        fmt(res.system_merit) if res else "", ent.converged, ent.error or ""])
    RunManifest("sweep", {**config_snapshot(cfg), "sweep": {"given": given, "values": [str(v) for v in values]}},
                __version__, [str(cfg_path)], {path.name: sha256(path)}, time.perf_counter() - t0,
                {"any_converged": any(e.converged for e in entries)}).write(out)
    print(path.read_text(), end="")
    return EXIT_OK if any(e.converged for e in entries) else EXIT_NONCONVERGED


# ------------------------------------------------------------------ hyperbola

def cmd_hyperbola(args) -> int:
    try:
        e = hyperbola_complete(args.N, **_given(args))
    except (ValueError, ConfigError) as err:
        raise UsageError(str(err)) from None
    for k in ("p", "q", "qp", "pp"):
        x = getattr(e, k)
        exact = f"  ({x})" if isinstance(x, Fraction) else ""
        print(f"{k:3s} {fmt(x)}{exact}")
    return EXIT_OK


# ------------------------------------------------------------------ entry

def _thread_limit():
    """BLAS/OpenMP pool size from NLE_THREADS; 1 keeps runs bitwise reproducible."""
    return threadpool_limits(limits=int(os.environ.get("NLE_THREADS", "1")))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nodal-lane-emden", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (("solve", cmd_solve, "equivariant least-energy solve"),
                               ("ground-state", cmd_ground_state, "radial ground state")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("config")
        s.add_argument("--out", help="result directory (default $NLE_OUTPUT_ROOT/<config stem>)")
        s.set_defaults(func=fn)

    s = sub.add_parser("validate", help="re-check a solve directory")
    s.add_argument("directory")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("kelvin", help="Kelvin constant and isometry defect")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--p")
    s.add_argument("--q")
    s.add_argument("--resolution", type=int, default=512)
    s.add_argument("--sweep", action="store_true", help="zero-locus table over a rational q-range")
    s.add_argument("--count", type=int, default=50)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_kelvin)

    s = sub.add_parser("sweep", help="continuation along the hyperbola")
    s.add_argument("config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("hyperbola", help="complete an exponent pair")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--p")
    s.add_argument("--q")
    s.set_defaults(func=cmd_hyperbola)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            return args.func(args)
    except (ConfigError, UsageError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
