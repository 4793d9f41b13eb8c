"""Command-line interface.

Commands::

    sptmbqc build      build a resource tensor and write it as JSON
    sptmbqc calibrate  nu matrix (CSV) plus operational cross-check (JSON)
    sptmbqc gate       compile and run a logical rotation
    sptmbqc closure    reachable gate algebra of a group / cocycle / character set
    sptmbqc scan       logical error over a grid of (N, m), as CSV

A JSON config file may be given with ``--config`` or the ``SPTMBQC_CONFIG``
environment variable; command-line flags override it.  Exit codes: 0 on
success, 2 for invalid input, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import cohomology as coh
from . import lie, mbqc, mps, serialize
from .errors import NumericalFailure, SchemaError, SPTError, ValidationError
from .linalg import CLOSURE_TOL, Channel

ENV_CONFIG = "SPTMBQC_CONFIG"
NU_COLUMNS = ("i", "j", "re", "im", "modulus", "phase", "dead")


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    """Declarative run description.

    ``cocycle`` is ``"standard"``, ``"weyl"``, ``"trivial"`` or
    ``{"numerators": [[...]], "denominator": n}``.  ``characters`` is
    ``"all"`` or a list of exponent lists.
    """

    preset: str | None = None
    group: list[int] | None = None
    cocycle: Any = "standard"
    characters: Any = "all"
    kappa: int = 1
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    TOLERANCE_KEYS = ("closure",)
    OUTPUT_KEYS = ("tensor", "json", "csv", "program")

    def __post_init__(self):
        unknown = set(self.tolerances) - set(self.TOLERANCE_KEYS)
        unknown |= {f"outputs.{k}" for k in set(self.outputs) - set(self.OUTPUT_KEYS)}
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        if self.kappa < 1:
            raise ValidationError("kappa must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        if "schema" in doc:
            serialize.check_schema(doc, "config")
            doc.pop("schema")
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return {"schema": serialize.schema_tag("config"), **asdict(self)}

    @property
    def closure_tol(self) -> float:
        return float(self.tolerances.get("closure", CLOSURE_TOL))


def load_config(path: str | None) -> RunConfig:
    path = path or os.environ.get(ENV_CONFIG)
    if not path:
        return RunConfig()
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read config {path}: {e}") from None
    return RunConfig.from_dict(doc)


# ---------------------------------------------------------------- parsing helpers


def parse_angle(s: str) -> float:
    """Float or a multiple of pi: ``pi``, ``-pi/4``, ``0.5*pi``, ``3pi/2``."""
    s = s.strip().replace(" ", "")
    try:
        return float(s)
    except ValueError:
        pass
    m = re.fullmatch(r"([+-]?\d*\.?\d*)\*?pi(?:/(\d+\.?\d*))?", s)
    if not m:
        raise ValidationError(f"cannot parse angle {s!r}")
    coef = m.group(1)
    c = -1.0 if coef == "-" else 1.0 if coef in ("", "+") else float(coef)
    return c * math.pi / (float(m.group(2)) if m.group(2) else 1.0)


def parse_ints(s: str) -> list[int]:
    """Comma list of integers and inclusive ranges ``a:b`` or ``a:b:step``."""
    out: list[int] = []
    for part in filter(None, (p.strip() for p in s.split(","))):
        try:
            if ":" in part:
                bits = [int(x) for x in part.split(":")]
                a, b, step = (bits + [1])[:3]
                out.extend(range(a, b + 1, step))
            else:
                out.append(int(part))
        except ValueError:
            raise ValidationError(f"cannot parse integer list item {part!r}") from None
    return out


def parse_characters(s: str) -> Any:
    """``all`` or semicolon-separated exponent tuples, e.g. ``1,0;1,1``."""
    if s.strip() == "all":
        return "all"
    return [[int(x) for x in item.split(",")] for item in s.split(";") if item.strip()]


# ---------------------------------------------------------------- builders


def _group(cfg: RunConfig) -> coh.FiniteAbelianGroup:
    if not cfg.group:
        raise ValidationError("no group given (use --group or --preset)")
    return coh.FiniteAbelianGroup(tuple(int(q) for q in cfg.group))


def _cocycle(cfg: RunConfig, group: coh.FiniteAbelianGroup) -> coh.Cocycle:
    spec = cfg.cocycle
    if spec in ("standard", "weyl"):
        return coh.standard_cocycle(group)
    if spec == "trivial":
        return coh.trivial_cocycle(group)
    if isinstance(spec, dict):
        try:
            return coh.Cocycle(group, np.array(spec["numerators"]), int(spec["denominator"]))
        except KeyError as e:
            raise SchemaError(f"explicit cocycle needs {e}") from None
    raise ValidationError(f"unknown cocycle spec {spec!r}")


def _characters(cfg: RunConfig, group: coh.FiniteAbelianGroup) -> list[coh.Character] | None:
    if cfg.characters == "all":
        return None
    return [coh.Character(group, tuple(c)) for c in cfg.characters]


def build_tensor(cfg: RunConfig) -> mps.MPSTensor:
    if cfg.preset:
        if cfg.preset == "aklt":
            return mps.haldane_tensor(cfg.kappa, cfg.seed)
        m = re.fullmatch(r"weyl-(\d+)", cfg.preset)
        if not m:
            raise ValidationError(f"unknown preset {cfg.preset!r} (use aklt or weyl-D)")
        d = int(m.group(1))
        g = coh.FiniteAbelianGroup((d, d))
        return mps.symmetric_tensor(g, coh.weyl_cocycle(d), None, cfg.kappa, cfg.seed)
    g = _group(cfg)
    omega = _cocycle(cfg, g)
    if not coh.is_maximally_noncommutative(g, omega):
        raise coh.NotMNC("cocycle is not maximally non-commutative")
    return mps.symmetric_tensor(g, omega, _characters(cfg, g), cfg.kappa, cfg.seed)


# ---------------------------------------------------------------- output


def _emit(text: str, path: str | None, out) -> None:
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        out.write(text if text.endswith("\n") else text + "\n")


_NOT_HASHED = ("func", "config", "out", "json", "csv", "program", "tensor")


def _cfg_for_hash(cfg: RunConfig, args: argparse.Namespace) -> dict:
    # the hash identifies the computation, not where its results are written
    extra = {k: v for k, v in vars(args).items() if k not in _NOT_HASHED}
    if getattr(args, "tensor", None):
        with open(args.tensor, "rb") as f:
            extra["tensor_sha256"] = hashlib.sha256(f.read()).hexdigest()
    doc = cfg.to_dict()
    doc["outputs"] = {}
    return {"config": doc, "args": extra}


# ---------------------------------------------------------------- commands


def cmd_build(args, cfg: RunConfig, out) -> int:
    t = build_tensor(cfg)
    path = args.out or cfg.outputs.get("tensor") or "tensor.json"
    serialize.dump_tensor(t, path)
    viol = mps.symmetry_check(t) if t.characters is not None else float("nan")
    fp = mps.fixed_point_data(Channel(list(t.junk)))
    eig = ", ".join(f"{complex(e):.4g}" for e in fp.eigenvalues[:4])
    out.write(f"wrote {path}: d={t.phys_dim}, D={t.logical_dim}, kappa={t.junk_dim}\n")
    out.write(f"symmetry violation: {viol:.3e}\n")
    out.write(f"junk transfer spectrum: [{eig}]  lambda1={fp.lambda1:.6g}  xi={fp.xi:.6g}\n")
    return 0


def _load(path: str) -> mps.MPSTensor:
    try:
        return serialize.load_tensor(path)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read tensor {path}: {e}") from None


def nu_csv(t: mps.MPSTensor, nu: mbqc.NuMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(NU_COLUMNS)
    for i in range(t.phys_dim):
        for j in range(t.phys_dim):
            v = nu.nu[i, j]
            w.writerow([t.label(i), t.label(j), repr(float(v.real)), repr(float(v.imag)),
                        repr(float(abs(v))), repr(float(np.angle(v))), int(nu.dead[i, j])])
    return buf.getvalue()


def cmd_calibrate(args, cfg: RunConfig, out) -> int:
    t = _load(args.tensor)
    nu = mbqc.calibrate_nu(t)
    herm = float(np.linalg.norm(nu.nu - nu.nu.conj().T))
    rows = []
    for i in range(t.phys_dim):
        for j in range(i + 1, t.phys_dim):
            if nu.dead[i, j]:
                rows.append({"pair": [t.label(i), t.label(j)], "dead": True})
                continue
            if args.no_operational:
                continue
            est = mbqc.operational_nu(t, i, j)
            spec = nu.ratio(i, j)
            rows.append({"pair": [t.label(i), t.label(j)], "dead": False, "spectral_ratio": spec,
                         "operational_ratio": est.ratio, "relative_difference": abs(est.ratio - spec) / spec,
                         "spectral_phase": float(nu.phases[i, j]), "operational_phase": est.phase})
    _emit(nu_csv(t, nu), args.csv or cfg.outputs.get("csv"), out)
    body = {"nu": serialize.encode_complex(nu.nu), "nu_total": nu.total, "hermiticity_defect": herm,
            "dead": [[t.label(i), t.label(j)] for i, j in zip(*np.nonzero(nu.dead))], "pairs": rows}
    doc = serialize.report("calibrate", body, _cfg_for_hash(cfg, args))
    jpath = args.json or cfg.outputs.get("json")
    if jpath:
        _emit(json.dumps(doc, indent=2), jpath, out)
    for r in rows:
        if r.get("dead"):
            out.write(f"# nu_{r['pair'][0]}{r['pair'][1]}: DEAD (|nu| < {mps.NU_FLOOR:g})\n")
        else:
            out.write(f"# nu_{r['pair'][0]}{r['pair'][1]}: spectral {r['spectral_ratio']:.6g}, "
                      f"operational {r['operational_ratio']:.6g}, rel. diff {r['relative_difference']:.2e}\n")
    return 0


def _logical_input(t: mps.MPSTensor, name: str) -> np.ndarray:
    d = t.logical_dim
    v = np.zeros(d, dtype=complex)
    if name == "plus":
        v[:2] = 1
    elif name == "zero":
        v[0] = 1
    elif name == "uniform":
        v[:] = 1
    else:
        raise ValidationError(f"unknown input state {name!r} (plus, zero, uniform)")
    return v / np.linalg.norm(v)


def _wires(t: mps.MPSTensor, args) -> tuple:
    return (args.i if args.i is not None else 0), (args.j if args.j is not None else 1)


def cmd_gate(args, cfg: RunConfig, out) -> int:
    t = _load(args.tensor)
    nu = mbqc.calibrate_nu(t)
    theta, phi = parse_angle(args.theta), parse_angle(args.phi)
    p = mbqc.compile_rotation(t, nu, *_wires(t, args), phi, theta, args.eps)
    psi = _logical_input(t, args.input)
    res = mbqc.run_program(p, psi, t)
    err = mbqc.logical_error(t, p, res, psi)
    ppath = args.program or cfg.outputs.get("program")
    if ppath:
        _emit(json.dumps(serialize.program_to_dict(p)), ppath, out)
    body = {"pair": [t.label(k) for k in p.pair], "theta": theta, "phi": phi, "epsilon": args.eps,
            "N": p.N, "m": p.m, "cost": p.cost, "dtheta": p.dtheta, "physical_angle": p.physical_angle,
            "error": err, "input": args.input}
    doc = serialize.report("gate", body, _cfg_for_hash(cfg, args))
    jpath = args.json or cfg.outputs.get("json")
    if jpath:
        _emit(json.dumps(doc, indent=2), jpath, out)
    out.write(f"N={p.N} m={p.m} cost N(m+1)={p.cost} physical angle={p.physical_angle:.6g}\n")
    out.write(f"logical error (trace distance) = {err:.6g}\n")
    return 0


def cmd_closure(args, cfg: RunConfig, out) -> int:
    tol = cfg.closure_tol
    if args.triple is not None:
        d = int(cfg.group[0]) if cfg.group else None
        if d is None:
            raise ValidationError("--triple needs --group D,D")
        gs = lie.canonical_triple(d, args.triple)
        complete, g = lie.fill_grid(lie.grid_init(gs, args.triple), strategy=args.strategy)
        ops = coh.weyl_ops([(0, 0), (1, 0), (0, args.triple)], d)
        c = lie.brute_force_closure(ops, [0, 1, 2], tol)
        if complete != c.contains_su_D:
            raise lie.InconsistentVerdict(f"grid complete={complete} but oracle dim {c.dim}")
        body = {"D": d, "r": args.triple, "grid_complete": complete, "oracle_dim": c.dim,
                "milestones": [[n, sorted(map(list, pts))] for n, pts in g.milestones],
                "move_log": [[mv.kind, list(mv.at), [list(q) for q in mv.marked], mv.hermitian] for mv in g.move_log],
                "grid_art": g.render()}
        doc = serialize.report("closure", body, _cfg_for_hash(cfg, args))
        if args.json or cfg.outputs.get("json"):
            _emit(json.dumps(doc, indent=2), args.json or cfg.outputs.get("json"), out)
        mark = lambda ok: "✓" if ok else "✗"  # noqa: E731
        out.write(f"D={d} r={args.triple}: su({d}) grid {mark(complete)} oracle {mark(c.contains_su_D)} "
                  f"(dim {c.dim})\n")
        for name, pts in g.milestones:
            out.write(f"  {name}: {len(pts)} marked\n")
        out.write(g.render() + "\n")
        return 0
    grp = _group(cfg)
    omega = _cocycle(cfg, grp)
    chars = _characters(cfg, grp)
    rep = lie.reachability_report(grp, omega, chars, args.block, args.strategy, tol)
    jpath = args.json or cfg.outputs.get("json")
    if jpath:
        doc = serialize.report("closure", rep.as_dict(), _cfg_for_hash(cfg, args))
        _emit(json.dumps(doc, indent=2, default=lie._json_default), jpath, out)
    out.write(rep.text() + "\n")
    return 0


def cmd_scan(args, cfg: RunConfig, out) -> int:
    ns, ms = parse_ints(args.N), parse_ints(args.m)
    if not ns or not ms:
        raise ValidationError("empty N or m range")
    t = _load(args.tensor)
    theta, phi = parse_angle(args.theta), parse_angle(args.phi)
    psi = _logical_input(t, args.input)
    rows = mbqc.error_scan(t, *_wires(t, args), theta, ns, ms, phi=phi, sigma0=psi)
    text = mbqc.scan_csv(rows)
    if len(ns) > 1 and len(ms) == 1:
        text += f"# loglog slope of error vs N: {mbqc.loglog_slope(rows):.4f}\n"
    if len(ms) > 1 and len(ns) == 1:
        fp = mps.fixed_point_data(Channel(list(t.junk)))
        rate = mbqc.excess_decay_rate(rows)
        if fp.lambda1 > 0 and rate is not None:
            text += f"# decay rate of error above floor: {rate:.4f} (ln|lambda1| = {math.log(fp.lambda1):.4f})\n"
    _emit(text, args.csv or cfg.outputs.get("csv"), out)
    return 0


# ---------------------------------------------------------------- entry point


def _merge(cfg: RunConfig, args) -> RunConfig:
    d = asdict(cfg)
    for key in ("preset", "kappa", "seed"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = v
    if getattr(args, "group", None):
        d["group"] = parse_ints(args.group)
    if getattr(args, "cocycle", None):
        d["cocycle"] = args.cocycle
    if getattr(args, "characters", None):
        d["characters"] = parse_characters(args.characters)
    if getattr(args, "tol", None) is not None:
        d["tolerances"] = {**d["tolerances"], "closure": args.tol}
    return RunConfig(**d)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sptmbqc", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--config", help=f"JSON run config (default: ${ENV_CONFIG})")
    sub = ap.add_subparsers(dest="command", required=True)

    def sym(p):
        p.add_argument("--group", help="factor orders, e.g. 2,2 or 2,2,3,3")
        p.add_argument("--cocycle", help="standard | weyl | trivial")
        p.add_argument("--characters", help="'all' or exponent tuples like '1,0;1,1;0,1'")

    b = sub.add_parser("build", help="build a resource tensor")
    b.add_argument("--preset", help="aklt or weyl-D")
    sym(b)
    b.add_argument("--kappa", type=int, help="junk dimension")
    b.add_argument("--seed", type=int, help="seed for generic junk")
    b.add_argument("--out", help="tensor JSON path (default tensor.json)")
    b.set_defaults(func=cmd_build)

    c = sub.add_parser("calibrate", help="nu matrix as CSV, columns: " + ",".join(NU_COLUMNS))
    c.add_argument("tensor")
    c.add_argument("--csv")
    c.add_argument("--json")
    c.add_argument("--no-operational", action="store_true", help="skip the operational estimator")
    c.set_defaults(func=cmd_calibrate)

    def rot(p):
        p.add_argument("--i", help="first wire label or index (default: wire 0, x for aklt)")
        p.add_argument("--j", help="second wire label or index (default: wire 1, y for aklt)")
        p.add_argument("--phi", default="pi", help="generator phase (default pi)")
        p.add_argument("--theta", default="pi/2", help="rotation angle (default pi/2)")
        p.add_argument("--input", default="plus", help="logical input: plus | zero | uniform")

    g = sub.add_parser("gate", help="compile and run a logical rotation")
    g.add_argument("tensor")
    rot(g)
    g.add_argument("--eps", type=float, default=1e-2)
    g.add_argument("--program", help="write the program JSON here")
    g.add_argument("--json")
    g.set_defaults(func=cmd_gate)

    cl = sub.add_parser("closure", help="reachable gate algebra")
    sym(cl)
    cl.add_argument("--block", type=int, default=1, help="blocking length b")
    cl.add_argument("--triple", type=int, help="use the canonical triple with this r on Z_D x Z_D")
    cl.add_argument("--strategy", default="saturate", choices=lie.STRATEGIES + tuple(lie.STRATEGY_ALIASES),
                    help="saturate (default) or the rowcol row/column schedule")
    cl.add_argument("--tol", type=float)
    cl.add_argument("--json")
    cl.set_defaults(func=cmd_closure)

    s = sub.add_parser("scan", help="error over (N, m); CSV columns: " + ",".join(mbqc.SCAN_COLUMNS))
    s.add_argument("tensor")
    rot(s)
    s.add_argument("--N", required=True, help="e.g. 50,100,200 or 10:100:10")
    s.add_argument("--m", default="0", help="pump lengths, e.g. 0 or 2:30")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_scan)
    return ap


def main(argv: Sequence[str] | None = None, out=None) -> int:
    """Run the CLI; returns the exit code."""
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = _merge(load_config(args.config), args)
        return args.func(args, cfg, out)
    except NumericalFailure as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except (SPTError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
