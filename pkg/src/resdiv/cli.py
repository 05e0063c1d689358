"""Command line front end: problem files in, reports out.

One subcommand per driver, batch only.  The problem file is JSON against the
schema shipped at resdiv/schema/problem.schema.json; command line flags
override the corresponding sections.  Reports are JSON (sorted keys, so a
fixed input, seed and thread count reproduce the output byte for byte) or
CSV with one row per z point / test / table entry.

Exit codes: 0 success, 1 contract violation (a machine-readable error object
naming the offending JSON pointer goes to stderr), 2 inconclusive membership
verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources

import numpy as np
import jsonschema

from .conventions import CONVENTION_VERSION
from .cpoly import MixedPoly
from .currents import HoloMatrix, default_residue_rule, grothendieck_residue
from .divider import (
    ProblemError, ProblemSpec, _c2, _calibration, hefer_via_szego,
    interpolate, membership_test, reproduce, smooth_obstruction, solve,
)
from .hefer import get_family

COMMANDS = ("reproduce", "hefer-check", "divide", "residue", "member",
            "interpolate", "obstruction")


def _schema() -> dict:
    with resources.files("resdiv").joinpath("schema/problem.schema.json").open() as fh:
        return json.load(fh)


def _validate_schema(obj) -> None:
    validator = jsonschema.Draft7Validator(_schema())
    errors = sorted(validator.iter_errors(obj),
                    key=lambda e: ([str(p) for p in e.absolute_path], e.message))
    if errors:
        e = errors[0]
        pointer = "/" + "/".join(str(p) for p in e.absolute_path)
        raise ProblemError(pointer if pointer != "/" else "/", e.message)


def _require(obj: dict, key: str):
    if key not in obj:
        raise ProblemError("/%s" % key, "missing")
    return obj[key]


def _parse_f(obj: dict) -> HoloMatrix:
    fobj = _require(obj, "f")
    try:
        if isinstance(fobj, dict):
            return HoloMatrix.from_obj(fobj)
        return HoloMatrix([[MixedPoly.from_obj(t) for t in row] for row in fobj])
    except ProblemError:
        raise
    except Exception as e:
        raise ProblemError("/f", str(e)) from None


def _parse_phis(obj: dict) -> list[MixedPoly]:
    out = []
    for i, pobj in enumerate(_require(obj, "phi")):
        try:
            out.append(MixedPoly.from_obj(pobj))
        except Exception as e:
            raise ProblemError("/phi/%d" % i, str(e)) from None
    if not out:
        raise ProblemError("/phi", "empty")
    return out


def _parse_points(obj: dict, key: str = "z_points", required: bool = True) -> np.ndarray:
    rows = obj.get(key)
    if rows is None:
        if required:
            raise ProblemError("/%s" % key, "missing")
        rows = []
    pts = []
    for i, row in enumerate(rows):
        try:
            pts.append([complex(c[0], c[1]) for c in row])
        except Exception:
            raise ProblemError("/%s/%d" % (key, i),
                               "points are lists of [re, im] pairs") from None
    return np.asarray(pts, dtype=complex) if pts else np.zeros((0, 0), dtype=complex)


def _apply_overrides(obj: dict, args: argparse.Namespace) -> dict:
    pairs = [("radial", "quadrature"), ("angular", "quadrature"),
             ("rho0", "weight"), ("rho1", "weight"),
             ("eps_base", "eps"), ("eps_count", "eps")]
    for flag, section in pairs:
        val = getattr(args, flag)
        if val is None:
            continue
        sub = obj.setdefault(section, {})
        sub[flag.replace("eps_", "")] = val
    if args.seed is not None:
        obj["seed"] = args.seed
    return obj


# ---- per-command drivers ------------------------------------------------------


def _cmd_reproduce(obj: dict, args) -> tuple[dict, list[dict], int]:
    phis = _parse_phis(obj)
    if len(phis) != 1:
        raise ProblemError("/phi", "reproduce takes a single polynomial")
    phi = phis[0]
    z = _parse_points(obj)
    if z.size and z.shape[-1] != phi.dim:
        raise ProblemError("/z_points", "points have dimension %d, expected %d"
                           % (z.shape[-1], phi.dim))
    w = obj.get("weight", {})
    q = obj.get("quadrature", {})
    rho0, rho1 = float(w.get("rho0", 1.1)), float(w.get("rho1", 1.4))
    radial, angular = int(q.get("radial", 24)), int(q.get("angular", 48))
    vals = reproduce(phi, z, rho0=rho0, rho1=rho1, radial=radial, angular=angular)
    rows = []
    for pt, val in zip(np.atleast_2d(z), vals):
        expected = complex(phi.eval(np.asarray(pt)))
        rows.append({"z": [_c2(c) for c in pt], "value": _c2(val),
                     "expected": _c2(expected),
                     "residual": abs(complex(val) - expected)})
    report = {
        "convention": CONVENTION_VERSION,
        "calibration": _calibration(phi.dim),
        "command": "reproduce",
        "weight": {"rho0": rho0, "rho1": rho1},
        "quadrature": {"radial": radial, "angular": angular},
        "rows": rows,
        "max_residual": max((r["residual"] for r in rows), default=0.0),
    }
    return report, rows, 0


def _cmd_hefer_check(obj: dict, args) -> tuple[dict, list[dict], int]:
    hm = _parse_f(obj)
    fam = get_family(hm.rows, hm.n)
    fam_res = fam.verify()
    rows = []
    worst = fam_res
    if "pairs" in obj:
        phis = _parse_phis(obj)
        if len(phis) != 1:
            raise ProblemError("/phi", "hefer-check pairs take a single polynomial")
        q = obj.get("quadrature", {})
        radial, angular = int(q.get("radial", 32)), int(q.get("angular", 48))
        for i, pair in enumerate(obj["pairs"]):
            try:
                w = [complex(c[0], c[1]) for c in pair["w"]]
                z = [complex(c[0], c[1]) for c in pair["z"]]
            except Exception:
                raise ProblemError("/pairs/%d" % i, "needs w and z points") from None
            out = hefer_via_szego(phis[0], w, z, radial=radial, angular=angular)
            rows.append({"w": [_c2(c) for c in w], "z": [_c2(c) for c in z],
                         "p": [_c2(c) for c in out["p"]],
                         "lhs": _c2(out["lhs"]), "rhs": _c2(out["rhs"]),
                         "residual": float(out["residual"])})
            worst = max(worst, float(out["residual"]))
    report = {
        "convention": CONVENTION_VERSION,
        "calibration": _calibration(hm.n),
        "command": "hefer-check",
        "family_residual": float(fam_res),
        "rows": rows,
        "max_residual": float(worst),
    }
    return report, rows, 0


def _cmd_divide(obj: dict, args) -> tuple[dict, list[dict], int]:
    spec = ProblemSpec.from_obj(obj)
    rep = solve(spec, threads=args.threads)
    robj = rep.to_obj()
    robj["command"] = "divide"
    return robj, robj["rows"], 0


def _cmd_interpolate(obj: dict, args) -> tuple[dict, list[dict], int]:
    spec = ProblemSpec.from_obj(obj)
    errs = spec.validate()
    if errs:
        raise errs[0]
    rep = interpolate(spec.f, spec.phi, spec.z_points, family=spec.family,
                      weight=spec.weight, quad=spec.quad, eps=spec.eps,
                      seed=spec.seed, threads=args.threads)
    robj = rep.to_obj()
    robj["command"] = "interpolate"
    return robj, robj["rows"], 0


def _residue_rule_from(obj: dict, n: int):
    q = obj.get("quadrature", {})
    kw = {}
    for name, conv in (("radial", int), ("angular", int),
                       ("npanels", int), ("ratio", float)):
        if name in q:
            kw[name] = conv(q[name])
    return default_residue_rule(n, **kw) if kw else None


def _cmd_residue(obj: dict, args) -> tuple[dict, list[dict], int]:
    hm = _parse_f(obj)
    if hm.r != 1:
        raise ProblemError("/f", "residue expects a single row")
    row = hm.rows[0]
    if hm.m != hm.n:
        raise ProblemError("/f", "point residue needs m = n, got m=%d n=%d"
                           % (hm.m, hm.n))
    phis = _parse_phis(obj)
    if len(phis) != 1:
        raise ProblemError("/phi", "residue takes a single polynomial")
    family = str(obj.get("family", "hs"))
    rule = _residue_rule_from(obj, hm.n)
    value, err, per_eps = grothendieck_residue(row, phis[0], rule=rule, family=family)
    rows = [{"value": _c2(value), "err": float(err),
             "per_eps": [_c2(v) for v in per_eps]}]
    report = {
        "convention": CONVENTION_VERSION,
        "calibration": _calibration(hm.n),
        "command": "residue",
        "family": family,
        "rows": rows,
    }
    return report, rows, 0


def _cmd_member(obj: dict, args) -> tuple[dict, list[dict], int]:
    hm = _parse_f(obj)
    phis = _parse_phis(obj)
    if len(phis) != hm.r:
        raise ProblemError("/phi", "need r = %d components, got %d" % (hm.r, len(phis)))
    rep = membership_test(
        hm, phis[0] if hm.r == 1 else phis,
        battery=int(obj.get("battery", 8)),
        theta=float(obj.get("theta", 0.05)),
        degree=int(obj.get("degree", 2)),
        seed=int(obj.get("seed", 0)),
        rule=_residue_rule_from(obj, hm.n),
        family=str(obj.get("family", "hs")),
    )
    robj = rep.to_obj()
    robj["calibration"] = _calibration(hm.n)
    robj["command"] = "member"
    return robj, robj["rows"], 2 if rep.verdict == "inconclusive" else 0


def _cmd_obstruction(obj: dict, args) -> tuple[dict, list[dict], int]:
    hm = _parse_f(obj)
    phis = _parse_phis(obj)
    if len(phis) != hm.r:
        raise ProblemError("/phi", "need r = %d components, got %d" % (hm.r, len(phis)))
    alphas = obj.get("alphas")
    if alphas is not None:
        alphas = [tuple(int(a) for a in alpha) for alpha in alphas]
    tab = smooth_obstruction(
        hm, phis[0] if hm.r == 1 else phis,
        max_order=int(obj.get("max_order", 2)),
        alphas=alphas,
        rule=_residue_rule_from(obj, hm.n),
        family=str(obj.get("family", "hs")),
    )
    robj = tab.to_obj()
    robj["calibration"] = _calibration(hm.n)
    robj["command"] = "obstruction"
    return robj, robj["rows"], 0


_DRIVERS = {
    "reproduce": _cmd_reproduce,
    "hefer-check": _cmd_hefer_check,
    "divide": _cmd_divide,
    "interpolate": _cmd_interpolate,
    "residue": _cmd_residue,
    "member": _cmd_member,
    "obstruction": _cmd_obstruction,
}


# ---- emission ------------------------------------------------------------------


def _flatten(prefix: str, val, out: dict) -> None:
    if isinstance(val, dict):
        for k in sorted(val):
            _flatten("%s/%s" % (prefix, k) if prefix else str(k), val[k], out)
    elif isinstance(val, (list, tuple)):
        for i, item in enumerate(val):
            _flatten("%s/%d" % (prefix, i), item, out)
    else:
        out[prefix] = val


def emit_report(report: dict, fmt: str, rows: list[dict] | None = None) -> str:
    """Render a report deterministically; CSV flattens one line per row."""
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if fmt != "csv":
        raise ProblemError("/format", "format must be json or csv")
    flat_rows = []
    for row in rows or []:
        flat: dict = {}
        for k in sorted(row):
            if k.endswith("_trace"):
                continue
            _flatten(k, row[k], flat)
        flat_rows.append(flat)
    columns = sorted(set().union(*flat_rows) if flat_rows else [])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for flat in flat_rows:
        writer.writerow(flat)
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---- entry ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="resdiv",
        description="Residue-based division, interpolation and membership "
                    "reports for polynomial matrices on the ball.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--input", required=True, help="problem JSON path, or - for stdin")
    ap.add_argument("--output", default="-", help="report path, or - for stdout")
    ap.add_argument("--format", default="json", choices=("json", "csv"))
    ap.add_argument("--radial", type=int, default=None)
    ap.add_argument("--angular", type=int, default=None)
    ap.add_argument("--eps-base", dest="eps_base", type=float, default=None)
    ap.add_argument("--eps-count", dest="eps_count", type=int, default=None)
    ap.add_argument("--rho0", type=float, default=None)
    ap.add_argument("--rho1", type=float, default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def run(args: argparse.Namespace) -> int:
    if args.threads < 1:
        raise ProblemError("/threads", "must be >= 1")
    if args.input == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(args.input) as fh:
                text = fh.read()
        except OSError as e:
            raise ProblemError("/input", str(e)) from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemError("/", "malformed JSON: %s" % e) from None
    if not isinstance(obj, dict):
        raise ProblemError("/", "problem must be a JSON object")
    _validate_schema(obj)
    obj = _apply_overrides(obj, args)
    if args.verbose:
        print("resdiv %s: input parsed, running" % args.command, file=sys.stderr)
    report, rows, status = _DRIVERS[args.command](obj, args)
    _write(args.output, emit_report(report, args.format, rows))
    if args.verbose:
        print("resdiv %s: done, status %d" % (args.command, status), file=sys.stderr)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ProblemError as e:
        err = {"error": {"pointer": e.pointer, "message": e.message}}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1
    except ValueError as e:
        err = {"error": {"pointer": "/", "message": str(e)}}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
