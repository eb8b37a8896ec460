"""Batch front end: ``solve``, ``certify``, ``lambda``, ``diagnose``, ``examples export``.

Exit codes: 0 success, 1 config/input error, 2 certification failure
(contraction or inner-map violation), 3 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import tempfile
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, chebcore, papersuite
from .chebcore import ChebRep, coeffs_from_csv, coeffs_to_csv
from .errors import (
    ContractionError, ConvergenceError, EvaluationDomainError, ExprSyntaxError,
    InvalidMapError, ResolutionError, TooFewCoefficientsError,
)
from .feqop import TermSpec, build_operator, certify_Ak
from .funexpr import evaluate, parse_expr
from .solver import fit_coeff_decay, solve_neumann
from .stripgeo import estimate_lambda

EXIT_OK, EXIT_INPUT, EXIT_CERT, EXIT_NONCONV = 0, 1, 2, 3
SOLUTION_POINTS = 1001

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema", "k", "rhs"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": 1},
        "k": {"type": "number", "exclusiveMinimum": 0},
        "rhs": {"type": "string"},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["a", "phi", "sigma"],
                "additionalProperties": False,
                "properties": {
                    "a": {"type": "string"},
                    "phi": {"type": "string"},
                    "sigma": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "family": {
            "type": "object",
            "required": ["name", "count"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": sorted(papersuite.FAMILIES)},
                "count": {"type": "integer", "minimum": 1},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_iter": {"type": "integer", "minimum": 1},
        "A_grid": {"type": "array", "minItems": 1,
                   "items": {"type": "number", "exclusiveMinimum": 0}},
        "n_range": {"type": "array", "minItems": 2, "maxItems": 2,
                    "items": {"type": "integer", "minimum": 1}},
        "boundary_samples": {"type": "integer", "minimum": 64},
    },
    "oneOf": [{"required": ["terms"]}, {"required": ["family"]}],
}

DEFAULTS = {
    "tol": 1e-11,
    "max_iter": 200,
    "A_grid": [0.1, 0.2, 0.4],
    "n_range": [1, 50],
    "boundary_samples": 2000,
}


class InputError(Exception):
    pass


# ---------------------------------------------------------------- config

def load_config(path, overrides=None) -> dict:
    """Read, schema-check and default-fill a run config."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        line = _line_of(text, exc.absolute_path)
        raise InputError(f"{path}:{line}: schema error at {where}: {exc.message}") from None
    cfg = {**raw, **{k: v for k, v in DEFAULTS.items() if k not in raw}}
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    if cfg["n_range"][0] > cfg["n_range"][1]:
        raise InputError(f"{path}:{_line_of(text, ['n_range'])}: n_range must be increasing")
    for key in ("rhs",):
        _parse_field(cfg[key], path, text, [key])
    for i, term in enumerate(cfg.get("terms", [])):
        for key in ("a", "phi"):
            _parse_field(term[key], path, text, ["terms", i, key], n=i + 1)
    return cfg


def _parse_field(src, path, text, where, n=None):
    try:
        return parse_expr(src, n=n)
    except ExprSyntaxError as exc:
        loc = "/".join(str(p) for p in where)
        raise InputError(f"{path}:{_line_of(text, where)}: {loc}: {exc}") from None


def _line_of(text, json_path):
    """Best-effort line number of the last key of ``json_path`` in ``text``."""
    keys = [p for p in json_path if isinstance(p, str)]
    if not keys:
        return 1
    needle = f'"{keys[-1]}"'
    pos = text.find(needle)
    return text.count("\n", 0, pos) + 1 if pos >= 0 else 1


def build_from_config(cfg):
    """``(operator, rhs expression)``; explicit terms bind ``n`` to their 1-based position."""
    u = parse_expr(cfg["rhs"])
    if "family" in cfg:
        fam = cfg["family"]
        op = papersuite.family_operator(fam["name"], fam["count"], cfg["k"],
                                        fam.get("sigma", papersuite.DEFAULT_SIGMA))
    else:
        terms = [
            TermSpec(parse_expr(t["a"], n=i + 1), parse_expr(t["phi"], n=i + 1), float(t["sigma"]))
            for i, t in enumerate(cfg["terms"])
        ]
        op = build_operator(terms, 0.0, cfg["k"])
    return op, u


# ---------------------------------------------------------------- output

def _clean(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _clean(obj.item())
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta(t0):
    return {
        "runtime_s": round(time.perf_counter() - t0, 6),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def _report(out, payload, t0):
    write_atomic(Path(out) / "report.json", dumps({"payload": payload, "meta": _meta(t0)}))


def solution_csv(phi: ChebRep) -> str:
    x = np.linspace(-1.0, 1.0, SOLUTION_POINTS)
    y = chebcore.eval_cheb(phi, x)
    lines = ["x,phi"]
    lines += [f"{format(float(a), '.17g')},{format(float(b), '.17g')}" for a, b in zip(x, y)]
    return "\n".join(lines) + "\n"


def _cert_summary(cert):
    return {
        "kind": cert.kind,
        "pass": cert.passed,
        "rho": cert.rho,
        "rho_real": cert.rho_real,
        "rho_strip": cert.rho_strip,
        "tau_candidate": cert.tau_candidate,
        "N_A": {repr(a): n for a, n in cert.N_A.items()},
        "ek": [
            {"A": c.A, "pass": c.passed, "M_A": c.M_A, "max_ratio": c.max_ratio,
             "violations": len(c.violations),
             "first_violation": list(c.violations[0]) if c.violations else None}
            for c in cert.ek
        ],
        "notes": list(cert.notes),
    }


# ---------------------------------------------------------------- commands

def _prepare(args, payload):
    cfg = load_config(args.config, {
        "tol": args.tol, "max_iter": args.max_iter, "boundary_samples": args.boundary_samples,
    })
    payload["config"] = cfg
    op, u = build_from_config(cfg)
    return cfg, op, u


def _certify(cfg, op):
    lo, hi = cfg["n_range"]
    return certify_Ak(op, cfg["A_grid"], lo, hi, cfg["boundary_samples"])


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    payload = {"command": "solve"}
    try:
        cfg, op, u = _prepare(args, payload)
        cert = _certify(cfg, op)
    except (InvalidMapError, EvaluationDomainError) as exc:
        return _fail(args, payload, t0, EXIT_CERT, "invalid map", exc)
    payload["certificate"] = _cert_summary(cert)
    if not cert.passed:
        return _fail(args, payload, t0, EXIT_CERT, "certification failed", "; ".join(cert.notes))
    try:
        u_rep = chebcore.interpolate(lambda x: np.broadcast_to(evaluate(u, x), x.shape))
        sol = solve_neumann(op, u_rep, cfg["tol"], cfg["max_iter"], k_target=cfg["k"], rhs=u)
    except ContractionError as exc:
        return _fail(args, payload, t0, EXIT_CERT, "contraction violation", exc)
    except (ConvergenceError, ResolutionError) as exc:
        return _fail(args, payload, t0, EXIT_NONCONV, "no convergence", exc)
    payload["solution"] = sol.to_dict()
    code = EXIT_OK if sol.residual <= cfg["tol"] else EXIT_NONCONV
    payload["status"] = "ok" if code == EXIT_OK else "residual above tolerance"
    payload["exit_code"] = code
    out = Path(args.out)
    write_atomic(out / "solution.csv", solution_csv(sol.phi))
    write_atomic(out / "coeffs.csv", coeffs_to_csv(sol.phi, hexfloat=args.hex))
    _report(out, payload, t0)
    _status(f"solve: {payload['status']} (residual {sol.residual:.3e}, {sol.iterations} iterations)")
    return code


def cmd_certify(args) -> int:
    t0 = time.perf_counter()
    payload = {"command": "certify"}
    try:
        cfg, op, _ = _prepare(args, payload)
        cert = _certify(cfg, op)
    except (InvalidMapError, EvaluationDomainError) as exc:
        return _fail(args, payload, t0, EXIT_CERT, "invalid map", exc)
    payload["certificate"] = cert.to_dict()
    code = EXIT_OK if cert.passed else EXIT_CERT
    payload["status"] = "pass" if cert.passed else "fail"
    payload["exit_code"] = code
    _report(args.out, payload, t0)
    _status(f"certify: {payload['status']} (rho = {cert.rho:.6g})")
    return code


def cmd_lambda(args) -> int:
    t0 = time.perf_counter()
    psi = parse_expr(args.expression)
    report = estimate_lambda(psi, args.nmax)
    payload = {"command": "lambda", "expression": args.expression, "report": report.to_dict()}
    payload["exit_code"] = EXIT_OK
    if args.out:
        _report(args.out, payload, t0)
    sys.stdout.write(dumps(payload))
    return EXIT_OK


def cmd_diagnose(args) -> int:
    t0 = time.perf_counter()
    try:
        coeffs = coeffs_from_csv(Path(args.coeffs).read_text())
    except OSError as exc:
        raise InputError(f"{args.coeffs}: cannot read: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(f"{args.coeffs}: {exc}") from None
    try:
        fit = fit_coeff_decay(ChebRep(coeffs), args.k)
    except TooFewCoefficientsError as exc:
        raise InputError(f"{args.coeffs}: {exc}") from None
    payload = {"command": "diagnose", "k": args.k, "fit": fit.to_dict(), "exit_code": EXIT_OK}
    if args.out:
        _report(args.out, payload, t0)
    sys.stdout.write(dumps(payload))
    return EXIT_OK


def cmd_examples(args) -> int:
    cfg = papersuite.to_config(papersuite.paper_example(args.id, args.trunc))
    text = dumps(cfg)
    if args.out:
        write_atomic(Path(args.out) / f"example{args.id}.json", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _fail(args, payload, t0, code, what, detail):
    payload["status"] = f"{what}: {detail}"
    payload["exit_code"] = code
    if isinstance(detail, InvalidMapError):
        payload["witness"] = {"term": detail.index, "x": detail.witness}
    _report(args.out, payload, t0)
    _status(payload["status"])
    return code


def _status(msg):
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------- entry point

def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gevrey-feq",
        description="Solve and certify linear functional equations on [-1, 1].",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def config_cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="run config (JSON, schema 1)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--boundary-samples", type=int)
        return p

    p = config_cmd("solve", "solve the equation and write report.json, solution.csv, coeffs.csv")
    p.add_argument("--hex", action="store_true", help="hexadecimal floats in coeffs.csv")
    p.set_defaults(func=cmd_solve)
    config_cmd("certify", "check the contraction and strip-nesting hypotheses").set_defaults(
        func=cmd_certify)

    p = sub.add_parser("lambda", help="estimate lambda(psi)")
    p.add_argument("expression")
    p.add_argument("--nmax", type=_positive_int, default=25)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lambda)

    p = sub.add_parser("diagnose", help="fit Chebyshev coefficient decay")
    p.add_argument("coeffs", help="CSV of index,coefficient")
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("examples", help="shipped instances")
    ex = p.add_subparsers(dest="action", required=True)
    e = ex.add_parser("export", help="emit an instance as a config file")
    e.add_argument("id", type=int, choices=[1, 2, 3, 4])
    e.add_argument("--trunc", type=int, default=papersuite.DEFAULT_TRUNC)
    e.add_argument("--out")
    e.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        _status(str(exc))
        return EXIT_INPUT
    except ExprSyntaxError as exc:
        _status(f"expression error: {exc}")
        return EXIT_INPUT
    except ValueError as exc:
        _status(f"invalid input: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
