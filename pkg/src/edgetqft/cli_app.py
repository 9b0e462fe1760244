"""Command-line front end: ``edgetqft {parse,nz,apoly,reduce,verify} FILE``.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 on input errors.  The default output format can be set with the
EDGETQFT_FORMAT environment variable.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from .apoly_engine import apoly_factor, divides_up_to_sign, to_apoly_convention
from .nz_toolkit import (NoInvertibleQuad, check_symplectic, choose_quad, gluing_matrices,
                         verify_change_of_variables)
from .numeric_oracle import (OracleReport, check_jacobian_pullback, check_prefactor_agreement,
                             check_support_equivalence)
from .state_reduce import all_closed_forms, reduce_partition_function
from .tri_model import (Triangulation, TriangulationError, balance_string, edge_valences,
                        load_triangulation)

FORMAT_ENV = "EDGETQFT_FORMAT"


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    path: str
    format: str = "text"
    seed: int = 0
    samples: int = 100
    tol: float = 1e-8
    invert_negative: bool = True
    gauge: int | None = None


def _parser() -> argparse.ArgumentParser:
    default_fmt = os.environ.get(FORMAT_ENV, "text")
    if default_fmt not in ("text", "json"):
        default_fmt = "text"
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("path", help="triangulation file (.zft)")
    common.add_argument("--format", choices=("text", "json"), default=default_fmt)
    p = argparse.ArgumentParser(prog="edgetqft", description="Edge-type state integrals of triangulated knot complements.")
    sub = p.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("parse", parents=[common], help="validate a triangulation and summarize it")
    sub.add_parser("nz", parents=[common], help="gluing matrices, symplectic check and quad choice")
    ap = sub.add_parser("apoly", parents=[common], help="eliminate shapes down to a polynomial in (l, m)")
    rd = sub.add_parser("reduce", parents=[common], help="closed form of the partition function")
    vf = sub.add_parser("verify", parents=[common], help="reduce, eliminate and cross-check numerically")
    for sp in (ap, vf):
        sp.add_argument("--invert-negative", action=argparse.BooleanOptionalAction, default=True,
                        help="invert the shape factors of negative tetrahedra (default on)")
    for sp in (rd, vf):
        sp.add_argument("--gauge", type=int, default=None, help="edge class fixed to 1 (default: last)")
    vf.add_argument("--seed", type=int, default=0)
    vf.add_argument("--samples", type=int, default=100)
    vf.add_argument("--tol", type=float, default=1e-8)
    return p


def _config(ns) -> RunConfig:
    return RunConfig(ns.subcommand, ns.path, ns.format, getattr(ns, "seed", 0), getattr(ns, "samples", 100),
                     getattr(ns, "tol", 1e-8), getattr(ns, "invert_negative", True), getattr(ns, "gauge", None))


def _load(path: str) -> Triangulation:
    if not os.path.isfile(path):
        raise InputError(f"file not found: {path}")
    try:
        return load_triangulation(path)
    except TriangulationError as exc:
        raise InputError(f"invalid triangulation {path}: {exc}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path} is not UTF-8 text") from None


# ---------------------------------------------------------------------------
# subcommands; each returns (report dict, text lines, ok)

def cmd_parse(tri: Triangulation, cfg: RunConfig):
    rep = {
        "tets": tri.n,
        "edges": tri.edge_count,
        "edge_names": list(tri.edge_names),
        "signs": list(tri.signs),
        "valences": edge_valences(tri),
        "balance": [balance_string(tri, i) for i in range(tri.edge_count)],
        "meridian": list(tri.meridian.coefficients),
        "longitude": list(tri.longitude.coefficients),
    }
    lines = [f"{tri.n} tetrahedra, {tri.edge_count} edge classes",
             "signs: " + " ".join("+" if s > 0 else "-" for s in tri.signs)]
    for name, val, bal in zip(tri.edge_names, rep["valences"], rep["balance"]):
        lines.append(f"edge {name}: valence {val}, balance {bal}")
    lines.append("meridian: " + " ".join(map(str, rep["meridian"])))
    lines.append("longitude: " + " ".join(map(str, rep["longitude"])))
    return rep, lines, True


def cmd_nz(tri: Triangulation, cfg: RunConfig):
    nz = gluing_matrices(tri)
    ok_sym, witness = check_symplectic(nz)
    colsums = {k: getattr(nz, k).sum(axis=0).tolist() for k in ("A", "B", "C")}
    rep = {"matrices": nz.to_json(), "symplectic": ok_sym, "column_sums": colsums}
    ok = ok_sym and all(c == 2 for v in colsums.values() for c in v)
    try:
        red = choose_quad(nz)
        rep["quad"] = red.to_json()
    except NoInvertibleQuad as exc:
        rep["quad"] = {"error": str(exc)}
        ok = False
    if tri.all_positive():
        cov = verify_change_of_variables(tri)
        rep["change_of_variables"] = cov
        ok = ok and cov["pass"]
    lines = [f"{k} = {v}" for k, v in nz.to_json().items()]
    lines.append("column sums: " + ", ".join(f"{k} {v}" for k, v in colsums.items()))
    lines.append(f"A'B'^T symmetric: {ok_sym}" + ("" if ok_sym else f" (defect {witness.tolist()})"))
    if "error" in rep["quad"]:
        lines.append(f"quad: {rep['quad']['error']}")
    else:
        lines.append(f"quad rotation {rep['quad']['quad']}, dropped edge row {rep['quad']['dropped_edge_row']}, "
                     f"det B_red = {rep['quad']['detBred']}")
    if "change_of_variables" in rep:
        cov = rep["change_of_variables"]
        lines.append(f"change of variables: residual {cov['max_residual_change_of_variables']:.2e}, "
                     f"real parts {cov['max_residual_real_parts']:.2e}")
    return rep, lines, ok


def cmd_apoly(tri: Triangulation, cfg: RunConfig):
    res = apoly_factor(tri, invert_negative=cfg.invert_negative)
    rep = res.to_json()
    rep["factor_apoly_convention"] = str(to_apoly_convention(res.factor))
    lines = [f"factor (m = meridian holonomy): {res.factor}",
             f"factor (m^2 = meridian holonomy): {rep['factor_apoly_convention']}"]
    lines += [f"discarded {p}: {r}" for p, r in res.discarded]
    return rep, lines, not res.factor.is_constant()


def cmd_reduce(tri: Triangulation, cfg: RunConfig):
    cf = reduce_partition_function(tri, gauge=cfg.gauge)
    rep = cf.to_json()
    lines = list(cf.trace)
    return rep, lines, True


def cmd_verify(tri: Triangulation, cfg: RunConfig):
    cf = reduce_partition_function(tri, gauge=cfg.gauge)
    ap = apoly_factor(tri, invert_negative=cfg.invert_negative)
    sign = divides_up_to_sign(cf.delta, ap.factor)
    report = OracleReport(cfg.seed)
    report.add("divisibility", sign is not None, 0.0, 1, substitution=sign)
    check_support_equivalence(tri, cf, cfg.samples, min(cfg.tol, 1e-10), cfg.seed, report)
    forms = all_closed_forms(tri)
    check_prefactor_agreement(tri, None, min(cfg.samples, 20), cfg.tol, cfg.seed, forms, report)
    check_jacobian_pullback(tri, cf, min(cfg.samples, 20), cfg.tol, cfg.seed, report)
    rep = {"closed_form": str(cf), "apoly_factor": str(ap.factor), "divisibility": sign is not None,
           "oracle": report.to_json()}
    lines = [f"closed form: {cf}", f"A-polynomial factor: {ap.factor}",
             f"delta divides factor: {sign is not None}" + (f" (l -> {sign})" if sign else "")]
    for c in report.checks:
        lines.append(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}: max error {c['max_error']:.3e} "
                     f"over {c['samples']} samples")
    return rep, lines, report.passed


COMMANDS = {"parse": cmd_parse, "nz": cmd_nz, "apoly": cmd_apoly, "reduce": cmd_reduce, "verify": cmd_verify}


def _emit(cfg_format: str, payload: dict, lines: list, stream) -> None:
    if cfg_format == "json":
        stream.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        stream.write("\n".join(lines) + "\n")


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        ns = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    cfg = _config(ns)
    try:
        tri = _load(cfg.path)
        rep, lines, ok = COMMANDS[cfg.subcommand](tri, cfg)
    except InputError as exc:
        _emit(cfg.format, {"error": {"kind": "input", "message": str(exc)}}, [f"error: {exc}"], stderr)
        return 2
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        _emit(cfg.format, {"error": {"kind": type(exc).__name__, "message": str(exc)}},
              [f"error: {type(exc).__name__}: {exc}"], stderr)
        return 1
    payload = {"command": cfg.subcommand, "input": os.path.basename(cfg.path), "pass": ok, "result": rep}
    _emit(cfg.format, payload, lines, stdout)
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
