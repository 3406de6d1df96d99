"""Command-line front-end.

    cpmean mean --kind geo|arith|harm|parallel|power:<a>|log A.json B.json [-o OUT.json]
    cpmean order A.json B.json
    cpmean index A.json
    cpmean verify A.json
    cpmean lebesgue PHI.json PSI.json [-o PREFIX]
    cpmean example <name> [key=value ...] | --all

Global flags (accepted before or after the subcommand): --format text|json,
--tol FLOAT (overrides the PSD tolerance for order/verify), --nodes INT
(quadrature node count for the logarithmic mean).  The environment variable
CPMEAN_DEFAULT_TOL, when set to a positive float, supplies the default PSD
tolerance.

Exit codes: 0 success, 2 input/validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import hermlinalg, lebesgue, opmeans
from .channeldoc import doc_to_channel, read_doc, save_channel
from .cpmaps import CpMap, channel_flags, geo_certificate, index_cp, leq_cp, mean_cp
from .errors import (
    CpMeanError,
    DomainError,
    InvalidInput,
    NonConvergence,
    NotCompletelyPositive,
    NumericalError,
    ParseError,
    ShapeError,
    UnknownExample,
)
from .opmeans import GEO, MeanKind
from .registry import REGISTRY, run_example
from .report import Report

_VALIDATION_ERRORS = (
    ParseError,
    ShapeError,
    DomainError,
    InvalidInput,
    NotCompletelyPositive,
    UnknownExample,
)
_NUMERIC_ERRORS = (NonConvergence, NumericalError)


def _default_tol() -> float:
    env = os.environ.get("CPMEAN_DEFAULT_TOL")
    if env:
        try:
            val = float(env)
        except ValueError:
            return hermlinalg.TOL_PSD
        if val > 0.0:
            return val
    return hermlinalg.TOL_PSD


def _globals_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=("text", "json"), default=None,
                   help="report format (default: text)")
    p.add_argument("--tol", type=float, default=None,
                   help="PSD tolerance override for order/verify")
    p.add_argument("--nodes", type=int, default=None,
                   help="quadrature node count for the logarithmic mean")
    return p


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpmean",
        description="Operator means, CP order, indices and Lebesgue "
                    "decomposition of channels.",
        epilog="Global flags --format text|json, --tol FLOAT and --nodes INT "
               "may appear anywhere on the command line.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mean = sub.add_parser("mean", help="mean of two channels")
    p_mean.add_argument("--kind", required=True,
                        help="geo|arith|harm|parallel|power:<alpha>|log")
    p_mean.add_argument("path_a")
    p_mean.add_argument("path_b")
    p_mean.add_argument("-o", "--out", default=None, help="write result document")

    p_order = sub.add_parser("order", help="compare two channels in the CP order")
    p_order.add_argument("path_a")
    p_order.add_argument("path_b")

    p_index = sub.add_parser("index", help="Pimsner-Popa index of a channel")
    p_index.add_argument("path")

    p_verify = sub.add_parser("verify", help="CP/unital/trace-preserving flags")
    p_verify.add_argument("path")

    p_leb = sub.add_parser("lebesgue",
                           help="Lebesgue decomposition of PSI relative to PHI")
    p_leb.add_argument("path_phi")
    p_leb.add_argument("path_psi")
    p_leb.add_argument("-o", "--out", default=None,
                       help="prefix for the ac/sing output documents")

    p_ex = sub.add_parser("example", help="recompute a worked example by name")
    p_ex.add_argument("name", nargs="?", default=None)
    p_ex.add_argument("params", nargs="*", default=[],
                      help="key=value parameter overrides")
    p_ex.add_argument("--all", action="store_true", dest="run_all",
                      help="run the full registry")

    return parser


def _load(path: str) -> tuple[CpMap, str]:
    doc = read_doc(path)
    chan = doc_to_channel(doc)
    name = doc.get("name") or os.path.basename(path)
    return chan, str(name)


def _chain_checks(rep: Report, f: CpMap, g: CpMap, tol: float):
    """Record how far each step of harmonic <= geometric <= arithmetic dips."""
    harm = mean_cp(MeanKind("harm"), f, g).choi.entries
    geo = mean_cp(GEO, f, g).choi.entries
    arith = mean_cp(MeanKind("arith"), f, g).choi.entries
    scale = max(1.0, f.choi.norm(), g.choi.norm())
    for label, diff in (("geo - harm", geo - harm), ("arith - geo", arith - geo)):
        low = float(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))[0])
        rep.check(f"chain {label} >= 0", max(0.0, -low), tol * scale)


def cmd_mean(args) -> Report:
    kind = MeanKind.parse(args.kind)
    f, name_a = _load(args.path_a)
    g, name_b = _load(args.path_b)
    nodes = args.nodes or 16
    result = mean_cp(kind, f, g, nodes=nodes)
    rep = Report(f"mean --kind {args.kind}")
    rep.add_input(name_a, args.path_a)
    rep.add_input(name_b, args.path_b)
    rep.outputs["dim_in"] = result.dim_in
    rep.outputs["dim_out"] = result.dim_out
    rep.outputs["choi"] = result.choi.entries
    if kind.tag == "geo":
        ok = geo_certificate(f, g, result, tol=opmeans.TOL_MEAN)
        rep.record("block certificate [[A,G],[G,B]] PSD", ok, 0.0 if ok else 1.0,
                   0.0)
    _chain_checks(rep, f, g, opmeans.TOL_MEAN)
    if args.out:
        save_channel(result, args.out,
                     name=f"{args.kind}({name_a},{name_b})")
        rep.outputs["written"] = args.out
    return rep


def cmd_order(args, tol: float) -> Report:
    f, name_a = _load(args.path_a)
    g, name_b = _load(args.path_b)
    rep = Report("order")
    rep.add_input(name_a, args.path_a)
    rep.add_input(name_b, args.path_b)
    le = leq_cp(f, g, tol)
    ge = leq_cp(g, f, tol)
    verdict = {(True, True): "equal", (True, False): "<=cp",
               (False, True): ">=cp", (False, False): "incomparable"}[(le, ge)]
    rep.outputs["order"] = verdict
    rep.outputs["tolerance"] = tol
    return rep


def cmd_index(args) -> Report:
    f, name = _load(args.path)
    rep = Report("index")
    rep.add_input(name, args.path)
    value = index_cp(f)
    rep.outputs["index"] = "infinite" if math.isinf(value) else value
    return rep


def cmd_verify(args, tol: float) -> Report:
    f, name = _load(args.path)
    rep = Report("verify")
    rep.add_input(name, args.path)
    flags = channel_flags(f, tol)
    w, _ = f.choi.eig()
    rep.record("completely positive", flags.is_cp, max(0.0, -float(w[0])), tol)
    one_defect = float(np.abs(f.apply(np.eye(f.dim_in))
                              - np.eye(f.dim_out)).max())
    rep.record("unital", flags.is_unital, one_defect, tol)
    tr_defect = float(np.abs(np.einsum("ikjk->ij", f.choi_blocks())
                             - np.eye(f.dim_in)).max())
    rep.record("trace preserving", flags.is_trace_preserving, tr_defect, tol)
    rep.outputs["flags"] = {
        "is_cp": flags.is_cp,
        "is_unital": flags.is_unital,
        "is_trace_preserving": flags.is_trace_preserving,
        "tolerance": flags.tolerance,
    }
    return rep


def cmd_lebesgue(args) -> Report:
    phi, name_phi = _load(args.path_phi)
    psi, name_psi = _load(args.path_psi)
    rep = Report("lebesgue")
    rep.add_input(name_phi, args.path_phi)
    rep.add_input(name_psi, args.path_psi)
    split = lebesgue.decompose(phi, psi)
    rep.outputs["alpha_min"] = (
        "infinite" if math.isinf(split.alpha_min) else split.alpha_min)
    rep.outputs["ac_choi"] = split.ac.choi.entries
    rep.outputs["sing_choi"] = split.sing.choi.entries
    add_defect = float(np.abs(split.ac.choi.entries + split.sing.choi.entries
                              - psi.choi.entries).max())
    rep.check("ac + sing = psi", add_defect, 1e-9 * max(1.0, psi.choi.norm()))
    rep.record("sing is phi-singular", lebesgue.is_singular(phi, split.sing),
               opmeans.parallel_sum(phi.choi, split.sing.choi).norm(), 1e-8)
    rep.record("ac is phi-absolutely continuous",
               lebesgue.is_abs_continuous(split.ac, phi), 0.0, 0.0)
    oracle = lebesgue.ac_part_oracle(phi, psi)
    rep.check("parallel-sum oracle residual",
              float(np.abs(oracle.choi.entries - split.ac.choi.entries).max()),
              lebesgue.TOL_LIM * max(1.0, psi.choi.norm()))
    if args.out:
        ac_path = f"{args.out}.ac.json"
        sing_path = f"{args.out}.sing.json"
        save_channel(split.ac, ac_path, name=f"ac({name_psi}|{name_phi})")
        save_channel(split.sing, sing_path, name=f"sing({name_psi}|{name_phi})")
        rep.outputs["written"] = [ac_path, sing_path]
    return rep


def _parse_params(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise DomainError(f"example parameters take the form key=value, got {item!r}")
        key, _, raw = item.partition("=")
        vals = []
        for piece in raw.split(","):
            try:
                vals.append(int(piece))
            except ValueError:
                try:
                    vals.append(float(piece))
                except ValueError:
                    raise DomainError(f"cannot parse parameter value {raw!r}")
        out[key.strip()] = vals[0] if len(vals) == 1 else tuple(vals)
    return out


def cmd_example(args) -> list[Report]:
    if args.run_all:
        return [run_example(name) for name in REGISTRY]
    if not args.name:
        raise UnknownExample("example requires a name or --all")
    # tolerate a single quoted argument like "rotation theta=0.5"
    pieces = args.name.split()
    name, inline = pieces[0], pieces[1:]
    params = _parse_params(list(inline) + list(args.params))
    return [run_example(name, **params)]


def _emit(reports: list[Report], fmt: str) -> None:
    if fmt == "json":
        if len(reports) == 1:
            print(reports[0].to_json())
        else:
            import json as _json
            print(_json.dumps([r.to_obj() for r in reports], indent=2))
    else:
        for rep in reports:
            print(rep.to_text())


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    gargs, rest = _globals_parser().parse_known_args(argv)
    parser = _build_parser()
    args = parser.parse_args(rest)
    args.nodes = gargs.nodes
    fmt = gargs.format or "text"
    tol = gargs.tol if gargs.tol is not None else _default_tol()
    try:
        if args.command == "mean":
            reports = [cmd_mean(args)]
        elif args.command == "order":
            reports = [cmd_order(args, tol)]
        elif args.command == "index":
            reports = [cmd_index(args)]
        elif args.command == "verify":
            reports = [cmd_verify(args, tol)]
        elif args.command == "lebesgue":
            reports = [cmd_lebesgue(args)]
        elif args.command == "example":
            reports = cmd_example(args)
        else:  # pragma: no cover - argparse enforces the choices
            parser.error(f"unknown command {args.command!r}")
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except CpMeanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # malformed input must never produce a traceback
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    _emit(reports, fmt)
    return 0 if all(r.passed for r in reports) else 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
