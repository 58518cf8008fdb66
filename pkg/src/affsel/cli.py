"""Batch front door: generate, select, verify, sandwich.

Reports are machine-readable JSON on standard output; diagnostics go to
standard error.  Exit codes: 0 success (all requested verifications pass),
2 verification failure, 1 input/usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .numerics import EXACT, FLOAT, AffselError, Point, Scalar
from .sandwich import FiniteFunction, SandwichConfig, sandwich
from .hyperplane import AffineSelector, Instance, SelectConfig, select_affine
from .conelift import LinearConfig, LinearSelector, feature_select, select_linear
from .subgradient import ConvexSectionInstance, SubgradientConfig, select_subgradient
from .oracle import verify_domination, verify_working_closure
from .instances import (
    GenRanges,
    gen_affine_dominated,
    gen_convex_sections,
    gen_meager_linear,
    load_instance_file,
    save_instance_file,
)


class CLIUsageError(AffselError):
    pass


class _Parser(argparse.ArgumentParser):
    # input errors exit 1 (argparse defaults to 2, which we reserve for
    # verification failures)
    def error(self, message):
        raise CLIUsageError(message)


def _threads_cap() -> int:
    raw = os.environ.get("AFFSEL_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parse_lambda(text: str) -> int:
    if "^" in text:
        base, _, exp = text.partition("^")
        return int(base) ** int(exp)
    return int(text)


def build_parser() -> _Parser:
    parser = _Parser(prog="affsel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a seeded instance file")
    gen.add_argument("family", choices=["affine", "meager", "convex"])
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--nx", type=int, required=True)
    gen.add_argument("--ny", type=int, required=True)
    gen.add_argument("--k", type=int, default=3)
    gen.add_argument("--zero-slack", action="store_true")
    gen.add_argument("--shifted", action="store_true")
    gen.add_argument("-o", "--output", required=True)

    sel = sub.add_parser("select", help="run a selection pipeline")
    sel_sub = sel.add_subparsers(dest="pipeline", required=True)

    aff = sel_sub.add_parser("affine")
    aff.add_argument("file")
    aff.add_argument("--mode", choices=[EXACT, FLOAT], default=EXACT)
    aff.add_argument("--sandwich", choices=["midpoint", "staged"], default="midpoint")
    aff.add_argument("--depth", type=int, default=24)
    aff.add_argument("--base", choices=["novikov", "tight"], default="novikov")
    aff.add_argument("--verify", action="store_true")
    aff.add_argument("--trace", action="store_true")
    aff.add_argument("-o", "--output")

    lin = sel_sub.add_parser("linear")
    lin.add_argument("file")
    lin.add_argument("--lambda-max", default="2^20")
    lin.add_argument("--doublings", type=int, default=3)
    lin.add_argument("--verify", action="store_true")
    lin.add_argument("-o", "--output")

    feat = sel_sub.add_parser("feature")
    feat.add_argument("file")
    feat.add_argument("--lambda-max", default="2^20")
    feat.add_argument("--doublings", type=int, default=3)
    feat.add_argument("--verify", action="store_true")
    feat.add_argument("-o", "--output")

    sg = sel_sub.add_parser("subgradient")
    sg.add_argument("file")
    sg.add_argument("--backend", choices=["exact", "cone"], default="exact")
    sg.add_argument("--shift", action="store_true")
    sg.add_argument("--check-convexity", action="store_true")
    sg.add_argument("--lambda-max", default="2^20")
    sg.add_argument("--doublings", type=int, default=3)
    sg.add_argument("--verify", action="store_true")
    sg.add_argument("-o", "--output")

    sw = sub.add_parser("sandwich", help="insert between two finite functions")
    sw.add_argument("file_u")
    sw.add_argument("file_l")
    sw.add_argument("--mode", choices=["midpoint", "staged"], default="midpoint")
    sw.add_argument("--depth", type=int, default=24)

    ver = sub.add_parser("verify", help="check a selector against an instance")
    ver.add_argument("file")
    ver.add_argument("selector_file")
    ver.add_argument("--kind", choices=["affine", "linear"], required=True)
    return parser


def _load_finite_function(path) -> FiniteFunction:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    xs = tuple(str(x) for x in data["X"])
    vals = {x: Scalar.parse(str(v)) for x, v in zip(xs, data["values"])}
    return FiniteFunction(xs, vals)


def _load_selector(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if "selector" in data and isinstance(data["selector"], dict):
        data = data["selector"]   # run reports embed the selector
    if "kind" not in data:
        raise CLIUsageError(f"{path}: not a selector file")
    return data


def _selector_from_dict(data: dict):
    kind = data["kind"]
    xs = tuple(data["X"])
    n = int(data["n"])
    if kind == "affine":
        return AffineSelector(
            n=n, xs=xs,
            b={x: Point(Scalar.parse(c) for c in row) for x, row in zip(xs, data["B"])},
            c={x: Scalar.parse(v) for x, v in zip(xs, data["C"])},
        )
    if kind == "linear":
        return LinearSelector(
            n=n, xs=xs,
            a={x: Point(Scalar.parse(c) for c in row) for x, row in zip(xs, data["A"])},
            epsilon={x: Scalar.parse(v) for x, v in zip(xs, data["epsilon"])},
            exact={x: bool(v) for x, v in zip(xs, data.get("exact", [True] * len(xs)))},
            lambda_max=int(data.get("lambda_max", 1)),
            cone_c={},
        )
    raise CLIUsageError(f"unsupported selector kind {kind!r}")


def _emit(report: dict, started: float) -> None:
    report["wall_time_s"] = round(time.perf_counter() - started, 6)
    sys.stdout.write(json.dumps(report, indent=2) + "\n")


def _cmd_gen(args, started) -> int:
    ranges = GenRanges(zero_slack=args.zero_slack)
    if args.family == "affine":
        doc = gen_affine_dominated(args.seed, args.n, args.nx, args.ny, ranges)
    elif args.family == "meager":
        doc = gen_meager_linear(args.seed, args.n, args.nx, args.ny, ranges)
    else:
        doc = gen_convex_sections(args.seed, args.n, args.nx, args.ny, args.k,
                                  shifted=args.shifted, ranges=ranges)
    save_instance_file(doc, args.output)
    report = {
        "command": f"gen-{args.family}",
        "config": {"seed": args.seed, "n": args.n, "nx": args.nx, "ny": args.ny,
                   "k": args.k if args.family == "convex" else None,
                   "zero_slack": args.zero_slack, "shifted": args.shifted,
                   "threads": _threads_cap()},
        "output": {"path": args.output, "points": len(doc.y_rows),
                   "params": len(doc.xs)},
    }
    _emit(report, started)
    return 0


def _maybe_save_selector(args, selector) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(selector.serialize(), indent=2) + "\n")


def _cmd_select_affine(args, started) -> int:
    doc = load_instance_file(args.file)
    inst = doc.to_instance(args.mode)
    config = SelectConfig(sandwich_mode=args.sandwich, depth=args.depth, base=args.base)
    selector, trace = select_affine(inst, config)
    report = {
        "command": "select-affine",
        "config": {"mode": args.mode, "sandwich": args.sandwich, "depth": args.depth,
                   "base": args.base, "verify": args.verify, "trace": args.trace,
                   "threads": _threads_cap()},
        "input": {"path": args.file, "n": inst.n, "params": len(inst.xs),
                  "points": len(inst.ys)},
        "selector": selector.serialize(),
    }
    exit_code = 0
    if args.verify:
        rep = verify_domination(inst, selector, kind="affine")
        closure = verify_working_closure(trace, selector)
        report["verification"] = {
            "passed": rep.passed and closure.passed,
            "min_slack": {x: s.serialize() if s is not None else None
                          for x, s in rep.min_slack.items()},
            "closure_passed": closure.passed,
        }
        if not (rep.passed and closure.passed):
            exit_code = 2
    if args.trace:
        report["trace_summary"] = trace.summary()
    _maybe_save_selector(args, selector)
    _emit(report, started)
    return exit_code


def _linear_report(selector: LinearSelector) -> dict:
    out = selector.serialize()
    out["attempts"] = [
        {"lambda_max": a.lambda_max, "exact": [a.exact[x] for x in selector.xs]}
        for a in selector.attempts
    ]
    return out


def _cmd_select_linear(args, started) -> int:
    doc = load_instance_file(args.file)
    inst = doc.to_instance(EXACT)
    config = LinearConfig(lambda_max=_parse_lambda(args.lambda_max),
                          doublings=args.doublings)
    selector = select_linear(inst, config)
    report = {
        "command": "select-linear",
        "config": {"lambda_max": config.lambda_max, "doublings": config.doublings,
                   "verify": args.verify, "threads": _threads_cap()},
        "input": {"path": args.file, "n": inst.n, "params": len(inst.xs),
                  "points": len(inst.ys)},
        "selector": _linear_report(selector),
    }
    exit_code = 0
    if args.verify:
        rep = verify_domination(inst, selector, kind="linear")
        report["verification"] = {
            "passed": rep.passed,
            "min_slack": {x: s.serialize() if s is not None else None
                          for x, s in rep.min_slack.items()},
        }
        if not rep.passed:
            exit_code = 2
    _maybe_save_selector(args, selector)
    _emit(report, started)
    return exit_code


def _cmd_select_feature(args, started) -> int:
    doc = load_instance_file(args.file)
    if doc.phi_rows is None:
        raise CLIUsageError("feature selection requires a phi table")
    inst = doc.to_instance(EXACT)
    phi = doc.phi_table(EXACT)
    config = LinearConfig(lambda_max=_parse_lambda(args.lambda_max),
                          doublings=args.doublings)
    selector = feature_select(inst, phi, config)
    report = {
        "command": "select-feature",
        "config": {"lambda_max": config.lambda_max, "doublings": config.doublings,
                   "verify": args.verify, "threads": _threads_cap()},
        "input": {"path": args.file, "n": inst.n, "feature_dim": selector.n,
                  "params": len(inst.xs), "points": len(inst.ys)},
        "selector": _linear_report(selector),
    }
    exit_code = 0
    if args.verify:
        failures = []
        for x in inst.xs:
            for j, p in enumerate(inst.ys.points):
                rhs = selector.a[x].dot(phi[p]) + selector.epsilon[x]
                if not inst.values[x][j].le_bound(rhs):
                    failures.append({"x": x, "y": p.serialize(),
                                     "slack": (rhs - inst.values[x][j]).serialize()})
        report["verification"] = {"passed": not failures, "failures": failures}
        if failures:
            exit_code = 2
    _maybe_save_selector(args, selector)
    _emit(report, started)
    return exit_code


def _cmd_select_subgradient(args, started) -> int:
    doc = load_instance_file(args.file)
    inst = doc.to_instance(EXACT)
    y0 = doc.y0_table(EXACT)
    csi = ConvexSectionInstance(instance=inst, y0=y0)
    config = SubgradientConfig(
        backend=args.backend,
        linear=LinearConfig(lambda_max=_parse_lambda(args.lambda_max),
                            doublings=args.doublings),
        check_convexity=args.check_convexity)
    selector = select_subgradient(csi, config, shift=args.shift or None)
    report = {
        "command": "select-subgradient",
        "config": {"backend": args.backend, "shift": bool(args.shift),
                   "check_convexity": args.check_convexity,
                   "verify": args.verify, "threads": _threads_cap()},
        "input": {"path": args.file, "n": inst.n, "params": len(inst.xs),
                  "points": len(inst.ys)},
        "selector": selector.serialize(),
    }
    exit_code = 0
    if args.verify:
        from .subgradient import shift_to_origin
        failures = []
        sections = shift_to_origin(csi if (args.shift or y0 is not None) else
                                   ConvexSectionInstance(instance=inst, y0=None))
        for group in sections.groups:
            gi = group.instance
            for x in group.xs:
                for j, p in enumerate(gi.ys.points):
                    lower = selector.p[x].dot(p) - selector.epsilon[x]
                    if not lower.le_bound(gi.values[x][j]):
                        failures.append({"x": x, "y": p.serialize(),
                                         "slack": (gi.values[x][j] - lower).serialize()})
        report["verification"] = {"passed": not failures, "failures": failures}
        if failures:
            exit_code = 2
    _maybe_save_selector(args, selector)
    _emit(report, started)
    return exit_code


def _cmd_sandwich(args, started) -> int:
    u = _load_finite_function(args.file_u)
    l = _load_finite_function(args.file_l)
    f = sandwich(u, l, SandwichConfig(mode=args.mode, depth=args.depth))
    report = {
        "command": "sandwich",
        "config": {"mode": args.mode, "depth": args.depth, "threads": _threads_cap()},
        "result": f.serialize(),
    }
    _emit(report, started)
    return 0


def _cmd_verify(args, started) -> int:
    doc = load_instance_file(args.file)
    inst = doc.to_instance(EXACT)
    data = _load_selector(args.selector_file)
    if data.get("kind") != args.kind:
        raise CLIUsageError(
            f"selector kind {data.get('kind')!r} does not match --kind {args.kind}")
    selector = _selector_from_dict(data)
    rep = verify_domination(inst, selector, kind=args.kind)
    report = {
        "command": "verify",
        "config": {"kind": args.kind, "threads": _threads_cap()},
        "verification": rep.serialize(),
    }
    _emit(report, started)
    return 0 if rep.passed else 2


def run(argv=None) -> int:
    started = time.perf_counter()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen":
            return _cmd_gen(args, started)
        if args.command == "select":
            if args.pipeline == "affine":
                return _cmd_select_affine(args, started)
            if args.pipeline == "linear":
                return _cmd_select_linear(args, started)
            if args.pipeline == "feature":
                return _cmd_select_feature(args, started)
            return _cmd_select_subgradient(args, started)
        if args.command == "sandwich":
            return _cmd_sandwich(args, started)
        return _cmd_verify(args, started)
    except CLIUsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        parser.print_usage(sys.stderr)
        return 1
    except (AffselError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run())
