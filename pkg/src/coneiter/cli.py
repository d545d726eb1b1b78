"""Command-line interface.

Three subcommands:

* ``run``      execute an experiment config file and write its outputs,
* ``example``  run one of the built-in experiments (ex1..ex4),
* ``check``    sample-test a space's norm axioms or an operator/pair
               condition and print the JSON report.

Exit codes: 0 success, 1 bad config or spec, 2 failed theorem
precondition (override with --force), 3 divergence, 4 violations found
by ``check``. No environment variables are consulted.
"""

from __future__ import annotations

import argparse
import sys

from .cone_space import builtin_r2_matrix, builtin_scalar_p, check_axioms
from .errors import ConfigurationError, DivergenceError, PreconditionError
from .harness import build_space, load_config, run_experiment
from .operators import (builtin_linear, builtin_saturating,
                        compat_pair_identity, compat_pair_shared_linear,
                        probe_compat, probe_quasi_nonexpansive,
                        probe_weak_contraction)
from .registry import EXPERIMENTS, experiment


def _parse_space_spec(spec: str):
    kind, _, args = spec.partition(":")
    if kind == "scalar_p":
        return builtin_scalar_p(float(args or 1.0))
    if kind in ("r2", "r2_matrix"):
        entries = [float(v) for v in args.split(",")] if args else [1.0, 0.0, 0.0, 1.0]
        if len(entries) != 4:
            raise ValueError("r2 spec needs 4 comma-separated entries (row-major)")
        return builtin_r2_matrix([entries[:2], entries[2:]])
    raise ValueError(f"unknown space spec {spec!r} "
                     "(try scalar_p:<p> or r2:<a,b,c,d>)")


def _parse_op_spec(spec: str, space=None):
    kind, _, args = spec.partition(":")
    if kind == "saturating":
        return builtin_saturating(space)
    if kind == "linear":
        return builtin_linear(float(args or 0.8), space)
    raise ValueError(f"unknown operator spec {spec!r} "
                     "(try saturating or linear:<q>)")


def _parse_pair_spec(spec: str, space=None):
    space = space if space is not None else builtin_r2_matrix([[1, 0], [0, 1]])
    text = spec.replace(" ", "")
    if text.startswith("S=T=") or text.startswith("T=S="):
        op = _parse_op_spec(text[4:], space)
        if not op.name.startswith("linear"):
            raise ValueError("shared pairs are supported for linear maps only")
        q = float(op.name.split(":")[1])
        return compat_pair_shared_linear(q, space)
    parts = dict(p.split("=", 1) for p in text.split(",") if "=" in p)
    if parts.get("S") == "identity" and "T" in parts:
        return compat_pair_identity(_parse_op_spec(parts["T"], space))
    raise ValueError(f"unknown pair spec {spec!r} "
                     "(try \"S=T=linear:0.8\" or \"S=identity,T=linear:0.8\")")


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        result = run_experiment(config, force=args.force)
    except PreconditionError as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        print("rerun with --force to execute anyway", file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3
    written = result.write(args.out, svg=True if args.svg else None)
    print(result.summary())
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_example(args) -> int:
    config = experiment(args.id)
    try:
        result = run_experiment(config, force=args.force)
    except PreconditionError as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3
    written = result.write(args.out, svg=True if args.svg else None)
    print(result.summary())
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_check(args) -> int:
    try:
        if args.space and not (args.op or args.pair):
            space = _parse_space_spec(args.space)
            report = check_axioms(space, args.samples, args.seed)
        elif args.op:
            space = _parse_space_spec(args.space) if args.space else None
            op = _parse_op_spec(args.op, space)
            klass = args.klass or op.declared_class
            if klass in ("qne", "quasi_nonexpansive"):
                report = probe_quasi_nonexpansive(op, samples=args.samples,
                                                  seed=args.seed)
            elif klass in ("weak", "weak_contraction"):
                report = probe_weak_contraction(op, samples=args.samples,
                                                seed=args.seed)
            else:
                raise ValueError(f"no condition class for {args.op!r}; "
                                 "pass --class qne|weak")
        elif args.pair:
            space = _parse_space_spec(args.space) if args.space else None
            pair = _parse_pair_spec(args.pair, space)
            report = probe_compat(pair, samples=args.samples, seed=args.seed)
        else:
            raise ValueError("pass one of --space, --op, --pair")
    except (ValueError, ConfigurationError) as exc:
        print(f"bad spec: {exc}", file=sys.stderr)
        return 1
    print(report.to_json(indent=2))
    return 0 if report.passed else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coneiter",
        description="fixed-point iteration laboratory for cone-normed spaces")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config file")
    p_run.add_argument("--config", required=True, help="path to a JSON config")
    p_run.add_argument("--out", default="results", help="output directory")
    p_run.add_argument("--svg", action="store_true",
                       help="render the comparison figure regardless of config")
    p_run.add_argument("--force", action="store_true",
                       help="run even if theorem preconditions fail")
    p_run.set_defaults(func=_cmd_run)

    p_ex = sub.add_parser("example", help="run a built-in experiment")
    p_ex.add_argument("id", choices=sorted(EXPERIMENTS))
    p_ex.add_argument("--out", default="results", help="output directory")
    p_ex.add_argument("--svg", action="store_true",
                      help="render the comparison figure regardless of config")
    p_ex.add_argument("--force", action="store_true",
                      help="run even if theorem preconditions fail")
    p_ex.set_defaults(func=_cmd_example)

    p_chk = sub.add_parser("check", help="sample-test axioms or conditions")
    p_chk.add_argument("--space", help="space spec, e.g. scalar_p:0.5 or r2:2,0,0,1")
    p_chk.add_argument("--op", help="operator spec, e.g. saturating or linear:0.8")
    p_chk.add_argument("--pair",
                       help='pair spec, e.g. "S=T=linear:0.8" or '
                            '"S=identity,T=linear:0.8"')
    p_chk.add_argument("--class", dest="klass",
                       help="condition class for --op: qne or weak")
    p_chk.add_argument("--samples", type=int, default=10_000)
    p_chk.add_argument("--seed", type=int, default=0)
    p_chk.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
