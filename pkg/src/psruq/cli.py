"""Command-line entry point: ``psruq compute`` and ``psruq oracle-check``.

Exit codes: 0 success, 2 when some rows failed (or the oracle check found a
deviation above threshold), 1 on usage or fatal errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .credal import CredalSet, psr_au_bounds, psr_eu, upper_entropy
from .io import (
    AGENT_TYPES,
    METHODS,
    AgentDocument,
    BatchDataset,
    ConfigError,
    ReportConfig,
    SchemaError,
    compute_report,
    parse_batch_csv,
    parse_json_batch,
    write_csv,
    write_json,
)
from .polytope import GridTooLargeError, OptConfig, grid_oracle
from .scoring import RULE_NAMES, LogRule, make_rule
from .simplex import DEFAULT_TOL, LogBase

logger = logging.getLogger("psruq")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="input file, or '-' for standard input")
    p.add_argument("--format", choices=("json", "csv"), help="input format (default: from extension)")
    p.add_argument("--agent", choices=AGENT_TYPES,
                   help="agent type; required for CSV, reinterprets bayesian/credal JSON")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="normalization tolerance")
    p.add_argument("--base", choices=[b.value for b in LogBase], default="bits")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psruq", description="Aleatoric and epistemic uncertainty from proper scoring rules.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    compute = sub.add_parser("compute", help="compute an uncertainty report")
    _add_input_args(compute)
    compute.add_argument("--method", choices=METHODS, default="psr")
    compute.add_argument("--loss", choices=RULE_NAMES, default="log")
    compute.add_argument("--output", help="report destination (default: standard output)")
    compute.add_argument("--output-format", choices=("csv", "json"), default="csv")
    compute.add_argument("--seed", type=int, default=0)
    compute.add_argument("--alpha-samples", type=int, default=1000,
                         help="Monte Carlo draws per Dirichlet agent")
    compute.add_argument("--epsilon-smoothing", type=float, nargs="?", const=1e-10, default=None,
                         metavar="FLOAT", help="mix log-loss predictions with uniform (default 1e-10)")
    compute.add_argument("--fail-fast", action="store_true", help="abort on the first failing instance")

    oracle = sub.add_parser("oracle-check", help="compare optimizers against the grid oracle (K <= 3)")
    _add_input_args(oracle)
    oracle.add_argument("--loss", choices=RULE_NAMES, action="append",
                        help="rule to check (repeatable; default all)")
    oracle.add_argument("--step", type=float, default=0.01)
    oracle.add_argument("--threshold", type=float, default=1e-3)
    return parser


def _load(args, strict: bool) -> BatchDataset:
    fmt = args.format
    if fmt is None:
        fmt = "csv" if str(args.input).lower().endswith(".csv") else "json"
    source = sys.stdin if args.input == "-" else Path(args.input)
    if source is not sys.stdin and not source.exists():
        raise UsageError(f"input file not found: {args.input}")
    if fmt == "csv":
        if args.agent is None:
            raise UsageError("--agent is required for CSV input")
        return parse_batch_csv(source, args.agent, args.tol, strict=strict)
    ds = parse_json_batch(source, args.tol, strict=strict)
    if args.agent is not None:
        ds.rows = [(i, d.reinterpret(args.agent) if isinstance(d, AgentDocument) else d)
                   for i, d in ds.rows]
    return ds


def run_compute(args) -> int:
    base = LogBase(args.base)
    if args.alpha_samples < 1:
        raise UsageError("--alpha-samples must be positive")
    config = ReportConfig(loss=args.loss, method=args.method, base=base, seed=args.seed,
                          alpha_samples=args.alpha_samples, epsilon=args.epsilon_smoothing,
                          fail_fast=args.fail_fast, opt=OptConfig(seed=args.seed))
    if args.method == "classic" and args.loss != "log":
        raise UsageError("--method classic is defined for --loss log only")
    if args.method == "classic" and args.agent == "credal":
        raise UsageError("--method classic does not apply to credal agents")
    ds = _load(args, strict=args.fail_fast)
    rows = compute_report(ds, config)
    writer = write_json if args.output_format == "json" else write_csv
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            writer(rows, fh)
    else:
        writer(rows, sys.stdout)
    failed = sum(not r.ok for r in rows)
    if failed:
        logger.warning("%d of %d instances failed", failed, len(rows))
        return 2
    return 0


def oracle_deviations(credal: CredalSet, rules, base: LogBase, step: float) -> dict[str, float]:
    """Absolute optimizer-minus-grid differences for one credal set."""
    out = {}
    log = LogRule(base)
    out["upper_entropy"] = abs(upper_entropy(credal, base) - grid_oracle(log.entropy, credal, step))
    for rule in rules:
        lo, hi = psr_au_bounds(credal, rule)
        out[f"{rule.name}:au_lower"] = abs(lo - grid_oracle(rule.entropy, credal, step, maximize=False))
        out[f"{rule.name}:au_upper"] = abs(hi - grid_oracle(rule.entropy, credal, step))
        try:
            ref = grid_oracle(rule.pairwise_divergence, credal, step, pair=True)
        except GridTooLargeError:
            ref = grid_oracle(rule.pairwise_divergence, credal, step, pair=True, inner="vertices")
        eu = psr_eu(credal, rule)
        out[f"{rule.name}:eu"] = 0.0 if eu == ref else abs(eu - ref)
    return out


def run_oracle_check(args) -> int:
    base = LogBase(args.base)
    ds = _load(args, strict=True)
    if (ds.k or 0) > 3:
        raise UsageError(f"oracle-check supports K <= 3, got K={ds.k}")
    rules = [make_rule(name, base) for name in (args.loss or RULE_NAMES)]
    worst: dict[str, float] = {}
    for ident, doc in ds.rows:
        doc = doc.reinterpret("credal") if doc.agent == "bayesian" else doc
        if doc.agent != "credal":
            raise UsageError(f"instance {ident}: oracle-check needs credal or bayesian input")
        for key, dev in oracle_deviations(CredalSet(doc.vertices), rules, base, args.step).items():
            worst[key] = max(worst.get(key, 0.0), dev)
    for key in sorted(worst):
        print(f"{key}\t{worst[key]:.3e}")
    overall = max(worst.values())
    print(f"max_deviation\t{overall:.3e}")
    return 0 if overall <= args.threshold else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "compute":
            return run_compute(args)
        return run_oracle_check(args)
    except (UsageError, ConfigError, SchemaError, ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"psruq: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
