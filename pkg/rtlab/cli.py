"""Command-line interface for rtlab."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

from .const import (
    BE_DEFAULT_DIM,
    BE_DEFAULT_FAR,
    BE_DEFAULT_NEAR,
    DEFAULT_REFUTER_TRIALS,
    DESK_NU,
    EXIT_CLAIM_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    TOOL_VERSION,
)
from .core.exceptions import (
    ClaimFailedError,
    ExtractionError,
    InvalidParameterError,
    RtlabError,
)
from .core.graph_io import format_edge_list, format_graph6, read_graph, write_graph
from .core.models import as_fraction
from .extraction import (
    RefuterBudget,
    extract_min_degree_core,
    extract_regular_pair,
    peel_min_degree,
)
from .generators import GenKind, GenSpec, generate
from .oracles import OracleBudget, find_k4, independence_number
from .pipeline import ClaimMode, PipelineConfig, edge_bound, run_pipeline
from .regularity import is_eps_plus_regular_exact, refute_eps_plus_sampled, split_pair
from .report import ExperimentReport, csv_row, dump_report, write_csv, write_report
from .suites import SUITES, SuiteOptions, run_suites

_LOGGER = logging.getLogger(__name__)


def _rational(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except InvalidParameterError as err:
        raise argparse.ArgumentTypeError(err.message) from err


def _budget(args: argparse.Namespace) -> OracleBudget:
    if args.budget_nodes is None and args.budget_secs is None:
        return OracleBudget.default()
    return OracleBudget(node_limit=args.budget_nodes, time_limit=args.budget_secs)


def _emit(report: ExperimentReport, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(dump_report(report))
    else:
        write_report(report, out)
        _LOGGER.info("Report written to %s", out)


# Handlers


def _cmd_gen(args: argparse.Namespace) -> int:
    params: dict[str, Any] = {}
    for name in ("n", "p", "a", "b", "delta", "target_density", "dim", "theta_near", "theta_far"):
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    spec = GenSpec(GenKind(args.kind), params, args.seed)
    graph = generate(spec)
    _LOGGER.info("Generated %s graph: n=%d e=%d", args.kind, graph.n, graph.edge_total)
    if args.out is None:
        text = format_graph6(graph) if args.format == "graph6" else format_edge_list(graph)
        sys.stdout.write(text)
    else:
        write_graph(graph, args.out, args.format)
    return EXIT_OK


def _cmd_mis(args: argparse.Namespace) -> int:
    result = independence_number(read_graph(args.graph), _budget(args))
    if args.json:
        print(json.dumps(result.to_dict(), sort_keys=True))
    elif result.exact:
        print(result.lower)
    else:
        print(f"{result.lower}..{result.upper}")
    return EXIT_OK


def _cmd_k4(args: argparse.Namespace) -> int:
    clique = find_k4(read_graph(args.graph))
    print("none" if clique is None else " ".join(map(str, clique)))
    return EXIT_OK


def _cmd_regular(args: argparse.Namespace) -> int:
    graph = read_graph(args.graph)
    pair = split_pair(graph, args.split)
    report = ExperimentReport(
        f"regular {args.action}",
        config={
            "split": args.split,
            "eps": str(args.eps),
            "trials": args.trials,
            "seed": args.seed,
        },
        input_hash=graph.digest(),
    )
    with report.timed(args.action):
        if args.action == "check":
            verdict = is_eps_plus_regular_exact(pair, args.eps)
        else:
            verdict = refute_eps_plus_sampled(pair, args.eps, args.trials, args.seed)
    report.results["verdict"] = verdict.to_dict()
    _emit(report, args.out)
    return EXIT_OK


def _cmd_extract(args: argparse.Namespace) -> int:
    graph = read_graph(args.graph)
    report = ExperimentReport(f"extract {args.action}", input_hash=graph.digest())
    if args.action == "pair":
        if args.eps is None or args.delta is None:
            raise InvalidParameterError("extract pair needs --eps and --delta")
        pair = split_pair(graph, args.split)
        refuter = RefuterBudget(trials=args.trials, seed=args.seed)
        report.config = {
            "split": args.split,
            "eps": str(args.eps),
            "delta": str(args.delta),
            "refuter": refuter.to_dict(),
        }
        with report.timed("extract"):
            _, trace = extract_regular_pair(pair, args.eps, args.delta, refuter)
        report.results["trace"] = trace.to_dict()
    else:
        alpha = args.alpha
        if alpha is None:
            alpha = independence_number(graph, _budget(args)).upper
        report.config = {"alpha_count": alpha, "peel_only": args.peel_only}
        with report.timed("core"):
            core = peel_min_degree(graph, alpha) if args.peel_only else extract_min_degree_core(
                graph, alpha
            )
        report.results["core"] = core.to_dict()
    _emit(report, args.out)
    return EXIT_OK


def _cmd_pipeline(args: argparse.Namespace) -> int:
    graph = read_graph(args.graph)
    cfg = PipelineConfig(
        nu=args.nu,
        alpha_count=args.alpha,
        seed=args.seed,
        claim_mode=ClaimMode(args.mode),
        refuter=RefuterBudget(trials=args.trials, seed=args.seed),
        oracle=_budget(args),
    )
    report = ExperimentReport("pipeline run", config=cfg.to_dict(), input_hash=graph.digest())
    with report.timed("pipeline"):
        run = run_pipeline(graph, cfg)
    report.results = run.to_dict()
    _emit(report, args.out)
    if args.csv is not None:
        write_csv([csv_row(str(args.graph), run)], args.csv)
    return EXIT_OK


def _cmd_bound(args: argparse.Namespace) -> int:
    bound = edge_bound(
        args.n, args.k, args.alpha, m_a=args.m_a, m_b=args.m_b, e_g=args.e_g, e_gprime=args.e_gprime
    )
    report = ExperimentReport(
        "bound",
        config={"n": args.n, "k": str(args.k), "alpha_count": args.alpha},
        results={"bound": bound.to_dict()},
    )
    _emit(report, args.out)
    return EXIT_OK


def _cmd_suite(args: argparse.Namespace) -> int:
    options = SuiteOptions(max_side=args.max_side, max_n=args.max_n)
    report = ExperimentReport(
        "suite",
        config={
            "suites": list(args.names),
            "instances": args.instances,
            "seed": args.seed,
            "options": options.to_dict(),
        },
    )
    with report.timed("suites"):
        results, diagnostics = run_suites(
            args.names, args.instances, args.seed, options, out_dir=args.instances_dir
        )
    report.results = {
        "suites": [result.to_dict() for result in results],
        "diagnostics": {key: value for key, value in diagnostics.items() if key != "last_elapsed"},
    }
    _emit(report, args.out)
    for result in results:
        _LOGGER.info(
            "%s: %d instances, %d failed", result.name, len(result.outcomes), len(result.failures)
        )
    return EXIT_OK if all(result.ok for result in results) else EXIT_CLAIM_FAILED


# Parser


def _add_budget(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--budget-nodes", type=int, default=None, help="oracle node limit")
    parser.add_argument("--budget-secs", type=float, default=None, help="oracle time limit")


def build_parser() -> argparse.ArgumentParser:
    """Return the rtlab argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    common.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    common.add_argument("--out", type=Path, default=None, help="output file")
    common.add_argument("--seed", type=int, default=0, help="random seed")

    parser = argparse.ArgumentParser(prog="rtlab", description="Ramsey-Turan K4 toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="generate a graph")
    gen.add_argument("--kind", required=True, choices=[kind.value for kind in GenKind])
    gen.add_argument("--n", type=int)
    gen.add_argument("--p", type=_rational)
    gen.add_argument("--a", type=int)
    gen.add_argument("--b", type=int)
    gen.add_argument("--delta", type=_rational)
    gen.add_argument("--target-density", dest="target_density", type=_rational)
    gen.add_argument("--dim", type=int, help=f"sphere dimension (default {BE_DEFAULT_DIM})")
    gen.add_argument("--near", dest="theta_near", type=float, help=f"default {BE_DEFAULT_NEAR}")
    gen.add_argument("--far", dest="theta_far", type=float, help=f"default {BE_DEFAULT_FAR}")
    gen.add_argument("--format", choices=("edgelist", "graph6"), default="edgelist")
    gen.set_defaults(handler=_cmd_gen)

    mis = sub.add_parser("mis", parents=[common], help="independence number")
    mis.add_argument("graph", type=Path)
    mis.add_argument("--json", action="store_true")
    _add_budget(mis)
    mis.set_defaults(handler=_cmd_mis)

    k4 = sub.add_parser("k4", parents=[common], help="find a K4")
    k4.add_argument("graph", type=Path)
    k4.set_defaults(handler=_cmd_k4)

    regular = sub.add_parser("regular", parents=[common], help="eps-plus regularity")
    regular.add_argument("action", choices=("check", "refute"))
    regular.add_argument("graph", type=Path)
    regular.add_argument("--split", type=int, required=True, help="A = vertices below split")
    regular.add_argument("--eps", type=_rational, required=True)
    regular.add_argument("--trials", type=int, default=DEFAULT_REFUTER_TRIALS)
    regular.set_defaults(handler=_cmd_regular)

    extract = sub.add_parser("extract", parents=[common], help="pair or core extraction")
    extract.add_argument("action", choices=("pair", "core"))
    extract.add_argument("graph", type=Path)
    extract.add_argument("--split", type=int, default=None)
    extract.add_argument("--eps", type=_rational)
    extract.add_argument("--delta", type=_rational)
    extract.add_argument("--trials", type=int, default=DEFAULT_REFUTER_TRIALS)
    extract.add_argument("--alpha", type=int, default=None)
    extract.add_argument("--peel-only", action="store_true")
    _add_budget(extract)
    extract.set_defaults(handler=_cmd_extract)

    pipeline = sub.add_parser("pipeline", parents=[common], help="partition pipeline")
    pipeline.add_argument("action", choices=("run",))
    pipeline.add_argument("graph", type=Path)
    pipeline.add_argument("--nu", type=_rational, default=DESK_NU)
    pipeline.add_argument("--alpha", type=int, default=None)
    pipeline.add_argument("--mode", choices=[mode.value for mode in ClaimMode], default="diagnose")
    pipeline.add_argument("--trials", type=int, default=DEFAULT_REFUTER_TRIALS)
    pipeline.add_argument("--csv", type=Path, default=None, help="sweep row CSV file")
    _add_budget(pipeline)
    pipeline.set_defaults(handler=_cmd_pipeline)

    bound = sub.add_parser("bound", parents=[common], help="closing edge bound")
    bound.add_argument("--n", type=int, required=True)
    bound.add_argument("--k", type=_rational, required=True)
    bound.add_argument("--alpha", type=int, required=True)
    bound.add_argument("--m-a", dest="m_a", type=int)
    bound.add_argument("--m-b", dest="m_b", type=int)
    bound.add_argument("--e-g", dest="e_g", type=int)
    bound.add_argument("--e-gprime", dest="e_gprime", type=int)
    bound.set_defaults(handler=_cmd_bound)

    suite = sub.add_parser("suite", parents=[common], help="acceptance suites")
    suite.add_argument("names", nargs="+", choices=[*SUITES, "all"])
    suite.add_argument("--instances", type=int, default=None)
    suite.add_argument("--max-side", type=int, default=None)
    suite.add_argument("--max-n", type=int, default=None)
    suite.add_argument("--instances-dir", type=Path, default=None, help="per-instance JSON files")
    suite.set_defaults(handler=_cmd_suite)
    return parser


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code in (0, None) else EXIT_USAGE
    _configure_logging(args.verbose, args.quiet)

    if args.command == "extract" and args.action == "pair" and args.split is None:
        _LOGGER.error("extract pair needs --split")
        return EXIT_USAGE

    try:
        return args.handler(args)
    except (ClaimFailedError, ExtractionError) as err:
        _LOGGER.error("%s", err.message)
        return EXIT_CLAIM_FAILED
    except RtlabError as err:
        _LOGGER.error("%s", err.message)
        return EXIT_USAGE
    except OSError as err:
        _LOGGER.error("I/O error: %s", err)
        return EXIT_USAGE
    except Exception:
        _LOGGER.exception("Unexpected error running %s", args.command)
        return EXIT_CLAIM_FAILED
