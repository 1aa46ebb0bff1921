"""
Command-line entry point for Spillover Forge.

Subcommands:
- gen: generate an instance file
- solve: run an optimizer on an instance
- equilibrium: greatest equilibrium (or dynamics from zeros) under PRA shares
- probe: exhaustive grid search for pure equilibria
- check: complementarity, supermodularity and mechanism axiom diagnostics
- experiment: random-graph parameter sweeps (CSV + SVG)

Machine-readable results go to stdout (and to --out when given); logs and the
resolved configuration go to stderr.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import networkx as nx
import numpy as np
import pandas as pd

from app import __version__
from app.api.schemas import RandomGraphParams, SolverConfig, SweepConfig
from app.core.config import settings
from app.core.exceptions import InstanceFormatError, SpilloverForgeError
from app.langgraph.workflow import run_pipeline, sweep_tag
from app.models.game import Instance, as_allocation
from app.models.mechanism import PRA, parse_mechanism
from app.models.tree import TreeInstance
from app.services.equilibrium_service import best_response_dynamics, find_pne_grid, greatest_equilibrium
from app.services.game_service import check_complementarity, check_supermodularity
from app.services.instance_service import (
    FIXTURES,
    beta_bounded_instance,
    clique_reduction_instance,
    knapsack_reduction_instance,
    load_instance,
    random_graph_instance,
    random_tree_instance,
    save_instance,
)
from app.services.mechanism_service import check_axioms
from app.services.optimizer_service import ALGORITHMS, equal_allocation, run_solver
from app.services.tree_service import tree_to_instance
from config.presets import DEFAULT_INSTANCES_PER_POINT, SWEEP_PRESETS, expand_preset

logger = logging.getLogger(__name__)

GEN_KINDS = ("random-graph", "random-tree", "clique", "wta-counter", "tullock-counter", "knapsack", "beta-bounded")
MECHANISM_KINDS = ("pra", "wta", "tullock")


# ============================================================================
# Parsing helpers
# ============================================================================

def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got '{text}'")


def _edge_list(text: str) -> List[tuple]:
    edges = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        try:
            u, v = part.split("-")
            edges.append((int(u), int(v)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"edges look like '0-1,1-2', got '{part}'")
    return edges


def _read_shares(value: str) -> List[float]:
    """Shares from a JSON file (list or {"p": [...]}) or an inline list."""
    path = Path(value)
    if path.is_file():
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise InstanceFormatError(f"malformed shares file {path}: {e.msg}", offset=e.pos)
        if isinstance(data, dict):
            if "p" not in data:
                raise InstanceFormatError(f"shares file {path} has no 'p' entry")
            data = data["p"]
    elif value.strip().startswith("["):
        try:
            data = json.loads(value)
        except json.JSONDecodeError as e:
            raise InstanceFormatError(f"malformed shares list: {e.msg}", offset=e.pos)
    else:
        return _float_list(value)
    if not isinstance(data, list):
        raise InstanceFormatError("shares must be a JSON list of numbers")
    try:
        return [float(v) for v in data]
    except (TypeError, ValueError):
        raise InstanceFormatError("shares must be a JSON list of numbers")


def _as_instance(model) -> Instance:
    return tree_to_instance(model) if isinstance(model, TreeInstance) else model


def _emit(payload: str, out: Optional[str]) -> None:
    print(payload)
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(payload + "\n", encoding="utf-8")


def _solver_config(args) -> SolverConfig:
    delta = getattr(args, "delta", None)
    return SolverConfig(delta=delta) if delta is not None else SolverConfig()


# ============================================================================
# Subcommands
# ============================================================================

def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "random-graph":
        model = random_graph_instance(RandomGraphParams(n=args.n, r=args.r, qstar=args.qstar, seed=args.seed))
    elif kind == "random-tree":
        model = random_tree_instance(args.n, args.qstar, args.seed)
    elif kind == "clique":
        if args.edges is not None:
            graph = nx.Graph()
            graph.add_nodes_from(range(args.n))
            graph.add_edges_from(args.edges)
        else:
            graph = nx.gnp_random_graph(args.n, args.r, seed=args.seed)
        model = clique_reduction_instance(graph)
    elif kind == "knapsack":
        if args.values is None or args.weights is None or args.capacity is None:
            raise argparse.ArgumentTypeError("knapsack needs --values, --weights and --capacity")
        model = knapsack_reduction_instance(args.values, args.weights, args.capacity)
    elif kind == "beta-bounded":
        model = beta_bounded_instance(args.n, args.beta, args.epsilon, args.seed)
    else:
        model, _ = FIXTURES[kind]()

    payload = model.model_dump_json(indent=2)
    if args.out:
        save_instance(model, args.out)
    print(payload)
    return 0


def cmd_solve(args) -> int:
    inst = _as_instance(load_instance(args.instance))
    cfg = _solver_config(args)
    outcome = run_solver(
        inst,
        args.algo,
        eps=args.epsilon,
        cfg=cfg,
        record_timings=args.record_timings,
        verify=args.verify,
    )
    _emit(outcome.model_dump_json(indent=2), args.out)
    return 0


def cmd_equilibrium(args) -> int:
    inst = _as_instance(load_instance(args.instance))
    p = _read_shares(args.p)
    cfg = _solver_config(args)
    if args.start == "ones":
        result = greatest_equilibrium(inst, p, cfg=cfg)
    else:
        result = best_response_dynamics(inst, p, np.zeros(inst.n), cfg=cfg)
    if args.trace:
        frame = pd.DataFrame(result.trace, columns=[f"x_{i + 1}" for i in range(inst.n)])
        frame.insert(0, "iter", range(len(frame)))
        Path(args.trace).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(args.trace, index=False)
    _emit(result.model_dump_json(indent=2), args.out)
    return 0


def _mechanism(spec: str, inst: Instance, shares: Optional[str]):
    """
    Mechanism from a kind name, an inline {kind, p?} document or a file holding one.

    A bare "pra" takes its shares from --p and defaults to equal allocation.
    """
    if spec in MECHANISM_KINDS:
        document = {"kind": spec}
        if spec == "pra":
            document["p"] = _read_shares(shares) if shares else equal_allocation(inst.n).tolist()
    else:
        path = Path(spec)
        if path.is_file():
            text = path.read_text(encoding="utf-8")
        elif spec.lstrip().startswith("{"):
            text = spec
        else:
            raise argparse.ArgumentTypeError(
                f"--mechanism takes {', '.join(MECHANISM_KINDS)}, a JSON document or a file, got '{spec}'"
            )
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise InstanceFormatError(f"malformed mechanism document: {e.msg}", offset=e.pos)
    mech = parse_mechanism(document)
    if isinstance(mech, PRA):
        as_allocation(mech.p, inst.n)
    return mech


def cmd_probe(args) -> int:
    if args.fixture:
        inst, mech = FIXTURES[args.fixture]()
        if args.mechanism:
            mech = _mechanism(args.mechanism, inst, args.p)
    elif args.instance:
        inst = _as_instance(load_instance(args.instance))
        mech = _mechanism(args.mechanism or "pra", inst, args.p)
    else:
        raise argparse.ArgumentTypeError("probe needs --fixture or --instance")

    cfg = _solver_config(args)
    profiles = find_pne_grid(inst, mech, delta=cfg.delta, cfg=cfg, workers=args.workers)
    if profiles:
        print(f"found {len(profiles)} grid PNE")
        for profile in profiles:
            print(" ".join(f"{x:g}" for x in profile))
    else:
        print("no grid PNE found")
    if args.out:
        document = {
            "instance": inst.label,
            "mechanism": mech.kind,
            "delta": cfg.delta,
            "profiles": [profile.tolist() for profile in profiles],
        }
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_check(args) -> int:
    if args.fixture:
        inst, _ = FIXTURES[args.fixture]()
    elif args.instance:
        inst = _as_instance(load_instance(args.instance))
    else:
        raise argparse.ArgumentTypeError("check needs --fixture or --instance")

    mechanisms = [_mechanism(kind, inst, args.p) for kind in MECHANISM_KINDS]
    complementarity = check_complementarity(inst, samples=args.samples, seed=args.seed)
    supermodularity = check_supermodularity(inst, mechanisms[0].p, samples=args.samples, seed=args.seed)
    axioms = [check_axioms(mech, n=inst.n, samples=args.samples, seed=args.seed) for mech in mechanisms]
    # WTA and Tullock are reported for comparison; only the PRA axioms gate the exit code
    passed = complementarity.passed and supermodularity.passed and axioms[0].passed
    document = {
        "instance": inst.label,
        "passed": passed,
        "complementarity": complementarity.model_dump(),
        "supermodularity": supermodularity.model_dump(),
        "axioms": [report.model_dump() for report in axioms],
    }
    _emit(json.dumps(document, indent=2), args.out)
    return 0 if passed else 1


def _sweep_configs(args) -> List[SweepConfig]:
    common = {
        "instances_per_point": args.instances,
        "master_seed": args.seed,
        "algorithms": args.algorithms,
        "out_dir": args.out_dir,
        "record_timings": args.record_timings,
    }
    if args.preset:
        return [
            SweepConfig(sweep_axis=s["axis"], axis_values=s["values"], fixed=s["fixed"], **common)
            for s in expand_preset(args.preset)
        ]
    if not args.sweep or not args.values:
        raise argparse.ArgumentTypeError("experiment needs --preset or both --sweep and --values")
    fixed = {
        key: value
        for key, value in (("n", args.fixed_n), ("r", args.fixed_r), ("qstar", args.fixed_qstar))
        if value is not None and key != args.sweep
    }
    return [SweepConfig(sweep_axis=args.sweep, axis_values=args.values, fixed=fixed, **common)]


def cmd_experiment(args) -> int:
    summary = []
    for cfg in _sweep_configs(args):
        state = run_pipeline(cfg, workers=args.workers, tag=sweep_tag(cfg))
        summary.append(
            {
                "tag": sweep_tag(cfg),
                "records": state["records_path"],
                "aggregate": state["csv_path"],
                "plot": state["plot_path"],
                "rows": [row.model_dump() for row in state["rows"]],
            }
        )
    _emit(json.dumps(summary, indent=2), args.out)
    return 0


# ============================================================================
# Parser
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Master seed (default: 0)")
    common.add_argument("--workers", type=int, default=None, help="Worker processes")
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Log level (default: SPILLOVER_FORGE_LOG_LEVEL)",
    )
    common.add_argument("--out", default=None, help="Also write the JSON result to this file")
    common.add_argument("--timings", action="store_true", help="Record wall times in outputs")

    parser = argparse.ArgumentParser(
        prog="spillover-forge",
        description="Allocation mechanisms for content creation games with spillovers",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="Generate an instance")
    gen.add_argument("--kind", choices=GEN_KINDS, required=True)
    gen.add_argument("--n", type=int, default=10)
    gen.add_argument("--r", type=float, default=0.5, help="Edge probability")
    gen.add_argument("--qstar", type=float, default=0.5, help="Support bound of q and g")
    gen.add_argument("--edges", type=_edge_list, default=None, help="Clique graph edges, e.g. 0-1,1-2")
    gen.add_argument("--values", type=_float_list, default=None, help="Knapsack item values")
    gen.add_argument("--weights", type=_float_list, default=None, help="Knapsack item weights")
    gen.add_argument("--capacity", type=float, default=None, help="Knapsack capacity")
    gen.add_argument("--beta", type=float, default=0.5, help="Spillover bound for beta-bounded")
    gen.add_argument("--epsilon", type=float, default=0.1, help="Share granularity for beta-bounded")
    gen.set_defaults(handler=cmd_gen)

    solve = sub.add_parser("solve", parents=[common], help="Compute an allocation")
    solve.add_argument("--instance", required=True)
    solve.add_argument(
        "--algo",
        choices=ALGORITHMS,
        required=True,
        help=(
            "hop needs a single rooted spillover tree; "
            "spillover-free instances with n >= 2 are forests and are rejected"
        ),
    )
    solve.add_argument("--epsilon", type=float, default=None, help="Share granularity")
    solve.add_argument("--delta", type=float, default=None, help="Effort grid step")
    solve.add_argument("--verify", action="store_true", help="Attach welfare at the greatest equilibrium")
    solve.set_defaults(handler=cmd_solve)

    eq = sub.add_parser("equilibrium", parents=[common], help="Best-response dynamics under PRA")
    eq.add_argument("--instance", required=True)
    eq.add_argument("--p", required=True, help="Shares: JSON file or comma list")
    eq.add_argument("--delta", type=float, default=None)
    eq.add_argument("--start", choices=["ones", "zeros"], default="ones")
    eq.add_argument("--trace", default=None, help="Write the sweep trace as CSV")
    eq.set_defaults(handler=cmd_equilibrium)

    probe = sub.add_parser("probe", parents=[common], help="Search the effort grid for pure equilibria")
    probe.add_argument("--fixture", choices=sorted(FIXTURES), default=None)
    probe.add_argument("--instance", default=None)
    probe.add_argument(
        "--mechanism", default=None, help="pra, wta, tullock, or a {kind, p?} JSON document or file"
    )
    probe.add_argument("--p", default=None, help="PRA shares (default: equal)")
    probe.add_argument("--delta", type=float, default=None)
    probe.set_defaults(handler=cmd_probe)

    check = sub.add_parser("check", parents=[common], help="Run model and mechanism diagnostics")
    check.add_argument("--fixture", choices=sorted(FIXTURES), default=None)
    check.add_argument("--instance", default=None)
    check.add_argument("--p", default=None, help="PRA shares (default: equal)")
    check.add_argument("--samples", type=int, default=200)
    check.set_defaults(handler=cmd_check)

    exp = sub.add_parser("experiment", parents=[common], help="Run random-graph sweeps")
    exp.add_argument("--preset", choices=sorted(SWEEP_PRESETS), default=None)
    exp.add_argument("--sweep", choices=["n", "r", "qstar"], default=None)
    exp.add_argument("--values", type=_float_list, default=None)
    exp.add_argument("--fixed-n", type=int, default=None)
    exp.add_argument("--fixed-r", type=float, default=None)
    exp.add_argument("--fixed-qstar", type=float, default=None)
    exp.add_argument("--instances", type=int, default=DEFAULT_INSTANCES_PER_POINT)
    exp.add_argument("--algorithms", type=lambda s: s.split(","), default=["gcs", "equal"])
    exp.add_argument("--out-dir", default=None, help="Artifact directory (default: SPILLOVER_FORGE_OUTPUT_DIR)")
    exp.set_defaults(handler=cmd_experiment)

    return parser


def _configure(args) -> None:
    level = args.log_level or settings.SPILLOVER_FORGE_LOG_LEVEL.upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
    args.workers = settings.resolve_workers(args.workers)
    args.record_timings = args.timings or settings.SPILLOVER_FORGE_RECORD_TIMINGS
    if getattr(args, "out_dir", "unset") is None:
        args.out_dir = settings.SPILLOVER_FORGE_OUTPUT_DIR

    resolved = {key: value for key, value in sorted(vars(args).items()) if key != "handler"}
    print(f"spillover-forge {__version__} {json.dumps(resolved, default=str)}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the CLI.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        int: Exit code (0 ok, 1 domain error, 2 usage error)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    _configure(args)
    try:
        return args.handler(args)
    except argparse.ArgumentTypeError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except SpilloverForgeError as e:
        logger.debug("Domain error", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        # pydantic ValidationError (a ValueError) from CLI-built configs
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
