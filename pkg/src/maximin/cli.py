"""Command line entry point: ``maximin {run,experiment,complexity,lowerbound}``.

Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.
Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bounds import RATE_KINDS, ExplorationRate
from .complexity import ComplexityError, complexity_report, lower_bound
from .harness import ExperimentConfig, emit, run_experiment, simulate
from .model import InstanceError, RunResult, is_eps_optimal, load_instance
from .strategies import ALGORITHMS, DEFAULT_CAP, StrategyConfig, StrategyError, normalize_algorithm


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_rate_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rate", default="practical", choices=RATE_KINDS)
    p.add_argument("--alpha", type=float, help="corollary1 exponent")
    p.add_argument("--C", dest="C", type=float, help="corollary1 constant (computed if omitted)")
    p.add_argument("--b", type=float, help="corollary2 log-log(1/delta) weight")
    p.add_argument("--c", type=float, help="corollary2 log-log(t) weight")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="maximin", description="Maximin action identification")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="one run, printed as JSON")
    run.add_argument("--instance", required=True)
    run.add_argument("--algo", required=True, help=", ".join(ALGORITHMS))
    run.add_argument("--delta", type=float, default=0.1)
    run.add_argument("--epsilon", type=float, default=0.0)
    run.add_argument("--seed", type=int, default=0)
    _add_rate_flags(run)
    run.add_argument("--two-action-single-draw", nargs="?", const="least",
                     choices=["least", "most"], default=None,
                     help="draw one arm per epoch (2 actions only); default picks the least drawn")
    run.add_argument("--refined-ck", action="store_true")
    run.add_argument("--cap", type=int, default=DEFAULT_CAP)

    exp = sub.add_parser("experiment", help="Monte Carlo experiment from a JSON config")
    exp.add_argument("--config", required=True)
    exp.add_argument("--reps", type=int, help="override the configured replication count")
    exp.add_argument("--seed", type=int, help="override the master seed")
    exp.add_argument("--out", choices=["csv", "json"], help="override the output format")

    cx = sub.add_parser("complexity", help="complexity constants as JSON")
    cx.add_argument("--instance", required=True)
    cx.add_argument("--delta", type=float, default=0.1)
    cx.add_argument("--epsilon", type=float, default=0.0)
    _add_rate_flags(cx)

    lb = sub.add_parser("lowerbound", help="lower bound for a 2x2 game as JSON")
    lb.add_argument("--instance", required=True)
    lb.add_argument("--delta", type=float, default=0.1)
    return parser


def _read_instance(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InstanceError(f"cannot read instance {path}: {exc.strerror}") from None
    return load_instance(text, name=Path(path).stem)


def _rate(args) -> ExplorationRate:
    params = {k: getattr(args, k) for k in ("alpha", "C", "b", "c") if getattr(args, k) is not None}
    return ExplorationRate(args.rate, params)


def _cmd_run(args) -> str:
    inst = _read_instance(args.instance)
    algo = normalize_algorithm(args.algo)
    config = StrategyConfig(delta=args.delta, epsilon=args.epsilon, rate=_rate(args),
                            two_action=args.two_action_single_draw, refined_ck=args.refined_ck,
                            cap=args.cap)
    seed = args.seed & 0xFFFFFFFFFFFFFFFF
    batch = simulate(inst, algo, config, np.array([seed], dtype=np.uint64))
    draws = [int(x) for x in batch.draws[0]]
    rec = int(batch.recommended[0])
    res = RunResult(sum(draws), draws, rec, "cap" if batch.capped[0] else "confidence",
                    is_eps_optimal(inst, rec, args.epsilon), algo, seed)
    return json.dumps(res.to_dict())


def _cmd_experiment(args) -> bytes:
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InstanceError(f"cannot read config {args.config}: {exc.strerror}") from None
    try:
        config = ExperimentConfig.from_json(text, base_dir=path.parent)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InstanceError(f"bad experiment config: {exc}") from None
    if args.reps is not None:
        config.reps = args.reps
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out = args.out
    config.__post_init__()
    return emit(run_experiment(config), config.out)


def _cmd_complexity(args) -> str:
    inst = _read_instance(args.instance)
    if not 0 < args.delta < 1:
        raise ComplexityError("delta must lie in (0, 1)")
    rate = _rate(args).resolved(inst)
    return json.dumps(complexity_report(inst, rate, args.delta, args.epsilon).to_dict())


def _cmd_lowerbound(args) -> str:
    inst = _read_instance(args.instance)
    bound, lb = lower_bound(inst, args.delta)
    return json.dumps({"t_star": lb.t_star, "w_star": lb.w_star, "bound": bound})


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"maximin: error: {exc}", file=sys.stderr)
        return 1
    handlers = {"run": _cmd_run, "experiment": _cmd_experiment,
                "complexity": _cmd_complexity, "lowerbound": _cmd_lowerbound}
    try:
        out = handlers[args.command](args)
    except (InstanceError, StrategyError, ComplexityError, ValueError) as exc:
        print(f"maximin: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"maximin: runtime failure: {exc!r}", file=sys.stderr)
        return 2
    if isinstance(out, bytes):
        sys.stdout.buffer.write(out)
        sys.stdout.flush()
    else:
        print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
