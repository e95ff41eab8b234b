"""Command-line interface: solve, bench, train-matrix, rank-check, count-pieces.

Exit codes: 0 ok, 2 missing file, 3 parse/schema error, 4 cap violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import bench
from .errors import CapExceededError
from .graph import Instance
from .mixing import MixingNetwork, count_pieces
from .optimize import brute_force_solve, enumerate_optimize, iterative_optimize
from .matrix_game import rank_check
from .training import TrainConfig, train_matrix_game

EXIT_OK, EXIT_MISSING, EXIT_PARSE, EXIT_CAP = 0, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _load_json(path: str):
    p = Path(path)
    if not p.is_file():
        raise _Fail(EXIT_MISSING, f"file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise _Fail(EXIT_PARSE, f"{path}: malformed JSON: {exc}") from None


def cmd_solve(args) -> int:
    inst_data = _load_json(args.instance)
    net_data = _load_json(args.network)
    try:
        inst = Instance.from_dict(inst_data)
        net = MixingNetwork.from_dict(net_data)
    except ValueError as exc:
        raise _Fail(EXIT_PARSE, f"schema error: {exc}") from None
    if net.input_dim != inst.graph.input_dim:
        raise _Fail(EXIT_PARSE, f"network expects {net.input_dim} inputs, instance provides {inst.graph.input_dim}")
    g, f_V, f_E = inst.graph, inst.utilities, inst.payoffs
    if args.method == "brute":
        res = brute_force_solve(g, f_V, f_E, net)
    elif args.method == "enumerate":
        res = enumerate_optimize(g, f_V, f_E, net, inner=args.inner, rounds=args.rounds)
    else:
        res = iterative_optimize(
            g, f_V, f_E, net, k=args.rounds, n_max=args.n_max, epsilon0=args.epsilon0, seed=args.seed, inner=args.inner
        )
    text = _dump(res.to_dict())
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    records = bench.run_bench(
        args.instances,
        args.agents,
        args.actions,
        args.widths,
        args.methods,
        seed=args.seed,
        alpha=args.alpha,
        rounds=args.rounds,
        n_max=args.n_max,
        epsilon0=args.epsilon0,
        timing=not args.no_timing,
    )
    text = bench.to_csv(records)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for method, s in bench.summarize(records).items():
        fmt = lambda v: "NA" if v is None else f"{v:.6g}"  # noqa: E731
        print(
            f"summary method={method} mean_gap={fmt(s['mean_gap'])} "
            f"mean_time={fmt(s['mean_time'])} mean_pieces={fmt(s['mean_pieces'])}",
            file=sys.stderr if not args.out else sys.stdout,
        )
    return EXIT_OK


def cmd_train_matrix(args) -> int:
    config = TrainConfig(
        learner=args.learner,
        episodes=args.episodes,
        epsilon=args.epsilon,
        gamma=args.gamma,
        buffer=args.buffer,
        batch=args.batch,
        target_update=args.target_update,
        lr=args.lr,
        m_mix=args.m_mix,
        alpha=args.alpha,
        optimizer=args.optimizer,
        seed=args.seed,
    )
    result = train_matrix_game(config)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "curve.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["episode", "eval_return", "td_loss"])
            for row in result.curve:
                writer.writerow([row[0], repr(float(row[1])), repr(float(row[2]))])
        (out / "report.json").write_text(_dump(result.report) + "\n", encoding="utf-8")
        (out / "checkpoint.json").write_text(_dump(result.model.to_dict()) + "\n", encoding="utf-8")
    print(_dump(result.report))
    return EXIT_OK


def cmd_rank_check(args) -> int:
    coef, aug = rank_check()
    print(f"coef_rank={coef} aug_rank={aug}")
    return EXIT_OK if (coef, aug) == (3, 4) else 1


def cmd_count_pieces(args) -> int:
    try:
        print(count_pieces(args.m, args.d))
    except ValueError as exc:
        raise _Fail(EXIT_PARSE, str(exc)) from None
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlcg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--rounds", type=int, default=4, help="Max-Sum rounds per piece")
        p.add_argument("--n-max", type=int, default=4, help="iterative piece budget")
        p.add_argument("--epsilon0", type=float, default=0.2)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("solve", help="maximise a mixed coordination graph")
    p.add_argument("instance")
    p.add_argument("network")
    p.add_argument("--method", choices=["enumerate", "iterative", "brute"], default="enumerate")
    p.add_argument("--inner", choices=["maxsum", "exact"], default="maxsum")
    p.add_argument("--out")
    solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="randomised optimality/timing benchmark (CSV)")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--agents", type=int, default=4)
    p.add_argument("--actions", type=int, default=2)
    p.add_argument("--widths", type=int, nargs="+", default=[3])
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--methods", nargs="+", default=["enumerate:exact", "brute"], choices=bench.METHODS)
    p.add_argument("--no-timing", action="store_true", help="write 0 for wall times (byte-stable output)")
    p.add_argument("--out")
    solver_flags(p)
    p.set_defaults(func=cmd_bench)

    defaults = TrainConfig()
    p = sub.add_parser("train-matrix", help="TD-train a learner on the two-step matrix game")
    p.add_argument("--learner", choices=["nlcg", "linear"], default=defaults.learner)
    p.add_argument("--episodes", type=int, default=defaults.episodes)
    p.add_argument("--epsilon", type=float, default=defaults.epsilon)
    p.add_argument("--gamma", type=float, default=defaults.gamma)
    p.add_argument("--buffer", type=int, default=defaults.buffer)
    p.add_argument("--batch", type=int, default=defaults.batch)
    p.add_argument("--target-update", type=int, default=defaults.target_update)
    p.add_argument("--lr", type=float, default=defaults.lr)
    p.add_argument("--m-mix", type=int, default=defaults.m_mix)
    p.add_argument("--alpha", type=float, default=defaults.alpha)
    p.add_argument("--optimizer", choices=["rmsprop", "sgd"], default=defaults.optimizer)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--out", help="directory for curve.csv, report.json, checkpoint.json")
    p.set_defaults(func=cmd_train_matrix)

    p = sub.add_parser("rank-check", help="ranks of the linear-CG system for state 2B")
    p.set_defaults(func=cmd_rank_check)

    p = sub.add_parser("count-pieces", help="linear-piece count bound for m units in d dimensions")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_count_pieces)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
