"""Randomised optimality/timing benchmark over solver methods.

CSV columns, in order: instance_seed, method, q_max, oracle_q, gap,
wall_time, pieces_visited. ``gap`` is ``oracle_q - q_max``. Cells that
could not be computed because a cap was exceeded hold ``cap_exceeded``.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError
from .graph import complete_graph, random_instance
from .mixing import sample_random_net
from .optimize import brute_force_max, brute_force_solve, enumerate_optimize, iterative_optimize

COLUMNS = ("instance_seed", "method", "q_max", "oracle_q", "gap", "wall_time", "pieces_visited")
FLAG = "cap_exceeded"
METHODS = ("brute", "enumerate:exact", "enumerate:maxsum", "iterative", "iterative:exact")


@dataclass
class BenchRecord:
    instance_seed: int
    method: str
    q_max: float | None
    oracle_q: float | None
    gap: float | None
    wall_time: float | None
    pieces_visited: int | None

    def row(self) -> list[str]:
        def cell(v):
            if v is None:
                return FLAG
            return repr(float(v)) if isinstance(v, float) else str(v)

        return [cell(getattr(self, c)) for c in COLUMNS]


def _solve(method, graph, f_V, f_E, net, rounds, n_max, epsilon0, seed):
    if method == "brute":
        return brute_force_solve(graph, f_V, f_E, net)
    if method.startswith("enumerate"):
        inner = method.split(":")[1]
        return enumerate_optimize(graph, f_V, f_E, net, inner=inner, rounds=rounds)
    inner = method.split(":")[1] if ":" in method else "maxsum"
    return iterative_optimize(graph, f_V, f_E, net, k=rounds, n_max=n_max, epsilon0=epsilon0, seed=seed, inner=inner)


def run_bench(
    n_instances: int,
    n_agents: int,
    n_actions: int,
    widths,
    methods,
    seed: int = 0,
    alpha: float = 0.2,
    rounds: int = 4,
    n_max: int = 4,
    epsilon0: float = 0.2,
    timing: bool = True,
) -> list[BenchRecord]:
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    graph = complete_graph(n_agents, n_actions)
    seeds = np.random.default_rng(seed).integers(0, 2**31 - 1, size=n_instances)
    records = []
    for s in seeds:
        s = int(s)
        rng = np.random.default_rng(s)
        inst = random_instance(graph, rng)
        net = sample_random_net(graph.input_dim, list(widths), alpha, seed=int(rng.integers(2**31 - 1)))
        try:
            oracle = brute_force_max(graph, inst.utilities, inst.payoffs, net)[0]
        except CapExceededError:
            oracle = None
        for method in methods:
            t0 = time.perf_counter()
            try:
                res = _solve(method, graph, inst.utilities, inst.payoffs, net, rounds, n_max, epsilon0, s)
            except CapExceededError:
                records.append(BenchRecord(s, method, None, oracle, None, None, None))
                continue
            elapsed = time.perf_counter() - t0 if timing else 0.0
            gap = None if oracle is None else oracle - res.q_max
            records.append(BenchRecord(s, method, res.q_max, oracle, gap, elapsed, res.pieces_visited))
    return records


def to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in records:
        writer.writerow(r.row())
    return buf.getvalue()


def summarize(records) -> dict[str, dict[str, float | None]]:
    """Mean gap, wall time and pieces visited per method, skipping flagged cells."""
    out = {}
    for method in dict.fromkeys(r.method for r in records):
        rows = [r for r in records if r.method == method]

        def mean(attr):
            vals = [getattr(r, attr) for r in rows if getattr(r, attr) is not None]
            return float(np.mean(vals)) if vals else None

        out[method] = {"mean_gap": mean("gap"), "mean_time": mean("wall_time"), "mean_pieces": mean("pieces_visited")}
    return out
