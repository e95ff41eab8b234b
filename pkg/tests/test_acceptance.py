"""Exit criteria. Each test records one PASS/FAIL line shown in the terminal summary."""

import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_setup, random_tree, tree_diameter
from nlcg.graph import complete_graph, random_instance
from nlcg.learner import CGLearner, LearnerConfig
from nlcg.maxsum import exact_piece_max, w_max_sum
from nlcg.matrix_game import rank_check
from nlcg.mixing import all_configs, forward, piece_from_config, sample_random_net
from nlcg.optimize import brute_force_max, enumerate_optimize, iterative_optimize
from nlcg.training import TrainConfig, train_matrix_game
from test_learner import JOINT, fd_relative_error, kink_margin


def record(number, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")


def lemma_instances():
    """The seeded instance set shared by criteria 2 and 4."""
    rng = np.random.default_rng(20240601)
    out = []
    for idx in range(500):
        n_agents = int(rng.integers(1, 5))
        n_actions = int(rng.integers(2, 4))
        m = int(rng.integers(1, 5))
        alpha = float(rng.choice([0.0, 0.2, 0.5]))
        out.append(random_setup(int(rng.integers(2**31)), n_agents, n_actions, [m], alpha))
    return out


@pytest.fixture(scope="module")
def instances():
    return lemma_instances()


def test_criterion_1_rank_check():
    t0 = time.perf_counter()
    ranks = rank_check()
    elapsed = time.perf_counter() - t0
    ok = ranks == (3, 4) and elapsed < 1.0
    record(1, ok, f"rank_check() = {ranks} in {elapsed * 1e3:.2f} ms")
    assert ranks == (3, 4)
    assert elapsed < 1.0


def test_criterion_2_enumerate_equals_brute_force(instances):
    t0 = time.perf_counter()
    worst = 0.0
    for graph, f_V, f_E, net in instances:
        res = enumerate_optimize(graph, f_V, f_E, net, inner="exact")
        worst = max(worst, abs(res.q_max - brute_force_max(graph, f_V, f_E, net)[0]))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 30
    record(2, ok, f"500 instances, max |enumerate - brute| = {worst:.2e}, {elapsed:.1f} s")
    assert worst <= 1e-9
    assert elapsed < 30


def test_criterion_3_realized_piece_dominates():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = -np.inf
    for idx in range(1000):
        m = int(rng.integers(1, 7))
        d = int(rng.integers(1, 11))
        net = sample_random_net(d, [m], float(rng.choice([0.0, 0.2, 0.5, 0.9])), seed=idx)
        q = rng.normal(scale=2.0, size=d)
        value, realized = forward(net, q)
        assert piece_from_config(net, realized)(q) == pytest.approx(value, rel=1e-12, abs=1e-12)
        for c in all_configs(m, net.alpha):
            worst = max(worst, piece_from_config(net, c)(q) - value)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 30
    record(3, ok, f"1000 (net, q) pairs, max other-piece excess = {worst:.2e}, {elapsed:.1f} s")
    assert worst <= 1e-9
    assert elapsed < 30


def test_criterion_4_iterative_monotone_within_budget(instances):
    rng = np.random.default_rng(4)
    violations = 0
    runs = 0
    for idx, (graph, f_V, f_E, net) in enumerate(instances):
        m = net.n_hidden
        for inner in ("maxsum", "exact"):
            n_max = int(rng.integers(1, 2**m + 3))
            res = iterative_optimize(graph, f_V, f_E, net, n_max=n_max, epsilon0=0.5, seed=idx, inner=inner)
            runs += 1
            trace = res.value_trace
            monotone = all(b >= a for a, b in zip(trace, trace[1:]))
            violations += not (monotone and res.pieces_visited <= min(n_max, 2**m))
    record(4, violations == 0, f"{runs} iterative runs, {violations} monotonicity/budget violations")
    assert violations == 0


def test_criterion_5_matrix_game_gap():
    nl, lin = [], []
    for seed in range(5):
        nl.append(train_matrix_game(TrainConfig(learner="nlcg", seed=seed)).report)
        lin.append(train_matrix_game(TrainConfig(learner="linear", seed=seed)).report)

    def nl_pass(r):
        return (
            r["state_A"]["greedy_action"] == "B"
            and 7.5 <= r["state_2B"]["4"] <= 8.5
            and abs(r["state_A"]["A"] - 6.93) <= 0.5
        )

    nl_ok = sum(nl_pass(r) for r in nl)
    lin_ok = sum(r["state_A"]["greedy_action"] == "A" for r in lin)
    med = lambda xs: statistics.median(xs)  # noqa: E731
    detail = (
        f"NL-CG seeds passing {nl_ok}/5 (median Q(S2B,4)={med([r['state_2B']['4'] for r in nl]):.2f}, "
        f"Q(S1,A)={med([r['state_A']['A'] for r in nl]):.2f}, Q(S1,B)={med([r['state_A']['B'] for r in nl]):.2f}); "
        f"linear greedy A {lin_ok}/5 (median Q(S1,A)={med([r['state_A']['A'] for r in lin]):.2f}, "
        f"Q(S1,B)={med([r['state_A']['B'] for r in lin]):.2f})"
    )
    record(5, nl_ok >= 4 and lin_ok >= 4, detail)
    assert nl_ok >= 4
    assert lin_ok >= 4


def test_criterion_6_gradients():
    rng = np.random.default_rng(6)
    h = 1e-5
    worst = 0.0
    checked = redrawn = 0
    while checked < 100:
        kind = "nlcg" if checked % 2 == 0 else "linear"
        model = CGLearner(LearnerConfig(kind=kind, m_mix=int(rng.integers(1, 6))), rng)
        for name in model.params:
            model.params[name] *= rng.uniform(0.5, 2.0)
        state = int(rng.integers(0, 3))
        action = JOINT[int(rng.integers(0, 16))]
        # central differences are not an oracle when the stencil straddles a kink
        if kink_margin(model, state, action) < 10 * h:
            redrawn += 1
            continue
        worst = max(worst, fd_relative_error(model, state, action, h))
        checked += 1
    record(
        6,
        worst < 1e-4,
        f"100 (model, state, action) triples, max relative error {worst:.2e} "
        f"({redrawn} draws within 10h of a kink redrawn)",
    )
    assert worst < 1e-4


def test_criterion_7_tree_exactness():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 8))
        graph = random_tree(rng, n, int(rng.integers(2, 4)))
        inst = random_instance(graph, rng)
        w_V, w_E = rng.normal(size=n), rng.normal(size=graph.n_edges)
        bias = float(rng.normal())
        k = tree_diameter(graph) + 1
        exact = exact_piece_max(graph, inst.utilities, inst.payoffs, w_V, w_E, bias)[0]
        res = w_max_sum(graph, inst.utilities, inst.payoffs, w_V, w_E, bias, k)
        worst = max(worst, abs(res.q_max - exact))
    record(7, worst <= 1e-9, f"100 random trees, max |w_max_sum - exact| = {worst:.2e}")
    assert worst <= 1e-9


def test_criterion_8_iterative_timing():
    graph = complete_graph(4, 2)
    t_it, t_en, pieces, gaps = [], [], [], []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        inst = random_instance(graph, rng)
        net = sample_random_net(10, [10], 0.2, seed=seed)
        t0 = time.perf_counter()
        it = iterative_optimize(graph, inst.utilities, inst.payoffs, net, n_max=16, seed=seed)
        t_it.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        en = enumerate_optimize(graph, inst.utilities, inst.payoffs, net, inner="maxsum")
        t_en.append(time.perf_counter() - t0)
        assert en.pieces_visited == 1024
        pieces.append(it.pieces_visited)
        gaps.append(en.q_max - it.q_max)
    ratio = np.mean(t_it) / np.mean(t_en)
    ok = np.mean(pieces) <= 16
    record(
        8,
        ok,
        f"mean pieces_visited {np.mean(pieces):.1f} <= 16; mean time iterative {np.mean(t_it) * 1e3:.1f} ms vs "
        f"enumerate {np.mean(t_en) * 1e3:.1f} ms (ratio {ratio:.3f}, reported only; "
        f"{'lower' if ratio < 1 else 'NOT lower'}); mean value gap {np.mean(gaps):.3f}",
    )
    assert ok


def test_criterion_9_scope_statement():
    readme = Path(__file__).resolve().parents[1] / "README.md"
    text = readme.read_text(encoding="utf-8") if readme.exists() else ""
    ok = "Not reproduced at desk scale" in text
    record(9, ok, "out-of-scope MACO/Pursuit results stated in README; criteria 2-4 and 7 substitute")
    assert ok
