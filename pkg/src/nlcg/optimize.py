"""Greedy joint-action selection for a LeakyReLU-mixed coordination graph.

``enumerate_optimize`` solves every affine piece and keeps the best joint
action; with the exact inner solver it returns the global maximum.
``iterative_optimize`` follows realised configurations from the all-ones
piece, with optional random jumps to unvisited pieces. ``brute_force_max``
is the ground-truth oracle over all joint actions.

Reported values are always the true network value at the returned action.
Because the network's later-layer weights are non-negative, that value is
never below the value of the piece the action was found on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .graph import CoordinationGraph, assemble_q_input, check_tables
from .maxsum import (
    DEFAULT_JOINT_ACTION_CAP,
    DEFAULT_ROUNDS,
    argmax_allowed,
    exact_piece_max,
    joint_action_inputs,
    w_max_sum,
)
from .mixing import (
    DEFAULT_CONFIG_CAP,
    MixingNetwork,
    SlopeConfiguration,
    all_configs,
    forward,
    forward_values,
    piece_from_config,
)

log = logging.getLogger(__name__)

Inner = Literal["maxsum", "exact"]
TERMINATIONS = ("converged", "budget_exhausted", "annealing_break", "revisit_detected")
DOMINANCE_TOL = 1e-9
UNVISITED_RETRIES = 100


@dataclass
class SolveResult:
    a_max: tuple[int, ...]
    q_max: float
    pieces_visited: int
    value_trace: list[float] = field(default_factory=list)
    terminated_by: str = "converged"

    def to_dict(self) -> dict:
        return {
            "a_max": list(self.a_max),
            "q_max": self.q_max,
            "pieces_visited": self.pieces_visited,
            "value_trace": list(self.value_trace),
            "terminated_by": self.terminated_by,
        }


def _check_net(graph: CoordinationGraph, net: MixingNetwork):
    if net.input_dim != graph.input_dim:
        raise ValueError(f"network expects {net.input_dim} inputs, graph provides {graph.input_dim}")


class _Tracker:
    """Best-so-far bookkeeping with a (value, joint action) lexicographic tie-break."""

    def __init__(self):
        self.value = -np.inf
        self.action = None
        self.trace = []

    def offer(self, value: float, action: tuple[int, ...]) -> bool:
        better = value > self.value or (value == self.value and action < self.action)
        if better:
            self.value = value
            self.action = action
            self.trace.append(value)
        return better


def _true_value(graph, f_V, f_E, net, a) -> tuple[float, SlopeConfiguration]:
    return forward(net, assemble_q_input(graph, f_V, f_E, a))


def _check_dominance(true_value: float, piece_value: float):
    if true_value < piece_value - DOMINANCE_TOL * max(1.0, abs(piece_value)):
        raise RuntimeError(
            f"network value {true_value!r} is below the piece value {piece_value!r}; "
            "weights after the first layer must be non-negative"
        )


def enumerate_optimize(
    graph: CoordinationGraph,
    f_V,
    f_E,
    net: MixingNetwork,
    inner: Inner = "exact",
    rounds: int = DEFAULT_ROUNDS,
    config_cap: int = DEFAULT_CONFIG_CAP,
    joint_cap: int = DEFAULT_JOINT_ACTION_CAP,
    allowed=None,
) -> SolveResult:
    """Solve every one of the ``2**m`` pieces and keep the best joint action.

    ``allowed`` restricts the per-agent actions and is only supported with
    the exact inner solver.
    """
    f_V, f_E = check_tables(graph, f_V, f_E)
    _check_net(graph, net)
    configs = all_configs(net.n_hidden, net.alpha, cap=config_cap)
    if inner == "exact":
        actions, Q = joint_action_inputs(graph, f_V, f_E, joint_cap)
    elif inner == "maxsum":
        if allowed is not None:
            raise ValueError("action masks are only supported with the exact inner solver")
    else:
        raise ValueError(f"unknown inner solver {inner!r}")

    best = _Tracker()
    visited = 0
    for c in configs:
        piece = piece_from_config(net, c)
        if inner == "exact":
            values = Q @ piece.w + piece.bias
            idx = argmax_allowed(values, actions, allowed, graph.n_actions)
            piece_value = float(values[idx])
            a = tuple(int(x) for x in actions[idx])
            true_value = float(forward_values(net, Q[idx : idx + 1])[0])
        else:
            w_V, w_E = piece.split(graph.n_agents)
            res = w_max_sum(graph, f_V, f_E, w_V, w_E, piece.bias, rounds)
            piece_value, a = res.q_max, res.a_max
            true_value = _true_value(graph, f_V, f_E, net, a)[0]
        _check_dominance(true_value, piece_value)
        best.offer(true_value, a)
        visited += 1
    return SolveResult(best.action, best.value, visited, best.trace, "converged")


def _random_unvisited(rng: np.random.Generator, m: int, visited: set[int]) -> int | None:
    if len(visited) >= 1 << m:
        return None
    for _ in range(UNVISITED_RETRIES):
        bits = rng.integers(0, 2, size=m)
        mask = 0
        for bit in bits:
            mask = (mask << 1) | int(bit)
        if mask not in visited:
            return mask
    mask = 0
    while mask in visited:
        mask += 1
    return mask


def iterative_optimize(
    graph: CoordinationGraph,
    f_V,
    f_E,
    net: MixingNetwork,
    k: int = DEFAULT_ROUNDS,
    n_max: int = 4,
    epsilon0: float = 0.2,
    seed=None,
    inner: Inner = "maxsum",
    epsilon_jumps: bool = False,
    joint_cap: int = DEFAULT_JOINT_ACTION_CAP,
) -> SolveResult:
    """Local search over pieces, starting from the all-ones configuration.

    After each inner solve the search moves to the configuration realised by
    the best action so far, if that piece has not been solved yet. A move
    into an already solved piece right after an improvement means the chain
    looped, and the search stops. Otherwise the search is at a fixed point.
    There, with probability ``epsilon0 / (1 + n)`` it stops, and otherwise it
    jumps to a random unvisited piece. ``epsilon_jumps=True`` swaps the two
    outcomes, so the probability becomes the chance to jump.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if inner not in ("maxsum", "exact"):
        raise ValueError(f"unknown inner solver {inner!r}")
    f_V, f_E = check_tables(graph, f_V, f_E)
    _check_net(graph, net)
    rng = np.random.default_rng(seed)
    m = net.n_hidden
    single_piece = m == 0 or net.alpha == 1.0

    current = SlopeConfiguration.all_ones(m, net.alpha)
    visited: set[int] = set()
    best = _Tracker()
    terminated = "budget_exhausted"
    for n in range(n_max):
        visited.add(current.mask)
        piece = piece_from_config(net, current)
        w_V, w_E = piece.split(graph.n_agents)
        if inner == "maxsum":
            res = w_max_sum(graph, f_V, f_E, w_V, w_E, piece.bias, k)
            piece_value, a = res.q_max, res.a_max
        else:
            piece_value, a = exact_piece_max(graph, f_V, f_E, w_V, w_E, piece.bias, cap=joint_cap)
        true_value, _ = _true_value(graph, f_V, f_E, net, a)
        _check_dominance(true_value, piece_value)
        improved = best.offer(true_value, a)

        realized = _true_value(graph, f_V, f_E, net, best.action)[1]
        if realized.mask not in visited:
            current = realized
            continue
        if improved and realized.mask != current.mask:
            terminated = "revisit_detected"
            break

        if single_piece:
            terminated = "converged"
            break
        hit = rng.random() < epsilon0 / (1 + n)
        if hit != epsilon_jumps:
            terminated = "converged" if epsilon_jumps else "annealing_break"
            break
        nxt = _random_unvisited(rng, m, visited)
        if nxt is None:
            terminated = "converged"
            break
        log.debug("jumping from piece %d to unvisited piece %d", current.mask, nxt)
        current = SlopeConfiguration(nxt, m, net.alpha)

    return SolveResult(best.action, best.value, len(visited), best.trace, terminated)


def brute_force_max(
    graph: CoordinationGraph,
    f_V,
    f_E,
    net: MixingNetwork,
    cap: int = DEFAULT_JOINT_ACTION_CAP,
    allowed=None,
) -> tuple[float, tuple[int, ...]]:
    """Maximise the network over every joint action; ties go to the lexicographically smallest."""
    _check_net(graph, net)
    actions, Q = joint_action_inputs(graph, f_V, f_E, cap)
    values = forward_values(net, Q)
    idx = argmax_allowed(values, actions, allowed, graph.n_actions)
    return float(values[idx]), tuple(int(x) for x in actions[idx])


def brute_force_solve(graph, f_V, f_E, net, cap: int = DEFAULT_JOINT_ACTION_CAP) -> SolveResult:
    q, a = brute_force_max(graph, f_V, f_E, net, cap)
    return SolveResult(a, q, 0, [q], "converged")
