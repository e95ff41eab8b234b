"""Weighted Max-Sum on a single affine piece, and an exhaustive per-piece maximiser.

On a fixed piece the network is ``w_V . q_V + w_E . q_E + bias``, so it
decomposes over the graph once each utility row is scaled by its vertex
weight and each payoff slice by its edge weight. Ties in every argmax go to
the lowest action index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError
from .graph import CoordinationGraph, all_joint_actions, assemble_q_inputs, check_tables

DEFAULT_ROUNDS = 4
DEFAULT_JOINT_ACTION_CAP = 10**6


@dataclass(frozen=True)
class MessageState:
    mu: np.ndarray  # (n_edges, n_actions), indexed by the upper endpoint's action
    mu_bar: np.ndarray  # (n_edges, n_actions), indexed by the lower endpoint's action


@dataclass(frozen=True)
class PieceSolveResult:
    q_max: float
    a_max: tuple[int, ...]
    q_tables: np.ndarray
    messages: MessageState


def _check_weights(graph, w_V, w_E):
    w_V = np.asarray(w_V, dtype=float).reshape(-1)
    w_E = np.asarray(w_E, dtype=float).reshape(-1)
    if w_V.size != graph.n_agents or w_E.size != graph.n_edges:
        raise ValueError(
            f"weights have lengths ({w_V.size}, {w_E.size}), "
            f"expected ({graph.n_agents}, {graph.n_edges})"
        )
    return w_V, w_E


def w_max_sum(
    graph: CoordinationGraph,
    f_V,
    f_E,
    w_V,
    w_E,
    bias: float,
    k: int = DEFAULT_ROUNDS,
) -> PieceSolveResult:
    """Run ``k`` synchronous rounds of mean-normalised Max-Sum on the weighted tables.

    Every round decodes a greedy joint action from the agent marginals and
    scores it on the weighted objective; the best round is returned.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    f_V, f_E = check_tables(graph, f_V, f_E)
    w_V, w_E = _check_weights(graph, w_V, w_E)
    fV = w_V[:, None] * f_V
    fE = w_E[:, None, None] * f_E
    ei, ej = graph.edge_arrays()
    n_edges, n_actions = graph.n_edges, graph.n_actions
    agents = np.arange(graph.n_agents)
    edges = np.arange(n_edges)

    mu = np.zeros((n_edges, n_actions))
    mu_bar = np.zeros((n_edges, n_actions))
    q = fV.copy()
    best_value = -np.inf
    best_action = tuple(int(x) for x in np.argmax(q, axis=1))
    best_tables = q.copy()
    for _ in range(k):
        # messages for round t only read round t-1 state
        fwd = ((q[ei] - mu_bar)[:, :, None] + fE).max(axis=1)
        bwd = ((q[ej] - mu)[:, None, :] + fE).max(axis=2)
        mu = fwd - fwd.mean(axis=1, keepdims=True)
        mu_bar = bwd - bwd.mean(axis=1, keepdims=True)
        q = fV.copy()
        np.add.at(q, ej, mu)
        np.add.at(q, ei, mu_bar)
        a = np.argmax(q, axis=1)
        value = fV[agents, a].sum() + fE[edges, a[ei], a[ej]].sum() + bias
        if value > best_value:
            best_value = float(value)
            best_action = tuple(int(x) for x in a)
            best_tables = q.copy()
    return PieceSolveResult(best_value, best_action, best_tables, MessageState(mu, mu_bar))


def exact_piece_max(
    graph: CoordinationGraph,
    f_V,
    f_E,
    w_V,
    w_E,
    bias: float,
    cap: int = DEFAULT_JOINT_ACTION_CAP,
    allowed=None,
) -> tuple[float, tuple[int, ...]]:
    """Exhaustive maximum of the weighted objective over all joint actions.

    ``allowed`` is an optional boolean ``(n_agents, n_actions)`` mask
    restricting each agent's actions. Ties go to the lexicographically
    smallest joint action.
    """
    w_V, w_E = _check_weights(graph, w_V, w_E)
    actions, Q = joint_action_inputs(graph, f_V, f_E, cap)
    values = Q @ np.concatenate([w_V, w_E]) + bias
    idx = argmax_allowed(values, actions, allowed, graph.n_actions)
    return float(values[idx]), tuple(int(x) for x in actions[idx])


def joint_action_inputs(graph: CoordinationGraph, f_V, f_E, cap: int = DEFAULT_JOINT_ACTION_CAP):
    """All joint actions (lexicographic) and their mixing inputs, refusing above ``cap``."""
    f_V, f_E = check_tables(graph, f_V, f_E)
    if graph.n_joint_actions > cap:
        raise CapExceededError("joint-action", graph.n_joint_actions, cap)
    actions = all_joint_actions(graph)
    return actions, assemble_q_inputs(graph, f_V, f_E, actions)


def allowed_rows(actions: np.ndarray, allowed, n_actions: int) -> np.ndarray | None:
    """Boolean row filter of ``actions`` under a per-agent action mask (None means all)."""
    if allowed is None:
        return None
    allowed = np.asarray(allowed, dtype=bool)
    if allowed.shape != (actions.shape[1], n_actions):
        raise ValueError(f"allowed mask has shape {allowed.shape}, expected {(actions.shape[1], n_actions)}")
    ok = allowed[np.arange(actions.shape[1])[None, :], actions].all(axis=1)
    if not ok.any():
        raise ValueError("allowed mask excludes every joint action")
    return ok


def argmax_allowed(values: np.ndarray, actions: np.ndarray, allowed, n_actions: int) -> int:
    """Index of the first maximal entry, ignoring rows excluded by ``allowed``."""
    ok = allowed_rows(actions, allowed, n_actions)
    if ok is not None:
        values = np.where(ok, values, -np.inf)
    return int(np.argmax(values))
