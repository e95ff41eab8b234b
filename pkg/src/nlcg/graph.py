"""Coordination graphs, utility/payoff tables and the linear baseline value.

Tables are plain numpy arrays:

* utilities ``f_V`` has shape ``(n_agents, n_actions)``
* payoffs ``f_E`` has shape ``(n_edges, n_actions, n_actions)``; entry
  ``(e, a_i, a_j)`` is the payoff of edge ``e = (i, j)``, ``i < j``, when the
  lower-indexed endpoint plays ``a_i``.

The mixing-network input for a joint action is the concatenation of the
vertex utilities (vertex order) followed by the edge payoffs (edge order),
so its length is ``d = n_agents + n_edges``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class CoordinationGraph:
    n_agents: int
    n_actions: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if int(self.n_agents) < 1:
            raise ValueError(f"n_agents must be >= 1, got {self.n_agents}")
        if int(self.n_actions) < 1:
            raise ValueError(f"n_actions must be >= 1, got {self.n_actions}")
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < j < self.n_agents):
                raise ValueError(f"invalid edge ({i}, {j}) for {self.n_agents} agents")
        if list(edges) != sorted(set(edges)):
            raise ValueError("edges must be sorted lexicographically and duplicate-free")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, n_agents: int, n_actions: int, edges: Iterable[Sequence[int]]):
        """Build a graph from an unordered edge collection (pairs are normalised to i < j)."""
        norm = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop ({i}, {j}) is not an edge")
            norm.add((min(i, j), max(i, j)))
        return cls(n_agents, n_actions, tuple(sorted(norm)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def input_dim(self) -> int:
        return self.n_agents + self.n_edges

    @property
    def n_joint_actions(self) -> int:
        return self.n_actions**self.n_agents

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Return the lower and upper endpoints of every edge as index arrays."""
        if not self.edges:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        arr = np.asarray(self.edges, dtype=int)
        return arr[:, 0], arr[:, 1]

    def to_dict(self) -> dict:
        return {
            "n_agents": self.n_agents,
            "n_actions": self.n_actions,
            "edges": [list(e) for e in self.edges],
        }


def complete_graph(n_agents: int, n_actions: int) -> CoordinationGraph:
    if n_agents < 1 or n_actions < 1:
        raise ValueError(f"need at least one agent and one action, got ({n_agents}, {n_actions})")
    return CoordinationGraph(n_agents, n_actions, tuple(itertools.combinations(range(n_agents), 2)))


def check_tables(graph: CoordinationGraph, f_V, f_E) -> tuple[np.ndarray, np.ndarray]:
    """Validate table shapes/finiteness against ``graph`` and return them as float arrays."""
    f_V = np.asarray(f_V, dtype=float)
    f_E = np.asarray(f_E, dtype=float)
    if f_E.size == 0 and graph.n_edges == 0:
        f_E = f_E.reshape(0, graph.n_actions, graph.n_actions)
    if f_V.shape != (graph.n_agents, graph.n_actions):
        raise ValueError(
            f"utility table has shape {f_V.shape}, expected {(graph.n_agents, graph.n_actions)}"
        )
    expected = (graph.n_edges, graph.n_actions, graph.n_actions)
    if f_E.shape != expected:
        raise ValueError(f"payoff table has shape {f_E.shape}, expected {expected}")
    if not (np.all(np.isfinite(f_V)) and np.all(np.isfinite(f_E))):
        raise ValueError("utility and payoff tables must be finite")
    return f_V, f_E


def check_joint_action(graph: CoordinationGraph, a) -> tuple[int, ...]:
    a = tuple(int(x) for x in a)
    if len(a) != graph.n_agents:
        raise ValueError(f"joint action has length {len(a)}, expected {graph.n_agents}")
    for x in a:
        if not 0 <= x < graph.n_actions:
            raise ValueError(f"action {x} out of range [0, {graph.n_actions})")
    return a


def assemble_q_input(graph: CoordinationGraph, f_V, f_E, a) -> np.ndarray:
    """Utilities and payoffs selected by joint action ``a``, vertices first."""
    f_V, f_E = check_tables(graph, f_V, f_E)
    a = np.asarray(check_joint_action(graph, a), dtype=int)
    return _gather(graph, f_V, f_E, a[None, :])[0]


def all_joint_actions(graph: CoordinationGraph) -> np.ndarray:
    """Every joint action as rows of an int array, in lexicographic order."""
    n, k = graph.n_agents, graph.n_actions
    grids = np.indices((k,) * n).reshape(n, -1).T
    return np.ascontiguousarray(grids)


def assemble_q_inputs(graph: CoordinationGraph, f_V, f_E, actions) -> np.ndarray:
    """Batched :func:`assemble_q_input` over the rows of ``actions``."""
    f_V, f_E = check_tables(graph, f_V, f_E)
    actions = np.asarray(actions, dtype=int)
    if actions.ndim != 2 or actions.shape[1] != graph.n_agents:
        raise ValueError(f"actions must have shape (N, {graph.n_agents})")
    if actions.size and (actions.min() < 0 or actions.max() >= graph.n_actions):
        raise ValueError("action out of range")
    return _gather(graph, f_V, f_E, actions)


def _gather(graph, f_V, f_E, actions):
    ei, ej = graph.edge_arrays()
    util = f_V[np.arange(graph.n_agents)[None, :], actions]
    pay = f_E[np.arange(graph.n_edges)[None, :], actions[:, ei], actions[:, ej]]
    return np.concatenate([util, pay], axis=1)


def linear_cg_weights(graph: CoordinationGraph) -> np.ndarray:
    """Input weights of the linear baseline: 1/|V| per vertex, 1/|E| per edge."""
    w = np.full(graph.input_dim, 1.0 / graph.n_agents)
    if graph.n_edges:
        w[graph.n_agents:] = 1.0 / graph.n_edges
    return w


def linear_cg_value(graph: CoordinationGraph, f_V, f_E, a) -> float:
    f_V, f_E = check_tables(graph, f_V, f_E)
    a = check_joint_action(graph, a)
    value = sum(f_V[i, a[i]] for i in range(graph.n_agents)) / graph.n_agents
    if graph.n_edges:
        value += sum(f_E[e, a[i], a[j]] for e, (i, j) in enumerate(graph.edges)) / graph.n_edges
    return float(value)


@dataclass(frozen=True)
class Instance:
    """A graph together with its utility and payoff tables."""

    graph: CoordinationGraph
    utilities: np.ndarray
    payoffs: np.ndarray

    def __post_init__(self):
        f_V, f_E = check_tables(self.graph, self.utilities, self.payoffs)
        f_V.setflags(write=False)
        f_E.setflags(write=False)
        object.__setattr__(self, "utilities", f_V)
        object.__setattr__(self, "payoffs", f_E)

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        try:
            n_agents = data["n_agents"]
            n_actions = data["n_actions"]
            utilities = data["utilities"]
            payoffs = data["payoffs"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"instance is missing field {exc}") from None
        if not isinstance(n_agents, int) or not isinstance(n_actions, int):
            raise ValueError("n_agents and n_actions must be integers")
        if data.get("edges") is None:
            graph = complete_graph(n_agents, n_actions)
        else:
            graph = CoordinationGraph.from_edges(n_agents, n_actions, data["edges"])
        try:
            f_V = np.asarray(utilities, dtype=float)
            f_E = np.asarray(payoffs, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"tables are not numeric arrays: {exc}") from None
        return cls(graph, f_V, f_E)

    def to_dict(self) -> dict:
        out = self.graph.to_dict()
        out["utilities"] = self.utilities.tolist()
        out["payoffs"] = self.payoffs.tolist()
        return out


def random_instance(graph: CoordinationGraph, rng: np.random.Generator, scale: float = 1.0) -> Instance:
    f_V = rng.normal(0.0, scale, size=(graph.n_agents, graph.n_actions))
    f_E = rng.normal(0.0, scale, size=(graph.n_edges, graph.n_actions, graph.n_actions))
    return Instance(graph, f_V, f_E)
