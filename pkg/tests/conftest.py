import itertools

import numpy as np
import pytest

from nlcg.graph import CoordinationGraph, complete_graph, random_instance
from nlcg.mixing import sample_random_net


def naive_forward(net, q):
    """Loop-based LeakyReLU forward pass, independent of the vectorised one."""
    h = [float(x) for x in q]
    for li, (W, b) in enumerate(net.layers):
        out = []
        for j in range(W.shape[1]):
            z = b[j] + sum(h[i] * W[i, j] for i in range(W.shape[0]))
            if li < len(net.layers) - 1:
                z = z if z >= 0 else net.alpha * z
            out.append(z)
        h = out
    return h[0]


def naive_q(graph, f_V, f_E, a):
    util = [f_V[i][a[i]] for i in range(graph.n_agents)]
    pay = [f_E[e][a[i]][a[j]] for e, (i, j) in enumerate(graph.edges)]
    return util + pay


def naive_brute(graph, f_V, f_E, value_fn):
    """Maximise value_fn(q(a)) over itertools.product; first maximum wins."""
    best, best_a = -np.inf, None
    for a in itertools.product(range(graph.n_actions), repeat=graph.n_agents):
        v = value_fn(naive_q(graph, f_V, f_E, a))
        if v > best:
            best, best_a = v, a
    return best, best_a


def random_setup(seed, n_agents, n_actions, widths, alpha, graph=None):
    rng = np.random.default_rng(seed)
    graph = graph or complete_graph(n_agents, n_actions)
    inst = random_instance(graph, rng)
    net = sample_random_net(graph.input_dim, widths, alpha, seed=int(rng.integers(2**31 - 1)))
    return graph, inst.utilities, inst.payoffs, net


def random_tree(rng, n_agents, n_actions):
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n_agents)]
    return CoordinationGraph.from_edges(n_agents, n_actions, edges)


def tree_diameter(graph):
    adj = {i: [] for i in range(graph.n_agents)}
    for i, j in graph.edges:
        adj[i].append(j)
        adj[j].append(i)

    def farthest(src):
        dist = {src: 0}
        stack = [src]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    stack.append(v)
        node = max(dist, key=dist.get)
        return node, dist[node]

    end, _ = farthest(0)
    return farthest(end)[1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
