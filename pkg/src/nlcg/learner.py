"""Coordination-graph Q learners for the two-step matrix game, with hand-written backprop.

Both learners share a utility net ``f_v(state, agent) -> R^2`` and a payoff
net ``f_e(state, agent_i, agent_j) -> R^{2x2}``, each one hidden ReLU layer.
The ``"nlcg"`` learner mixes the ten utilities/payoffs with a two-layer
LeakyReLU network whose parameters come from a hypernet on the state; its
second-layer weights are absolute values of hypernet outputs, so they are
non-negative by construction. The ``"linear"`` learner averages utilities
and payoffs (1/|V| and 1/|E|) like a conventional coordination graph.

Observations are one-hot, so every net output is a function of a handful of
discrete inputs. Forward passes compute the full tables for all states and
gather from them; gradients are scattered back the same way.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass

import numpy as np

from .graph import complete_graph, linear_cg_weights
from .matrix_game import N_ACTIONS, N_AGENTS, N_OBS_STATES, State
from .mixing import MixingNetwork
from .optimize import SolveResult, enumerate_optimize

GRAPH = complete_graph(N_AGENTS, N_ACTIONS)
EDGE_I, EDGE_J = GRAPH.edge_arrays()
N_EDGES = GRAPH.n_edges
D_IN = GRAPH.input_dim


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "nlcg"  # "nlcg" or "linear"
    hidden: int = 64
    hyper_hidden: int = 64
    m_mix: int = 4
    alpha: float = 0.2
    rounds: int = 4

    def __post_init__(self):
        if self.kind not in ("nlcg", "linear"):
            raise ValueError(f"unknown learner kind {self.kind!r}")


def _one_hot(idx, n):
    out = np.zeros((len(idx), n))
    out[np.arange(len(idx)), idx] = 1.0
    return out


# fixed design matrices: every (state, agent) and (state, edge) combination
_STATES = np.arange(N_OBS_STATES)
_V_ROWS = [(s, i) for s in _STATES for i in range(N_AGENTS)]
_E_ROWS = [(s, e) for s in _STATES for e in range(N_EDGES)]
X_UTIL = np.hstack([_one_hot([s for s, _ in _V_ROWS], N_OBS_STATES), _one_hot([i for _, i in _V_ROWS], N_AGENTS)])
X_PAY = np.hstack(
    [
        _one_hot([s for s, _ in _E_ROWS], N_OBS_STATES),
        _one_hot([EDGE_I[e] for _, e in _E_ROWS], N_AGENTS),
        _one_hot([EDGE_J[e] for _, e in _E_ROWS], N_AGENTS),
    ]
)
X_HYPER = np.eye(N_OBS_STATES)


def _linear_init(rng, fan_in, fan_out):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out)), rng.uniform(-bound, bound, size=fan_out)


def _mlp_forward(x, W1, b1, W2, b2):
    pre = x @ W1 + b1
    h = np.maximum(pre, 0.0)
    return h @ W2 + b2, (x, pre, h)


def _mlp_backward(cache, W2, dout):
    x, pre, h = cache
    dW2 = h.T @ dout
    db2 = dout.sum(axis=0)
    dh = (dout @ W2.T) * (pre > 0)
    return x.T @ dh, dh.sum(axis=0), dW2, db2


class CGLearner:
    """Parameters plus forward/backward passes of one learner."""

    def __init__(self, config: LearnerConfig = LearnerConfig(), rng=None, params=None):
        self.config = config
        if params is not None:
            self.params = {k: np.array(v, dtype=float) for k, v in params.items()}
            return
        rng = np.random.default_rng(rng)
        H = config.hidden
        p = {}
        p["v_W1"], p["v_b1"] = _linear_init(rng, X_UTIL.shape[1], H)
        p["v_W2"], p["v_b2"] = _linear_init(rng, H, N_ACTIONS)
        p["e_W1"], p["e_b1"] = _linear_init(rng, X_PAY.shape[1], H)
        p["e_W2"], p["e_b2"] = _linear_init(rng, H, N_ACTIONS * N_ACTIONS)
        if config.kind == "nlcg":
            p["h_W1"], p["h_b1"] = _linear_init(rng, N_OBS_STATES, config.hyper_hidden)
            p["h_W2"], p["h_b2"] = _linear_init(rng, config.hyper_hidden, self.n_hyper_outputs)
        self.params = p

    @property
    def n_hyper_outputs(self) -> int:
        m = self.config.m_mix
        return D_IN * m + m + m + 1

    def copy(self) -> "CGLearner":
        return CGLearner(self.config, params=copy.deepcopy(self.params))

    # -- table computation -------------------------------------------------

    def _tables(self):
        p = self.params
        util, v_cache = _mlp_forward(X_UTIL, p["v_W1"], p["v_b1"], p["v_W2"], p["v_b2"])
        pay, e_cache = _mlp_forward(X_PAY, p["e_W1"], p["e_b1"], p["e_W2"], p["e_b2"])
        out = {
            "f_V": util.reshape(N_OBS_STATES, N_AGENTS, N_ACTIONS),
            "f_E": pay.reshape(N_OBS_STATES, N_EDGES, N_ACTIONS, N_ACTIONS),
            "caches": {"v": v_cache, "e": e_cache},
        }
        if self.config.kind == "nlcg":
            m = self.config.m_mix
            raw, h_cache = _mlp_forward(X_HYPER, p["h_W1"], p["h_b1"], p["h_W2"], p["h_b2"])
            out["caches"]["h"] = h_cache
            out["raw"] = raw
            out["W1"] = raw[:, : D_IN * m].reshape(N_OBS_STATES, D_IN, m)
            out["b1"] = raw[:, D_IN * m : D_IN * m + m]
            out["W2"] = np.abs(raw[:, D_IN * m + m : D_IN * m + 2 * m])
            out["b2"] = raw[:, -1]
        return out

    def state_tables(self, state: int) -> tuple[np.ndarray, np.ndarray, MixingNetwork]:
        """Utility table, payoff table and mixing network at a non-terminal ``state``."""
        t = self._tables()
        s = int(state)
        if self.config.kind == "linear":
            net = MixingNetwork(1.0, ((linear_cg_weights(GRAPH)[:, None], np.zeros(1)),))
        else:
            net = MixingNetwork(
                self.config.alpha,
                ((t["W1"][s], t["b1"][s]), (t["W2"][s][:, None], t["b2"][s : s + 1])),
            )
        return t["f_V"][s], t["f_E"][s], net

    # -- forward / backward -------------------------------------------------

    def _forward(self, states, actions):
        states = np.asarray(states, dtype=int)
        actions = np.asarray(actions, dtype=int)
        t = self._tables()
        B = len(states)
        rows = np.arange(B)[:, None]
        util = t["f_V"][states[:, None], np.arange(N_AGENTS)[None, :], actions]
        pay = t["f_E"][states[:, None], np.arange(N_EDGES)[None, :], actions[:, EDGE_I], actions[:, EDGE_J]]
        q = np.concatenate([util, pay], axis=1)
        cache = {"t": t, "states": states, "actions": actions, "q": q, "rows": rows}
        if self.config.kind == "linear":
            return q @ linear_cg_weights(GRAPH), cache
        W1 = t["W1"][states]
        z = np.einsum("bd,bdm->bm", q, W1) + t["b1"][states]
        c = np.where(z >= 0, 1.0, self.config.alpha)
        h = c * z
        W2 = t["W2"][states]
        value = (h * W2).sum(axis=1) + t["b2"][states]
        cache.update(W1=W1, c=c, h=h, W2=W2)
        return value, cache

    def q_tot_batch(self, states, actions) -> np.ndarray:
        return self._forward(states, actions)[0]

    def q_tot(self, state, joint_action) -> float:
        return float(self.q_tot_batch([int(state)], [list(joint_action)])[0])

    def gradients(self, states, actions, dout) -> dict[str, np.ndarray]:
        """Gradient of ``sum(dout * q_tot)`` with respect to every parameter."""
        _, cache = self._forward(states, actions)
        return self._backward(cache, np.asarray(dout, dtype=float))

    def _backward(self, cache, dout):
        p = self.params
        t = cache["t"]
        states, actions, q = cache["states"], cache["actions"], cache["q"]
        grads = {}
        if self.config.kind == "linear":
            dq = dout[:, None] * linear_cg_weights(GRAPH)[None, :]
        else:
            m = self.config.m_mix
            dW2 = dout[:, None] * cache["h"]
            dz = dout[:, None] * cache["W2"] * cache["c"]
            dW1 = q[:, :, None] * dz[:, None, :]
            dq = np.einsum("bdm,bm->bd", cache["W1"], dz)
            draw = np.zeros_like(t["raw"])
            np.add.at(draw[:, : D_IN * m], states, dW1.reshape(len(states), -1))
            np.add.at(draw[:, D_IN * m : D_IN * m + m], states, dz)
            sign = np.sign(t["raw"][:, D_IN * m + m : D_IN * m + 2 * m])
            dW2_state = np.zeros((N_OBS_STATES, m))
            np.add.at(dW2_state, states, dW2)
            draw[:, D_IN * m + m : D_IN * m + 2 * m] = dW2_state * sign
            np.add.at(draw[:, -1], states, dout)
            gW1, gb1, gW2, gb2 = _mlp_backward(t["caches"]["h"], p["h_W2"], draw)
            grads.update(h_W1=gW1, h_b1=gb1, h_W2=gW2, h_b2=gb2)

        dV = np.zeros((N_OBS_STATES, N_AGENTS, N_ACTIONS))
        np.add.at(dV, (states[:, None], np.arange(N_AGENTS)[None, :], actions), dq[:, :N_AGENTS])
        dE = np.zeros((N_OBS_STATES, N_EDGES, N_ACTIONS, N_ACTIONS))
        np.add.at(
            dE,
            (states[:, None], np.arange(N_EDGES)[None, :], actions[:, EDGE_I], actions[:, EDGE_J]),
            dq[:, N_AGENTS:],
        )
        gW1, gb1, gW2, gb2 = _mlp_backward(t["caches"]["v"], p["v_W2"], dV.reshape(len(_V_ROWS), -1))
        grads.update(v_W1=gW1, v_b1=gb1, v_W2=gW2, v_b2=gb2)
        gW1, gb1, gW2, gb2 = _mlp_backward(t["caches"]["e"], p["e_W2"], dE.reshape(len(_E_ROWS), -1))
        grads.update(e_W1=gW1, e_b1=gb1, e_W2=gW2, e_b2=gb2)
        return grads

    # -- action selection ---------------------------------------------------

    def greedy(self, state, allowed=None) -> SolveResult:
        """Greedy joint action: exact piece enumeration for NL-CG, Max-Sum for the linear learner."""
        f_V, f_E, net = self.state_tables(state)
        if self.config.kind == "linear" and allowed is None:
            return enumerate_optimize(GRAPH, f_V, f_E, net, inner="maxsum", rounds=self.config.rounds)
        return enumerate_optimize(GRAPH, f_V, f_E, net, inner="exact", allowed=allowed)

    def max_q(self, state) -> float:
        if int(state) == State.TERMINAL:
            return 0.0
        return self.greedy(state).q_max

    # -- serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        return {"config": asdict(self.config), "params": {k: v.tolist() for k, v in self.params.items()}}

    @classmethod
    def from_dict(cls, data: dict) -> "CGLearner":
        return cls(LearnerConfig(**data["config"]), params=data["params"])


def zero_output_model(config: LearnerConfig = LearnerConfig(), rng=None) -> CGLearner:
    """A model whose final-layer weights and biases are all zero, so Q_tot is 0 everywhere."""
    model = CGLearner(config, rng)
    for name in ("v_W2", "v_b2", "e_W2", "e_b2", "h_W2", "h_b2"):
        if name in model.params:
            model.params[name][...] = 0.0
    return model
