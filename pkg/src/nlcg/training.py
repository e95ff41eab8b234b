"""TD training of the matrix-game learners and the learned-Q report."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from .learner import CGLearner, LearnerConfig
from .matrix_game import (
    ACTION_A,
    ACTION_B,
    N_ACTIONS,
    N_AGENTS,
    Episode,
    ReplayBuffer,
    State,
    TwoStepGame,
)

log = logging.getLogger(__name__)


class RMSprop:
    """RMSprop with squared-gradient decay ``alpha`` and global-norm gradient clipping."""

    def __init__(self, lr: float, alpha: float = 0.99, eps: float = 1e-5, grad_clip: float | None = 10.0):
        self.lr = lr
        self.alpha = alpha
        self.eps = eps
        self.grad_clip = grad_clip
        self.square_avg: dict[str, np.ndarray] = {}

    def step(self, params: dict, grads: dict):
        grads = clip_grads(grads, self.grad_clip)
        for name, g in grads.items():
            sq = self.square_avg.setdefault(name, np.zeros_like(g))
            sq *= self.alpha
            sq += (1.0 - self.alpha) * g * g
            params[name] -= self.lr * g / (np.sqrt(sq) + self.eps)


class SGD:
    def __init__(self, lr: float, grad_clip: float | None = 10.0):
        self.lr = lr
        self.grad_clip = grad_clip

    def step(self, params: dict, grads: dict):
        for name, g in clip_grads(grads, self.grad_clip).items():
            params[name] -= self.lr * g


def clip_grads(grads: dict, max_norm: float | None) -> dict:
    if max_norm is None:
        return grads
    norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if norm <= max_norm:
        return grads
    scale = max_norm / (norm + 1e-6)
    return {k: g * scale for k, g in grads.items()}


def target_values(target: CGLearner, batch, gamma: float, max_cache: dict | None = None) -> np.ndarray:
    """``r + gamma * max_a' Q_target(s', a')``, with no bootstrap at terminal transitions."""
    cache = {} if max_cache is None else max_cache
    boot = np.zeros(len(batch.rewards))
    for idx, (nxt, done) in enumerate(zip(batch.next_states, batch.dones)):
        if done:
            continue
        nxt = int(nxt)
        if nxt not in cache:
            cache[nxt] = target.max_q(nxt)
        boot[idx] = cache[nxt]
    return batch.rewards + gamma * boot


def td_update(model: CGLearner, target: CGLearner, batch, optimizer, gamma: float = 0.99, max_cache=None) -> float:
    """One gradient step on the mean squared TD error; returns the loss before the step."""
    if len(batch.rewards) == 0:
        raise ValueError("empty batch")
    y = target_values(target, batch, gamma, max_cache)
    pred, cache = model._forward(batch.states, batch.actions)
    td = pred - y
    loss = float(np.mean(td * td))
    grads = model._backward(cache, 2.0 * td / len(td))
    optimizer.step(model.params, grads)
    if model.config.kind == "nlcg":
        for s in range(3):
            if np.any(model.state_tables(s)[2].layers[1][0] < 0):
                raise AssertionError("mixing weights after the first layer became negative")
    return loss


@dataclass(frozen=True)
class TrainConfig:
    learner: str = "nlcg"
    episodes: int = 5000
    epsilon: float = 1.0
    gamma: float = 0.99
    buffer: int = 500
    batch: int = 32
    target_update: int = 100
    lr: float = 5e-4
    m_mix: int = 4
    alpha: float = 0.2
    hidden: int = 64
    optimizer: str = "rmsprop"
    grad_clip: float | None = 10.0
    eval_every: int = 100
    seed: int = 0


@dataclass
class TrainResult:
    model: CGLearner
    report: dict
    curve: list[tuple[int, float, float]] = field(default_factory=list)


def _episode(model: CGLearner, epsilon: float, rng: np.random.Generator):
    game = TwoStepGame()
    state = game.reset()
    rows = []
    done = False
    while not done:
        if rng.random() < epsilon:
            a = rng.integers(0, N_ACTIONS, size=N_AGENTS)
        else:
            a = np.array(model.greedy(state).a_max)
        reward, nxt, done = game.step(a)
        rows.append((int(state), a, reward, int(nxt), done))
        state = nxt
    s, a, r, n, d = zip(*rows)
    return Episode(np.array(s), np.array(a), np.array(r, dtype=float), np.array(n), np.array(d))


def greedy_return(model: CGLearner) -> float:
    game = TwoStepGame()
    state = game.reset()
    total, done = 0.0, False
    while not done:
        reward, state, done = game.step(model.greedy(state).a_max)
        total += reward
    return total


def train_matrix_game(config: TrainConfig = TrainConfig()) -> TrainResult:
    rng = np.random.default_rng(config.seed)
    lcfg = LearnerConfig(kind=config.learner, hidden=config.hidden, m_mix=config.m_mix, alpha=config.alpha)
    model = CGLearner(lcfg, rng)
    target = model.copy()
    max_cache: dict = {}
    if config.optimizer == "rmsprop":
        opt = RMSprop(config.lr, grad_clip=config.grad_clip)
    elif config.optimizer == "sgd":
        opt = SGD(config.lr, grad_clip=config.grad_clip)
    else:
        raise ValueError(f"unknown optimizer {config.optimizer!r}")
    buffer = ReplayBuffer(config.buffer)
    curve = []
    loss = float("nan")
    since_target = 0
    for episode in range(1, config.episodes + 1):
        buffer.add(_episode(model, config.epsilon, rng))
        if len(buffer) >= config.batch:
            loss = td_update(model, target, buffer.sample(config.batch, rng), opt, config.gamma, max_cache)
        since_target += 1
        if since_target >= config.target_update:
            target = model.copy()
            max_cache = {}
            since_target = 0
        if config.eval_every and episode % config.eval_every == 0:
            curve.append((episode, greedy_return(model), loss))
            log.info("episode %d: greedy return %.2f, td loss %.4f", episode, curve[-1][1], loss)
    report = q_report(model)
    report["config"] = asdict(config)
    return TrainResult(model, report, curve)


def q_report(model: CGLearner) -> dict:
    """Learned Q values for State A, state 2B by number of B actions, and state 2A.

    State-A values fix agent 0's action and take the best completion of the
    other three agents (exact enumeration). State-2B values average Q over
    all joint actions with the given number of agents playing B.
    """
    state_a = {}
    for name, act in (("A", ACTION_A), ("B", ACTION_B)):
        allowed = np.ones((N_AGENTS, N_ACTIONS), dtype=bool)
        allowed[0] = False
        allowed[0, act] = True
        state_a[name] = model.greedy(State.S1, allowed=allowed).q_max
    greedy = model.greedy(State.S1).a_max[0]
    state_2b = {}
    for k in range(N_AGENTS + 1):
        vals = []
        for idx in combinations(range(N_AGENTS), k):
            a = [ACTION_B if i in idx else ACTION_A for i in range(N_AGENTS)]
            vals.append(model.q_tot(State.S2B, a))
        state_2b[str(k)] = float(np.mean(vals))
    return {
        "learner": model.config.kind,
        "state_A": {"A": state_a["A"], "B": state_a["B"], "greedy_action": "AB"[greedy]},
        "state_2B": state_2b,
        "state_2A_max": model.max_q(State.S2A),
    }
