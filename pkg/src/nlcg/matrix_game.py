"""The two-step cooperative matrix game, its replay buffer and the linear-CG rank check.

Four agents with two actions each (A=0, B=1). From the start state, agent
0's action selects the second-step game; step one pays nothing. In state 2A
every joint action pays 7; in state 2B the payoff depends only on how many
agents play B.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import InvalidStateError

N_AGENTS = 4
N_ACTIONS = 2
ACTION_A, ACTION_B = 0, 1
REWARD_2A = 7.0
REWARD_2B = (0.0, -0.1, 0.1, 0.3, 8.0)
STEP1_REWARD = 0.0


class State(IntEnum):
    S1 = 0
    S2A = 1
    S2B = 2
    TERMINAL = 3


N_OBS_STATES = 3  # one-hot observations only cover the non-terminal states


class TwoStepGame:
    def __init__(self):
        self.state = State.S1

    def reset(self) -> State:
        self.state = State.S1
        return self.state

    def step(self, joint_action) -> tuple[float, State, bool]:
        a = tuple(int(x) for x in joint_action)
        if len(a) != N_AGENTS or any(x not in (ACTION_A, ACTION_B) for x in a):
            raise ValueError(f"invalid joint action {joint_action!r}")
        if self.state == State.TERMINAL:
            raise InvalidStateError("episode is over; call reset() first")
        if self.state == State.S1:
            self.state = State.S2A if a[0] == ACTION_A else State.S2B
            return STEP1_REWARD, self.state, False
        if self.state == State.S2A:
            reward = REWARD_2A
        else:
            reward = REWARD_2B[sum(a)]
        self.state = State.TERMINAL
        return reward, self.state, True


def env_step(game: TwoStepGame, joint_action) -> tuple[float, State, bool]:
    return game.step(joint_action)


@dataclass(frozen=True)
class Episode:
    states: np.ndarray  # (T,)
    actions: np.ndarray  # (T, n_agents)
    rewards: np.ndarray  # (T,)
    next_states: np.ndarray  # (T,)
    dones: np.ndarray  # (T,)


def random_episode(rng: np.random.Generator, game: TwoStepGame | None = None) -> Episode:
    """Roll out one episode with uniformly random joint actions."""
    game = game or TwoStepGame()
    state = game.reset()
    rows = []
    done = False
    while not done:
        a = rng.integers(0, N_ACTIONS, size=N_AGENTS)
        reward, nxt, done = game.step(a)
        rows.append((int(state), a, reward, int(nxt), done))
        state = nxt
    s, a, r, n, d = zip(*rows)
    return Episode(np.array(s), np.array(a), np.array(r, dtype=float), np.array(n), np.array(d))


class ReplayBuffer:
    """FIFO buffer of whole episodes with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._episodes: deque[Episode] = deque(maxlen=capacity)

    def __len__(self):
        return len(self._episodes)

    def add(self, episode: Episode):
        self._episodes.append(episode)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Episode:
        """Sample episodes uniformly and flatten their transitions into one batch."""
        if not self._episodes:
            raise ValueError("cannot sample from an empty buffer")
        replace = batch_size > len(self._episodes)
        idx = rng.choice(len(self._episodes), size=batch_size, replace=replace)
        eps = [self._episodes[i] for i in idx]
        return Episode(
            np.concatenate([e.states for e in eps]),
            np.concatenate([e.actions for e in eps]),
            np.concatenate([e.rewards for e in eps]),
            np.concatenate([e.next_states for e in eps]),
            np.concatenate([e.dones for e in eps]),
        )


# Linear-CG system for state 2B under permutation invariance. Unknowns are
# q_i(A), q_i(B), q_ij(AA), q_ij(AB), q_ij(BB); row k has k agents playing B.
LINEAR_SYSTEM_COEFFS = np.array(
    [
        [4, 0, 6, 0, 0],
        [3, 1, 3, 3, 0],
        [2, 2, 1, 4, 1],
        [1, 3, 0, 3, 3],
        [0, 4, 0, 0, 6],
    ],
    dtype=float,
)
LINEAR_SYSTEM_RHS = np.array(REWARD_2B)


def gauss_rank(M, tol: float = 1e-9) -> int:
    """Rank by Gaussian elimination with partial pivoting."""
    A = np.array(M, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    rows, cols = A.shape
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        pivot = rank + int(np.argmax(np.abs(A[rank:, col])))
        if abs(A[pivot, col]) <= tol:
            continue
        A[[rank, pivot]] = A[[pivot, rank]]
        A[rank] /= A[rank, col]
        below = A[rank + 1 :, col].copy()
        A[rank + 1 :] -= np.outer(below, A[rank])
        rank += 1
    return rank


def rank_check(rhs=None, tol: float = 1e-9) -> tuple[int, int]:
    """Ranks of the coefficient and augmented matrices of the state-2B linear system."""
    b = LINEAR_SYSTEM_RHS if rhs is None else np.asarray(rhs, dtype=float)
    aug = np.column_stack([LINEAR_SYSTEM_COEFFS, b])
    return gauss_rank(LINEAR_SYSTEM_COEFFS, tol), gauss_rank(aug, tol)


def least_squares_residual(rhs=None) -> float:
    """Euclidean residual of the best least-squares fit to the state-2B system."""
    b = LINEAR_SYSTEM_RHS if rhs is None else np.asarray(rhs, dtype=float)
    x, *_ = np.linalg.lstsq(LINEAR_SYSTEM_COEFFS, b, rcond=None)
    return float(np.linalg.norm(LINEAR_SYSTEM_COEFFS @ x - b))
