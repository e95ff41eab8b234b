import itertools

import numpy as np
import pytest

from nlcg.errors import InvalidStateError
from nlcg.matrix_game import (
    LINEAR_SYSTEM_COEFFS,
    ReplayBuffer,
    State,
    TwoStepGame,
    env_step,
    gauss_rank,
    least_squares_residual,
    random_episode,
    rank_check,
)


def game_at(state):
    g = TwoStepGame()
    g.state = state
    return g


def test_first_step_b_goes_to_2b():
    assert env_step(TwoStepGame(), (1, 0, 0, 1)) == (0.0, State.S2B, False)
    assert env_step(TwoStepGame(), (0, 1, 1, 1)) == (0.0, State.S2A, False)


def test_all_b_in_2b_pays_8():
    assert env_step(game_at(State.S2B), (1, 1, 1, 1)) == (8.0, State.TERMINAL, True)


@pytest.mark.parametrize("a", list(itertools.product((0, 1), repeat=4)))
def test_2a_pays_7(a):
    assert env_step(game_at(State.S2A), a) == (7.0, State.TERMINAL, True)


def test_2b_reward_depends_only_on_count():
    by_count = {}
    for a in itertools.product((0, 1), repeat=4):
        r, _, _ = env_step(game_at(State.S2B), a)
        by_count.setdefault(sum(a), set()).add(r)
    assert {k: v.pop() for k, v in by_count.items()} == {0: 0.0, 1: -0.1, 2: 0.1, 3: 0.3, 4: 8.0}
    assert all(len(v) == 0 for v in by_count.values())


def test_step_after_terminal():
    g = TwoStepGame()
    g.step((0, 0, 0, 0))
    g.step((0, 0, 0, 0))
    with pytest.raises(InvalidStateError):
        g.step((0, 0, 0, 0))
    g.reset()
    assert g.state == State.S1


def test_invalid_action():
    with pytest.raises(ValueError):
        TwoStepGame().step((0, 2, 0, 0))
    with pytest.raises(ValueError):
        TwoStepGame().step((0, 0))


def test_episodes_have_two_steps(rng):
    for _ in range(20):
        ep = random_episode(rng)
        assert len(ep.states) == 2
        assert ep.states[0] == State.S1 and ep.dones.tolist() == [False, True]
        assert ep.next_states[0] == ep.states[1]


def test_replay_buffer_fifo_and_sampling(rng):
    buf = ReplayBuffer(3)
    eps = [random_episode(rng) for _ in range(5)]
    for e in eps:
        buf.add(e)
    assert len(buf) == 3
    assert list(buf._episodes) == eps[2:]
    batch = buf.sample(2, rng)
    assert batch.states.shape == (4,) and batch.actions.shape == (4, 4)
    with pytest.raises(ValueError):
        ReplayBuffer(2).sample(1, rng)


def test_replay_buffer_uniform(rng):
    buf = ReplayBuffer(4)
    for k in range(4):
        ep = random_episode(rng)
        buf.add(type(ep)(ep.states, ep.actions, np.full(2, float(k)), ep.next_states, ep.dones))
    counts = np.zeros(4)
    for _ in range(2000):
        counts[int(buf.sample(1, rng).rewards[0])] += 1
    assert np.all(np.abs(counts / 2000 - 0.25) < 0.04)


def test_rank_check_paper_system():
    assert rank_check() == (3, 4)


def test_rank_check_homogeneous():
    assert rank_check(np.zeros(5)) == (3, 3)


def test_rank_check_column_space_rhs():
    assert rank_check(LINEAR_SYSTEM_COEFFS[:, 0]) == (3, 3)
    assert rank_check(LINEAR_SYSTEM_COEFFS @ np.array([0.5, -1.0, 2.0, 0.25, 3.0])) == (3, 3)


def test_gauss_rank_matches_numpy(rng):
    for _ in range(50):
        r = int(rng.integers(1, 5))
        M = rng.normal(size=(6, r)) @ rng.normal(size=(r, 5))
        assert gauss_rank(M) == np.linalg.matrix_rank(M) == r


def test_linear_fit_cannot_match_rewards():
    assert least_squares_residual() > 0.5
    assert least_squares_residual(np.zeros(5)) == pytest.approx(0.0, abs=1e-12)
