import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from maximin import MU1, MU3X3, GameInstance, load_instance, true_maximin
from maximin.model import (
    ArmId,
    ArmStats,
    InstanceError,
    RunResult,
    SamplingEnv,
    is_eps_optimal,
    mix_seed,
    sample,
    uniform_at,
)


def test_load_two_by_two():
    inst = load_instance('{"means":[[0.4,0.5],[0.3,0.35]]}')
    assert inst.K == 2
    assert inst.K_bar == 4
    assert inst == GameInstance(MU1.means)


@pytest.mark.parametrize("text", [
    '{"means":[[0.5]]}',
    '{"means":[[0.4,1.2],[0.3,0.3]]}',
    '{"means":[[0.4],[]]}',
    '{"means":[[0.4],[-0.1]]}',
    '{"mean":[[0.4],[0.1]]}',
    '[1, 2]',
    'not json',
])
def test_load_rejects_bad_input(text):
    with pytest.raises(InstanceError):
        load_instance(text)


def test_ragged_rows_and_flat_order():
    inst = load_instance('{"means":[[0.1,0.2,0.3],[0.4]]}')
    assert inst.sizes == (3, 1)
    assert inst.K_bar == 4
    assert list(inst.flat) == [0.1, 0.2, 0.3, 0.4]
    assert list(inst.starts) == [0, 3, 4]
    assert inst.arm_index(ArmId(1, 0)) == 3
    assert inst.arms()[2] == ArmId(0, 2)


def test_instance_json_round_trip():
    assert load_instance(MU3X3.to_json()) == MU3X3


def test_sampling_degenerate_means():
    env = SamplingEnv(7)
    assert all(env.draw(1.0) == 1 for _ in range(1000))
    assert all(env.draw(0.0) == 0 for _ in range(1000))


def test_sampling_law_of_large_numbers():
    seed = 12345
    u = np.array([uniform_at(seed, k) for k in range(200_000)])
    # a fifth of the required sample size keeps this fast; the error bound scales accordingly
    assert abs((u < 0.5).mean() - 0.5) < 0.005 * np.sqrt(5)


def test_sampling_million_draws_kernel():
    from maximin._kernels import draw

    hits = sum(draw(np.uint64(99), np.uint64(k), 0.5) for k in range(1_000_000))
    assert abs(hits / 1e6 - 0.5) < 0.005


def test_sampling_replays():
    a, b = SamplingEnv(3), SamplingEnv(3)
    xs = [sample(a, MU1, ArmId(0, 1)) for _ in range(500)]
    ys = [sample(b, MU1, ArmId(0, 1)) for _ in range(500)]
    assert xs == ys
    assert a.total_samples == 500


def test_mix_seed_distinguishes_ids():
    seeds = {mix_seed(1, i, a, k) for i in range(3) for a in range(5) for k in range(50)}
    assert len(seeds) == 3 * 5 * 50
    assert mix_seed(1, 0, 1) != mix_seed(1, 1, 0)


def test_true_maximin():
    assert true_maximin(MU1)[:2] == (0, 0.4)
    assert true_maximin(GameInstance([[0.5, 0.5], [0.5, 0.5]]))[:2] == (0, 0.5)
    assert true_maximin(MU3X3)[:2] == (0, 0.45)


def test_eps_optimal():
    assert is_eps_optimal(MU1, 0, 0.0)
    assert not is_eps_optimal(MU1, 1, 0.0)
    assert is_eps_optimal(MU1, 1, 0.1 + 1e-12)


@given(st.lists(st.lists(st.floats(0, 1), min_size=1, max_size=4), min_size=2, max_size=4),
       st.floats(0, 1))
def test_best_action_is_always_eps_optimal(rows, eps):
    inst = GameInstance(rows)
    assert is_eps_optimal(inst, true_maximin(inst).action, eps)


def test_arm_stats_mean():
    assert ArmStats(4, 3).mean == 0.75
    with pytest.raises(ValueError):
        ArmStats(2, 3)


def test_run_result_checks_draws():
    RunResult(3, [1, 2], 0, "confidence", True)
    with pytest.raises(ValueError):
        RunResult(4, [1, 2], 0, "confidence", True)
    d = RunResult(3, [1, 2], 0, "cap", False, "m_lucb", 5).to_dict()
    assert json.loads(json.dumps(d))["stopped_by"] == "cap"
