import json

import numpy as np
import pytest

from maximin import MU1, MU3X3, harness
from maximin.harness import (
    ExperimentConfig,
    aggregate,
    emit,
    parse,
    replication_seeds,
    run_experiment,
    simulate,
)
from maximin.model import InstanceError, SamplingEnv
from maximin.strategies import StrategyConfig, run_strategy


def small_config(**kw):
    base = dict(instances=[("mu1", MU1), ("mu3x3", MU3X3)],
                algorithms=["m-lucb", "m-chernoff", "m-racing", "kl-lucb"], reps=100, seed=9)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(reps=0)
    with pytest.raises(ValueError):
        small_config(delta=1.0)
    with pytest.raises(ValueError):
        small_config(out="xml")


def test_baseline_skipped_on_larger_games():
    rep = run_experiment(small_config(reps=5))
    cells = {(c.instance, c.algorithm) for c in rep.cells}
    assert ("mu1", "kl_lucb_baseline") in cells
    assert ("mu3x3", "kl_lucb_baseline") not in cells
    assert len(cells) == 7


def test_single_replication_equals_run():
    cfg = small_config(reps=1, algorithms=["m-kl-lucb"], instances=[("mu1", MU1)])
    cell = run_experiment(cfg).cells[0]
    seed = int(replication_seeds(cfg.seed, 0, "m_kl_lucb", 1)[0])
    res = run_strategy(MU1, "m_kl_lucb", StrategyConfig(), SamplingEnv(seed))
    assert cell.mean_draws == [float(x) for x in res.draws]
    assert cell.mean_tau == res.tau
    assert cell.error_rate == (0.0 if res.correct else 1.0)
    assert cell.se_draws == [0.0] * 4
    assert cell.reps == 1


def test_reports_identical_across_parallelism(monkeypatch):
    # small chunks so that 16 workers all get replications
    monkeypatch.setattr(harness, "_CHUNK", 16)
    reports = {p: run_experiment(small_config(reps=300, parallelism=p)) for p in (1, 4, 16)}
    reports["again"] = run_experiment(small_config(reps=300, parallelism=4))
    for fmt in ("csv", "json"):
        outs = {k: emit(r, fmt) for k, r in reports.items()}
        assert outs[1] == outs[4] == outs[16] == outs["again"]


def test_different_seed_changes_report():
    a = emit(run_experiment(small_config(reps=50)))
    b = emit(run_experiment(small_config(reps=50, seed=10)))
    assert a != b


def test_cells_are_independent_of_neighbours():
    # a cell only depends on its own (instance id, algorithm) seed streams
    full = run_experiment(small_config(reps=50))
    alone = run_experiment(small_config(reps=50, algorithms=["m-racing"]))
    assert full.cell("mu3x3", "m_racing") == alone.cell("mu3x3", "m_racing")


def test_aggregate_invariants():
    rep = run_experiment(small_config())
    for c in rep.cells:
        assert 0.0 <= c.error_rate <= 1.0
        assert sum(c.mean_draws) == pytest.approx(c.mean_tau, rel=1e-12)
        assert c.cap_hits == 0


def test_cap_hits_are_recorded():
    cfg = small_config(reps=20, cap=30, algorithms=["m-lucb"], instances=[("mu1", MU1)])
    cell = run_experiment(cfg).cells[0]
    assert cell.cap_hits == 20
    assert cell.mean_tau == 30.0


def test_csv_schema():
    rep = run_experiment(small_config(reps=10, algorithms=["m-chernoff"], instances=[("mu1", MU1)]))
    lines = emit(rep, "csv").decode().splitlines()
    assert lines[0].split(",")[:6] == ["instance", "algorithm", "arm_action", "arm_response",
                                       "mean_draws", "se_draws"]
    assert len(lines) == 1 + 4 + 1
    assert lines[-1].split(",")[2] == "TOTAL"


def test_csv_rows_for_three_by_three():
    rep = run_experiment(small_config(reps=10, instances=[("mu3x3", MU3X3)],
                                      algorithms=["m-kl-lucb", "m-chernoff", "m-racing"]))
    rows = emit(rep, "csv").decode().splitlines()[1:]
    for algo in ("m_kl_lucb", "m_chernoff", "m_racing"):
        mine = [r for r in rows if r.split(",")[1] == algo]
        assert sum(r.split(",")[2] != "TOTAL" for r in mine) == 9


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip(fmt):
    rep = run_experiment(small_config(reps=37))
    data = emit(rep, fmt)
    back = parse(data, fmt)
    assert back == rep
    assert emit(back, fmt) == data


def test_config_from_json(tmp_path, instance_dir, monkeypatch):
    text = json.dumps({"instances": [str(instance_dir / "mu1.json"), {"name": "inline", "means": [[0.5], [0.1, 0.2]]}],
                       "algorithms": ["m-racing"], "reps": 3, "seed": 4,
                       "rate": {"kind": "racing", "params": {"C_K": 4}}, "parallelism": 2})
    cfg = ExperimentConfig.from_json(text)
    assert [n for n, _ in cfg.instances] == ["mu1", "inline"]
    assert cfg.rate.params == {"C_K": 4}
    assert cfg.parallelism == 2
    monkeypatch.setenv("MAXIMIN_THREADS", "3")
    assert ExperimentConfig.from_json(text).parallelism == 3
    rel = json.dumps({"instances": ["mu1.json"], "algorithms": ["m-lucb"]})
    assert ExperimentConfig.from_json(rel, base_dir=instance_dir).instances[0][1] == MU1
    with pytest.raises(InstanceError):
        ExperimentConfig.from_json(json.dumps({"instances": ["nope.json"], "algorithms": []}),
                                   base_dir=tmp_path)


def test_simulate_shapes():
    seeds = np.arange(10, dtype=np.uint64)
    b = simulate(MU3X3, "m_chernoff", StrategyConfig(), seeds)
    assert b.draws.shape == (10, 9)
    assert np.all(b.tau == b.draws.sum(axis=1))
    cell = aggregate("x", MU3X3, "m_chernoff", b)
    assert len(cell.matrix(MU3X3)) == 3
