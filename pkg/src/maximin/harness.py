"""Monte Carlo experiment harness: seeded batch replication, aggregation and
CSV/JSON reports.

Replication ``k`` of algorithm ``a`` on the ``n``-th configured instance is
driven by the stream ``mix_seed(master_seed, n, a, k)`` where ``a`` is the
algorithm's fixed code (m_lucb=0 ... kl_lucb_baseline=4). Each replication
owns its stream, so a report does not depend on chunking or thread count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from .bounds import ExplorationRate
from .model import GameInstance, InstanceError, load_instance, mix_seed, true_maximin
from .strategies import (
    ALGO_CODE,
    StrategyConfig,
    StrategyError,
    _rate,
    normalize_algorithm,
    racing_round_cap,
)

CSV_COLUMNS = ["instance", "algorithm", "arm_action", "arm_response", "mean_draws",
               "se_draws", "error_rate", "reps", "cap_hits"]
_CHUNK = 256


@dataclass
class Batch:
    draws: np.ndarray  # (reps, K_bar) int64
    recommended: np.ndarray  # (reps,) int64
    capped: np.ndarray  # (reps,) bool

    @property
    def tau(self) -> np.ndarray:
        return self.draws.sum(axis=1)


def replication_seeds(master_seed: int, instance_id: int, algorithm: str, reps: int,
                      first: int = 0) -> np.ndarray:
    code = ALGO_CODE[normalize_algorithm(algorithm)]
    return np.array([mix_seed(master_seed, instance_id, code, k) for k in range(first, first + reps)],
                    dtype=np.uint64)


def simulate(inst: GameInstance, algorithm: str, config: StrategyConfig, seeds: np.ndarray,
             parallelism: int = 1) -> Batch:
    """Run one replication per seed with the compiled loop."""
    algorithm = normalize_algorithm(algorithm)
    if algorithm == "kl_lucb_baseline" and inst.sizes != (2, 2):
        raise StrategyError("the KL-LUCB baseline is defined for 2x2 games only")
    if algorithm == "m_chernoff" and config.epsilon > 0:
        raise StrategyError("M-Chernoff only supports epsilon = 0")
    if config.two_action and inst.K != 2:
        raise StrategyError("the single-draw variant needs exactly two actions")
    kind, p0, p1 = _rate(inst, config).codes()
    ivkind = K.HOEFFDING if config.intervals_for(algorithm) == "hoeffding" else K.KL
    two = {None: K.TWO_ACTION_OFF, "least": K.TWO_ACTION_LEAST, "most": K.TWO_ACTION_MOST}[
        config.two_action]
    r0 = racing_round_cap(inst, config)
    n = len(seeds)
    draws = np.zeros((n, inst.K_bar), dtype=np.int64)
    rec = np.zeros(n, dtype=np.int64)
    capped = np.zeros(n, dtype=np.bool_)
    mu, starts = inst.flat, inst.starts
    seeds = np.ascontiguousarray(seeds, dtype=np.uint64)

    def work(lo: int) -> None:
        hi = min(lo + _CHUNK, n)
        K.run_batch(mu, starts, ALGO_CODE[algorithm], ivkind, config.clip, kind, p0, p1,
                    config.delta, config.epsilon, two, config.cap, r0, seeds[lo:hi],
                    draws[lo:hi], rec[lo:hi], capped[lo:hi])

    chunks = range(0, n, _CHUNK)
    if parallelism <= 1:
        for lo in chunks:
            work(lo)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            list(pool.map(work, chunks))
    return Batch(draws, rec, capped)


@dataclass
class CellReport:
    instance: str
    algorithm: str
    arms: list[tuple[int, int]]
    mean_draws: list[float]
    se_draws: list[float]
    mean_tau: float
    se_tau: float
    error_rate: float
    reps: int
    cap_hits: int

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "algorithm": self.algorithm,
            "arms": [list(a) for a in self.arms],
            "mean_draws": self.mean_draws,
            "se_draws": self.se_draws,
            "mean_tau": self.mean_tau,
            "se_tau": self.se_tau,
            "error_rate": self.error_rate,
            "reps": self.reps,
            "cap_hits": self.cap_hits,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CellReport":
        return cls(d["instance"], d["algorithm"], [tuple(a) for a in d["arms"]],
                   list(d["mean_draws"]), list(d["se_draws"]), d["mean_tau"], d["se_tau"],
                   d["error_rate"], d["reps"], d["cap_hits"])

    def matrix(self, inst: GameInstance) -> list[list[float]]:
        """Mean draws arranged like the instance's means."""
        it = iter(self.mean_draws)
        return [[next(it) for _ in row] for row in inst.means]


def _se(x: np.ndarray) -> float:
    if len(x) < 2:
        return 0.0
    return float(np.std(x, ddof=1) / math.sqrt(len(x)))


def aggregate(name: str, inst: GameInstance, algorithm: str, batch: Batch,
              epsilon: float = 0.0) -> CellReport:
    best = true_maximin(inst)
    worst = np.array(best.worst)
    wrong = best.value - worst[batch.recommended] > epsilon
    d = batch.draws.astype(np.float64)
    return CellReport(
        instance=name,
        algorithm=normalize_algorithm(algorithm),
        arms=[tuple(a) for a in inst.arms()],
        mean_draws=[float(v) for v in d.mean(axis=0)],
        se_draws=[_se(d[:, a]) for a in range(inst.K_bar)],
        mean_tau=float(batch.tau.mean()),
        se_tau=_se(batch.tau.astype(np.float64)),
        error_rate=float(wrong.mean()),
        reps=int(len(batch.recommended)),
        cap_hits=int(batch.capped.sum()),
    )


@dataclass
class AggregateReport:
    cells: list[CellReport] = field(default_factory=list)

    def cell(self, instance: str, algorithm: str) -> CellReport:
        algorithm = normalize_algorithm(algorithm)
        for c in self.cells:
            if c.instance == instance and c.algorithm == algorithm:
                return c
        raise KeyError((instance, algorithm))

    def to_dict(self) -> dict:
        return {"cells": [c.to_dict() for c in self.cells]}


@dataclass
class ExperimentConfig:
    instances: list[tuple[str, GameInstance]]
    algorithms: list[str]
    delta: float = 0.1
    epsilon: float = 0.0
    reps: int = 10_000
    seed: int = 1
    rate: ExplorationRate = field(default_factory=ExplorationRate)
    parallelism: int = 1
    out: str = "csv"
    cap: int = 10_000_000
    two_action: str | None = None
    refined_ck: bool = False

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.out not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.out!r}")
        self.algorithms = [normalize_algorithm(a) for a in self.algorithms]

    def strategy_config(self) -> StrategyConfig:
        return StrategyConfig(delta=self.delta, epsilon=self.epsilon, rate=self.rate,
                              cap=self.cap, two_action=self.two_action,
                              refined_ck=self.refined_ck)

    @classmethod
    def from_json(cls, data: str | bytes, base_dir: Path | None = None) -> "ExperimentConfig":
        obj = json.loads(data)
        base_dir = base_dir or Path(".")
        instances = []
        for entry in obj["instances"]:
            if isinstance(entry, str):
                path = Path(entry)
                if not path.is_absolute():
                    path = base_dir / path
                try:
                    text = path.read_text()
                except OSError as exc:
                    raise InstanceError(f"cannot read instance {entry}: {exc}") from exc
                instances.append((path.stem, load_instance(text, name=path.stem)))
            else:
                name = entry.get("name") or f"instance{len(instances)}"
                instances.append((name, load_instance(json.dumps(entry), name=name)))
        rate = obj.get("rate", "practical")
        if isinstance(rate, str):
            rate = ExplorationRate(rate)
        else:
            rate = ExplorationRate(rate["kind"], dict(rate.get("params", {})))
        parallelism = int(os.environ.get("MAXIMIN_THREADS", obj.get("parallelism", 1)))
        return cls(
            instances=instances,
            algorithms=list(obj["algorithms"]),
            delta=float(obj.get("delta", 0.1)),
            epsilon=float(obj.get("epsilon", 0.0)),
            reps=int(obj.get("reps", 10_000)),
            seed=int(obj.get("seed", 1)),
            rate=rate,
            parallelism=parallelism,
            out=obj.get("out", "csv"),
            cap=int(obj.get("cap", 10_000_000)),
            two_action=obj.get("two_action"),
            refined_ck=bool(obj.get("refined_ck", False)),
        )


def run_experiment(config: ExperimentConfig) -> AggregateReport:
    scfg = config.strategy_config()
    report = AggregateReport()
    for n, (name, inst) in enumerate(config.instances):
        for algo in config.algorithms:
            if algo == "kl_lucb_baseline" and inst.sizes != (2, 2):
                continue
            seeds = replication_seeds(config.seed, n, algo, config.reps)
            batch = simulate(inst, algo, scfg, seeds, config.parallelism)
            report.cells.append(aggregate(name, inst, algo, batch, config.epsilon))
    return report


def emit(report: AggregateReport, fmt: str = "csv") -> bytes:
    """Serialize a report; floats use repr so parsing recovers them exactly."""
    if fmt == "json":
        return (json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n").encode()
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in report.cells:
        for (i, j), m, s in zip(c.arms, c.mean_draws, c.se_draws):
            w.writerow([c.instance, c.algorithm, i, j, repr(m), repr(s), "", "", ""])
        w.writerow([c.instance, c.algorithm, "TOTAL", "", repr(c.mean_tau), repr(c.se_tau),
                    repr(c.error_rate), c.reps, c.cap_hits])
    return buf.getvalue().encode()


def parse(data: bytes, fmt: str = "csv") -> AggregateReport:
    if fmt == "json":
        return AggregateReport([CellReport.from_dict(d) for d in json.loads(data)["cells"]])
    rows = list(csv.DictReader(io.StringIO(data.decode())))
    report = AggregateReport()
    arms, means, ses = [], [], []
    for row in rows:
        if row["arm_action"] != "TOTAL":
            arms.append((int(row["arm_action"]), int(row["arm_response"])))
            means.append(float(row["mean_draws"]))
            ses.append(float(row["se_draws"]))
            continue
        report.cells.append(CellReport(row["instance"], row["algorithm"], arms, means, ses,
                                       float(row["mean_draws"]), float(row["se_draws"]),
                                       float(row["error_rate"]), int(row["reps"]),
                                       int(row["cap_hits"])))
        arms, means, ses = [], [], []
    return report
