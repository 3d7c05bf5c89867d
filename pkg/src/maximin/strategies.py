"""Sampling, stopping and recommendation rules for M-LUCB, M-KL-LUCB,
M-Chernoff, Maximin-Racing and the KL-LUCB worst-arm baseline.

Every operation here works on a :class:`StrategyState` and delegates the
numerical work to the compiled helpers in ``_kernels``; :func:`run_strategy`
strings the operations together one observation at a time, and
``harness.simulate`` runs the equivalent compiled loop over many seeds.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .bounds import ExplorationRate, exploration_beta
from .model import ArmId, GameInstance, RunResult, SamplingEnv, is_eps_optimal

ALGORITHMS = ("m_lucb", "m_kl_lucb", "m_chernoff", "m_racing", "kl_lucb_baseline")
ALGO_CODE = {
    "m_lucb": K.M_LUCB,
    "m_kl_lucb": K.M_KL_LUCB,
    "m_chernoff": K.M_CHERNOFF,
    "m_racing": K.M_RACING,
    "kl_lucb_baseline": K.KL_LUCB_BASELINE,
}
DEFAULT_INTERVALS = {
    "m_lucb": "hoeffding",
    "m_kl_lucb": "kl",
    "m_chernoff": "kl",
    "m_racing": "kl",
    "kl_lucb_baseline": "kl",
}
DEFAULT_CAP = 10_000_000


class StrategyError(ValueError):
    pass


def normalize_algorithm(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    aliases = {"kl_lucb": "kl_lucb_baseline", "baseline": "kl_lucb_baseline",
               "racing": "m_racing", "chernoff": "m_chernoff"}
    key = aliases.get(key, key)
    if key not in ALGO_CODE:
        raise StrategyError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    return key


@dataclass
class StrategyConfig:
    delta: float = 0.1
    epsilon: float = 0.0
    rate: ExplorationRate = field(default_factory=ExplorationRate)
    interval_kind: str | None = None  # None: the algorithm's own default
    two_action: str | None = None  # None, "least" or "most"
    refined_ck: bool = False
    cap: int = DEFAULT_CAP
    max_rounds: int | None = None  # overrides the racing r0 cap
    clip: bool = False

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise StrategyError("delta must lie in (0, 1)")
        if self.epsilon < 0:
            raise StrategyError("epsilon must be nonnegative")
        if self.interval_kind not in (None, "hoeffding", "kl"):
            raise StrategyError(f"unknown interval kind {self.interval_kind!r}")
        if self.two_action not in (None, "least", "most"):
            raise StrategyError(f"unknown two-action mode {self.two_action!r}")

    def intervals_for(self, algorithm: str) -> str:
        return self.interval_kind or DEFAULT_INTERVALS[algorithm]


@dataclass
class StrategyState:
    counts: np.ndarray
    sums: np.ndarray
    t: int = 0
    active: np.ndarray | None = None
    round: int = 0
    last_pair: tuple[ArmId, ArmId] | None = None

    @classmethod
    def fresh(cls, inst: GameInstance) -> "StrategyState":
        n = inst.K_bar
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
                   active=np.ones(n, dtype=np.bool_))

    @classmethod
    def from_stats(cls, inst: GameInstance, counts, sums) -> "StrategyState":
        counts = np.asarray(counts, dtype=np.int64).ravel()
        sums = np.asarray(sums, dtype=np.int64).ravel()
        if counts.shape != (inst.K_bar,) or sums.shape != counts.shape:
            raise StrategyError("stats do not match the instance")
        if np.any(sums < 0) or np.any(sums > counts):
            raise StrategyError("need 0 <= sum <= count for every arm")
        return cls(counts, sums, t=int(counts.sum()), active=np.ones(inst.K_bar, dtype=np.bool_))

    def record(self, idx: int, x: int) -> None:
        self.counts[idx] += 1
        self.sums[idx] += x
        self.t += 1

    def means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.sums / self.counts


def _arm(inst: GameInstance, idx: int) -> ArmId:
    starts = inst.starts
    i = int(np.searchsorted(starts, idx, side="right")) - 1
    return ArmId(i, int(idx - starts[i]))


def _require_drawn(state: StrategyState) -> None:
    if np.any(state.counts < 1):
        raise StrategyError("every arm must be drawn at least once")


def _rate(inst: GameInstance, config: StrategyConfig) -> ExplorationRate:
    return config.rate.resolved(inst, refined_ck=config.refined_ck)


def _beta(inst: GameInstance, config: StrategyConfig, t: int) -> float:
    return exploration_beta(_rate(inst, config), max(t, 1), config.delta)


def current_bounds(state: StrategyState, inst: GameInstance, config: StrategyConfig,
                   intervals: str = "hoeffding") -> tuple[np.ndarray, np.ndarray]:
    """(L, U) for every arm at the state's current time."""
    _require_drawn(state)
    beta = _beta(inst, config, state.t)
    L = np.empty(inst.K_bar)
    U = np.empty(inst.K_bar)
    ivkind = K.HOEFFDING if intervals == "hoeffding" else K.KL
    K.compute_bounds(ivkind, config.clip, state.counts, state.sums, beta, L, U)
    return L, U


def empirical_maximin(state: StrategyState, inst: GameInstance) -> int:
    active = state.active if state.active is not None else np.ones(inst.K_bar, dtype=np.bool_)
    return int(K.empirical_maximin(state.counts, state.sums, inst.starts, active))


def mlucb_select(state: StrategyState, inst: GameInstance, config: StrategyConfig,
                 intervals: str | None = None) -> tuple[ArmId, ArmId]:
    """(H_t, S_t): the LCB-minimizing response of the empirical maximin action
    and the highest-UCB such response among the other actions."""
    intervals = intervals or config.interval_kind or "hoeffding"
    L, U = current_bounds(state, inst, config, intervals)
    ivkind = K.HOEFFDING if intervals == "hoeffding" else K.KL
    h, s = K.lucb_pair(L, U, state.counts, state.sums, inst.starts, ivkind, config.clip,
                       _beta(inst, config, state.t))
    state.last_pair = (_arm(inst, h), _arm(inst, s))
    return state.last_pair


def mlucb_stop(state: StrategyState, inst: GameInstance, config: StrategyConfig,
               intervals: str | None = None) -> int | None:
    """Recommendation if the interval-based stopping rule fires, else None."""
    intervals = intervals or config.interval_kind or "hoeffding"
    L, U = current_bounds(state, inst, config, intervals)
    if K.eq2_gap(L, U, inst.starts) < config.epsilon:
        return empirical_maximin(state, inst)
    return None


def mlucb_two_action_select(state: StrategyState, inst: GameInstance, config: StrategyConfig,
                            intervals: str | None = None) -> ArmId:
    if inst.K != 2:
        raise StrategyError("the single-draw variant needs exactly two actions")
    h, s = mlucb_select(state, inst, config, intervals)
    nh = state.counts[inst.arm_index(h)]
    ns = state.counts[inst.arm_index(s)]
    if config.two_action == "most":
        return s if ns > nh else h
    return s if ns < nh else h


def chernoff_value(state: StrategyState, inst: GameInstance) -> tuple[float, int]:
    _require_drawn(state)
    val, i = K.chernoff_value(state.counts, state.sums, inst.starts)
    return float(val), int(i)


def chernoff_stop(state: StrategyState, inst: GameInstance, config: StrategyConfig) -> int | None:
    """GLRT stopping rule; only defined for epsilon = 0."""
    if config.epsilon > 0:
        raise StrategyError("the Chernoff stopping rule only supports epsilon = 0")
    val, i = chernoff_value(state, inst)
    if val > _beta(inst, config, state.t):
        return i
    return None


def c_K(inst: GameInstance, refined: bool = False) -> float:
    """Union-bound constant of the racing threshold: K_bar^2, or K * max_i K_i."""
    if refined:
        return float(inst.K * max(inst.sizes))
    return float(inst.K_bar**2)


def racing_r0(inst: GameInstance, config: StrategyConfig) -> float:
    if config.epsilon <= 0:
        return math.inf
    return 2.0 / config.epsilon**2 * math.log(4 * inst.K_bar / config.delta)


def racing_round_cap(inst: GameInstance, config: StrategyConfig) -> int:
    """Last round before the racing rule gives up (0 means no round cap)."""
    if config.max_rounds is not None:
        return int(config.max_rounds)
    r0 = racing_r0(inst, config)
    return 0 if math.isinf(r0) else max(1, math.ceil(r0))


class RoundLog(NamedTuple):
    removed_arms: list[ArmId]
    removed_action: int | None


def racing_round(state: StrategyState, inst: GameInstance, config: StrategyConfig,
                 env: SamplingEnv) -> RoundLog:
    """Draw every active arm once, then run the high-arm and action tests."""
    if state.active is None:
        state.active = np.ones(inst.K_bar, dtype=np.bool_)
    n_groups, _ = K.active_groups(inst.starts, state.active)
    if n_groups < 2:
        raise StrategyError("racing round needs at least two active actions")
    state.round += 1
    mu = inst.flat
    for a in np.flatnonzero(state.active):
        state.record(int(a), env.draw(mu[a]))
    r = float(state.round)
    beta = exploration_beta(_rate(inst, config), r, config.delta)
    removed = K.high_arm_step(state.counts, state.sums, inst.starts, state.active, r, beta)
    gone = int(K.action_step(state.counts, state.sums, inst.starts, state.active, r, beta))
    return RoundLog([_arm(inst, int(a)) for a in removed if a >= 0], gone if gone >= 0 else None)


class Recommendation(NamedTuple):
    action: int
    stopped_by: str


def racing_terminate(state: StrategyState, inst: GameInstance,
                     config: StrategyConfig) -> Recommendation | None:
    active = state.active if state.active is not None else np.ones(inst.K_bar, dtype=np.bool_)
    n_groups, last = K.active_groups(inst.starts, active)
    if n_groups == 1:
        return Recommendation(int(last), "confidence")
    cap = racing_round_cap(inst, config)
    if cap and state.round >= cap:
        return Recommendation(empirical_maximin(state, inst), "cap")
    return None


def kl_lucb_baseline_step(state: StrategyState, inst: GameInstance, config: StrategyConfig
                          ) -> tuple[tuple[ArmId, ArmId], int | None]:
    """LUCB aimed at the lowest-mean arm of a 2x2 game; on stopping, recommend
    the action that does not contain that arm."""
    if inst.sizes != (2, 2):
        raise StrategyError("the KL-LUCB baseline is defined for 2x2 games only")
    intervals = config.interval_kind or "kl"
    L, U = current_bounds(state, inst, config, intervals)
    ivkind = K.HOEFFDING if intervals == "hoeffding" else K.KL
    w, c, stop = K.baseline_select(L, U, state.counts, state.sums, ivkind, config.clip,
                                   _beta(inst, config, state.t))
    worst = _arm(inst, int(w))
    pair = (worst, _arm(inst, int(c)))
    return pair, (1 - worst.action if stop else None)


def run_strategy(inst: GameInstance, algorithm: str, config: StrategyConfig,
                 env: SamplingEnv, debug: bool = False) -> RunResult:
    """Run one strategy to completion, one observation at a time.

    With ``debug=True`` racing asserts after every round that all active arms
    have exactly ``round`` observations.
    """
    algorithm = normalize_algorithm(algorithm)
    if algorithm == "kl_lucb_baseline" and inst.sizes != (2, 2):
        raise StrategyError("the KL-LUCB baseline is defined for 2x2 games only")
    if algorithm == "m_chernoff" and config.epsilon > 0:
        raise StrategyError("M-Chernoff only supports epsilon = 0")
    if config.two_action and inst.K != 2:
        raise StrategyError("the single-draw variant needs exactly two actions")
    config = dataclasses.replace(config, rate=_rate(inst, config))
    state = StrategyState.fresh(inst)
    mu = inst.flat

    if algorithm == "m_racing":
        while True:
            n_act = int(state.active.sum())
            if state.t + n_act > config.cap:
                rec = Recommendation(empirical_maximin(state, inst), "cap")
                break
            racing_round(state, inst, config, env)
            if debug:
                act = state.counts[state.active]
                assert np.all(act == state.round), "active counts differ from the round"
            rec = racing_terminate(state, inst, config)
            if rec is not None:
                break
        return _result(inst, algorithm, config, state, rec, env)

    intervals = config.intervals_for(algorithm)
    for a in range(inst.K_bar):
        state.record(a, env.draw(mu[a]))
    pending: list[ArmId] = []
    rec = None
    while rec is None:
        if algorithm == "m_chernoff":
            i = chernoff_stop(state, inst, config)
            if i is not None:
                rec = Recommendation(i, "confidence")
                break
        if not pending:
            if state.t >= config.cap:
                rec = Recommendation(empirical_maximin(state, inst), "cap")
                break
            if algorithm == "kl_lucb_baseline":
                pair, stop = kl_lucb_baseline_step(state, inst, config)
                if stop is not None:
                    rec = Recommendation(stop, "confidence")
                    break
                pending = list(pair)
            else:
                if algorithm != "m_chernoff":
                    i = mlucb_stop(state, inst, config, intervals)
                    if i is not None:
                        rec = Recommendation(i, "confidence")
                        break
                if config.two_action:
                    pending = [mlucb_two_action_select(state, inst, config, intervals)]
                else:
                    pending = list(mlucb_select(state, inst, config, intervals))
        if state.t >= config.cap:
            rec = Recommendation(empirical_maximin(state, inst), "cap")
            break
        arm = pending.pop(0)
        state.record(inst.arm_index(arm), sample_arm(env, mu, inst.arm_index(arm)))
    return _result(inst, algorithm, config, state, rec, env)


def sample_arm(env: SamplingEnv, mu: np.ndarray, idx: int) -> int:
    return env.draw(float(mu[idx]))


def _result(inst, algorithm, config, state, rec, env) -> RunResult:
    return RunResult(
        tau=int(state.t),
        draws=[int(c) for c in state.counts],
        recommended=int(rec.action),
        stopped_by=rec.stopped_by,
        correct=is_eps_optimal(inst, int(rec.action), config.epsilon),
        algorithm=algorithm,
        seed=env.seed,
    )
