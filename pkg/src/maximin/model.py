"""Game instances, arm statistics, the Bernoulli sampling environment and
ground-truth predicates for two-round maximin identification."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class InstanceError(ValueError):
    """Raised for malformed or out-of-range game instances."""


class ArmId(NamedTuple):
    action: int
    response: int


@dataclass(frozen=True)
class GameInstance:
    """Ragged matrix of Bernoulli means; row ``i`` holds player B's responses
    to player A's action ``i``. Rows are never reordered."""

    means: tuple[tuple[float, ...], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        rows = tuple(tuple(float(m) for m in row) for row in self.means)
        if len(rows) < 2:
            raise InstanceError("K >= 2 actions required")
        for i, row in enumerate(rows):
            if len(row) == 0:
                raise InstanceError(f"action {i} has no responses")
            for m in row:
                if not (0.0 <= m <= 1.0):
                    raise InstanceError(f"mean {m!r} outside [0, 1] in row {i}")
        object.__setattr__(self, "means", rows)

    @property
    def K(self) -> int:
        return len(self.means)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(row) for row in self.means)

    @property
    def K_bar(self) -> int:
        return sum(self.sizes)

    @property
    def flat(self) -> np.ndarray:
        """Means in row-major arm order."""
        return np.array([m for row in self.means for m in row], dtype=np.float64)

    @property
    def starts(self) -> np.ndarray:
        """Offsets of each action's first arm in the flat order, plus K_bar."""
        return np.concatenate(([0], np.cumsum(self.sizes))).astype(np.int64)

    def arms(self) -> list[ArmId]:
        return [ArmId(i, j) for i, row in enumerate(self.means) for j in range(len(row))]

    def arm_index(self, arm: ArmId) -> int:
        i, j = arm
        if not (0 <= i < self.K and 0 <= j < len(self.means[i])):
            raise InstanceError(f"arm {tuple(arm)} is not valid for this instance")
        return int(self.starts[i]) + j

    def mean(self, arm: ArmId) -> float:
        self.arm_index(arm)
        return self.means[arm[0]][arm[1]]

    def to_json(self) -> str:
        return json.dumps({"means": [list(row) for row in self.means]})


def load_instance(data: bytes | str, name: str = "") -> GameInstance:
    """Parse ``{"means": [[...], ...]}`` into a validated instance."""
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InstanceError(f"cannot parse instance: {exc}") from exc
    if not isinstance(obj, dict) or "means" not in obj:
        raise InstanceError('instance must be a JSON object with a "means" key')
    rows = obj["means"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise InstanceError('"means" must be a list of lists')
    for row in rows:
        for m in row:
            if isinstance(m, bool) or not isinstance(m, (int, float)):
                raise InstanceError(f"mean {m!r} is not a number")
    return GameInstance(tuple(tuple(r) for r in rows), name=name or obj.get("name", ""))


@dataclass
class ArmStats:
    count: int = 0
    sum: int = 0

    def __post_init__(self):
        if self.count < 0 or not (0 <= self.sum <= self.count):
            raise ValueError(f"invalid stats count={self.count} sum={self.sum}")

    @property
    def mean(self) -> float:
        if self.count == 0:
            raise ValueError("mean undefined for an undrawn arm")
        return self.sum / self.count


# splitmix64 finalizer; also used for seed mixing in the harness.
def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def uniform_at(seed: int, counter: int) -> float:
    """The ``counter``-th uniform draw of the splitmix64 stream for ``seed``."""
    z = mix64((seed + (counter + 1) * GOLDEN) & MASK64)
    return (z >> 11) * 2.0**-53


def mix_seed(master: int, *ids: int) -> int:
    """Derive an independent 64-bit stream seed from a master seed and ids.

    ``h = mix64(master + GOLDEN)``, then for each id ``h = mix64((h ^ id) + GOLDEN)``.
    """
    h = mix64((master + GOLDEN) & MASK64)
    for v in ids:
        h = mix64(((h ^ (v & MASK64)) + GOLDEN) & MASK64)
    return h


@dataclass
class SamplingEnv:
    """Counter-based Bernoulli sampler: observation ``k`` depends only on
    ``(seed, k)``, so identical request sequences replay bit-identically."""

    seed: int
    total_samples: int = 0

    def __post_init__(self):
        self.seed &= MASK64

    def draw(self, mu: float) -> int:
        u = uniform_at(self.seed, self.total_samples)
        self.total_samples += 1
        return 1 if u < mu else 0


def sample(env: SamplingEnv, inst: GameInstance, arm: ArmId) -> int:
    return env.draw(inst.mean(arm))


class Maximin(NamedTuple):
    action: int
    value: float
    worst: tuple[float, ...]


def true_maximin(inst: GameInstance) -> Maximin:
    worst = tuple(min(row) for row in inst.means)
    value = max(worst)
    # index() returns the first occurrence: lowest-index tie-break
    return Maximin(worst.index(value), value, worst)


def is_eps_optimal(inst: GameInstance, i: int, eps: float) -> bool:
    if not 0 <= i < inst.K:
        raise InstanceError(f"action {i} out of range")
    best = true_maximin(inst)
    return best.value - best.worst[i] <= eps


@dataclass
class RunResult:
    tau: int
    draws: list[int]
    recommended: int
    stopped_by: str  # "confidence" or "cap"
    correct: bool
    algorithm: str = ""
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if sum(self.draws) != self.tau:
            raise ValueError("draw counts must sum to tau")

    def to_dict(self) -> dict:
        out = {
            "algorithm": self.algorithm,
            "tau": self.tau,
            "draws": list(self.draws),
            "recommended": self.recommended,
            "stopped_by": self.stopped_by,
            "correct": self.correct,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out


def as_instance(obj: GameInstance | Sequence[Sequence[float]]) -> GameInstance:
    if isinstance(obj, GameInstance):
        return obj
    return GameInstance(tuple(tuple(r) for r in obj))
