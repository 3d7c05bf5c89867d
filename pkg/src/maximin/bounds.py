"""Divergences, confidence intervals, exploration rates and the GLRT statistic.

The scalar primitives are numba-compiled so the batch simulation kernels and
the Python-level strategy operations share a single implementation.
All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numba as nb
import numpy as np

from .model import ArmStats, GameInstance

KL_TOL = 1e-10
KL_MAX_ITER = 100


@nb.njit(cache=True)
def kl_bernoulli(x, y):
    """Binary relative entropy d(x, y), with 0 log 0 = 0 and +inf when the
    target is degenerate and differs from ``x``."""
    if x == y:
        return 0.0
    if y <= 0.0 or y >= 1.0:
        return math.inf
    out = 0.0
    if x > 0.0:
        out += x * math.log(x / y)
    if x < 1.0:
        out += (1.0 - x) * math.log((1.0 - x) / (1.0 - y))
    return max(out, 0.0)


@nb.njit(cache=True)
def elimination_divergence(x, y):
    """I(x, y): symmetric-midpoint divergence, zero unless x >= y."""
    if x < y:
        return 0.0
    m = 0.5 * (x + y)
    return kl_bernoulli(x, m) + kl_bernoulli(y, m)


@nb.njit(cache=True)
def kl_lower(mean, count, beta):
    """Smallest q <= mean with count * d(mean, q) <= beta, by bisection."""
    if beta <= 0.0 or mean <= 0.0:
        return mean
    # Pinsker: the root lies within the Hoeffding radius
    lo = max(mean - math.sqrt(beta / (2.0 * count)), 0.0)
    hi = mean
    if lo == 0.0 and count * kl_bernoulli(mean, 0.0) <= beta:
        return 0.0
    it = 0
    while hi - lo > KL_TOL and it < KL_MAX_ITER:
        mid = 0.5 * (lo + hi)
        if count * kl_bernoulli(mean, mid) <= beta:
            hi = mid
        else:
            lo = mid
        it += 1
    return hi


@nb.njit(cache=True)
def kl_upper(mean, count, beta):
    """Largest q >= mean with count * d(mean, q) <= beta, by bisection."""
    if beta <= 0.0 or mean >= 1.0:
        return mean
    lo = mean
    hi = min(mean + math.sqrt(beta / (2.0 * count)), 1.0)
    if hi == 1.0 and count * kl_bernoulli(mean, 1.0) <= beta:
        return 1.0
    it = 0
    while hi - lo > KL_TOL and it < KL_MAX_ITER:
        mid = 0.5 * (lo + hi)
        if count * kl_bernoulli(mean, mid) <= beta:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo


@nb.njit(cache=True)
def hoeffding_halfwidth(count, beta):
    return math.sqrt(beta / (2.0 * count))


@nb.njit(cache=True)
def glrt_counts(nP, sP, nQ, sQ):
    """Signed GLRT statistic Z_{P,Q} from raw counts and success sums."""
    mP = sP / nP
    mQ = sQ / nQ
    if mP < mQ:
        return -glrt_counts(nQ, sQ, nP, sP)
    m = (sP + sQ) / (nP + nQ)
    return nP * kl_bernoulli(mP, m) + nQ * kl_bernoulli(mQ, m)


# Rate kinds, in the order used by the compiled kernels.
RATE_KINDS = (
    "practical",
    "corollary1",
    "corollary2",
    "chernoff-pac",
    "chernoff-pac-kbar",
    "racing",
)
_KIND_CODE = {k: n for n, k in enumerate(RATE_KINDS)}


@nb.njit(cache=True)
def beta_value(kind, p0, p1, t, delta):
    if kind == 0:
        return math.log((math.log(t) + 1.0) / delta)
    if kind == 1:
        # p0 = C, p1 = alpha
        return math.log(p0 / delta) + (1.0 + p1) * math.log(t)
    if kind == 2:
        # p0 = b, p1 = c
        ld = math.log(1.0 / delta)
        return ld + p0 * math.log(ld) + p1 * math.log(math.log(math.e * t))
    if kind == 3:
        # p0 = K_1, p1 = K
        return math.log(2.0 * p0 * (p1 - 1.0) * t / delta)
    if kind == 4:
        # p0 = K_bar
        return math.log(4.0 * p0 * p0 * t / delta)
    if kind == 5:
        # p0 = C_K
        return math.log(4.0 * p0 * t / delta)
    return math.nan


class ConfidenceInterval(NamedTuple):
    lower: float
    upper: float


@dataclass(frozen=True)
class ExplorationRate:
    """An exploration rate beta(t, delta).

    ``params`` holds the kind-specific constants: ``C`` and ``alpha`` for
    corollary1, ``b`` and ``c`` for corollary2, ``K1`` and ``K`` for
    chernoff-pac, ``K_bar`` for chernoff-pac-kbar and ``C_K`` for racing.
    Missing constants are filled from an instance by :meth:`resolved`.
    """

    kind: str = "practical"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = self.kind.replace("_", "-")
        if kind not in _KIND_CODE:
            raise ValueError(f"unknown exploration rate {self.kind!r}")
        object.__setattr__(self, "kind", kind)

    def resolved(self, inst: GameInstance, refined_ck: bool = False) -> "ExplorationRate":
        p = dict(self.params)
        if self.kind == "corollary1":
            p.setdefault("alpha", 1.0)
            if "C" not in p:
                p["C"] = compute_C_alpha(p["alpha"], inst.K_bar)
        elif self.kind == "corollary2":
            p.setdefault("c", 3.0)
            p.setdefault("b", 2.0)
        elif self.kind == "chernoff-pac":
            # K_1 is the response count of the unknown maximin action; use the largest row.
            p.setdefault("K1", float(max(inst.sizes)))
            p.setdefault("K", float(inst.K))
        elif self.kind == "chernoff-pac-kbar":
            p.setdefault("K_bar", float(inst.K_bar))
        elif self.kind == "racing":
            from .strategies import c_K

            p.setdefault("C_K", c_K(inst, refined=refined_ck))
        return ExplorationRate(self.kind, p)

    def codes(self) -> tuple[int, float, float]:
        p = self.params
        names = {
            "practical": (),
            "corollary1": ("C", "alpha"),
            "corollary2": ("b", "c"),
            "chernoff-pac": ("K1", "K"),
            "chernoff-pac-kbar": ("K_bar",),
            "racing": ("C_K",),
        }[self.kind]
        try:
            vals = [float(p[n]) for n in names]
        except KeyError as exc:
            raise ValueError(f"rate {self.kind} is missing parameter {exc}") from None
        vals += [0.0] * (2 - len(vals))
        return _KIND_CODE[self.kind], vals[0], vals[1]

    def __call__(self, t: float, delta: float) -> float:
        return exploration_beta(self, t, delta)


def exploration_beta(rate: ExplorationRate, t: float, delta: float) -> float:
    if t < 1:
        raise ValueError("exploration rate needs t >= 1")
    kind, p0, p1 = rate.codes()
    return float(beta_value(kind, p0, p1, float(t), float(delta)))


def _check_drawn(stats: ArmStats) -> None:
    if stats.count < 1:
        raise ValueError("confidence interval needs at least one observation")


def hoeffding_interval(stats: ArmStats, beta: float, clip: bool = False) -> ConfidenceInterval:
    _check_drawn(stats)
    m = stats.mean
    h = float(hoeffding_halfwidth(stats.count, beta))
    if clip:
        return ConfidenceInterval(max(m - h, 0.0), min(m + h, 1.0))
    return ConfidenceInterval(m - h, m + h)


def kl_interval(stats: ArmStats, beta: float) -> ConfidenceInterval:
    _check_drawn(stats)
    m = stats.mean
    n = float(stats.count)
    return ConfidenceInterval(float(kl_lower(m, n, beta)), float(kl_upper(m, n, beta)))


def weighted_mean_pair(stats_p: ArmStats, stats_q: ArmStats) -> float:
    n = stats_p.count + stats_q.count
    if n == 0:
        raise ValueError("both arms are undrawn")
    return (stats_p.sum + stats_q.sum) / n


def glrt_statistic(stats_p: ArmStats, stats_q: ArmStats) -> float:
    """Z_{P,Q}; nonnegative iff the empirical mean of P is at least that of Q."""
    if stats_p.count < 1 or stats_q.count < 1:
        raise ValueError("GLRT statistic needs both arms drawn")
    return float(glrt_counts(float(stats_p.count), float(stats_p.sum),
                             float(stats_q.count), float(stats_q.sum)))


def _series_sums(alpha: float, tail_tol: float = 1e-6) -> tuple[float, float]:
    """Upper bounds on sum log t / t^(1+a) and sum log^2 t / t^(1+a) over t >= 2.

    Partial sums up to T plus the integral of the tail from T, with T grown
    until the last summed term (which bounds the sum/integral gap) is below
    ``tail_tol``.
    """
    s = 1.0 + alpha
    T = 1024
    while True:
        t = np.arange(2, T + 1, dtype=np.float64)
        lt = np.log(t)
        p = t**-s
        s1 = float(np.sum(lt * p))
        s2 = float(np.sum(lt * lt * p))
        L = math.log(T)
        last = (L + L * L) * T**-s
        # both summands decrease for log t > 2/s, which T >= 1024 guarantees
        if last < tail_tol:
            tail1 = (alpha * L + 1.0) / (alpha**2 * T**alpha)
            tail2 = (L * L / alpha + 2.0 * L / alpha**2 + 2.0 / alpha**3) / T**alpha
            return s1 + tail1, s2 + tail2
        T *= 4
        if T > 1 << 26:
            raise RuntimeError(f"series for alpha={alpha} does not truncate")


def compute_C_alpha(alpha: float, K_bar: int, max_iter: int = 10_000) -> float:
    """Smallest-ish C with e K_bar sum_t log(t) log(C t^(1+alpha)) / t^(1+alpha) <= C.

    Fixed-point iteration from C = 1 on an upper bound of the series, so the
    returned constant satisfies the inequality for the exact series too.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    s1, s2 = _series_sums(alpha)

    def rhs(C: float) -> float:
        return math.e * K_bar * (math.log(C) * s1 + (1.0 + alpha) * s2)

    C = 1.0
    for _ in range(max_iter):
        nxt = rhs(C)
        if abs(nxt - C) <= 1e-12 * nxt:
            C = nxt
            break
        C = nxt
    else:
        raise RuntimeError(f"fixed point for C_alpha did not converge (alpha={alpha})")
    # rhs has slope < 1 past the fixed point: stepping slightly above certifies
    C *= 1.0 + 1e-9
    if rhs(C) > C:
        raise RuntimeError("C_alpha certificate failed")
    return C
