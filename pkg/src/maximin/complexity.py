"""Sample-complexity calculators: the M-LUCB constant H*, its time bound,
the two-action and racing constants, and the lower-bound constant T* for
2x2 games.

Instances are never assumed sorted: the best action, the runner-up and the
smallest response of each row are resolved from the means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize

from .bounds import ExplorationRate, elimination_divergence, exploration_beta, kl_bernoulli
from .model import GameInstance, true_maximin


class ComplexityError(ValueError):
    pass


def _frac(x: float) -> Fraction:
    # decimal literal of the float, so 0.4 is 2/5 rather than its binary expansion
    return Fraction(repr(float(x)))


def _top_two(inst: GameInstance) -> tuple[int, int]:
    best = true_maximin(inst)
    rest = [i for i in range(inst.K) if i != best.action]
    second = max(rest, key=lambda i: (best.worst[i], -i))
    if best.worst[second] >= best.value:
        raise ComplexityError("best and second-best maximin values are tied")
    return best.action, second


def h_star_terms(inst: GameInstance) -> list[Fraction]:
    """Exact per-arm constants c_P with the virtual-arm centre halfway between
    the best and second-best worst-case values."""
    b, s = _top_two(inst)
    worst = [min(_frac(m) for m in row) for row in inst.means]
    centre = (worst[b] + worst[s]) / 2
    terms = []
    for i, row in enumerate(inst.means):
        for m in row:
            denom = max((worst[i] - centre) ** 2, (_frac(m) - worst[i]) ** 2)
            if denom == 0:
                raise ComplexityError(f"zero gap for arm in action {i}")
            terms.append(1 / denom)
    return terms


def h_star(inst: GameInstance) -> float:
    return float(sum(h_star_terms(inst)))


def t_bound(inst: GameInstance, rate: ExplorationRate, delta: float,
            h: float | None = None, cap: int = 10**12) -> int:
    """inf{t in N : 4 H* beta(t, delta) < t}."""
    h = h_star(inst) if h is None else h
    rate = rate.resolved(inst)

    def ok(t: int) -> bool:
        return 4.0 * h * exploration_beta(rate, t, delta) < t

    guess = _closed_form_guess(h, rate, delta)
    lo, hi = 1, max(2, guess)
    while not ok(hi):
        lo, hi = hi, hi * 2
        if hi > cap:
            raise ComplexityError("time bound exceeds the search cap")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    t = hi
    # the predicate need not be monotone for tiny t; walk down while it holds
    while t > 1 and ok(t - 1):
        t -= 1
    return t


def _closed_form_guess(h: float, rate: ExplorationRate, delta: float) -> int:
    """Closed-form starting point: for the corollary1 rate, x = (1+a)/c1 (log A + 2 log log A)
    with c1 = 1/(4H), c2 = C/delta and A = (1+a) c2^(1/(1+a)) / c1; otherwise 4H beta(4H)."""
    if rate.kind == "corollary1":
        alpha, C = rate.params["alpha"], rate.params["C"]
        c1 = 1.0 / (4.0 * h)
        A = (1 + alpha) * (C / delta) ** (1 / (1 + alpha)) / c1
        if A > 4.85:
            return max(1, int((1 + alpha) / c1 * (math.log(A) + 2 * math.log(math.log(A)))))
    n = max(1, math.ceil(4 * h))
    return max(1, math.ceil(4 * h * exploration_beta(rate, n, delta)))


def _two_by_two(inst: GameInstance) -> tuple[float, float, float, float, list[int]]:
    """(mu1, mu2, mu3, mu4) in the sorted two-action convention, plus the flat
    instance index of each."""
    if inst.sizes != (2, 2):
        raise ComplexityError("a 2x2 instance is required")
    b, s = _top_two(inst)
    order = []
    for i in (b, s):
        row = inst.means[i]
        lo = 0 if row[0] <= row[1] else 1
        order += [2 * i + lo, 2 * i + 1 - lo]
    flat = inst.flat
    return (*(float(flat[k]) for k in order), order)


def two_by_two_term(inst: GameInstance) -> float:
    """Sharper M-LUCB complexity constant for 2x2 games with the single-draw
    rule: 8 (2/g^2 + 1/(mu12 - mu21)^2 + 1/max(g^2, (mu22 - mu21)^2)) where
    g = mu11 - mu21, in sorted order. Exact rational arithmetic."""
    m11, m12, m21, m22 = (_frac(x) for x in _two_by_two(inst)[:4])
    g = m11 - m21
    if g <= 0 or m12 == m21:
        raise ComplexityError("tied means")
    return float(8 * (2 / g**2 + 1 / (m12 - m21) ** 2 + 1 / max(g**2, (m22 - m21) ** 2)))


def _I(x: float, y: float) -> float:
    # the divergence between the two values, larger one first
    return float(elimination_divergence(max(x, y), min(x, y)))


def racing_terms(inst: GameInstance, eps: float = 0.0) -> list[float]:
    """Per-arm limits of E[draws]/log(1/delta) for Maximin-Racing, in flat order."""
    b, s = _top_two(inst)
    worst = [min(row) for row in inst.means]
    best_min = inst.means[b].index(worst[b])
    out = []
    for i, row in enumerate(inst.means):
        for j, m in enumerate(row):
            if i == b and j == best_min:
                cands = [eps**2 / 2, _I(worst[s], worst[b])]
            else:
                cands = [eps**2 / 2, _I(worst[i], worst[b]), _I(m, worst[i])]
            top = max(cands)
            if top <= 0:
                raise ComplexityError(f"all rates vanish for arm ({i}, {j})")
            out.append(1.0 / top)
    return out


@dataclass
class ComplexityReport:
    h_star: float
    c_terms: list[float]
    t_bound: int
    delta: float
    rate: str
    two_by_two_term: float | None = None
    racing_terms: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "h_star": self.h_star,
            "c_terms": self.c_terms,
            "t_bound": self.t_bound,
            "delta": self.delta,
            "rate": self.rate,
            "two_by_two_term": self.two_by_two_term,
            "racing_terms": self.racing_terms,
        }


def complexity_report(inst: GameInstance, rate: ExplorationRate, delta: float,
                      eps: float = 0.0) -> ComplexityReport:
    terms = h_star_terms(inst)
    h = float(sum(terms))
    t4 = two_by_two_term(inst) if inst.sizes == (2, 2) else None
    try:
        rterms = racing_terms(inst, eps)
    except ComplexityError:
        rterms = []
    return ComplexityReport(h, [float(c) for c in terms], t_bound(inst, rate, delta, h=h),
                            delta, rate.kind, t4, rterms)


# --- lower bound for 2x2 games -------------------------------------------------

def weighted_mean_w(mu: Sequence[float], w: Sequence[float], subset: Sequence[int]) -> float:
    tot = sum(w[k] for k in subset)
    if tot <= 0:
        raise ComplexityError("zero total weight on the subset")
    return sum(w[k] * mu[k] for k in subset) / tot


def f_a(mu4: Sequence[float], w: Sequence[float], a: int) -> float:
    """F_a(mu, w) for a in {1, 2}, means given as (mu1, mu2, mu3, mu4).

    Returns 0 when w_a + w_3 = 0 (the comparison arms carry no weight).
    """
    if a not in (1, 2):
        raise ComplexityError("a must be 1 or 2")
    k = a - 1
    if w[k] + w[2] <= 0:
        return 0.0
    pooled = weighted_mean_w(mu4, w, (k, 2))
    if mu4[3] >= pooled:
        return w[k] * kl_bernoulli(mu4[k], pooled) + w[2] * kl_bernoulli(mu4[2], pooled)
    pooled = weighted_mean_w(mu4, w, (k, 2, 3))
    return (w[k] * kl_bernoulli(mu4[k], pooled) + w[2] * kl_bernoulli(mu4[2], pooled)
            + w[3] * kl_bernoulli(mu4[3], pooled))


def alt_projection_value(mu4: Sequence[float], w: Sequence[float]) -> float:
    """Cheapest weighted KL move to an instance where the other action wins."""
    return min(f_a(mu4, w, 1), f_a(mu4, w, 2))


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    rho = ind[u - css / ind > 0][-1]
    return np.maximum(v - css[rho - 1] / rho, 0.0)


def _maximize_on_simplex(obj, dim: int, starts: list[np.ndarray], tol: float) -> tuple[float, np.ndarray]:
    best_val, best_w = -math.inf, None
    for x0 in starts:
        res = optimize.minimize(lambda x: -obj(project_simplex(x)), x0, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": tol, "maxiter": 20000,
                                         "maxfev": 40000, "initial_simplex": _init_simplex(x0)})
        w = project_simplex(res.x)
        val = obj(w)
        if val > best_val:
            best_val, best_w = val, w
    return best_val, best_w


def _init_simplex(x0: np.ndarray, step: float = 0.1) -> np.ndarray:
    pts = [x0]
    for k in range(len(x0)):
        e = x0.copy()
        e[k] += step
        pts.append(e)
    return np.array(pts)


def _starts(dim: int, n_random: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    pts = [np.full(dim, 1.0 / dim)]
    for k in range(dim):
        # near each vertex, and on each face opposite a vertex
        v = np.full(dim, 0.1 / (dim - 1))
        v[k] = 0.9
        pts.append(v)
        f = np.full(dim, 1.0 / (dim - 1))
        f[k] = 0.0
        pts.append(f)
    pts += list(rng.dirichlet(np.ones(dim), size=n_random))
    return pts


@dataclass
class LowerBound:
    t_star: float
    w_star: list[float]  # in the instance's flat arm order
    mu4: tuple[float, float, float, float]
    w4: list[float]  # in the sorted (mu1, mu2, mu3, mu4) order


def t_star(inst: GameInstance, n_random: int = 20, seed: int = 0, tol: float = 1e-12) -> LowerBound:
    """Maximize min(F1, F2) over the 4-simplex by multi-start Nelder-Mead on
    the projected simplex; T* is the inverse of the optimal value."""
    *mu, order = _two_by_two(inst)
    val, w = _maximize_on_simplex(lambda w: alt_projection_value(mu, w), 4,
                                  _starts(4, n_random, seed), tol)
    if val <= 0:
        raise ComplexityError("degenerate instance: the lower-bound value is zero")
    return _pack(val, w, mu, order)


def _pack(val, w, mu, order) -> LowerBound:
    flat = [0.0] * 4
    for k, idx in enumerate(order):
        flat[idx] = float(w[k])
    return LowerBound(float(1.0 / val), flat, tuple(mu), [float(x) for x in w])


def t_star_particular(inst: GameInstance) -> LowerBound:
    """T* when mu4 > mu2, where arm 4 gets no weight.

    For a fixed w3 = s, F1 grows with w1 and F2 with w2 = 1 - s - w1, so the
    inner max-min is at F1 = F2 (root-found); the outer problem in s is a
    bounded scalar maximization.
    """
    *mu, order = _two_by_two(inst)
    if not mu[3] > mu[1]:
        raise ComplexityError("the particular case needs mu4 > mu2")

    def g(a, wa, s):
        k = a - 1
        if wa + s <= 0:
            return 0.0
        m = (wa * mu[k] + s * mu[2]) / (wa + s)
        return wa * kl_bernoulli(mu[k], m) + s * kl_bernoulli(mu[2], m)

    def balanced(s):
        rest = 1.0 - s
        h = lambda w1: g(1, w1, s) - g(2, rest - w1, s)
        if h(0.0) >= 0:
            return 0.0
        if h(rest) <= 0:
            return rest
        return optimize.brentq(h, 0.0, rest, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def value(s):
        w1 = balanced(s)
        return min(g(1, w1, s), g(2, 1.0 - s - w1, s))

    res = optimize.minimize_scalar(lambda s: -value(s), bounds=(0.0, 1.0), method="bounded",
                                   options={"xatol": 1e-12})
    s = float(res.x)
    w1 = balanced(s)
    w = np.array([w1, 1.0 - s - w1, s, 0.0])
    return _pack(value(s), w, mu, order)


def lower_bound(inst: GameInstance, delta: float) -> tuple[float, LowerBound]:
    if not 0 < delta < 0.5:
        raise ComplexityError("delta must lie in (0, 1/2)")
    lb = t_star(inst)
    return lb.t_star * float(kl_bernoulli(delta, 1.0 - delta)), lb
