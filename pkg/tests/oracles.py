"""Independent brute-force oracles shared by the unit and acceptance suites."""

import math

import mpmath
import numpy as np

from maximin.bounds import glrt_statistic, kl_bernoulli
from maximin.model import ArmId, ArmStats


def loglik(n, s, p):
    return float(mpmath.log(p) * s + mpmath.log(1 - p) * (n - s)) if 0 < p < 1 else (
        0.0 if (p == 0 and s == 0) or (p == 1 and s == n) else -math.inf)


def glrt_grid(nP, sP, nQ, sQ, step=1e-4):
    """Log GLR of mu_P >= mu_Q against mu_P <= mu_Q by grid search of the
    constrained likelihoods (the constrained optimum lies on mu_P = mu_Q)."""
    grid = np.arange(0.0, 1.0 + step / 2, step)
    with np.errstate(divide="ignore", invalid="ignore"):
        pooled = (sP + sQ) * np.log(grid) + (nP + nQ - sP - sQ) * np.log1p(-grid)
    pooled = np.nan_to_num(pooled, nan=-np.inf)
    if sP + sQ == 0:
        pooled[0] = 0.0
    if sP + sQ == nP + nQ:
        pooled[-1] = 0.0
    free = loglik(nP, sP, sP / nP) + loglik(nQ, sQ, sQ / nQ)
    gap = free - pooled.max()
    return gap if sP / nP >= sQ / nQ else -gap


def chernoff_brute(inst, counts, sums, beta):
    """Existential form: some i such that every other action has an arm
    beaten by every arm of i."""
    arms = inst.arms()
    z = {(p, q): glrt_statistic(ArmStats(int(counts[inst.arm_index(p)]), int(sums[inst.arm_index(p)])),
                                ArmStats(int(counts[inst.arm_index(q)]), int(sums[inst.arm_index(q)])))
         for p in arms for q in arms}
    winners = []
    for i in range(inst.K):
        ok = all(
            any(all(z[(ArmId(i, j), ArmId(k, jj))] > beta for j in range(inst.sizes[i]))
                for jj in range(inst.sizes[k]))
            for k in range(inst.K) if k != i)
        if ok:
            winners.append(i)
    return winners


def alt_grid(mu, w, step=0.01, strict=True):
    """inf of sum_a w_a d(mu_a, x_a) over grid points x with
    min(x1, x2) < min(x3, x4) (or <= when not strict), by exact enumeration
    with prefix minima."""
    g = np.round(np.arange(0.0, 1.0 + step / 2, step), 12)
    D = [np.array([w[a] * kl_bernoulli(mu[a], x) if w[a] > 0 else 0.0 for x in g]) for a in range(4)]
    # best cost of arm a restricted to x < g[k]: prefix minima shifted by one
    pre = [np.minimum.accumulate(d) for d in D]
    if strict:
        pre = [np.concatenate(([np.inf], p[:-1])) for p in pre]
    best = np.inf
    for k3 in range(len(g)):
        for k4 in range(len(g)):
            k = min(k3, k4)
            c34 = D[2][k3] + D[3][k4]
            c12 = min(pre[0][k] + D[1].min(), D[0].min() + pre[1][k])
            best = min(best, c34 + c12)
    return best


def simplex_grid(n=200):
    pts = []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            for k in range(n + 1 - i - j):
                pts.append((i, j, k, n - i - j - k))
    return np.array(pts, dtype=np.float64) / n


SIMPLEX = None


def simplex_grid_value(mu):
    """max over a 1/200 simplex grid of min(F1, F2), vectorized."""
    global SIMPLEX
    if SIMPLEX is None:
        SIMPLEX = simplex_grid()
    W = SIMPLEX

    def kl(x, y):
        y = np.clip(y, 1e-300, 1 - 1e-16)
        out = np.zeros_like(y)
        if x > 0:
            out += x * np.log(x / y)
        if x < 1:
            out += (1 - x) * np.log((1 - x) / (1 - y))
        return out

    vals = []
    for k in (0, 1):
        wk, w3, w4 = W[:, k], W[:, 2], W[:, 3]
        s2 = wk + w3
        with np.errstate(invalid="ignore", divide="ignore"):
            m2 = (wk * mu[k] + w3 * mu[2]) / s2
            m3 = (wk * mu[k] + w3 * mu[2] + w4 * mu[3]) / (s2 + w4)
        two = wk * kl(mu[k], m2) + w3 * kl(mu[2], m2)
        three = wk * kl(mu[k], m3) + w3 * kl(mu[2], m3) + w4 * kl(mu[3], m3)
        f = np.where(mu[3] >= m2, two, three)
        vals.append(np.where(s2 > 0, np.nan_to_num(f), 0.0))
    return float(np.max(np.minimum(*vals)))
