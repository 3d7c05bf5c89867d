"""Compiled helpers and single-run loops shared by the strategy operations and
the batch simulator.

Arms live in row-major flat order; ``starts[i]:starts[i + 1]`` is action i's
slice. Every argmin/argmax breaks ties towards the lowest flat index.
"""

import math

import numba as nb
import numpy as np

from .bounds import (
    beta_value,
    elimination_divergence,
    glrt_counts,
    hoeffding_halfwidth,
    kl_lower,
    kl_upper,
)

M_LUCB, M_KL_LUCB, M_CHERNOFF, M_RACING, KL_LUCB_BASELINE = range(5)
HOEFFDING, KL = 0, 1
TWO_ACTION_OFF, TWO_ACTION_LEAST, TWO_ACTION_MOST = 0, 1, 2

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)


@nb.njit(cache=True)
def draw(seed, counter, mu):
    """Observation ``counter`` of the splitmix64 stream ``seed`` as a Bernoulli(mu)."""
    z = seed + (np.uint64(counter) + _ONE) * _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    z = z ^ (z >> _S31)
    u = float(z >> _S11) * 1.1102230246251565e-16
    return 1 if u < mu else 0


@nb.njit(cache=True)
def lower_bound(ivkind, clip, n, s, beta):
    m = s / n
    if ivkind == HOEFFDING:
        lo = m - hoeffding_halfwidth(n, beta)
        return max(lo, 0.0) if clip else lo
    return kl_lower(m, n, beta)


@nb.njit(cache=True)
def upper_bound(ivkind, clip, n, s, beta):
    m = s / n
    if ivkind == HOEFFDING:
        hi = m + hoeffding_halfwidth(n, beta)
        return min(hi, 1.0) if clip else hi
    return kl_upper(m, n, beta)


@nb.njit(cache=True)
def compute_bounds(ivkind, clip, counts, sums, beta, L, U):
    for a in range(counts.shape[0]):
        L[a] = lower_bound(ivkind, clip, float(counts[a]), float(sums[a]), beta)
        U[a] = upper_bound(ivkind, clip, float(counts[a]), float(sums[a]), beta)


@nb.njit(cache=True)
def compute_lower(ivkind, clip, counts, sums, beta, L, U):
    """Fill L for every arm and mark U as not yet computed (NaN)."""
    for a in range(counts.shape[0]):
        L[a] = lower_bound(ivkind, clip, float(counts[a]), float(sums[a]), beta)
        U[a] = math.nan


@nb.njit(cache=True)
def fill_upper(ivkind, clip, counts, sums, beta, U, a):
    if math.isnan(U[a]):
        U[a] = upper_bound(ivkind, clip, float(counts[a]), float(sums[a]), beta)
    return U[a]


@nb.njit(cache=True)
def empirical_maximin(counts, sums, starts, active):
    """Action maximizing the smallest empirical mean over its active arms."""
    best = -1
    best_val = -math.inf
    for i in range(starts.shape[0] - 1):
        lo = math.inf
        for a in range(starts[i], starts[i + 1]):
            if active[a] and counts[a] > 0:
                m = sums[a] / counts[a]
                if m < lo:
                    lo = m
        if lo != math.inf and lo > best_val:
            best_val = lo
            best = i
    return best


@nb.njit(cache=True)
def lucb_pair(L, U, counts, sums, starts, ivkind, clip, beta):
    """(H_t, S_t) as flat arm indices. Entries of U left as NaN are computed
    on demand, so callers may skip upper bounds the rule never reads."""
    K = starts.shape[0] - 1
    active = np.ones(counts.shape[0], dtype=np.bool_)
    ihat = empirical_maximin(counts, sums, starts, active)
    h = -1
    s = -1
    best_u = -math.inf
    for i in range(K):
        c = starts[i]
        for a in range(starts[i] + 1, starts[i + 1]):
            if L[a] < L[c]:
                c = a
        if i == ihat:
            h = c
        else:
            u = fill_upper(ivkind, clip, counts, sums, beta, U, c)
            if u > best_u:
                best_u = u
                s = c
    return h, s


@nb.njit(cache=True)
def eq2_gap(L, U, starts):
    """min_i [max_{i' != i} min_j' U_{i',j'} - min_j L_{i,j}]."""
    K = starts.shape[0] - 1
    minL = np.empty(K)
    minU = np.empty(K)
    for i in range(K):
        minL[i] = math.inf
        minU[i] = math.inf
        for a in range(starts[i], starts[i + 1]):
            minL[i] = min(minL[i], L[a])
            minU[i] = min(minU[i], U[a])
    gap = math.inf
    for i in range(K):
        other = -math.inf
        for k in range(K):
            if k != i and minU[k] > other:
                other = minU[k]
        gap = min(gap, other - minL[i])
    return gap


@nb.njit(cache=True)
def chernoff_value(counts, sums, starts):
    """max_i min_{i' != i} max_j' min_j Z_{(i,j),(i',j')} and its argmax action."""
    K = starts.shape[0] - 1
    best = -math.inf
    best_i = 0
    for i in range(K):
        worst_other = math.inf
        for k in range(K):
            if k == i:
                continue
            top = -math.inf
            for b in range(starts[k], starts[k + 1]):
                inner = math.inf
                for a in range(starts[i], starts[i + 1]):
                    z = glrt_counts(float(counts[a]), float(sums[a]),
                                    float(counts[b]), float(sums[b]))
                    if z < inner:
                        inner = z
                if inner > top:
                    top = inner
            if top < worst_other:
                worst_other = top
        if worst_other > best:
            best = worst_other
            best_i = i
    return best, best_i


@nb.njit(cache=True)
def baseline_select(L, U, counts, sums, ivkind, clip, beta):
    """Empirically worst arm, its strongest challenger (lowest LCB among the
    rest) and whether the worst arm's UCB lies below every other LCB."""
    n = counts.shape[0]
    w = 0
    wm = sums[0] / counts[0]
    for a in range(1, n):
        m = sums[a] / counts[a]
        if m < wm:
            wm = m
            w = a
    c = -1
    for a in range(n):
        if a != w and (c < 0 or L[a] < L[c]):
            c = a
    return w, c, fill_upper(ivkind, clip, counts, sums, beta, U, w) < L[c]


@nb.njit(cache=True)
def high_arm_step(counts, sums, starts, active, r, beta):
    """One high-arm test per action; returns removed flat indices (-1 if none)."""
    K = starts.shape[0] - 1
    removed = np.full(K, -1, dtype=np.int64)
    for i in range(K):
        hi = -1
        lo = -1
        n_act = 0
        for a in range(starts[i], starts[i + 1]):
            if not active[a]:
                continue
            n_act += 1
            m = sums[a] / counts[a]
            if hi < 0 or m > sums[hi] / counts[hi]:
                hi = a
            if lo < 0 or m < sums[lo] / counts[lo]:
                lo = a
        if n_act >= 2:
            x = sums[hi] / counts[hi]
            y = sums[lo] / counts[lo]
            if r * elimination_divergence(x, y) >= beta:
                active[hi] = False
                removed[i] = hi
    return removed


@nb.njit(cache=True)
def action_step(counts, sums, starts, active, r, beta):
    """Single action-elimination test at the global empirical-min arm;
    returns the eliminated action or -1."""
    K = starts.shape[0] - 1
    m_arm = -1
    for a in range(counts.shape[0]):
        if active[a] and (m_arm < 0 or sums[a] / counts[a] < sums[m_arm] / counts[m_arm]):
            m_arm = a
    if m_arm < 0:
        return -1
    gi = 0
    while starts[gi + 1] <= m_arm:
        gi += 1
    other = -math.inf
    for i in range(K):
        if i == gi:
            continue
        lo = math.inf
        for a in range(starts[i], starts[i + 1]):
            if active[a]:
                lo = min(lo, sums[a] / counts[a])
        if lo != math.inf and lo > other:
            other = lo
    if other == -math.inf:
        return -1
    if r * elimination_divergence(other, sums[m_arm] / counts[m_arm]) >= beta:
        for a in range(starts[gi], starts[gi + 1]):
            active[a] = False
        return gi
    return -1


@nb.njit(cache=True)
def active_groups(starts, active):
    n = 0
    last = -1
    for i in range(starts.shape[0] - 1):
        for a in range(starts[i], starts[i + 1]):
            if active[a]:
                n += 1
                last = i
                break
    return n, last


@nb.njit(cache=True)
def run_lucb_family(mu, starts, algo, ivkind, clip, kind, p0, p1, delta, eps,
                    two_action, cap, seed, counts, sums):
    """One M-LUCB / M-KL-LUCB / M-Chernoff / KL-LUCB-baseline run.

    Returns (recommended action, capped, total samples)."""
    n_arms = mu.shape[0]
    all_arms = np.ones(n_arms, dtype=np.bool_)
    L = np.empty(n_arms)
    U = np.empty(n_arms)
    t = 0
    for a in range(n_arms):
        x = draw(seed, t, mu[a])
        counts[a] += 1
        sums[a] += x
        t += 1
    pend0 = -1
    pend1 = -1
    while True:
        if algo == M_CHERNOFF:
            val, ibest = chernoff_value(counts, sums, starts)
            if val > beta_value(kind, p0, p1, float(t), delta):
                return ibest, False, t
        if pend0 < 0:
            if t >= cap:
                return empirical_maximin(counts, sums, starts, all_arms), True, t
            beta = beta_value(kind, p0, p1, float(t), delta)
            if algo == M_LUCB or algo == M_KL_LUCB:
                compute_bounds(ivkind, clip, counts, sums, beta, L, U)
            else:
                compute_lower(ivkind, clip, counts, sums, beta, L, U)
            if algo == KL_LUCB_BASELINE:
                w, c, stop = baseline_select(L, U, counts, sums, ivkind, clip, beta)
                if stop:
                    wi = 0
                    while starts[wi + 1] <= w:
                        wi += 1
                    return 1 - wi, False, t
                pend0 = w
                pend1 = c
            else:
                if algo != M_CHERNOFF and eq2_gap(L, U, starts) < eps:
                    return empirical_maximin(counts, sums, starts, all_arms), False, t
                h, s = lucb_pair(L, U, counts, sums, starts, ivkind, clip, beta)
                if two_action == TWO_ACTION_LEAST:
                    pend0 = s if counts[s] < counts[h] else h
                elif two_action == TWO_ACTION_MOST:
                    pend0 = s if counts[s] > counts[h] else h
                else:
                    pend0 = h
                    pend1 = s
        if t >= cap:
            return empirical_maximin(counts, sums, starts, all_arms), True, t
        a = pend0
        pend0 = pend1
        pend1 = -1
        x = draw(seed, t, mu[a])
        counts[a] += 1
        sums[a] += x
        t += 1


@nb.njit(cache=True)
def run_racing(mu, starts, kind, p0, p1, delta, r0, cap, seed, counts, sums):
    """One Maximin-Racing run; ``r0`` is the round cap (<= 0 for none)."""
    n_arms = mu.shape[0]
    active = np.ones(n_arms, dtype=np.bool_)
    t = 0
    r = 0
    while True:
        n_act = 0
        for a in range(n_arms):
            if active[a]:
                n_act += 1
        if t + n_act > cap:
            return empirical_maximin(counts, sums, starts, active), True, t
        r += 1
        for a in range(n_arms):
            if active[a]:
                x = draw(seed, t, mu[a])
                counts[a] += 1
                sums[a] += x
                t += 1
        beta = beta_value(kind, p0, p1, float(r), delta)
        high_arm_step(counts, sums, starts, active, float(r), beta)
        action_step(counts, sums, starts, active, float(r), beta)
        n_groups, last = active_groups(starts, active)
        if n_groups == 1:
            return last, False, t
        if r0 > 0 and r >= r0:
            return empirical_maximin(counts, sums, starts, active), True, t


@nb.njit(cache=True, nogil=True)
def run_batch(mu, starts, algo, ivkind, clip, kind, p0, p1, delta, eps,
              two_action, cap, r0, seeds, draws_out, rec_out, capped_out):
    for k in range(seeds.shape[0]):
        counts = np.zeros(mu.shape[0], dtype=np.int64)
        sums = np.zeros(mu.shape[0], dtype=np.int64)
        if algo == M_RACING:
            rec, capped, _ = run_racing(mu, starts, kind, p0, p1, delta, r0, cap,
                                        seeds[k], counts, sums)
        else:
            rec, capped, _ = run_lucb_family(mu, starts, algo, ivkind, clip, kind, p0,
                                             p1, delta, eps, two_action, cap, seeds[k],
                                             counts, sums)
        draws_out[k, :] = counts
        rec_out[k] = rec
        capped_out[k] = capped
