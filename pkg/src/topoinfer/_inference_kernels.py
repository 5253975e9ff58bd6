"""Random-walk kernels for the transposition tests.

All randomness is drawn beforehand and passed in, so the kernels are
deterministic functions of their arguments.
"""

import numpy as np
from numba import njit

# incremental within sums below this fraction of the total are recomputed exactly
WITHIN_RECOMPUTE_RTOL = 1e-10


@njit(cache=True)
def _group_means(coeffs, order, m):
    k = coeffs.shape[1]
    mx = np.zeros(k)
    my = np.zeros(k)
    for s in range(order.shape[0]):
        row = coeffs[order[s]]
        if s < m:
            mx += row
        else:
            my += row
    return mx / m, my / (order.shape[0] - m)


@njit(cache=True)
def _weighted_gap(mx, my, weights):
    total = 0.0
    for k in range(mx.shape[0]):
        d = mx[k] - my[k]
        total += weights[k] * d * d
    return total


@njit(cache=True)
def two_sample_walk(coeffs, weights, order, m, i_draws, j_draws, perms, period):
    """Statistic after every step of the transposition walk.

    ``order[:m]`` are the subjects in the first group. Step ``s`` is a full
    relabel (``perms[r]``) when ``(s + 1) % period == 0`` and a transposition
    of slots ``i_draws[s]`` and ``m + j_draws[s]`` otherwise.
    """
    order = order.copy()
    total = order.shape[0]
    n = total - m
    n_steps = i_draws.shape[0]
    stats = np.empty(n_steps)
    mx, my = _group_means(coeffs, order, m)
    k = coeffs.shape[1]
    r = 0
    for s in range(n_steps):
        if period > 0 and (s + 1) % period == 0:
            order[:] = perms[r]
            r += 1
            mx, my = _group_means(coeffs, order, m)
        else:
            a = order[i_draws[s]]
            b = order[m + j_draws[s]]
            for q in range(k):
                diff = coeffs[b, q] - coeffs[a, q]
                mx[q] += diff / m
                my[q] -= diff / n
            order[i_draws[s]] = b
            order[m + j_draws[s]] = a
        stats[s] = _weighted_gap(mx, my, weights)
    return stats


@njit(cache=True)
def within_sum(dist2, labels):
    total = 0.0
    n = labels.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i] == labels[j]:
                total += dist2[i, j]
    return total


@njit(cache=True)
def total_sum(dist2):
    total = 0.0
    n = dist2.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            total += dist2[i, j]
    return total


@njit(cache=True)
def swap_delta(dist2, labels, a, b):
    """Change in the within-group sum when subjects ``a`` and ``b`` swap groups."""
    ga = labels[a]
    gb = labels[b]
    sa_own = 0.0
    sa_other = 0.0
    sb_own = 0.0
    sb_other = 0.0
    for x in range(labels.shape[0]):
        lx = labels[x]
        if lx == ga and x != a:
            sa_own += dist2[a, x]
            sb_other += dist2[b, x]
        elif lx == gb and x != b:
            sa_other += dist2[a, x]
            sb_own += dist2[b, x]
    return sa_other + sb_other - sa_own - sb_own


@njit(cache=True)
def _labels_from_order(order, offsets, n_groups):
    labels = np.empty(order.shape[0], dtype=np.int64)
    for g in range(n_groups):
        for s in range(offsets[g], offsets[g + 1]):
            labels[order[s]] = g
    return labels


@njit(cache=True, error_model="numpy")
def anova_walk(dist2, order, offsets, g1_draws, g2_draws, j1_draws, j2_draws, perms, period):
    """TSSB/TSSW after every step of the multi-group transposition walk.

    Subjects ``order[offsets[g]:offsets[g + 1]]`` form group ``g``. Sums are
    recomputed from scratch at every relabel.
    """
    order = order.copy()
    n_groups = offsets.shape[0] - 1
    labels = _labels_from_order(order, offsets, n_groups)
    total = total_sum(dist2)
    floor = WITHIN_RECOMPUTE_RTOL * total
    tssw = within_sum(dist2, labels)
    n_steps = g1_draws.shape[0]
    ratios = np.empty(n_steps)
    r = 0
    for s in range(n_steps):
        if period > 0 and (s + 1) % period == 0:
            order[:] = perms[r]
            r += 1
            labels = _labels_from_order(order, offsets, n_groups)
            tssw = within_sum(dist2, labels)
        else:
            sa = offsets[g1_draws[s]] + j1_draws[s]
            sb = offsets[g2_draws[s]] + j2_draws[s]
            a = order[sa]
            b = order[sb]
            delta = swap_delta(dist2, labels, a, b)
            tssw += delta
            labels[a], labels[b] = labels[b], labels[a]
            order[sa] = b
            order[sb] = a
            if tssw <= floor:
                # rounding residue dominates here; recompute so exact zeros stay zero
                tssw = within_sum(dist2, labels)
        ratios[s] = (total - tssw) / tssw if tssw > 0 else np.inf
    return ratios


@njit(cache=True, error_model="numpy")
def pseudo_f(dist2, labels, sizes):
    """Distance-based pseudo-F: [SSB/(K-1)] / [SSW/(N-K)]."""
    n = labels.shape[0]
    n_groups = sizes.shape[0]
    within = np.zeros(n_groups)
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = dist2[i, j]
            total += d
            if labels[i] == labels[j]:
                within[labels[i]] += d
    ssw = 0.0
    for g in range(n_groups):
        ssw += within[g] / sizes[g]
    sst = total / n
    ssb = sst - ssw
    return (ssb / (n_groups - 1)) / (ssw / (n - n_groups))


@njit(cache=True, error_model="numpy")
def permanova_perms(dist2, perms, offsets, sizes):
    n_groups = sizes.shape[0]
    out = np.empty(perms.shape[0])
    for r in range(perms.shape[0]):
        labels = _labels_from_order(perms[r], offsets, n_groups)
        out[r] = pseudo_f(dist2, labels, sizes)
    return out
