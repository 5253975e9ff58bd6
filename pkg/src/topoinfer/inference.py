"""Transposition-based permutation tests on heat-kernel coefficients.

Two-sample test: the statistic is the weighted squared gap between the mean
coefficient vectors of the two groups. Each step of the random walk swaps one
subject between the groups and updates both means in O(K).

T-ANOVA: the ratio of between-group to within-group sums of pairwise squared
heat-kernel distances. Distances are computed once; a swap adjusts both sums
by scanning the two moved subjects' rows, O(N) per step.

Both walks perform a full uniform relabeling every ``relabel_period`` steps
and record the statistic after every step. The p-value is
``(1 + #{trace >= observed}) / (1 + n_steps)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _inference_kernels as _k
from .hk import DEFAULT_ORDER, DEFAULT_SIGMA, build_basis, coefficient_matrix, pairwise_sq_distances, standardize
from .rng import make_rng

DEFAULT_STEPS = 100_000
DEFAULT_RELABEL_PERIOD = 500

_PERM_CHUNK = 10_000
# relative slack when comparing permuted statistics with the observed one
_TIE_RTOL = 100 * np.finfo(float).eps


@dataclass
class TestResult:
    method: str
    statistic: float
    p_value: float
    n_steps: int
    seed: int
    trace: np.ndarray | None = None

    __test__ = False  # not a pytest class

    def to_dict(self, include_trace: bool = False) -> dict:
        out = {"method": self.method, "statistic": float(self.statistic), "p_value": float(self.p_value),
               "n_steps": int(self.n_steps), "seed": int(self.seed)}
        if include_trace and self.trace is not None:
            out["trace"] = [float(x) for x in self.trace]
        return out


def permutation_p_value(trace, observed: float) -> float:
    trace = np.asarray(trace, dtype=float)
    gamma = _TIE_RTOL * abs(observed)
    count = int(np.count_nonzero(trace >= observed - gamma))
    return (1 + count) / (1 + len(trace))


# two-sample --------------------------------------------------------------


class TwoSampleState:
    """Current assignment of subjects to two groups with running means.

    ``order[:m]`` holds the subjects currently in group 1 and ``order[m:]``
    those in group 2; subjects are row indices into ``coeffs``.
    """

    def __init__(self, coeffs_x, coeffs_y, weights):
        coeffs_x = np.atleast_2d(np.asarray(coeffs_x, dtype=float))
        coeffs_y = np.atleast_2d(np.asarray(coeffs_y, dtype=float))
        if len(coeffs_x) < 1 or len(coeffs_y) < 1:
            raise ValueError("both groups need at least one subject")
        self.coeffs = np.ascontiguousarray(np.vstack([coeffs_x, coeffs_y]))
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != (self.coeffs.shape[1],):
            raise ValueError("weights must have one entry per coefficient")
        self.m = len(coeffs_x)
        self.n = len(coeffs_y)
        self.order = np.arange(self.m + self.n)
        self.recompute()

    def recompute(self):
        self.mean_x = self.coeffs[self.order[: self.m]].mean(axis=0)
        self.mean_y = self.coeffs[self.order[self.m:]].mean(axis=0)

    @property
    def assignment(self) -> np.ndarray:
        """Group label (0 or 1) of every subject."""
        labels = np.empty(self.m + self.n, dtype=np.int64)
        labels[self.order[: self.m]] = 0
        labels[self.order[self.m:]] = 1
        return labels

    def statistic(self) -> float:
        return float(np.sum(self.weights * (self.mean_x - self.mean_y) ** 2))

    def transpose(self, i: int, j: int) -> float:
        """Swap slot ``i`` of group 1 with slot ``j`` of group 2."""
        if not (0 <= i < self.m and 0 <= j < self.n):
            raise IndexError(f"transposition ({i}, {j}) out of range for groups of size {self.m} and {self.n}")
        a = self.order[i]
        b = self.order[self.m + j]
        diff = self.coeffs[b] - self.coeffs[a]
        self.mean_x = self.mean_x + diff / self.m
        self.mean_y = self.mean_y - diff / self.n
        self.order[i], self.order[self.m + j] = b, a
        return self.statistic()

    def relabel(self, order) -> float:
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(self.m + self.n)):
            raise ValueError("relabel order must be a permutation of all subjects")
        self.order = order.copy()
        self.recompute()
        return self.statistic()


def two_sample_statistic(state: TwoSampleState) -> float:
    return state.statistic()


def transpose_two_sample(state: TwoSampleState, i: int, j: int) -> float:
    return state.transpose(i, j)


def _canonical_groups(groups):
    """Order groups by (size, content) so results do not depend on input order."""
    keyed = sorted(range(len(groups)), key=lambda g: (len(groups[g]), groups[g].tobytes()))
    return [groups[g] for g in keyed]


def two_sample_walk(coeffs_x, coeffs_y, weights, n_steps: int, seed: int,
                    relabel_period: int = DEFAULT_RELABEL_PERIOD) -> tuple[float, np.ndarray]:
    """Observed statistic and the per-step statistic trace."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    state = TwoSampleState(coeffs_x, coeffs_y, weights)
    observed = state.statistic()
    m, n = state.m, state.n
    rng = make_rng(seed)
    i_draws = rng.integers(0, m, n_steps)
    j_draws = rng.integers(0, n, n_steps)
    perms = _relabel_orders(rng, m + n, n_steps, relabel_period)
    trace = _k.two_sample_walk(state.coeffs, state.weights, state.order, m, i_draws, j_draws, perms,
                               relabel_period)
    return observed, trace


def _relabel_orders(rng, n_subjects, n_steps, period):
    count = n_steps // period if period > 0 else 0
    perms = np.empty((count, n_subjects), dtype=np.int64)
    for r in range(count):
        perms[r] = rng.permutation(n_subjects)
    return perms


def two_sample_test_coeffs(coeffs_x, coeffs_y, weights, n_steps: int = DEFAULT_STEPS, seed: int = 0,
                           relabel_period: int = DEFAULT_RELABEL_PERIOD, keep_trace: bool = False) -> TestResult:
    """Two-sample transposition test on precomputed coefficient rows."""
    cx, cy = _canonical_groups([np.atleast_2d(np.asarray(coeffs_x, dtype=float)),
                                np.atleast_2d(np.asarray(coeffs_y, dtype=float))])
    observed, trace = two_sample_walk(cx, cy, weights, n_steps, seed, relabel_period)
    return TestResult("two_sample", observed, permutation_p_value(trace, observed), n_steps, seed,
                      trace if keep_trace else None)


def pooled_coefficients(groups, order: int = DEFAULT_ORDER) -> list[np.ndarray]:
    """Standardize all diagrams on one shared range and return per-group coefficient rows."""
    sizes = [len(g) for g in groups]
    if len(groups) < 2 or min(sizes) < 1:
        raise ValueError("need at least two nonempty groups")
    _, std = standardize([d for g in groups for d in g])
    coeffs = coefficient_matrix(std, build_basis(order))
    bounds = np.cumsum([0] + sizes)
    return [coeffs[bounds[g]:bounds[g + 1]] for g in range(len(groups))]


def two_sample_test(group_a, group_b, sigma: float = DEFAULT_SIGMA, order: int = DEFAULT_ORDER,
                    n_steps: int = DEFAULT_STEPS, seed: int = 0, relabel_period: int = DEFAULT_RELABEL_PERIOD,
                    keep_trace: bool = False) -> TestResult:
    """Spectral transposition test between two sets of persistence diagrams."""
    ca, cb = pooled_coefficients([list(group_a), list(group_b)], order)
    weights = build_basis(order).weights(sigma)
    return two_sample_test_coeffs(ca, cb, weights, n_steps, seed, relabel_period, keep_trace)


# T-ANOVA ---------------------------------------------------------------


class AnovaState:
    """Group assignment with running between/within sums of squared distances."""

    def __init__(self, dist2, sizes):
        self.dist2 = np.ascontiguousarray(np.asarray(dist2, dtype=float))
        self.sizes = np.asarray(sizes, dtype=np.int64)
        n = self.dist2.shape[0]
        if len(self.sizes) < 2 or self.sizes.min() < 1:
            raise ValueError("need at least two nonempty groups")
        if self.dist2.shape != (n, n) or self.sizes.sum() != n:
            raise ValueError("distance matrix does not match group sizes")
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.total = _k.total_sum(self.dist2)
        self.order = np.arange(n)
        self.recompute()

    def recompute(self):
        self.labels = _k._labels_from_order(self.order, self.offsets, len(self.sizes))
        self.tssw = _k.within_sum(self.dist2, self.labels)

    @property
    def tssb(self) -> float:
        # derived from the fixed total so the two sums cannot drift apart
        return self.total - self.tssw

    def _ratio(self) -> float:
        return self.tssb / self.tssw if self.tssw > 0 else np.inf

    def ratio(self) -> float:
        if self.tssw <= 0:
            raise ValueError("within-group sum of squares is zero; ratio undefined")
        return self.tssb / self.tssw

    def members(self, group: int) -> np.ndarray:
        return self.order[self.offsets[group]:self.offsets[group + 1]]

    def transpose(self, i1: int, j1: int, i2: int, j2: int) -> float:
        """Swap subject ``j1`` of group ``i1`` with subject ``j2`` of group ``i2``."""
        k = len(self.sizes)
        if not (0 <= i1 < k and 0 <= i2 < k) or i1 == i2:
            raise IndexError(f"invalid group pair ({i1}, {i2})")
        if not (0 <= j1 < self.sizes[i1] and 0 <= j2 < self.sizes[i2]):
            raise IndexError(f"subject index out of range: ({j1}, {j2})")
        sa = self.offsets[i1] + j1
        sb = self.offsets[i2] + j2
        a, b = self.order[sa], self.order[sb]
        delta = _k.swap_delta(self.dist2, self.labels, a, b)
        self.tssw += delta
        self.labels[a], self.labels[b] = i2, i1
        self.order[sa], self.order[sb] = b, a
        if self.tssw <= _k.WITHIN_RECOMPUTE_RTOL * self.total:
            self.tssw = _k.within_sum(self.dist2, self.labels)
        return self._ratio()

    def relabel(self, order) -> float:
        self.order = np.asarray(order, dtype=np.int64).copy()
        self.recompute()
        return self._ratio()


def anova_ratio(state: AnovaState) -> float:
    return state.ratio()


def transpose_anova(state: AnovaState, i1: int, j1: int, i2: int, j2: int) -> float:
    return state.transpose(i1, j1, i2, j2)


def _group_pair_draws(rng, sizes, n_steps):
    """First group with probability n_i/N, second with n_j/(N - n_first)."""
    sizes = np.asarray(sizes, dtype=float)
    k = len(sizes)
    g1 = rng.choice(k, size=n_steps, p=sizes / sizes.sum())
    cond = np.tile(sizes, (k, 1))
    np.fill_diagonal(cond, 0.0)
    cdf = np.cumsum(cond, axis=1)
    cdf /= cdf[:, -1:]
    u = rng.random(n_steps)
    g2 = np.argmax(u[:, None] < cdf[g1], axis=1)
    return g1, g2


def anova_walk(dist2, sizes, n_steps: int, seed: int,
               relabel_period: int = DEFAULT_RELABEL_PERIOD) -> tuple[float, np.ndarray]:
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    state = AnovaState(dist2, sizes)
    observed = state.ratio()
    rng = make_rng(seed)
    g1, g2 = _group_pair_draws(rng, state.sizes, n_steps)
    j1 = rng.integers(0, state.sizes[g1])
    j2 = rng.integers(0, state.sizes[g2])
    perms = _relabel_orders(rng, len(state.order), n_steps, relabel_period)
    trace = _k.anova_walk(state.dist2, state.order, state.offsets, g1, g2, j1, j2, perms, relabel_period)
    return observed, trace


def _canonical_stack(coeff_groups):
    groups = _canonical_groups([np.atleast_2d(np.asarray(g, dtype=float)) for g in coeff_groups])
    return np.vstack(groups), [len(g) for g in groups]


def t_anova_test_coeffs(coeff_groups, weights, n_steps: int = DEFAULT_STEPS, seed: int = 0,
                        relabel_period: int = DEFAULT_RELABEL_PERIOD, keep_trace: bool = False) -> TestResult:
    coeffs, sizes = _canonical_stack(coeff_groups)
    dist2 = pairwise_sq_distances(coeffs, weights)
    observed, trace = anova_walk(dist2, sizes, n_steps, seed, relabel_period)
    return TestResult("t_anova", observed, permutation_p_value(trace, observed), n_steps, seed,
                      trace if keep_trace else None)


def t_anova_test(groups, sigma: float = DEFAULT_SIGMA, order: int = DEFAULT_ORDER, n_steps: int = DEFAULT_STEPS,
                 seed: int = 0, relabel_period: int = DEFAULT_RELABEL_PERIOD, keep_trace: bool = False) -> TestResult:
    """T-ANOVA across K >= 2 sets of persistence diagrams."""
    coeff_groups = pooled_coefficients([list(g) for g in groups], order)
    weights = build_basis(order).weights(sigma)
    return t_anova_test_coeffs(coeff_groups, weights, n_steps, seed, relabel_period, keep_trace)


# PERMANOVA ---------------------------------------------------------------


def permanova_coeffs(coeff_groups, weights, n_perms: int = DEFAULT_STEPS, seed: int = 0,
                     keep_trace: bool = False) -> TestResult:
    """Pseudo-F test with full uniform relabelings on the same distances."""
    if n_perms < 1:
        raise ValueError("n_perms must be at least 1")
    coeffs, sizes = _canonical_stack(coeff_groups)
    sizes = np.asarray(sizes, dtype=np.int64)
    if len(sizes) < 2 or sizes.min() < 1:
        raise ValueError("need at least two nonempty groups")
    n = int(sizes.sum())
    if n <= len(sizes):
        raise ValueError("PERMANOVA needs more subjects than groups")
    dist2 = np.ascontiguousarray(pairwise_sq_distances(coeffs, weights))
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    labels = np.repeat(np.arange(len(sizes)), sizes)
    within = sum(dist2[np.ix_(labels == g, labels == g)].sum() / 2 / sizes[g] for g in range(len(sizes)))
    if within <= 0:
        raise ValueError("within-group sum of squares is zero; pseudo-F undefined")
    observed = float(_k.pseudo_f(dist2, labels, sizes.astype(float)))
    rng = make_rng(seed)
    trace = np.empty(n_perms)
    for start in range(0, n_perms, _PERM_CHUNK):
        count = min(_PERM_CHUNK, n_perms - start)
        perms = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (count, 1)), axis=1)
        trace[start:start + count] = _k.permanova_perms(dist2, perms, offsets, sizes.astype(float))
    return TestResult("permanova", observed, permutation_p_value(trace, observed), n_perms, seed,
                      trace if keep_trace else None)


def permanova_test(groups, sigma: float = DEFAULT_SIGMA, order: int = DEFAULT_ORDER, n_perms: int = DEFAULT_STEPS,
                   seed: int = 0, keep_trace: bool = False) -> TestResult:
    coeff_groups = pooled_coefficients([list(g) for g in groups], order)
    weights = build_basis(order).weights(sigma)
    return permanova_coeffs(coeff_groups, weights, n_perms, seed, keep_trace)
