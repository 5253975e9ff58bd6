"""Acceptance gate: the eleven release criteria at their stated tolerances.

Each test records one PASS/FAIL line (printed in the terminal summary) before
asserting. Simulation criteria run the shipped experiment specs in
``experiments/`` unchanged (20 replicates, 20,000 steps, seed 2024).
"""

import json
import time
from functools import lru_cache
from pathlib import Path

import numpy as np

from topoinfer.experiments import ALPHA, ExperimentSpec, run_experiment
from topoinfer.hk import build_basis, hk_coefficients, hk_distance, pairwise_sq_distances
from topoinfer.inference import AnovaState, TwoSampleState, anova_walk, two_sample_walk
from topoinfer.ph import pairwise_distances, rips_persistence
from topoinfer.tlsm import classify_polygon, extract_tlsm_features, synthetic_atlas

from oracles import anova_sums, naive_persistence, two_sample_statistic

EXPERIMENTS = Path(__file__).resolve().parents[1] / "experiments"


@lru_cache(maxsize=None)
def experiment(name: str) -> dict:
    spec = ExperimentSpec.from_dict(json.loads((EXPERIMENTS / f"{name}.json").read_text()))
    return run_experiment(spec)


def stats(name, test, sigma=10.0):
    return experiment(name)["summary"][repr(float(sigma))][test]


def pvalues(name, test, sigma=10.0):
    key = repr(float(sigma))
    return np.array([rep["p_values"][key][test] for rep in experiment(name)["replicates"]], dtype=float)


def sorted_pairs(d):
    p = d.pairs
    return p[np.lexsort((p[:, 1], p[:, 0]))] if len(p) else p.reshape(0, 2)


def test_criterion_01_persistence_oracle(criterion):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst, mismatched = 0.0, 0
    for _ in range(200):
        n = int(rng.integers(3, 13))
        dm = pairwise_distances(rng.random((n, int(rng.integers(2, 4)))))
        h0, h1 = rips_persistence(dm)
        o0, o1, _ = naive_persistence(dm)
        for mine, ref in ((sorted_pairs(h0), o0), (sorted_pairs(h1), o1)):
            if mine.shape != ref.shape:
                mismatched += 1
            elif len(ref):
                worst = max(worst, float(np.max(np.abs(mine - ref))))
    elapsed = time.perf_counter() - start
    ok = mismatched == 0 and worst <= 1e-12 and elapsed < 60
    criterion(1, ok, f"200 clouds N<=12: {mismatched} count mismatches, max |diff| {worst:.1e}, {elapsed:.1f} s")
    assert ok


def test_criterion_02_incremental_equivalence(criterion):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    cx, cy, w = rng.random((10, 66)), rng.random((10, 66)), rng.random(66)
    state = TwoSampleState(cx, cy, w)
    worst_two = 0.0
    for _ in range(1000):
        s = state.transpose(int(rng.integers(10)), int(rng.integers(10)))
        ref = two_sample_statistic(state.coeffs[state.order[:10]], state.coeffs[state.order[10:]], w)
        # a step passes if it meets either the absolute or the relative bound
        worst_two = max(worst_two, min(abs(s - ref) / 1e-10, abs(s - ref) / (1e-8 * abs(ref))))
    d2 = pairwise_sq_distances(rng.random((24, 66)), rng.random(66))
    anova = AnovaState(d2, [8, 8, 8])
    worst_phi = 0.0
    for _ in range(1000):
        i1, i2 = rng.choice(3, 2, replace=False)
        phi = anova.transpose(i1, int(rng.integers(8)), i2, int(rng.integers(8)))
        tssb, tssw = anova_sums(d2, anova.labels)
        worst_phi = max(worst_phi, abs(phi - tssb / tssw) / (tssb / tssw))
    elapsed = time.perf_counter() - start
    ok = worst_two <= 1 and worst_phi <= 1e-8 and elapsed < 10
    criterion(2, ok, f"two-sample worst error/bound {worst_two:.2e}, T-ANOVA max rel {worst_phi:.1e}, "
                     f"{elapsed:.1f} s")
    assert ok


def test_criterion_03_contraction(criterion):
    rng = np.random.default_rng(2024)
    basis = build_basis(10)
    sigmas = (0, 0.1, 1, 5, 10)
    violations, worst = 0, 0.0
    for _ in range(100):
        vs = []
        for _ in range(2):
            k = int(rng.integers(0, 8))
            y = rng.random(k)
            vs.append(hk_coefficients(np.column_stack([y * rng.random(k), y]).reshape(-1, 2), basis))
        d = [hk_distance(vs[0], vs[1], s) for s in sigmas]
        steps = np.diff(d)
        worst = max(worst, float(steps.max()))
        violations += int(np.sum(steps > 1e-12))
    ok = violations == 0
    criterion(3, ok, f"100 pairs: {violations} increases above 1e-12 (largest step {worst:.1e})")
    assert ok


def test_criterion_04_power(criterion):
    start = time.perf_counter()
    rates = {f: stats(f"power_key{f}", "two_sample")["rejection_rate"] for f in (90, 95, 100)}
    elapsed = time.perf_counter() - start
    ok = rates[90] >= 0.75 and rates[95] >= 0.9 and rates[100] >= 0.9 and elapsed < 600
    criterion(4, ok, "rejection " + ", ".join(f"{f}%: {r:.2f}" for f, r in rates.items()) + f" ({elapsed:.0f} s)")
    assert ok


NULL_ROWS = [f"{kind}_{mode}_key{f}" for kind in ("noise", "location") for mode in ("fixed", "random")
             for f in (90, 95, 100)]


def test_criterion_05_two_sample_null(criterion):
    means = {name: stats(name, "two_sample")["mean"] for name in NULL_ROWS}
    bad = {k: v for k, v in means.items() if not 0.35 <= v <= 0.65}
    ok = not bad
    criterion(5, ok, f"{len(means)} rows, mean p range [{min(means.values()):.3f}, {max(means.values()):.3f}]"
                     + (f"; outside band: {', '.join(f'{k}={v:.3f}' for k, v in bad.items())}" if bad else ""))
    assert ok


def test_criterion_06_anova_sensitivity(criterion):
    t = stats("anova_power_key95", "t_anova")
    p = stats("anova_power_key95", "permanova")
    ok = t["mean"] <= 0.1 and t["rejection_rate"] >= 0.8 and p["rejection_rate"] >= 0.8
    criterion(6, ok, f"T-ANOVA {t['mean']:.4f} ± {t['sd']:.4f} reject {t['rejection_rate']:.2f}; "
                     f"PERMANOVA {p['mean']:.4f} ± {p['sd']:.4f} reject {p['rejection_rate']:.2f}")
    assert ok


def test_criterion_07_anova_null(criterion):
    means = {f"anova_{name}": stats(f"anova_{name}", "t_anova")["mean"] for name in NULL_ROWS}
    perm = {f"anova_{name}": stats(f"anova_{name}", "permanova")["mean"] for name in NULL_ROWS}
    bad = {k: v for k, v in means.items() if not 0.35 <= v <= 0.65}
    ok = not bad
    criterion(7, ok, f"{len(means)} rows, T-ANOVA mean p range [{min(means.values()):.3f}, "
                     f"{max(means.values()):.3f}] (PERMANOVA [{min(perm.values()):.3f}, {max(perm.values()):.3f}])"
                     + (f"; outside band: {', '.join(f'{k}={v:.3f}' for k, v in bad.items())}" if bad else ""))
    assert ok


def test_criterion_08_network_lesion(criterion):
    lesion = stats("network_lesion3_10v10", "two_sample")
    null = stats("network_null_10v10", "two_sample")
    ok = lesion["rejection_rate"] >= 0.9 and null["mean"] >= 0.9
    criterion(8, ok, f"lesion {lesion['mean']:.4f} ± {lesion['sd']:.4f} reject {lesion['rejection_rate']:.2f}; "
                     f"null {null['mean']:.4f} ± {null['sd']:.4f}")
    assert ok


def test_criterion_09_bandwidth_stability(criterion):
    rows = [(f"power_key{f}", "two_sample") for f in (90, 95, 100)]
    rows += [("anova_power_key95", "t_anova"), ("anova_power_key95", "permanova")]
    agreement = {}
    for name, test in rows:
        d10 = pvalues(name, test, 10.0) < ALPHA
        d5 = pvalues(name, test, 5.0) < ALPHA
        agreement[f"{name}/{test}"] = float(np.mean(d10 == d5))
    ok = min(agreement.values()) >= 0.9
    criterion(9, ok, "sigma 5 vs 10 agreement " + ", ".join(f"{k}: {v:.2f}" for k, v in agreement.items()))
    assert ok


def _per_step(fn, n_steps, repeats=5):
    fn(1000)  # compile and warm caches
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(n_steps)
        best = min(best, time.perf_counter() - t0)
    return best / n_steps


def test_criterion_10_step_cost(criterion):
    rng = np.random.default_rng(2024)
    w = build_basis(10).weights(10.0)

    def two_sample(n):
        cx, cy = rng.random((n, len(w))), rng.random((n, len(w)))
        return _per_step(lambda steps: two_sample_walk(cx, cy, w, steps, 0), 200_000)

    small, big = two_sample(5), two_sample(100)
    ratio = big / small
    sizes = np.array([15, 60, 150, 300])
    anova_times = []
    for n in sizes:
        d2 = pairwise_sq_distances(rng.random((n, len(w))), np.ones(len(w)))
        groups = [n // 3] * 3
        anova_times.append(_per_step(lambda steps: anova_walk(d2, groups, steps, 0), 200_000))
    slope = float(np.polyfit(np.log(sizes), np.log(anova_times), 1)[0])
    ok = ratio <= 3 and slope <= 1.3
    criterion(10, ok, f"two-sample 100v100/5v5 per-step ratio {ratio:.2f}; T-ANOVA exponent {slope:.2f} "
                      f"({', '.join(f'{t * 1e9:.0f}' for t in anova_times)} ns/step)")
    assert ok


def _planted(loop, n=48):
    d = np.ones((n, n))
    np.fill_diagonal(d, 0)
    for a in range(len(loop)):
        for b in range(a + 1, len(loop)):
            d[loop[a], loop[b]] = d[loop[b], loop[a]] = 0.5
    for a in range(len(loop)):
        u, v = loop[a], loop[(a + 1) % len(loop)]
        d[u, v] = d[v, u] = 0.1
    return d


def test_criterion_11_tlsm(criterion):
    atlas = synthetic_atlas()
    planted = {"LK": [0, 1, 2, 3], "LK1": [0, 1, 2, 24], "LK2": [0, 1, 24, 25]}
    classified = {}
    for expected, loop in planted.items():
        cohort = extract_tlsm_features([_planted(loop)], atlas, expected)
        classified[expected] = [r.lk_class for r in cohort.records]
    exact = all(classified[c] == [c] for c in planted)
    exact &= classify_polygon([24, 1, 0, 2], atlas) == "LK1" and classify_polygon([0, 12, 24, 25], atlas) == "LK2"
    rate = stats("tlsm_lesion_10v10", "two_sample")["rejection_rate"]
    dropped = [d for rep in experiment("tlsm_lesion_10v10")["replicates"] for d in rep["dropped"]]
    ok = exact and rate >= 0.8
    criterion(11, ok, f"planted loops classified {'exactly' if exact else classified}; lesion vs unlesioned "
                      f"rejection {rate:.2f} (subjects dropped: {sum(dropped)})")
    assert ok
