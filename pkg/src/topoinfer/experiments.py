"""Declarative simulation experiments.

An experiment spec names a data kind and a list of groups. Every replicate
``r`` uses seed ``seed + r``; subject ``i`` of group ``g`` draws from the
sub-stream ``(g, i)`` of that seed, so replicates are independent of each
other and of how they are scheduled. Diagrams are computed once per replicate
and their coefficients are reused for every bandwidth in ``sigmas``.

Kinds
-----
point_cloud
    Groups of key-shape or uniform clouds. ``noise_cycle`` and
    ``keyhole_variant`` accept a fixed value, ``"cycle"`` (subject ``i`` gets
    option ``i % 4``) or ``"random"``.
network
    Paired design: each replicate draws ``n_subjects`` base networks; every
    group holds one Gaussian perturbation of each base, optionally followed
    by a node knockout (noise is not added to knocked-out edges).
tlsm
    Like ``network`` on a synthetic language atlas, followed by polygon
    extraction. Subjects without qualifying polygons are dropped per group.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .hk import DEFAULT_ORDER, build_basis
from .inference import (DEFAULT_RELABEL_PERIOD, permanova_coeffs, pooled_coefficients, t_anova_test_coeffs,
                        two_sample_test_coeffs)
from .ph import pairwise_distances, rips_persistence
from .rng import make_rng
from .simgen import (QUARTERS, KeyShapeSpec, LesionSpec, lesioned_sample, sample_key_cloud, sample_uniform_cloud,
                     synth_network)
from .tlsm import extract_tlsm_features, synthetic_atlas

ALPHA = 0.05
KINDS = ("point_cloud", "network", "tlsm")
TESTS = ("two_sample", "t_anova", "permanova")
THREADS_ENV = "TOPOINFER_THREADS"


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV, "1")
    try:
        threads = int(value)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {value!r}") from None
    if threads < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    return threads


@dataclass
class ExperimentSpec:
    name: str
    kind: str
    groups: list[dict]
    tests: list[str] = field(default_factory=lambda: ["two_sample"])
    sigmas: list[float] = field(default_factory=lambda: [10.0])
    n_replicates: int = 20
    n_steps: int = 20_000
    relabel_period: int = DEFAULT_RELABEL_PERIOD
    order: int = DEFAULT_ORDER
    seed: int = 0
    n_points: int = 100
    dim: int = 1
    # network / tlsm
    n_nodes: int = 189
    n_modules: int = 8
    n_subjects: int = 10
    noise_sd: float = 1e-4
    disconnect: str = "max"
    # tlsm
    class_filter: str = "LK2"
    polygon_size: int = 4
    description: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if len(self.groups) < 2:
            raise ValueError("an experiment needs at least two groups")
        bad = [t for t in self.tests if t not in TESTS]
        if bad:
            raise ValueError(f"unknown tests {bad}; choose from {TESTS}")
        if "two_sample" in self.tests and len(self.groups) != 2:
            raise ValueError("two_sample needs exactly two groups")
        for name in ("n_replicates", "n_steps", "relabel_period", "n_points", "n_nodes", "n_subjects"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if any(s < 0 for s in self.sigmas) or not self.sigmas:
            raise ValueError("sigmas must be a nonempty list of nonnegative values")
        if self.dim not in (0, 1):
            raise ValueError("dim must be 0 or 1")
        self.sigmas = [float(s) for s in self.sigmas]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def _pick(option, i: int, rng, choices):
    if option == "cycle":
        return choices[i % len(choices)]
    if option == "random":
        return choices[int(rng.integers(len(choices)))]
    return option


def _cloud_diagrams(spec: ExperimentSpec, seed: int) -> list[list]:
    groups = []
    for g, grp in enumerate(spec.groups):
        diagrams = []
        for i in range(int(grp["size"])):
            if grp.get("shape", "key") == "uniform":
                pts = sample_uniform_cloud(spec.n_points, seed, g, i)
            else:
                rng = make_rng(seed, g, i, 1)
                key = KeyShapeSpec(key_fraction=float(grp.get("key_fraction", 1.0)),
                                   noise_cycle=_pick(grp.get("noise_cycle"), i, rng, (0, 1, 2, 3)),
                                   keyhole_variant=_pick(grp.get("keyhole_variant", "full"), i, rng, QUARTERS))
                pts = sample_key_cloud(key, spec.n_points, seed, g, i)
            diagrams.append(rips_persistence(pairwise_distances(pts), max_dim=spec.dim)[spec.dim])
        groups.append(diagrams)
    return groups


def _network_sets(spec: ExperimentSpec, seed: int, modules):
    bases = [synth_network(spec.n_nodes, modules, seed, 100, i) for i in range(spec.n_subjects)]
    for g, grp in enumerate(spec.groups):
        lesion = LesionSpec(grp.get("lesion") or [], spec.noise_sd)
        yield [lesioned_sample(b, lesion, seed, g, i, disconnect=spec.disconnect) for i, b in enumerate(bases)]


def _network_diagrams(spec: ExperimentSpec, seed: int) -> list[list]:
    return [[rips_persistence(dm, max_dim=spec.dim)[spec.dim] for dm in nets]
            for nets in _network_sets(spec, seed, spec.n_modules)]


def tlsm_atlas_modules(atlas):
    """Modules following the atlas lobes, language lobes first."""
    lobes = sorted({atlas.lobe[v] for v in range(len(atlas))}, key=lambda lb: (lb == "other", lb))
    return [[v for v in range(len(atlas)) if atlas.lobe[v] == lb] for lb in lobes]


def _tlsm_diagrams(spec: ExperimentSpec, seed: int):
    atlas = synthetic_atlas(n_other=max(spec.n_nodes - 36, 0))
    modules = tlsm_atlas_modules(atlas)
    spec = ExperimentSpec.from_dict({**spec.to_dict(), "n_nodes": len(atlas)})
    groups, dropped = [], []
    for nets in _network_sets(spec, seed, modules):
        cohort = extract_tlsm_features(nets, atlas, spec.class_filter, spec.polygon_size)
        groups.append(cohort.diagrams)
        dropped.append(len(cohort.dropped))
    return groups, dropped


def run_replicate(spec: ExperimentSpec, r: int) -> dict:
    """p-values of every (sigma, test) pair for replicate ``r``."""
    seed = spec.seed + r
    dropped = None
    if spec.kind == "point_cloud":
        groups = _cloud_diagrams(spec, seed)
    elif spec.kind == "network":
        groups = _network_diagrams(spec, seed)
    else:
        groups, dropped = _tlsm_diagrams(spec, seed)
    out = {"replicate": r, "seed": seed, "p_values": {}}
    if dropped is not None:
        out["dropped"] = dropped
    if any(len(g) == 0 for g in groups):
        # a group emptied by filtering has nothing to compare
        for sigma in spec.sigmas:
            out["p_values"][_sigma_key(sigma)] = {t: None for t in spec.tests}
        return out
    coeffs = pooled_coefficients(groups, spec.order)
    basis = build_basis(spec.order)
    for sigma in spec.sigmas:
        w = basis.weights(sigma)
        row = {}
        for test in spec.tests:
            if test == "two_sample":
                res = two_sample_test_coeffs(coeffs[0], coeffs[1], w, spec.n_steps, seed, spec.relabel_period)
            elif test == "t_anova":
                res = t_anova_test_coeffs(coeffs, w, spec.n_steps, seed, spec.relabel_period)
            else:
                res = permanova_coeffs(coeffs, w, spec.n_steps, seed)
            row[test] = res.p_value
        out["p_values"][_sigma_key(sigma)] = row
    return out


def _sigma_key(sigma: float) -> str:
    return repr(float(sigma))


def summarize(spec: ExperimentSpec, replicates: list[dict]) -> dict:
    """Mean, sd (ddof=1) and rejection rate at alpha = 0.05 per (sigma, test)."""
    summary = {}
    for sigma in spec.sigmas:
        key = _sigma_key(sigma)
        summary[key] = {}
        for test in spec.tests:
            ps = np.array([rep["p_values"][key][test] for rep in replicates
                           if rep["p_values"][key][test] is not None], dtype=float)
            summary[key][test] = {
                "n": int(len(ps)),
                "mean": float(ps.mean()) if len(ps) else None,
                "sd": float(ps.std(ddof=1)) if len(ps) > 1 else None,
                "rejection_rate": float(np.mean(ps < ALPHA)) if len(ps) else None,
            }
    return summary


def run_experiment(spec: ExperimentSpec, threads: int | None = None) -> dict:
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ValueError("threads must be positive")
    idx = range(spec.n_replicates)
    if threads == 1:
        replicates = [run_replicate(spec, r) for r in idx]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            replicates = list(pool.map(run_replicate, [spec] * spec.n_replicates, idx))
    replicates.sort(key=lambda rep: rep["replicate"])
    return {"spec": spec.to_dict(), "alpha": ALPHA, "replicates": replicates,
            "summary": summarize(spec, replicates)}


def format_table(result: dict) -> str:
    """Plain-text rows "sigma test: mean ± sd (reject x/n)"."""
    lines = [result["spec"]["name"]]
    for sigma, tests in result["summary"].items():
        for test, s in tests.items():
            if s["n"] == 0:
                lines.append(f"  sigma={sigma} {test}: no valid replicates")
                continue
            sd = "nan" if s["sd"] is None else f"{s['sd']:.4f}"
            lines.append(f"  sigma={sigma} {test}: {s['mean']:.4f} ± {sd} "
                         f"(reject {s['rejection_rate'] * s['n']:.0f}/{s['n']})")
    return "\n".join(lines)
