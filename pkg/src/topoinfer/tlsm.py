"""Topological lesion-symptom mapping on per-subject networks.

Each subject's H1 pairs are traced back to a representative loop. Loops of
exactly ``K`` nodes are classified by how many of their nodes share a lobe,
and only pairs of the requested class enter the group comparison.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .hk import DEFAULT_ORDER, DEFAULT_SIGMA
from .inference import DEFAULT_RELABEL_PERIOD, DEFAULT_STEPS, TestResult, t_anova_test, two_sample_test
from .ph import PersistenceDiagram, check_dissimilarity, rips_persistence

LK_CLASSES = ("LK", "LK1", "LK2", "none")
LOBES = ("frontal", "parietal", "temporal")


@dataclass
class AtlasLabels:
    node_names: list[str]
    lobe: dict[int, str]
    language_rois: list[int]

    def __post_init__(self):
        n = len(self.node_names)
        self.lobe = {int(k): str(v) for k, v in self.lobe.items()}
        self.language_rois = sorted(int(v) for v in self.language_rois)
        if len(set(self.language_rois)) != len(self.language_rois):
            raise ValueError("duplicate language ROI")
        bad = [v for v in list(self.lobe) + self.language_rois if not 0 <= v < n]
        if bad:
            raise ValueError(f"atlas node indices out of range: {bad}")
        missing = [v for v in self.language_rois if v not in self.lobe]
        if missing:
            raise ValueError(f"language ROIs without a lobe label: {missing}")
        lobes = {self.lobe[v] for v in self.language_rois}
        if self.language_rois and len(lobes) != 3:
            raise ValueError(f"language ROIs must span exactly 3 lobes, got {sorted(lobes)}")

    def __len__(self):
        return len(self.node_names)

    def to_dict(self) -> dict:
        return {"nodes": list(self.node_names), "lobe": {str(k): v for k, v in self.lobe.items()},
                "language_rois": list(self.language_rois)}

    @classmethod
    def from_dict(cls, data: dict) -> "AtlasLabels":
        return cls(list(data["nodes"]), {int(k): v for k, v in data["lobe"].items()}, list(data["language_rois"]))


def synthetic_atlas(per_lobe: int = 12, n_other: int = 12) -> AtlasLabels:
    """Language ROIs in lobe blocks (frontal, parietal, temporal), then other nodes."""
    names, lobe = [], {}
    for lb in LOBES:
        for k in range(per_lobe):
            lobe[len(names)] = lb
            names.append(f"{lb}_{k}")
    language = list(range(len(names)))
    for k in range(n_other):
        lobe[len(names)] = "other"
        names.append(f"other_{k}")
    return AtlasLabels(names, lobe, language)


@dataclass
class PolygonRecord:
    subject_id: str
    loop: list[int]
    birth: float
    death: float
    lk_class: str

    def __post_init__(self):
        if len(self.loop) < 4:
            raise ValueError("polygon needs at least 4 nodes")
        if self.birth > self.death:
            raise ValueError("birth exceeds death")
        if self.lk_class not in LK_CLASSES:
            raise ValueError(f"unknown class {self.lk_class!r}")


def classify_polygon(loop, atlas: AtlasLabels) -> str:
    """LK / LK1 / LK2 by the largest same-lobe count among the loop's nodes."""
    loop = [int(v) for v in loop]
    k = len(loop)
    if k < 4:
        raise ValueError("polygon needs at least 4 nodes")
    n = len(atlas)
    for v in loop:
        if not 0 <= v < n:
            raise IndexError(f"node {v} not in atlas of {n} nodes")
    language = set(atlas.language_rois)
    if any(v not in language for v in loop):
        return "none"
    top = max(Counter(atlas.lobe[v] for v in loop).values())
    return {k: "LK", k - 1: "LK1", k - 2: "LK2"}.get(top, "none")


@dataclass
class TLSMCohort:
    subject_ids: list[str]
    diagrams: list[PersistenceDiagram]
    records: list[PolygonRecord]
    dropped: list[str] = field(default_factory=list)


def extract_tlsm_features(networks, atlas: AtlasLabels, class_filter: str = "LK1", k: int = 4,
                          subject_ids=None) -> TLSMCohort:
    """Per-subject diagrams holding only the H1 pairs whose loop is a qualifying K-polygon."""
    if class_filter not in LK_CLASSES[:3]:
        raise ValueError(f"class_filter must be one of {LK_CLASSES[:3]}")
    networks = list(networks)
    if subject_ids is None:
        subject_ids = [str(i) for i in range(len(networks))]
    subject_ids = [str(s) for s in subject_ids]
    if len(subject_ids) != len(networks):
        raise ValueError("one subject id per network required")
    kept, diagrams, records, dropped = [], [], [], []
    for sid, dm in zip(subject_ids, networks):
        dm = check_dissimilarity(dm)
        if dm.shape[0] != len(atlas):
            raise ValueError(f"subject {sid}: network has {dm.shape[0]} nodes, atlas has {len(atlas)}")
        h1 = rips_persistence(dm, max_dim=1, representatives=True)[1]
        rows, recs = [], []
        for pair, loop in zip(h1.pairs, h1.representatives):
            if len(loop) != k:
                continue
            cls = classify_polygon(loop, atlas)
            if cls == class_filter:
                rows.append(pair)
                recs.append(PolygonRecord(sid, list(loop), float(pair[0]), float(pair[1]), cls))
        if not rows:
            dropped.append(sid)
            continue
        kept.append(sid)
        diagrams.append(PersistenceDiagram(1, np.array(rows), [r.loop for r in recs]))
        records.extend(recs)
    return TLSMCohort(kept, diagrams, records, dropped)


def standardized_records(cohorts) -> list[PolygonRecord]:
    """Records with births/deaths mapped by the pooled min-birth/max-death range."""
    records = [r for c in cohorts for r in c.records]
    if not records:
        return []
    lo = min(r.birth for r in records)
    hi = max(r.death for r in records)
    span = hi - lo if hi > lo else 1.0
    return [PolygonRecord(r.subject_id, r.loop, (r.birth - lo) / span, (r.death - lo) / span, r.lk_class)
            for r in records]


def _check_nonempty(cohorts, names):
    for c, name in zip(cohorts, names):
        if not c.diagrams:
            raise ValueError(f"cohort {name} is empty after filtering ({len(c.dropped)} dropped)")


def tlsm_compare(cohort_a: TLSMCohort, cohort_b: TLSMCohort, sigma: float = DEFAULT_SIGMA,
                 order: int = DEFAULT_ORDER, n_steps: int = DEFAULT_STEPS, seed: int = 0,
                 relabel_period: int = DEFAULT_RELABEL_PERIOD) -> TestResult:
    _check_nonempty([cohort_a, cohort_b], ["A", "B"])
    return two_sample_test(cohort_a.diagrams, cohort_b.diagrams, sigma, order, n_steps, seed, relabel_period)


def tlsm_compare_groups(cohorts, sigma: float = DEFAULT_SIGMA, order: int = DEFAULT_ORDER,
                        n_steps: int = DEFAULT_STEPS, seed: int = 0,
                        relabel_period: int = DEFAULT_RELABEL_PERIOD) -> TestResult:
    cohorts = list(cohorts)
    _check_nonempty(cohorts, [str(i) for i in range(len(cohorts))])
    return t_anova_test([c.diagrams for c in cohorts], sigma, order, n_steps, seed, relabel_period)
