"""Readers and writers for the on-disk formats.

Point clouds and dissimilarity matrices are CSV; diagrams, HK vectors, test
results and atlases are JSON; polygon records are CSV with the loop stored as
space-separated node indices.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .hk import HKVector
from .inference import TestResult
from .ph import PersistenceDiagram, check_dissimilarity, check_point_cloud
from .tlsm import AtlasLabels, PolygonRecord


def _read_numeric_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if k == 0 and not rows:
                    continue  # header line
                raise ValueError(f"{path}: non-numeric entry on line {k + 1}") from None
    if not rows:
        raise ValueError(f"{path}: no numeric rows")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: ragged rows")
    return np.array(rows, dtype=float)


def read_point_cloud(path) -> np.ndarray:
    return check_point_cloud(_read_numeric_csv(path))


def read_matrix(path) -> np.ndarray:
    return _read_numeric_csv(path)


def read_dissimilarity(path) -> np.ndarray:
    return check_dissimilarity(_read_numeric_csv(path))


def write_matrix(path, matrix):
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt="%.17g")


def _dump(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load(path):
    with open(path) as fh:
        return json.load(fh)


def write_diagram(path, diagram: PersistenceDiagram):
    _dump(path, diagram.to_dict())


def read_diagram(path) -> PersistenceDiagram:
    return PersistenceDiagram.from_dict(_load(path))


def write_hk_vector(path, vector: HKVector):
    _dump(path, vector.to_dict())


def read_hk_vector(path) -> HKVector:
    return HKVector.from_dict(_load(path))


def write_test_result(path, result: TestResult, include_trace: bool = False):
    _dump(path, result.to_dict(include_trace))


def write_atlas(path, atlas: AtlasLabels):
    _dump(path, atlas.to_dict())


def read_atlas(path) -> AtlasLabels:
    return AtlasLabels.from_dict(_load(path))


POLYGON_FIELDS = ("subject", "loop", "birth", "death", "class")


def write_polygon_records(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(POLYGON_FIELDS)
        for r in records:
            w.writerow([r.subject_id, " ".join(str(v) for v in r.loop), repr(float(r.birth)),
                        repr(float(r.death)), r.lk_class])


def read_polygon_records(path) -> list[PolygonRecord]:
    with open(path, newline="") as fh:
        return [PolygonRecord(row["subject"], [int(v) for v in row["loop"].split()], float(row["birth"]),
                              float(row["death"]), row["class"]) for row in csv.DictReader(fh)]


def write_json(path, data):
    _dump(path, data)


def read_json(path):
    return _load(path)


def list_inputs(paths) -> list[Path]:
    """Expand directories into their sorted ``*.csv`` and ``*.json`` files."""
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted([*p.glob("*.csv"), *p.glob("*.json")]))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(f"input not found: {p}")
    return out
