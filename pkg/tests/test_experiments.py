import json
from pathlib import Path

import numpy as np
import pytest

from topoinfer.experiments import (ExperimentSpec, default_threads, format_table, run_experiment, run_replicate,
                                   summarize, tlsm_atlas_modules)
from topoinfer.tlsm import synthetic_atlas

EXPERIMENTS = Path(__file__).resolve().parents[1] / "experiments"


def small_cloud_spec(**kw):
    base = dict(name="t", kind="point_cloud", groups=[{"shape": "uniform", "size": 3}, {"size": 3}],
                n_replicates=3, n_steps=300, n_points=40, seed=11)
    base.update(kw)
    return ExperimentSpec(**base)


def test_shipped_specs_parse():
    files = sorted(EXPERIMENTS.glob("*.json"))
    assert len(files) >= 40
    for f in files:
        spec = ExperimentSpec.from_dict(json.loads(f.read_text()))
        assert spec.name == f.stem
        assert spec.n_replicates == 20 and spec.n_steps == 20000


@pytest.mark.parametrize("kw", [
    {"kind": "image"}, {"groups": [{"size": 3}]}, {"tests": ["ttest"]},
    {"tests": ["two_sample"], "groups": [{"size": 2}] * 3}, {"n_steps": 0}, {"sigmas": []}, {"sigmas": [-1]},
    {"dim": 2},
])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        small_cloud_spec(**kw)


def test_spec_round_trip():
    spec = small_cloud_spec(sigmas=[5, 10])
    assert spec.sigmas == [5.0, 10.0]
    assert ExperimentSpec.from_dict(spec.to_dict()) == spec


def test_replicates_deterministic_and_distinct():
    spec = small_cloud_spec()
    r0 = run_replicate(spec, 0)
    assert r0 == run_replicate(spec, 0)
    assert r0["seed"] == 11
    assert run_replicate(spec, 1)["seed"] == 12
    p = r0["p_values"]["10.0"]["two_sample"]
    assert 0 < p <= 1


def test_replicate_uses_shared_seed_offsets():
    # replicate r of base seed s equals replicate 0 of base seed s + r
    a = run_replicate(small_cloud_spec(), 2)
    b = run_replicate(small_cloud_spec(seed=13), 0)
    assert a["p_values"] == b["p_values"]


def test_all_tests_and_sigmas_reported():
    spec = small_cloud_spec(groups=[{"shape": "uniform", "size": 3}, {"size": 3}, {"size": 3, "noise_cycle": "cycle"}],
                            tests=["t_anova", "permanova"], sigmas=[10, 1])
    rep = run_replicate(spec, 0)
    assert set(rep["p_values"]) == {"10.0", "1.0"}
    assert set(rep["p_values"]["1.0"]) == {"t_anova", "permanova"}


def test_random_options_are_seeded():
    spec = small_cloud_spec(groups=[{"size": 3, "keyhole_variant": "random"}, {"size": 3, "noise_cycle": "random"}])
    assert run_replicate(spec, 0) == run_replicate(spec, 0)


def test_summarize_and_table():
    spec = small_cloud_spec()
    reps = [{"p_values": {"10.0": {"two_sample": p}}} for p in (0.01, 0.2, 0.03, None)]
    s = summarize(spec, reps)["10.0"]["two_sample"]
    assert s["n"] == 3
    assert s["mean"] == pytest.approx(0.08)
    assert s["sd"] == pytest.approx(np.std([0.01, 0.2, 0.03], ddof=1))
    assert s["rejection_rate"] == pytest.approx(2 / 3)
    table = format_table({"spec": spec.to_dict(), "summary": {"10.0": {"two_sample": s}}})
    assert "0.0800 ±" in table and "reject 2/3" in table


def test_run_experiment_parallel_matches_serial():
    spec = small_cloud_spec()
    assert run_experiment(spec, threads=1) == run_experiment(spec, threads=2)


def test_default_threads(monkeypatch):
    monkeypatch.delenv("TOPOINFER_THREADS", raising=False)
    assert default_threads() == 1
    monkeypatch.setenv("TOPOINFER_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("TOPOINFER_THREADS", "zero")
    with pytest.raises(ValueError):
        default_threads()


def test_network_replicate_small():
    spec = ExperimentSpec(name="n", kind="network", n_nodes=24, n_modules=3, n_subjects=4, n_replicates=1,
                          n_steps=200, groups=[{}, {"lesion": [[0, 1, 2]]}], tests=["two_sample", "permanova"])
    rep = run_replicate(spec, 0)
    assert set(rep["p_values"]["10.0"]) == {"two_sample", "permanova"}


def test_tlsm_modules_follow_lobes():
    atlas = synthetic_atlas()
    mods = tlsm_atlas_modules(atlas)
    assert [len(m) for m in mods] == [12, 12, 12, 12]
    assert {atlas.lobe[v] for v in mods[-1]} == {"other"}


def test_tlsm_replicate_reports_drops():
    spec = ExperimentSpec(name="tl", kind="tlsm", n_nodes=48, n_subjects=4, n_replicates=1, n_steps=200,
                          groups=[{}, {"lesion": [[0, 1, 2, 3]]}])
    rep = run_replicate(spec, 0)
    assert len(rep["dropped"]) == 2
