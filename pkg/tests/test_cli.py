import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from topoinfer import io
from topoinfer.cli import convert_similarity, run
from topoinfer.simgen import KeyShapeSpec, sample_key_cloud, sample_uniform_cloud
from topoinfer.tlsm import synthetic_atlas

EXPERIMENTS = Path(__file__).resolve().parents[1] / "experiments"


@pytest.fixture
def square(tmp_path):
    p = tmp_path / "square.csv"
    p.write_text("x,y\n0,0\n1,0\n1,1\n0,1\n")
    return p


@pytest.fixture
def cloud_groups(tmp_path):
    dirs = []
    for g, make in enumerate((lambda s: sample_uniform_cloud(60, s), lambda s: sample_key_cloud(KeyShapeSpec(), 60, s))):
        d = tmp_path / f"group{g}"
        d.mkdir()
        for i in range(4):
            io.write_matrix(d / f"s{i}.csv", make(10 * g + i))
        dirs.append(d)
    return dirs


def test_convert_similarity_examples():
    s = np.array([[1.0, 0.0, -0.5], [0.0, 1.0, 1.0], [-0.5, 1.0, 1.0]])
    d = convert_similarity(s, "one_minus_abs")
    assert d[1, 2] == 0 and d[0, 1] == 1 and d[0, 2] == 0.5
    assert_array_equal(np.diag(d), 0)
    assert_array_equal(convert_similarity(d, "dissimilarity"), d)
    with pytest.raises(ValueError):
        convert_similarity(np.array([[1.0, 1.5], [1.5, 1.0]]), "one_minus_abs")
    with pytest.raises(ValueError):
        convert_similarity(d, "other")


def test_pd_square(square, tmp_path):
    out = tmp_path / "pd.json"
    assert run(["pd", str(square), "--out", str(out), "--representatives", "--grid-sigmas", "0.01", "10"]) == 0
    data = json.loads(out.read_text())
    assert data["dim"] == 1
    assert_allclose(data["pairs"], [[1.0, np.sqrt(2)]], atol=1e-12)
    assert sorted(data["representatives"][0]) == [0, 1, 2, 3]
    grid = (tmp_path / "pd.grid.csv").read_text().splitlines()
    assert grid[0] == "sigma,birth,death,value"
    assert len(grid) == 1 + 2 * 50 * 51 // 2
    manifest = json.loads((tmp_path / "pd.json.manifest.json").read_text())
    assert manifest["command"] == "pd" and manifest["seed"] == 0
    assert set(manifest["versions"]) >= {"topoinfer", "numpy", "scipy", "numba", "python"}
    assert str(out) in manifest["outputs"]


def test_pd_matrix_input_similarity_mode(tmp_path):
    sim = tmp_path / "sim.csv"
    io.write_matrix(sim, np.eye(4) + 0.2 * (1 - np.eye(4)))
    out = tmp_path / "pd.json"
    assert run(["pd", str(sim), "--input-kind", "matrix", "--similarity-mode", "one_minus_abs", "--dim", "0",
                "--out", str(out)]) == 0
    assert_allclose(json.loads(out.read_text())["pairs"], [[0, 0.8]] * 3)


def test_test2_swapped_groups_same_p(cloud_groups, tmp_path):
    a, b = cloud_groups
    common = ["--steps", "3000", "--seed", "4"]
    assert run(["test2", "--group", str(a), "--group", str(b), "--out", str(tmp_path / "ab.json")] + common) == 0
    assert run(["test2", "--group", str(b), "--group", str(a), "--out", str(tmp_path / "ba.json")] + common) == 0
    ab = json.loads((tmp_path / "ab.json").read_text())
    ba = json.loads((tmp_path / "ba.json").read_text())
    assert ab["p_value"] == ba["p_value"]
    assert ab["method"] == "two_sample" and ab["n_steps"] == 3000 and "trace" not in ab


def test_test2_accepts_diagram_json(square, tmp_path):
    shifted = tmp_path / "shifted.csv"
    shifted.write_text("0,0\n2,0\n2,2\n0,2\n")
    d1, d2 = tmp_path / "d1.json", tmp_path / "d2.json"
    assert run(["pd", str(square), "--out", str(d1)]) == 0
    assert run(["pd", str(shifted), "--out", str(d2)]) == 0
    out = tmp_path / "r.json"
    assert run(["test2", "--group", str(d1), str(d2), "--group", str(d1), str(d2), "--steps", "200", "--trace",
                "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["p_value"] == 1.0
    assert len(data["trace"]) == 200


def test_anova_and_permanova(cloud_groups, tmp_path):
    a, b = cloud_groups
    for cmd in ("anova", "permanova"):
        out = tmp_path / f"{cmd}.json"
        assert run([cmd, "--group", str(a), "--group", str(b), "--group", str(a), "--steps", "500",
                    "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["method"] == {"anova": "t_anova", "permanova": "permanova"}[cmd]
        assert 0 < data["p_value"] <= 1


def test_simulate_twice_byte_identical(tmp_path):
    spec = EXPERIMENTS / "power_key100.json"
    for name in ("a", "b"):
        assert run(["simulate", str(spec), "--seed", "7", "--out", str(tmp_path / name)]) == 0
    for f in ("summary.json", "pvalues.csv", "table.txt", "manifest.json"):
        if f == "manifest.json":
            ma = json.loads((tmp_path / "a" / f).read_text())
            mb = json.loads((tmp_path / "b" / f).read_text())
            assert ma["config"] == {**mb["config"], "out": ma["config"]["out"]}
            continue
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["spec"]["seed"] == 7 and summary["alpha"] == 0.05
    row = summary["summary"]["10.0"]["two_sample"]
    assert row["n"] == 20 and set(row) == {"n", "mean", "sd", "rejection_rate"}
    lines = (tmp_path / "a" / "pvalues.csv").read_text().splitlines()
    assert lines[0] == "replicate,seed,sigma,test,p_value"
    assert len(lines) == 1 + 20 * 2


def test_simulate_threads_do_not_change_results(tmp_path):
    spec = EXPERIMENTS / "power_key90.json"
    args = ["--replicates", "3", "--steps", "500"]
    assert run(["simulate", str(spec), "--threads", "1", "--out", str(tmp_path / "one")] + args) == 0
    assert run(["simulate", str(spec), "--threads", "2", "--out", str(tmp_path / "two")] + args) == 0
    assert (tmp_path / "one" / "summary.json").read_bytes() == (tmp_path / "two" / "summary.json").read_bytes()
    assert (tmp_path / "one" / "pvalues.csv").read_bytes() == (tmp_path / "two" / "pvalues.csv").read_bytes()


def test_replay_reproduces_outputs(cloud_groups, tmp_path):
    a, b = cloud_groups
    out = tmp_path / "r.json"
    assert run(["test2", "--group", str(a), "--group", str(b), "--steps", "800", "--out", str(out)]) == 0
    first = out.read_bytes()
    out.unlink()
    assert run(["replay", str(tmp_path / "r.json.manifest.json")]) == 0
    assert out.read_bytes() == first


def test_failure_names_stage_and_cleans_up(square, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,0\n1,x\n")
    out = tmp_path / "r.json"
    assert run(["test2", "--group", str(square), "--group", str(bad), "--out", str(out)]) == 2
    assert "error [read]" in capsys.readouterr().err
    assert not out.exists()
    # degenerate inference after reading succeeded
    assert run(["anova", "--group", str(square), str(square), "--group", str(square), str(square),
                "--steps", "10", "--out", str(out)]) == 2
    assert "error [inference]" in capsys.readouterr().err
    assert not out.exists() and not (tmp_path / "r.json.manifest.json").exists()


def test_pd_failure_removes_partial_outputs(tmp_path, capsys):
    # a triangle has an empty H1 diagram: the diagram is written, then grid sampling fails
    tri = tmp_path / "tri.csv"
    tri.write_text("0,0\n1,0\n0.5,0.8\n")
    out = tmp_path / "pd.json"
    assert run(["pd", str(tri), "--grid-sigmas", "1", "--out", str(out)]) == 2
    assert "error [write]" in capsys.readouterr().err
    assert not out.exists()


def test_tlsm_command(tmp_path):
    atlas = synthetic_atlas()
    io.write_atlas(tmp_path / "atlas.json", atlas)
    groups = []
    for g, loops in enumerate(([[0, 1, 2, 3], [4, 5, 6, 7]], [[0, 1, 2, 3], [8, 9, 10, 11]])):
        d = tmp_path / f"g{g}"
        d.mkdir()
        for i, loop in enumerate(loops):
            m = np.ones((48, 48))
            np.fill_diagonal(m, 0)
            for a in range(4):
                for b in range(a + 1, 4):
                    m[loop[a], loop[b]] = m[loop[b], loop[a]] = 0.5
            for a in range(4):
                u, v = loop[a], loop[(a + 1) % 4]
                m[u, v] = m[v, u] = 0.1 + 0.05 * i
            io.write_matrix(d / f"s{i}.csv", m)
        io.write_matrix(d / "flat.csv", np.ones((48, 48)) - np.eye(48))
        groups.append(d)
    out = tmp_path / "tlsm"
    assert run(["tlsm", "--atlas", str(tmp_path / "atlas.json"), "--group", str(groups[0]), "--group",
                str(groups[1]), "--lk-class", "LK", "--steps", "300", "--out", str(out)]) == 0
    result = json.loads((out / "result.json").read_text())
    assert result["p_value"] == 1.0
    assert json.loads((out / "dropped.json").read_text()) == {"0": ["0:flat"], "1": ["1:flat"]}
    recs = io.read_polygon_records(out / "polygons.csv")
    assert len(recs) == 4 and all(r.lk_class == "LK" for r in recs)
    assert (out / "manifest.json").exists()


def test_invalid_flags_exit_nonzero(square, tmp_path):
    with pytest.raises(SystemExit):
        run(["test2", "--group", str(square), "--group", str(square), "--steps", "0", "--out", str(tmp_path / "x")])
    with pytest.raises(SystemExit):
        run(["pd", str(square), "--grid-sigmas", "-1", "--out", str(tmp_path / "x")])


def test_console_script(square, tmp_path):
    out = tmp_path / "pd.json"
    proc = subprocess.run([sys.executable, "-m", "topoinfer.cli", "pd", str(square), "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout) == {"pairs": 1}
