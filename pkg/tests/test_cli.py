import json
from fractions import Fraction

import pytest

from graphmcp import ProcedureConfig, adjusted_pvalues, run_procedure
from graphmcp.casestudy import data_path
from graphmcp.cli import main
from graphmcp.io import load_graph, load_pvalues
from graphmcp.procedures import PROCEDURES

F = Fraction


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rejected_from_json(out):
    return json.loads(out)["rejected"]


@pytest.mark.parametrize("proc", PROCEDURES)
def test_run_matches_library(capsys, proc):
    g = load_graph(data_path("atmosphere.graph"))
    p = load_pvalues(data_path("atmosphere.pvals"), g)
    cfg = ProcedureConfig(alpha="0.025", k=2, gamma="0.3", delta="0.5")
    res = run_procedure(proc, g, p, cfg)
    code, out, _ = run(capsys, "run", "atmosphere.graph", "atmosphere.pvals", "--procedure", proc,
                       "--alpha", "0.025", "--k", "2", "--gamma", "0.3", "--delta", "0.5", "--format", "json")
    assert code == 0
    assert sorted(rejected_from_json(out)) == sorted(g.labels[i] for i in res.rejected)


def test_text_and_json_agree(capsys):
    args = ["run", "pd.graph", "pd.pvals", "--procedure", "fdp-gen", "--alpha", "0.05", "--gamma", "0.2"]
    _, js, _ = run(capsys, *args, "--format", "json")
    code, text, _ = run(capsys, *args)
    assert code == 0
    want = rejected_from_json(js)
    assert sorted(want) == ["T4D3", "T5D2", "T5D3"]
    line = next(ln for ln in text.splitlines() if ln.startswith("rejected"))
    assert all(lab in line for lab in want)


def test_atmosphere_kfwer_aug(capsys):
    code, out, _ = run(capsys, "run", "atmosphere.graph", "atmosphere.pvals", "--procedure", "kfwer-aug",
                       "--alpha", "0.025", "--k", "2", "--delta", "0.5", "--format", "json")
    rep = json.loads(out)
    assert code == 0
    assert sorted(rejected_from_json(out)) == ["H2", "H3", "H51", "H52"]
    assert [s["stage"] for s in rep["steps"]].count("augmented") == 1


def test_all_p_one_rejects_nothing(capsys, tmp_path):
    pv = tmp_path / "ones.csv"
    pv.write_text("node,p\nH1,1\nH2,1\nH3,1\nH4,1\n")
    code, out, _ = run(capsys, "run", "diabetes.graph", str(pv), "--procedure", "fwer", "--alpha", "0.05",
                       "--format", "json")
    assert code == 0
    assert json.loads(out)["rejected"] == []


@pytest.mark.parametrize("proc, flag", [("kfwer-gen", "--k"), ("kfwer-aug", "--k"), ("fdp-aug", "--gamma")])
def test_missing_parameter_is_usage_error(capsys, proc, flag):
    code, _, err = run(capsys, "run", "diabetes.graph", "diabetes.pvals", "--procedure", proc, "--alpha", "0.05")
    assert code == 2
    assert f"requires {flag}" in err


def test_adjust(capsys):
    g = load_graph(data_path("diabetes.graph"))
    p = load_pvalues(data_path("diabetes.pvals"), g)
    code, out, _ = run(capsys, "adjust", "diabetes.graph", "diabetes.pvals")
    rows = [ln.split(",") for ln in out.strip().splitlines()]
    assert code == 0
    assert rows[0] == ["node", "label", "p", "adjusted", "adjusted_decimal"]
    assert [F(r[3]) for r in rows[1:]] == list(adjusted_pvalues(g, p).values)
    assert [r[3] for r in rows[1:]] == ["1/50", "1/25", "1/25", "1/25"]


def test_weights_subset(capsys):
    code, out, _ = run(capsys, "weights", "diabetes.graph", "--subset", "2,3,4")
    assert code == 0
    assert [ln.split(",")[2] for ln in out.strip().splitlines()[1:]] == ["3/4", "1/4", "0"]
    _, by_label, _ = run(capsys, "weights", "diabetes.graph", "--subset", "H2,H3,H4")
    assert by_label == out


def test_weights_all(capsys):
    code, out, _ = run(capsys, "weights", "diabetes.graph", "--subset", "all")
    assert code == 0
    g = load_graph(data_path("diabetes.graph"))
    assert [ln.split(",")[2] for ln in out.strip().splitlines()[1:]] == [str(w) for w in g.weights]


@pytest.mark.parametrize("subset", ["9", "H9", "0", ","])
def test_weights_bad_node(capsys, subset):
    code, _, err = run(capsys, "weights", "diabetes.graph", "--subset", subset)
    assert code == 2
    assert err.startswith("graphmcp: error:")


def test_export(capsys, tmp_path):
    code, out, _ = run(capsys, "export", "diabetes.graph", "--remove", "1")
    assert code == 0
    assert 'H2 -> H4 [label="2/3"];' in out
    dot = tmp_path / "g.dot"
    assert run(capsys, "export", "diabetes.graph", "--remove", "H1", "--dot", str(dot))[0] == 0
    assert dot.read_text() == out


def test_out_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("GRAPHMCP_OUT", str(tmp_path))
    code, out, _ = run(capsys, "adjust", "diabetes.graph", "diabetes.pvals", "--out", "sub/adj.csv")
    assert code == 0
    assert (tmp_path / "sub" / "adj.csv").read_text().startswith("node,label")


def test_missing_file(capsys):
    code, _, err = run(capsys, "run", "/nonexistent.graph", "diabetes.pvals", "--procedure", "fwer", "--alpha", "0.05")
    assert code == 2
    assert "cannot read" in err


def test_simulate_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, out, _ = run(capsys, "simulate", "prerelax.sim", "--reps", "300", "--seed", "4", "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("run,procedure,")


def test_simulate_truth_mismatch(capsys, tmp_path):
    t = tmp_path / "t.csv"
    t.write_text("node,true_null\nH1,true\n")
    code, _, err = run(capsys, "simulate", "prerelax.sim", "--reps", "10", "--truth", str(t))
    assert code == 2


def test_casestudy_pd(capsys):
    code, out, _ = run(capsys, "casestudy", "pd")
    assert code == 0
    assert out.strip().endswith("24/24 checks passed")


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
