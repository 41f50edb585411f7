import csv
import json
from pathlib import Path


from hierdsg.cli import main
from hierdsg.io import emit_design_space
from hierdsg.problems import get_problem

DOCS = Path(__file__).resolve().parents[1] / "docs" / "problems"


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_stats_on_file(capsys):
    code, out, _ = run(capsys, "stats", "--space", str(DOCS / "source_to_consumer.json"))
    assert code == 0
    lines = out.splitlines()
    assert "n_valid=8" in lines and "n_declared=16" in lines and "imp_ratio=2.0" in lines


def test_enumerate_dragon(capsys, tmp_path):
    out_csv = tmp_path / "pairs.csv"
    code, out, _ = run(capsys, "enumerate", "--problem", "dragon_lite", "--csv", str(out_csv))
    assert code == 0
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["cores", "motors"] and len(rows) == 18


def test_validate_cycle(capsys, tmp_path):
    doc = {
        "schema_version": 1,
        "name": "cyc",
        "variables": [
            {"name": "a", "type": "categorical", "levels": ["x", "y"]},
            {"name": "b", "type": "categorical", "levels": ["x", "y"]},
        ],
        "decree_rules": [
            {"parent": "a", "target": "b", "condition": {"in": ["x"]}, "effect": {"kind": "include"}},
            {"parent": "b", "target": "a", "condition": {"in": ["x"]}, "effect": {"kind": "include"}},
        ],
    }
    path = tmp_path / "cyc.json"
    path.write_text(json.dumps(doc))
    code, out, err = run(capsys, "validate", "--space", str(path))
    assert code == 2
    assert "cycle" in err and "a" in err and "b" in err


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", "--problem", "mlp")
    assert code == 0


def test_usage_errors(capsys):
    assert run(capsys)[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "sample", "--problem", "mlp", "-n", "-3")[0] == 1
    assert run(capsys, "stats", "--problem", "no_such")[0] == 2


def test_budget_exit(capsys):
    assert run(capsys, "enumerate", "--problem", "mlp", "--all", "--cap", "10")[0] == 3


def test_sample_correct_distance(capsys, tmp_path):
    pts = tmp_path / "pts.txt"
    code, out, _ = run(capsys, "sample", "--problem", "mlp", "-n", "5", "--seed", "3", "--out", str(pts))
    assert code == 0 and "seed=3" in out
    first = pts.read_text()
    run(capsys, "sample", "--problem", "mlp", "-n", "5", "--seed", "3", "--out", str(pts))
    assert pts.read_text() == first
    fixed = tmp_path / "fixed.txt"
    code, out, _ = run(capsys, "correct", "--problem", "mlp", "--points", str(pts), "--out", str(fixed), "--quiet")
    assert code == 0 and "corrected 5 points" in out
    assert fixed.read_text() == first
    code, out, _ = run(capsys, "distance", "--problem", "mlp", "--points", str(pts))
    assert code == 0


def test_correct_reports_bad_variable(capsys, tmp_path):
    pts = tmp_path / "bad.txt"
    pts.write_text("ghost=1\n")
    code, _, err = run(capsys, "correct", "--problem", "mlp", "--points", str(pts))
    assert code == 2 and "ghost" in err


def test_gram_and_spdcheck(capsys, tmp_path):
    code, out, _ = run(capsys, "gram", "--problem", "hybrid_energy", "-n", "6", "--csv", str(tmp_path / "k.csv"))
    assert code == 0
    assert len(list(csv.reader((tmp_path / "k.csv").open()))) >= 6
    code, out, _ = run(capsys, "spdcheck", "--problem", "wing_length", "--matrices", "5", "--max-n", "10")
    assert code == 0
    code, out, _ = run(capsys, "spdcheck", "--problem", "motors_propellers", "--witness", "--kernel", "NAIVE-TEST")
    assert code == 0


def test_export_dot(capsys, tmp_path):
    code, out, _ = run(capsys, "export-dot", "--problem", "hybrid_energy")
    assert code == 0 and out.startswith("digraph")
    path = tmp_path / "s.json"
    path.write_text(emit_design_space(get_problem("hybrid_energy").graph))
    code, out2, _ = run(capsys, "export-dot", "--space", str(path))
    assert out2 == out


def test_model_fit_and_predict(capsys, tmp_path):
    model = tmp_path / "m.json"
    code, out, _ = run(capsys, "model-fit", "--problem", "wing_length", "-n", "8",
                       "--multistarts", "1", "--max-evals", "30", "--model", str(model))
    assert code == 0 and model.exists()
    pts = tmp_path / "p.txt"
    run(capsys, "sample", "--problem", "wing_length", "-n", "3", "--out", str(pts))
    code, out, _ = run(capsys, "model-predict", "--model", str(model), "--points", str(pts), "--csv", str(tmp_path / "o.csv"))
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "o.csv").open()))
    assert len(rows) == 3 and all(float(r["variance"]) >= 0 for r in rows)
    assert main(["model", "predict", "--model", str(model), "--points", str(pts)]) == 0


def test_bo_run_small(capsys, tmp_path):
    trace = tmp_path / "t.jsonl"
    curves = tmp_path / "c.csv"
    code, out, _ = run(capsys, "bo-run", "--problem", "wing_length", "--seeds", "0-1", "--budget", "2",
                       "--doe", "4", "--pool", "16", "--trace", str(trace), "--curves", str(curves))
    assert code == 0
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert len(records) == 2 * 2 * 6
    assert {r["method"] for r in records} == {"bo", "random"}
    assert main(["bo", "run", "--problem", "wing_length", "--budget", "1", "--doe", "3", "--pool", "8",
                 "--no-baseline"]) == 0
    assert run(capsys, "bo-run", "--problem", "wing_length", "--max-seconds", "0")[0] == 3


def test_problems_list(capsys):
    code, out, _ = run(capsys, "problems-list")
    assert code == 0 and "dragon_lite" in out and "mlp" in out
