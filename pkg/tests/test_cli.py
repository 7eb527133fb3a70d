import json
import shutil
from pathlib import Path

import pytest

from schemagen.cli import main
from schemagen.corpus import bundled_corpus_path, load_corpus
from schemagen.schema import deserialize_schema, serialize_schema

from .conftest import REQUIREMENT, student_course_chat

GOLDEN = Path(__file__).parent / "golden"


def write_gold_predictions(directory, samples):
    directory.mkdir(parents=True, exist_ok=True)
    for s in samples:
        (directory / f"{s.id}.schema.json").write_text(serialize_schema(s.gold_schema), encoding="utf-8")


def write_corpus(path, samples):
    rows = [
        {"id": s.id, "requirement": s.requirement, "domain": s.domain, "schema": json.loads(serialize_schema(s.gold_schema))}
        for s in samples
    ]
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


# -- generate ------------------------------------------------------------------


def test_generate_warehouse_golden(tmp_path, capsys):
    code = main(["generate", "--corpus", "bundled", "--sample", "warehouse-tasks", "--out", str(tmp_path)])
    assert code == 0
    assert "warehouse-tasks\tconverged" in capsys.readouterr().out
    produced = (tmp_path / "warehouse-tasks.schema.json").read_text(encoding="utf-8")
    assert produced == (GOLDEN / "warehouse-tasks.schema.json").read_text(encoding="utf-8")
    status = json.loads((tmp_path / "warehouse-tasks.status.json").read_text())
    assert status["status"] == "converged" and status["nested_iterations"] == 2
    assert (tmp_path / "warehouse-tasks.transcript.json").exists()


def test_generate_single_requirement_with_script(tmp_path, capsys):
    script = tmp_path / "chat.json"
    script.write_text(json.dumps(student_course_chat()))
    code = main(["generate", "--requirement", REQUIREMENT, "--script", str(script), "--id", "sc", "--out", str(tmp_path)])
    assert code == 0
    s = deserialize_schema((tmp_path / "sc.schema.json").read_text())
    assert [r.t_name for r in s.relations] == ["student", "course", "enrolls"]


def test_generate_non_converged_exit_one(tmp_path):
    entries = [e for e in student_course_chat() if e["role"] != "TE"]
    entries.append({"role": "TE", "body": json.dumps({"verdict": "no", "next_speaker": "LMD"})})
    script = tmp_path / "chat.json"
    script.write_text(json.dumps(entries))
    assert main(["generate", "--requirement", REQUIREMENT, "--script", str(script), "--out", str(tmp_path)]) == 1
    status = json.loads((tmp_path / "requirement.status.json").read_text())
    assert status["status"] == "non_converged" and status["rounds"] == 15


def test_generate_batch_reports_feedback_share(tmp_path, capsys):
    code = main(["generate", "--corpus", "bundled", "--out", str(tmp_path), "--workers", "4"])
    out = capsys.readouterr().out
    assert code == 0
    assert "samples with feedback: 1/10 (10.0%)" in out
    assert len(list(tmp_path.glob("*.schema.json"))) == 10


def test_missing_api_key_is_config_error(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("SCHEMAGEN_API_KEY", raising=False)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"url": "http://localhost:9/v1/chat/completions", "model": "m"}))
    code = main(["generate", "--requirement", "x", "--backend", "http", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 2
    assert "SCHEMAGEN_API_KEY" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["", "   \n"])
def test_empty_requirement_is_usage_error(tmp_path, text, capsys):
    assert main(["generate", "--requirement", text, "--out", str(tmp_path)]) == 2
    assert "empty" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main(["generate"]) == 2
    assert main(["generate", "--requirement", "x", "--workers", "0"]) == 2
    assert main(["generate", "--requirement-file", str(tmp_path / "nope.txt")]) == 2
    assert main(["generate", "--corpus", "bundled", "--sample", "nope", "--out", str(tmp_path)]) == 2
    assert main(["generate", "--requirement", "x", "--script-dir", str(tmp_path), "--out", str(tmp_path)]) == 2


# -- evaluate ------------------------------------------------------------------


def test_evaluate_gold_as_predictions(tmp_path, capsys):
    write_gold_predictions(tmp_path / "pred", load_corpus())
    code = main(["evaluate", "bundled", str(tmp_path / "pred"), "--out", str(tmp_path / "rep")])
    assert code == 0
    mean = json.loads((tmp_path / "rep" / "report.json").read_text())["mean"]
    assert all(v == 1.0 for v in mean.values())
    assert capsys.readouterr().out.splitlines()[-1] == "MEAN\t" + "\t".join(["1.0000"] * 7) + "\t"


def test_evaluate_one_of_two_missing(tmp_path):
    two = load_corpus()[:2]
    corpus = tmp_path / "two.jsonl"
    write_corpus(corpus, two)
    write_gold_predictions(tmp_path / "pred", two[:1])
    assert main(["evaluate", str(corpus), str(tmp_path / "pred"), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["mean"]["table_acc"] == 0.5
    assert rep["samples"][1]["flag"] == "missing prediction"
    assert all(rep["samples"][1][m] == 0 for m in rep["mean"])


def test_evaluate_malformed_prediction(tmp_path):
    one = load_corpus()[:1]
    corpus = tmp_path / "one.jsonl"
    write_corpus(corpus, one)
    pred = tmp_path / "pred"
    pred.mkdir()
    (pred / f"{one[0].id}.schema.json").write_text("{not json")
    assert main(["evaluate", str(corpus), str(pred), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["samples"][0]["flag"].startswith("malformed prediction")
    assert rep["mean"]["table_f1"] == 0 and rep["flagged"] == 1


def test_evaluate_generated_output(tmp_path, capsys):
    assert main(["generate", "--corpus", "bundled", "--out", str(tmp_path / "gen")]) == 0
    assert main(["evaluate", "bundled", str(tmp_path / "gen"), "--out", str(tmp_path)]) == 0
    mean = json.loads((tmp_path / "report.json").read_text())["mean"]
    assert all(v == 1.0 for v in mean.values())


def test_evaluate_bad_inputs(tmp_path):
    assert main(["evaluate", "bundled", str(tmp_path / "absent")]) == 2
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "x"}\n')
    assert main(["evaluate", str(bad), str(tmp_path)]) == 1


# -- normalize -----------------------------------------------------------------


def normalize(tmp_path, text, capsys):
    path = tmp_path / "fd.txt"
    path.write_text(text)
    code = main(["normalize", str(path)])
    return code, capsys.readouterr()


def test_normalize_chain(tmp_path, capsys):
    code, out = normalize(tmp_path, "universe: A B C\nA -> B\nB -> C\n", capsys)
    assert code == 0
    assert "3NF fragments (2):" in out.out
    assert "candidate keys: {A}" in out.out
    assert "lossless join: yes" in out.out and "dependency preserving: yes" in out.out


def test_normalize_no_fds(tmp_path, capsys):
    code, out = normalize(tmp_path, "universe: A B C\n", capsys)
    assert code == 0 and "3NF fragments (1):" in out.out


def test_normalize_unknown_attribute(tmp_path, capsys):
    code, out = normalize(tmp_path, "universe: A B\n\nA -> Z\n", capsys)
    assert code == 1 and "line 3" in out.err


# -- emit-ddl ------------------------------------------------------------------


def test_emit_ddl_verify(tmp_path, capsys):
    shutil.copy(GOLDEN / "warehouse-tasks.schema.json", tmp_path / "s.json")
    out = tmp_path / "s.sql"
    assert main(["emit-ddl", str(tmp_path / "s.json"), "--out", str(out), "--verify"]) == 0
    assert 'PRIMARY KEY ("warehouse_no", "cargo_no")' in out.read_text()
    assert "executable: yes" in capsys.readouterr().err


def test_emit_ddl_stdout(capsys):
    assert main(["emit-ddl", str(GOLDEN / "warehouse-tasks.schema.json")]) == 0
    assert capsys.readouterr().out.count("CREATE TABLE") == 3


def test_emit_ddl_invalid_schema(tmp_path, capsys):
    doc = json.loads((GOLDEN / "warehouse-tasks.schema.json").read_text())
    doc["relations"].append({"tID": "t9", "tName": "empty"})
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["emit-ddl", str(path)]) == 1
    assert "no attributes" in capsys.readouterr().err
    path.write_text("[]")
    assert main(["emit-ddl", str(path)]) == 1


def test_bundled_corpus_shape():
    samples = load_corpus()
    assert bundled_corpus_path().exists()
    assert len(samples) == 10
    assert len({s.domain for s in samples}) >= 3
