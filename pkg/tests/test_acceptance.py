"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import filecmp
import itertools
import json
import random
import time

from schemagen import fd as fdx
from schemagen.agents import Pipeline, Visibility
from schemagen.cli import main
from schemagen.corpus import load_corpus
from schemagen.ddl import emit_ddl, verify_executable
from schemagen.evaluation import (
    MatcherConfig,
    align,
    attribute_metrics,
    evaluate_pair,
    names_match,
    table_metrics,
)
from schemagen.fd import FDSet
from schemagen.llm import RunConfig, ScriptedBackend
from schemagen.schema import deserialize_schema, schema_from_tables

from .conftest import REQUIREMENT, random_fd_set, reply, student_course_chat

RESULTS: list[str] = []


def verdict(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def subsets(attrs):
    attrs = sorted(attrs)
    for r in range(len(attrs) + 1):
        for c in itertools.combinations(attrs, r):
            yield frozenset(c)


def brute_keys(f: FDSet):
    """Minimal superkeys by exhaustive closure over the power set."""
    def close(x):
        x = set(x)
        changed = True
        while changed:
            changed = False
            for g in f.fds:
                if g.lhs <= x and not g.rhs <= x:
                    x |= g.rhs
                    changed = True
        return frozenset(x)

    supers = [s for s in subsets(f.universe) if close(s) == f.universe]
    return close, {s for s in supers if not any(o < s for o in supers)}


def test_fd_engine_oracle_equivalence():
    rng = random.Random(2024)
    start = time.perf_counter()
    cases = mismatches = 0
    for _ in range(250):
        f = random_fd_set(rng, max_attrs=7)
        close, keys = brute_keys(f)
        cases += 1
        if set(fdx.candidate_keys(None, f)) != keys:
            mismatches += 1
            continue
        if any(fdx.closure(x, f) != close(x) for x in subsets(f.universe)):
            mismatches += 1
    elapsed = time.perf_counter() - start
    verdict(
        "fd-engine oracle equivalence",
        cases >= 200 and mismatches == 0 and elapsed < 30,
        f"{cases} FD sets, {mismatches} mismatches, {elapsed:.2f}s (limit 30s)",
    )


def test_3nf_synthesis_soundness():
    rng = random.Random(7)
    cases = failures = 0
    for _ in range(250):
        f = random_fd_set(rng, max_attrs=7)
        d = fdx.synthesize_3nf(None, f)
        cases += 1
        ok = (
            all(fdx.is_3nf(fr.attrs, fdx.project(f, fr.attrs)) for fr in d.fragments)
            and fdx.is_lossless(None, f, d)
            and fdx.is_dependency_preserving(f, d)
        )
        failures += not ok
    verdict("3NF synthesis soundness", cases >= 200 and failures == 0, f"{cases} inputs, {failures} failures")


def test_metric_fidelity():
    def t(*cols):
        return {"columns": [(c, "TEXT") for c in cols]}

    problems = []
    gold = schema_from_tables({"users": t("user_id"), "orders": t("order_id")})
    pred = schema_from_tables({"users": t("user_id")})
    f1, acc = table_metrics(gold, pred, align(gold, pred))
    if abs(f1 - 2 / 3) > 1e-9 or acc != 0:
        problems.append(f"table F1 {f1} (want 2/3)")
    gold = schema_from_tables({"item": t("a", "b", "c")})
    pred = schema_from_tables({"item": t("a", "b")})
    f1, acc = attribute_metrics(gold, pred, align(gold, pred))
    if abs(f1 - 0.8) > 1e-9 or acc != 0:
        problems.append(f"attribute F1 {f1} (want 0.8)")
    for g, p in [(gold, gold), (gold, pred)]:
        r = evaluate_pair(g, p)
        if (r.table_acc == 1) != (abs(r.table_f1 - 1) <= 1e-9) or (r.attr_acc == 1) != (abs(r.attr_f1 - 1) <= 1e-9):
            problems.append("Acc=1 does not coincide with F1=1")
    samples = load_corpus()
    for s in samples:
        r = evaluate_pair(s.gold_schema, s.gold_schema)
        if any(abs(v - 1) > 1e-9 for v in r.as_dict().values()):
            problems.append(f"self-evaluation of {s.id} is {r.as_dict()}")
    verdict(
        "metric fidelity",
        not problems,
        "; ".join(problems) or f"fixtures exact to 1e-9, {len(samples)} gold schemas self-evaluate to 1",
    )


def test_threshold_behavior():
    cfg = MatcherConfig()
    at_default = names_match("user", "users", MatcherConfig.string_only(0.75))
    at_strict = names_match("user", "users", MatcherConfig.string_only(0.85))
    ok = at_default and not at_strict and (cfg.delta0, cfg.delta1) == (0.6, 0.75)
    verdict(
        "threshold behavior",
        ok,
        f"user/users at 0.75={at_default}, at 0.85={at_strict}, defaults=({cfg.delta0}, {cfg.delta1})",
    )


def _run(entries, config=None):
    backend = ScriptedBackend.from_doc(entries)
    pipe = Pipeline(REQUIREMENT, backend, config)
    return pipe, pipe.run(), backend


def test_orchestrator_protocol():
    checks = {}

    te = [{"verdict": "a constraint is missing", "next_speaker": "LMD"}]
    _, r, _ = _run(student_course_chat(te=te))
    checks["(a) no TERMINAL halts at round 15"] = r.rounds == 15 and r.status == "non_converged"

    marker = "REVIEW-ONLY-9d1c"
    cmr = [
        {"approved": False, "issues": [marker], "next_speaker": "CMD"},
        {"approved": True, "issues": [], "next_speaker": "LMD"},
    ]
    pipe, r, backend = _run(student_course_chat(cmr=cmr))
    cmd_turns = sum(q.role == "CMD" for q in backend.requests)
    checks["(b) one rejection gives one CMD re-generation"] = cmd_turns == 2 and r.converged and r.rounds <= 15

    nested = [m.body for m in pipe.state.pool if m.visibility is Visibility.NESTED]
    outside = [p for role, _, p in r.prompts if role not in ("CMD", "CMR")]
    leaked = [b for b in nested for p in outside if b in p] + [p for p in outside if marker in p]
    checks["(c) NESTED messages absent from other prompts"] = bool(nested) and bool(outside) and not leaked

    qae = [{"test_cases": [], "next_speaker": "CMD"}]
    _, r, _ = _run(student_course_chat(qae=qae))
    row = next(m for m in r.transcript if m["sender"] == "QAE")
    checks["(d) invalid hint falls back to forward order"] = row["next_speaker"] == "TE" and r.converged

    entries = [e for e in student_course_chat() if e["role"] != "PM"] + [reply("PM", "hello")]
    _, r, backend = _run(entries, RunConfig())
    pm_attempts = [q.attempt for q in backend.requests if q.role == "PM"]
    checks["(e) unparsable output fails after 3 attempts"] = r.status == "failed" and pm_attempts == [1, 2, 3]

    failed = [k for k, v in checks.items() if not v]
    verdict("orchestrator protocol", not failed, "failed " + ", ".join(failed) if failed else "(a)-(e) hold")


def test_warehouse_golden(tmp_path):
    code = main(["generate", "--corpus", "bundled", "--sample", "warehouse-tasks", "--out", str(tmp_path)])
    s = deserialize_schema((tmp_path / "warehouse-tasks.schema.json").read_text(encoding="utf-8"))
    task = s.relation_by_name("task")
    pk = set(s.primary_key_names(task.t_id)) if task else set()
    task_cols = {a.a_name for a in s.attributes_of(task.t_id)} if task else set()
    holder = [r.t_name for r in s.relations if "cargo_name" in {a.a_name for a in s.attributes_of(r.t_id)}]
    holder_pk = set(s.primary_key_names(s.relation_by_name(holder[0]).t_id)) if len(holder) == 1 else set()
    ok = (
        code == 0
        and pk == {"warehouse_no", "cargo_no"}
        and "cargo_name" not in task_cols
        and holder_pk == {"cargo_no"}
    )
    verdict(
        "warehouse golden case",
        ok,
        f"exit {code}, task key {sorted(pk)}, cargo_name held by {holder} keyed on {sorted(holder_pk)}",
    )


def test_ddl_executability():
    start = time.perf_counter()
    samples = load_corpus()
    bad = []
    for s in samples:
        report = verify_executable(emit_ddl(s.gold_schema))
        if not report.ok:
            bad.append(f"{s.id}: {report.diagnostics}")
    elapsed = time.perf_counter() - start
    verdict(
        "DDL executability",
        not bad and elapsed < 10,
        f"{len(samples) - len(bad)}/{len(samples)} executable, {elapsed:.2f}s (limit 10s)" + (f"; {bad}" if bad else ""),
    )


def test_determinism(tmp_path):
    runs = []
    for i in (1, 2):
        gen, rep = tmp_path / f"gen{i}", tmp_path / f"rep{i}"
        codes = (
            main(["generate", "--corpus", "bundled", "--out", str(gen), "--workers", str(2 * i)]),
            main(["evaluate", "bundled", str(gen), "--out", str(rep)]),
        )
        runs.append((gen, rep, codes))
    (g1, r1, c1), (g2, r2, c2) = runs
    names = sorted(p.name for p in g1.iterdir())
    same_names = names == sorted(p.name for p in g2.iterdir())
    kinds = {n.split(".", 1)[1] for n in names}
    _, mismatch, errors = filecmp.cmpfiles(g1, g2, names, shallow=False)
    _, rep_mismatch, rep_errors = filecmp.cmpfiles(r1, r2, ["report.tsv", "report.json"], shallow=False)
    ok = (
        c1 == c2 == (0, 0)
        and same_names
        and kinds == {"schema.json", "transcript.json", "status.json"}
        and not (mismatch or errors or rep_mismatch or rep_errors)
    )
    mean = json.loads((r1 / "report.json").read_text())["mean"] if (r1 / "report.json").exists() else {}
    verdict(
        "determinism",
        ok,
        f"{len(names)} files byte-identical across runs, reports identical, mean table F1 {mean.get('table_f1')}",
    )
