import sqlite3

import pytest
from hypothesis import given, settings

from schemagen.corpus import load_corpus
from schemagen.ddl import ConfigurationError, DdlScript, emit_ddl, table_order, verify_executable
from schemagen.schema import Schema, schema_from_tables

from .test_schema import schemas


def load(script):
    conn = sqlite3.connect(":memory:")
    conn.execute("PRAGMA foreign_keys = ON")
    for stmt in script.statements:
        conn.execute(stmt)
    return conn


def introspect(conn, table):
    """(column names, declared types, primary-key columns in key order) as the engine sees them."""
    rows = conn.execute(f'PRAGMA table_info("{table.replace(chr(34), chr(34) * 2)}")').fetchall()
    cols = [r[1] for r in rows]
    types = [r[2] for r in rows]
    pk = [r[1] for r in sorted((r for r in rows if r[5]), key=lambda r: r[5])]
    return cols, types, pk


def test_users_single_table():
    s = schema_from_tables({"users": {"columns": [("user_id", "NUMERIC"), ("name", "TEXT")], "pk": ["user_id"]}})
    script = emit_ddl(s)
    assert len(script.statements) == 1
    stmt = script.statements[0]
    assert stmt.startswith('CREATE TABLE "users"')
    assert 'PRIMARY KEY ("user_id")' in stmt
    assert '"user_id" NUMERIC NOT NULL UNIQUE' in stmt
    assert verify_executable(script)


def test_referenced_table_first():
    s = schema_from_tables({
        "orders": {
            "columns": [("order_id", "NUMERIC"), ("user_id", "NUMERIC")],
            "pk": ["order_id"],
            "fks": [("user_id", "users", "user_id")],
        },
        "users": {"columns": [("user_id", "NUMERIC")], "pk": ["user_id"]},
    })
    script = emit_ddl(s)
    assert [x.split('"')[1] for x in script.statements] == ["users", "orders"]
    assert 'FOREIGN KEY ("user_id") REFERENCES "users" ("user_id")' in script.statements[1]
    conn = load(script)
    conn.execute("INSERT INTO users VALUES (1)")
    conn.execute("INSERT INTO orders VALUES (10, 1)")
    with pytest.raises(sqlite3.IntegrityError):
        conn.execute("INSERT INTO orders VALUES (11, 2)")


def test_warehouse_composite_key():
    s = next(x.gold_schema for x in load_corpus() if x.id == "warehouse-tasks")
    script = emit_ddl(s)
    task = next(x for x in script.statements if x.startswith('CREATE TABLE "task"'))
    assert 'PRIMARY KEY ("warehouse_no", "cargo_no")' in task
    cols, _, pk = introspect(load(script), "task")
    assert pk == ["warehouse_no", "cargo_no"]


def test_type_mapping():
    s = schema_from_tables({
        "r": {"columns": [("n", "NUMERIC"), ("t", "TEXT"), ("d", "DATETIME"), ("b", "BINARY"), ("f", "BOOL")]}
    })
    _, types, _ = introspect(load(emit_ddl(s)), "r")
    assert types == ["NUMERIC", "TEXT", "TEXT", "BLOB", "INTEGER"]


def test_composite_reference_grouped():
    s = schema_from_tables({
        "task": {"columns": [("w", "NUMERIC"), ("c", "NUMERIC")], "pk": ["w", "c"]},
        "log": {
            "columns": [("id", "NUMERIC"), ("w", "NUMERIC"), ("c", "NUMERIC")],
            "pk": ["id"],
            "fks": [("w", "task", "w"), ("c", "task", "c")],
        },
    })
    script = emit_ddl(s)
    assert 'FOREIGN KEY ("w", "c") REFERENCES "task" ("w", "c")' in script.statements[1]
    assert verify_executable(script)


def test_cycle_keeps_declaration_order():
    s = schema_from_tables({
        "a": {"columns": [("a_id", "NUMERIC"), ("b_id", "NUMERIC")], "pk": ["a_id"], "fks": [("b_id", "b", "b_id")]},
        "b": {"columns": [("b_id", "NUMERIC"), ("a_id", "NUMERIC")], "pk": ["b_id"], "fks": [("a_id", "a", "a_id")]},
    })
    assert [s.relation(t).t_name for t in table_order(s)] == ["a", "b"]
    assert verify_executable(emit_ddl(s))


def test_duplicate_table_fails_with_diagnostic():
    s = schema_from_tables({"users": {"columns": [("user_id", "NUMERIC")], "pk": ["user_id"]}})
    stmt = emit_ddl(s).statements[0]
    report = verify_executable(DdlScript((stmt, stmt)))
    assert not report.ok
    assert "statement 2" in report.diagnostics[0] and "already exists" in report.diagnostics[0]


def test_empty_script_ok():
    assert verify_executable(DdlScript(())).ok
    assert verify_executable(emit_ddl(Schema())).ok


def test_bad_reference_caught():
    bad = DdlScript((
        'CREATE TABLE "p" ("x" TEXT)',
        'CREATE TABLE "c" ("x" TEXT, FOREIGN KEY ("x") REFERENCES "p" ("x"))',
    ))
    report = verify_executable(bad)
    assert not report.ok and "foreign key check" in report.diagnostics[0]


def test_unknown_dialect_is_configuration_error():
    with pytest.raises(ConfigurationError):
        verify_executable(DdlScript((), dialect="oracle"))


def test_invalid_schema_rejected():
    from schemagen.schema import Relation

    with pytest.raises(ValueError):
        emit_ddl(Schema((Relation("t1", "empty"),)))


def test_reserved_words_and_spaces():
    s = schema_from_tables({
        "order": {"columns": [("select", "NUMERIC"), ("group by", "TEXT"), ('say "hi"', "TEXT")], "pk": ["select"]},
        "line item": {
            "columns": [("from", "NUMERIC"), ("select", "NUMERIC")],
            "pk": ["from"],
            "fks": [("select", "order", "select")],
        },
    })
    script = emit_ddl(s)
    conn = load(script)
    assert introspect(conn, "order")[0] == ["select", "group by", 'say "hi"']
    assert introspect(conn, "line item")[2] == ["from"]
    assert verify_executable(script)


def test_emission_idempotent(users_orders):
    assert emit_ddl(users_orders).text() == emit_ddl(users_orders).text()
    text = emit_ddl(users_orders).text()
    assert text.endswith(";\n\n") and text.count(";\n") == 2


def test_write(tmp_path, users_orders):
    path = tmp_path / "out.sql"
    emit_ddl(users_orders).write(path)
    assert path.read_text(encoding="utf-8") == emit_ddl(users_orders).text()


@settings(max_examples=200, deadline=None)
@given(schemas())
def test_every_valid_schema_executes(s):
    script = emit_ddl(s)
    report = verify_executable(script)
    assert report.ok, report.diagnostics
    conn = load(script)
    for r in s.relations:
        cols, _, pk = introspect(conn, r.t_name)
        assert cols == [a.a_name for a in s.attributes_of(r.t_id)]
        assert set(pk) == set(s.primary_key_names(r.t_id))


def test_bundled_gold_schemas_execute():
    for sample in load_corpus():
        report = verify_executable(emit_ddl(sample.gold_schema))
        assert report.ok, (sample.id, report.diagnostics)
