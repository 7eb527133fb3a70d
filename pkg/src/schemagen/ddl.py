"""Rule-based lowering of a Schema to CREATE TABLE statements, plus an executability check."""

from __future__ import annotations

import logging
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path

from .schema import ConstraintKind, DataType, Schema, id_sort_key, validate_schema

log = logging.getLogger(__name__)


class ConfigurationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Dialect:
    """Everything dialect-specific lives here; adding a dialect means adding a table."""

    name: str
    type_map: dict[DataType, str]

    def quote(self, ident: str) -> str:
        return '"' + ident.replace('"', '""') + '"'


SQLITE = Dialect(
    "sqlite",
    {
        DataType.NUMERIC: "NUMERIC",
        DataType.TEXT: "TEXT",
        DataType.DATETIME: "TEXT",  # ISO-8601 strings
        DataType.BINARY: "BLOB",
        DataType.BOOL: "INTEGER",
    },
)


@dataclass(frozen=True)
class DdlScript:
    statements: tuple[str, ...]
    dialect: str = SQLITE.name

    def text(self) -> str:
        return "".join(stmt + ";\n\n" for stmt in self.statements)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.text(), encoding="utf-8")


def table_order(s: Schema) -> list[str]:
    """Table IDs so referenced tables precede referencing ones.

    Picks, at each step, the first table in declaration order whose
    dependencies are already placed. On a cycle the remaining tables keep
    declaration order.
    """
    owner = {a.a_id: a.t_id for a in s.attributes}
    deps: dict[str, set[str]] = {r.t_id: set() for r in s.relations}
    for fk in s.foreign_keys:
        src, dst = owner[fk.from_attr], owner[fk.to_attr]
        if src != dst:
            deps[src].add(dst)

    pending = [r.t_id for r in s.relations]
    done: list[str] = []
    while pending:
        ready = next((t for t in pending if deps[t] <= set(done)), None)
        if ready is None:
            log.warning("foreign-key cycle among %s; keeping declaration order", pending)
            done.extend(pending)
            break
        done.append(ready)
        pending.remove(ready)
    return done


def _fk_clauses(s: Schema, t_id: str, dialect: Dialect) -> list[str]:
    """One clause per complete reference to a referenced table's key.

    References to a strict part of a composite key cannot be declared in
    SQLite (the parent columns must be unique together), so they are dropped
    with a warning.
    """
    q = dialect.quote
    attrs = {a.a_id: a for a in s.attributes}
    targets: dict[str, list[tuple[str, str]]] = {}
    for fk in s.foreign_keys:
        if attrs[fk.from_attr].t_id == t_id:
            targets.setdefault(attrs[fk.to_attr].t_id, []).append((fk.from_attr, fk.to_attr))

    clauses = []
    order = table_order(s)
    for target in sorted(targets, key=order.index):
        pairs = targets[target]
        pk = s.primary_key(target)
        key = sorted(pk.key_attrs, key=id_sort_key) if pk else []
        groups: list[list[tuple[str, str]]] = []
        if len(key) > 1:
            pool = list(pairs)
            while True:
                group = []
                for k in key:
                    hit = next((p for p in pool if p[1] == k), None)
                    if hit is None:
                        break
                    group.append(hit)
                    pool.remove(hit)
                if len(group) < len(key):
                    pool.extend(group)
                    break
                groups.append(group)
            for a, b in pool:
                log.warning(
                    "%s.%s references part of the composite key of %s; not declared",
                    s.relation(t_id).t_name, attrs[a].a_name, s.relation(target).t_name,
                )
        else:
            groups = [[p] for p in pairs]
        for group in groups:
            src = ", ".join(q(attrs[a].a_name) for a, _ in group)
            dst = ", ".join(q(attrs[b].a_name) for _, b in group)
            clauses.append(
                f"FOREIGN KEY ({src}) REFERENCES {q(s.relation(target).t_name)} ({dst})"
            )
    return clauses


def emit_table(s: Schema, t_id: str, dialect: Dialect = SQLITE) -> str:
    q = dialect.quote
    lines = []
    for a in s.attributes_of(t_id):
        col = f"{q(a.a_name)} {dialect.type_map[a.a_type]}"
        kinds = s.constraints_on(a.a_id)
        if ConstraintKind.NOT_NULL in kinds:
            col += " NOT NULL"
        if ConstraintKind.UNIQUE in kinds:
            col += " UNIQUE"
        lines.append(col)
    pk = s.primary_key(t_id)
    if pk is not None:
        names = ", ".join(q(s.attribute(a).a_name) for a in sorted(pk.key_attrs, key=id_sort_key))
        lines.append(f"PRIMARY KEY ({names})")
    lines.extend(_fk_clauses(s, t_id, dialect))
    body = ",\n".join("    " + line for line in lines)
    return f"CREATE TABLE {q(s.relation(t_id).t_name)} (\n{body}\n)"


def emit_ddl(s: Schema, dialect: Dialect = SQLITE) -> DdlScript:
    result = validate_schema(s)
    if not result.ok:
        raise ValueError("schema does not validate: " + "; ".join(result.messages()))
    return DdlScript(tuple(emit_table(s, t, dialect) for t in table_order(s)), dialect.name)


@dataclass
class ExecutionReport:
    ok: bool
    diagnostics: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def verify_executable(script: DdlScript) -> ExecutionReport:
    """Run every statement against a fresh in-memory SQLite database with FK enforcement."""
    if script.dialect != SQLITE.name:
        raise ConfigurationError(f"no engine available for dialect {script.dialect!r}")
    try:
        conn = sqlite3.connect(":memory:")
    except sqlite3.Error as exc:  # pragma: no cover - depends on the host build
        raise ConfigurationError(f"SQLite unavailable: {exc}") from exc
    try:
        conn.execute("PRAGMA foreign_keys = ON")
        for i, stmt in enumerate(script.statements, start=1):
            try:
                conn.execute(stmt)
            except sqlite3.Error as exc:
                return ExecutionReport(False, [f"statement {i}: {exc}"])
        # FK target mismatches only surface when the constraint is resolved.
        try:
            conn.execute("PRAGMA foreign_key_check").fetchall()
        except sqlite3.Error as exc:
            return ExecutionReport(False, [f"foreign key check: {exc}"])
        return ExecutionReport(True)
    finally:
        conn.close()
