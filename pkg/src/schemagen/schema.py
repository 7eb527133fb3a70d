"""Logical schema model: relations, attributes, keys and domain constraints.

A :class:`Schema` is an immutable 5-tuple of component sets. Components refer
to each other by opaque string IDs (``t1``, ``a7``...). Construction never
validates; call :func:`validate_schema` to get the list of broken rules.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable


class DataType(str, Enum):
    NUMERIC = "NUMERIC"
    TEXT = "TEXT"
    DATETIME = "DATETIME"
    BINARY = "BINARY"
    BOOL = "BOOL"


class ConstraintKind(str, Enum):
    NOT_NULL = "NOT_NULL"
    UNIQUE = "UNIQUE"


class SchemaFormatError(ValueError):
    """Raised when a serialized schema cannot be turned back into a Schema."""


_ID_RE = re.compile(r"^(.*?)(\d+)$")


def id_sort_key(ident: str) -> tuple[str, int, str]:
    """Natural ordering for IDs, so ``t2`` sorts before ``t10``."""
    m = _ID_RE.match(ident)
    if m:
        return (m.group(1), int(m.group(2)), ident)
    return (ident, -1, ident)


@dataclass(frozen=True)
class Relation:
    t_id: str
    t_name: str


@dataclass(frozen=True)
class Attribute:
    a_id: str
    a_name: str
    a_type: DataType
    t_id: str


@dataclass(frozen=True)
class PrimaryKeyConstraint:
    t_id: str
    key_attrs: frozenset[str]


@dataclass(frozen=True)
class ForeignKeyConstraint:
    from_attr: str
    to_attr: str


@dataclass(frozen=True)
class DomainConstraint:
    attr: str
    kind: ConstraintKind


def _sorted(items: Iterable[Any], key) -> tuple:
    return tuple(sorted(items, key=key))


@dataclass(frozen=True)
class Schema:
    """The 5-tuple ``(relations, attributes, primary_keys, foreign_keys, domain_constraints)``.

    Every component collection is stored as a tuple in canonical ID order, so
    two schemas holding the same sets compare equal regardless of the order
    they were built in.
    """

    relations: tuple[Relation, ...] = ()
    attributes: tuple[Attribute, ...] = ()
    primary_keys: tuple[PrimaryKeyConstraint, ...] = ()
    foreign_keys: tuple[ForeignKeyConstraint, ...] = ()
    domain_constraints: tuple[DomainConstraint, ...] = ()

    def __post_init__(self) -> None:
        # Duplicates are kept: validate_schema reports them.
        set_ = object.__setattr__
        set_(self, "relations", _sorted(self.relations, lambda r: (id_sort_key(r.t_id), r.t_name)))
        set_(
            self,
            "attributes",
            _sorted(self.attributes, lambda a: (id_sort_key(a.a_id), a.a_name, a.t_id)),
        )
        set_(
            self,
            "primary_keys",
            _sorted(
                self.primary_keys,
                lambda p: (id_sort_key(p.t_id), sorted(p.key_attrs, key=id_sort_key)),
            ),
        )
        set_(
            self,
            "foreign_keys",
            _sorted(
                set(self.foreign_keys),
                lambda f: (id_sort_key(f.from_attr), id_sort_key(f.to_attr)),
            ),
        )
        set_(
            self,
            "domain_constraints",
            _sorted(self.domain_constraints, lambda d: (id_sort_key(d.attr), d.kind.value)),
        )

    # -- lookups -----------------------------------------------------------

    def relation(self, t_id: str) -> Relation:
        for r in self.relations:
            if r.t_id == t_id:
                return r
        raise KeyError(t_id)

    def relation_by_name(self, name: str) -> Relation:
        for r in self.relations:
            if r.t_name == name:
                return r
        raise KeyError(name)

    def attribute(self, a_id: str) -> Attribute:
        for a in self.attributes:
            if a.a_id == a_id:
                return a
        raise KeyError(a_id)

    def attributes_of(self, t_id: str) -> tuple[Attribute, ...]:
        """``A(tID)``: the attributes owned by one relation, in ID order."""
        return tuple(a for a in self.attributes if a.t_id == t_id)

    def primary_key(self, t_id: str) -> PrimaryKeyConstraint | None:
        for p in self.primary_keys:
            if p.t_id == t_id:
                return p
        return None

    def primary_key_names(self, t_id: str) -> frozenset[str]:
        pk = self.primary_key(t_id)
        if pk is None:
            return frozenset()
        return frozenset(self.attribute(a).a_name for a in pk.key_attrs)

    def constraints_on(self, a_id: str) -> frozenset[ConstraintKind]:
        return frozenset(d.kind for d in self.domain_constraints if d.attr == a_id)


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    component: str
    rule: str

    def __str__(self) -> str:
        return f"{self.component}: {self.rule}"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def messages(self) -> list[str]:
        return [str(v) for v in self.violations]


def validate_schema(s: Schema) -> ValidationResult:
    """Check every structural invariant of ``s``; violations are returned, never raised."""
    out: list[Violation] = []

    def bad(component: str, rule: str) -> None:
        out.append(Violation(component, rule))

    t_ids: set[str] = set()
    for r in s.relations:
        if r.t_id in t_ids:
            bad(f"relation {r.t_id}", "duplicate relation ID")
        t_ids.add(r.t_id)
        if not r.t_name or not r.t_name.strip():
            bad(f"relation {r.t_id}", "empty relation name")

    attrs: dict[str, Attribute] = {}
    seen_cols: set[tuple[str, str]] = set()
    for a in s.attributes:
        comp = f"attribute {a.a_id}"
        if a.a_id in attrs:
            bad(comp, "duplicate attribute ID")
        attrs[a.a_id] = a
        if not a.a_name or not a.a_name.strip():
            bad(comp, "empty attribute name")
        if not isinstance(a.a_type, DataType):
            bad(comp, "unknown data type")
        if a.t_id not in t_ids:
            bad(comp, "dangling reference to relation " + a.t_id)
        if (a.t_id, a.a_name) in seen_cols:
            bad(comp, f"duplicate column name {a.a_name!r} in relation {a.t_id}")
        seen_cols.add((a.t_id, a.a_name))

    for r in s.relations:
        if not any(a.t_id == r.t_id for a in s.attributes):
            bad(f"relation {r.t_id}", "relation has no attributes")

    pk_attrs: set[str] = set()
    pk_tables: set[str] = set()
    for p in s.primary_keys:
        comp = f"primary key of {p.t_id}"
        if p.t_id not in t_ids:
            bad(comp, "dangling reference to relation " + p.t_id)
        if p.t_id in pk_tables:
            bad(comp, "more than one primary key for relation")
        pk_tables.add(p.t_id)
        if not p.key_attrs:
            bad(comp, "empty primary key")
        for a_id in sorted(p.key_attrs, key=id_sort_key):
            if a_id not in attrs:
                bad(comp, "dangling reference to attribute " + a_id)
            elif attrs[a_id].t_id != p.t_id:
                bad(comp, f"key attribute {a_id} belongs to another relation")
        pk_attrs.update(p.key_attrs)

    for f in s.foreign_keys:
        comp = f"foreign key {f.from_attr}->{f.to_attr}"
        src, dst = attrs.get(f.from_attr), attrs.get(f.to_attr)
        if src is None:
            bad(comp, "dangling reference to attribute " + f.from_attr)
        if dst is None:
            bad(comp, "dangling reference to attribute " + f.to_attr)
        if dst is not None and f.to_attr not in pk_attrs:
            bad(comp, "FK target not a primary key attribute")
        if src is not None and dst is not None and src.a_type != dst.a_type:
            bad(comp, f"type mismatch {src.a_type.value} vs {dst.a_type.value}")
        if f.from_attr == f.to_attr:
            bad(comp, "attribute references itself")

    seen_dc: set[tuple[str, ConstraintKind]] = set()
    for d in s.domain_constraints:
        comp = f"domain constraint {d.kind.value} on {d.attr}"
        if d.attr not in attrs:
            bad(comp, "dangling reference to attribute " + d.attr)
        if (d.attr, d.kind) in seen_dc:
            bad(comp, "duplicate domain constraint")
        seen_dc.add((d.attr, d.kind))

    return ValidationResult(tuple(out))


# -- building -----------------------------------------------------------------


class SchemaBuilder:
    """Incremental construction with generated ``t1``/``a1`` IDs.

    Primary-key attributes get NOT_NULL at build time, and UNIQUE as well when
    the key is a single column (a composite key is unique only as a whole).
    """

    def __init__(self, *, first_table: int = 1, first_attr: int = 1) -> None:
        self._next_t = first_table
        self._next_a = first_attr
        self.relations: list[Relation] = []
        self.attributes: list[Attribute] = []
        self.primary_keys: dict[str, frozenset[str]] = {}
        self.foreign_keys: list[ForeignKeyConstraint] = []
        self.domain_constraints: list[DomainConstraint] = []

    def add_table(self, name: str, t_id: str | None = None) -> str:
        if t_id is None:
            t_id = f"t{self._next_t}"
            self._next_t += 1
        self.relations.append(Relation(t_id, name))
        return t_id

    def add_attribute(
        self, t_id: str, name: str, a_type: DataType | str, a_id: str | None = None
    ) -> str:
        if a_id is None:
            a_id = f"a{self._next_a}"
            self._next_a += 1
        self.attributes.append(Attribute(a_id, name, DataType(a_type), t_id))
        return a_id

    def column(self, t_id: str, name: str) -> str:
        for a in self.attributes:
            if a.t_id == t_id and a.a_name == name:
                return a.a_id
        raise KeyError(f"{t_id}.{name}")

    def columns(self, t_id: str) -> list[Attribute]:
        return [a for a in self.attributes if a.t_id == t_id]

    def table_named(self, name: str) -> str:
        for r in self.relations:
            if r.t_name == name:
                return r.t_id
        raise KeyError(name)

    def set_primary_key(self, t_id: str, a_ids: Iterable[str]) -> None:
        self.primary_keys[t_id] = frozenset(a_ids)

    def add_foreign_key(self, from_attr: str, to_attr: str) -> None:
        fk = ForeignKeyConstraint(from_attr, to_attr)
        if fk not in self.foreign_keys:
            self.foreign_keys.append(fk)

    def add_constraint(self, a_id: str, kind: ConstraintKind | str) -> None:
        dc = DomainConstraint(a_id, ConstraintKind(kind))
        if dc not in self.domain_constraints:
            self.domain_constraints.append(dc)

    def build(self) -> Schema:
        for key in self.primary_keys.values():
            for a_id in key:
                self.add_constraint(a_id, ConstraintKind.NOT_NULL)
                if len(key) == 1:
                    self.add_constraint(a_id, ConstraintKind.UNIQUE)
        return Schema(
            relations=tuple(self.relations),
            attributes=tuple(self.attributes),
            primary_keys=tuple(PrimaryKeyConstraint(t, k) for t, k in self.primary_keys.items()),
            foreign_keys=tuple(self.foreign_keys),
            domain_constraints=tuple(self.domain_constraints),
        )


def schema_from_tables(tables: dict[str, dict[str, Any]]) -> Schema:
    """Build a schema from a compact table description.

    ``tables`` maps table name to ``{"columns": [(name, type), ...],
    "pk": [names], "fks": [(column, target_table, target_column), ...]}``.
    Tables and columns get IDs in the order given.
    """
    b = SchemaBuilder()
    for name, layout in tables.items():
        t = b.add_table(name)
        for col, a_type in layout["columns"]:
            b.add_attribute(t, col, a_type)
        if layout.get("pk"):
            b.set_primary_key(t, [b.column(t, c) for c in layout["pk"]])
    for name, layout in tables.items():
        t = b.table_named(name)
        for col, target, target_col in layout.get("fks", ()):
            b.add_foreign_key(b.column(t, col), b.column(b.table_named(target), target_col))
    return b.build()


# -- serialization ------------------------------------------------------------


def schema_to_dict(s: Schema) -> dict[str, list[dict[str, Any]]]:
    return {
        "relations": [{"tID": r.t_id, "tName": r.t_name} for r in s.relations],
        "attributes": [
            {"aID": a.a_id, "aName": a.a_name, "aType": a.a_type.value, "tID": a.t_id}
            for a in s.attributes
        ],
        "primary_keys": [
            {"tID": p.t_id, "keyAttrs": sorted(p.key_attrs, key=id_sort_key)}
            for p in s.primary_keys
        ],
        "foreign_keys": [{"fromAttr": f.from_attr, "toAttr": f.to_attr} for f in s.foreign_keys],
        "domain_constraints": [
            {"attr": d.attr, "kind": d.kind.value} for d in s.domain_constraints
        ],
    }


def serialize_schema(s: Schema) -> str:
    """Canonical JSON text; byte-identical for equal schemas.

    Raises ValueError if the schema does not validate.
    """
    result = validate_schema(s)
    if not result.ok:
        raise ValueError("cannot serialize invalid schema: " + "; ".join(result.messages()))
    return json.dumps(schema_to_dict(s), indent=2, ensure_ascii=False) + "\n"


_SECTIONS = {
    "relations": ("tID", "tName"),
    "attributes": ("aID", "aName", "aType", "tID"),
    "primary_keys": ("tID", "keyAttrs"),
    "foreign_keys": ("fromAttr", "toAttr"),
    "domain_constraints": ("attr", "kind"),
}


def schema_from_dict(doc: Any) -> Schema:
    if not isinstance(doc, dict):
        raise SchemaFormatError("malformed schema document: expected an object")
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise SchemaFormatError(f"malformed schema document: unknown keys {sorted(unknown)}")
    rows: dict[str, list[dict[str, Any]]] = {}
    for section, fields in _SECTIONS.items():
        items = doc.get(section, [])
        if not isinstance(items, list):
            raise SchemaFormatError(f"malformed schema document: {section} must be a list")
        for i, item in enumerate(items):
            if not isinstance(item, dict) or any(f not in item for f in fields):
                raise SchemaFormatError(
                    f"malformed schema document: {section}[{i}] needs fields {list(fields)}"
                )
        rows[section] = items

    try:
        relations = tuple(Relation(str(r["tID"]), str(r["tName"])) for r in rows["relations"])
    except (TypeError, ValueError) as exc:
        raise SchemaFormatError(f"malformed relation: {exc}") from exc
    attributes = []
    for a in rows["attributes"]:
        try:
            a_type = DataType(a["aType"])
        except ValueError:
            raise SchemaFormatError(f"unknown data type {a['aType']!r} on attribute {a['aID']}")
        attributes.append(Attribute(str(a["aID"]), str(a["aName"]), a_type, str(a["tID"])))
    pks = []
    for p in rows["primary_keys"]:
        if not isinstance(p["keyAttrs"], list):
            raise SchemaFormatError("malformed primary key: keyAttrs must be a list")
        pks.append(PrimaryKeyConstraint(str(p["tID"]), frozenset(map(str, p["keyAttrs"]))))
    fks = [ForeignKeyConstraint(str(f["fromAttr"]), str(f["toAttr"])) for f in rows["foreign_keys"]]
    dcs = []
    for d in rows["domain_constraints"]:
        try:
            kind = ConstraintKind(d["kind"])
        except ValueError:
            raise SchemaFormatError(f"unknown domain constraint {d['kind']!r}")
        dcs.append(DomainConstraint(str(d["attr"]), kind))

    t_ids = {r.t_id for r in relations}
    a_ids = {a.a_id for a in attributes}
    refs = [(a.t_id, t_ids, f"attribute {a.a_id}") for a in attributes]
    refs += [(p.t_id, t_ids, "primary key") for p in pks]
    refs += [(x, a_ids, "primary key") for p in pks for x in p.key_attrs]
    refs += [(x, a_ids, "foreign key") for f in fks for x in (f.from_attr, f.to_attr)]
    refs += [(d.attr, a_ids, "domain constraint") for d in dcs]
    for ref, pool, where in refs:
        if ref not in pool:
            raise SchemaFormatError(f"dangling reference {ref!r} in {where}")

    return Schema(tuple(relations), tuple(attributes), tuple(pks), tuple(fks), tuple(dcs))


def deserialize_schema(text: str) -> Schema:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaFormatError(f"malformed schema text: {exc}") from exc
    return schema_from_dict(doc)
