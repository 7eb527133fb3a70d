"""Conceptual (ER) models: parsing, rule checks, and lowering to a logical schema.

The lowering is deterministic:

* every entity set becomes a table keyed by its key hint, by the first
  candidate key its FDs imply, or by a surrogate ``<name>_id`` column;
* many-to-many and n-ary relationships become junction tables keyed by the
  participants' keys;
* one-to-many relationships add a foreign key (and the relationship's own
  attributes) to the table on the MANY side;
* one-to-one relationships add the foreign key to the participant whose name
  sorts first.

:func:`normalize_logical` then splits any table that is not in 3NF.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping

from . import fd as fdx
from .fd import FD, FDSet
from .schema import DataType, Schema, SchemaBuilder, id_sort_key


class Mark(str, Enum):
    ONE = "ONE"
    MANY = "MANY"


class MappingCardinality(str, Enum):
    ONE_TO_ONE = "ONE_TO_ONE"
    ONE_TO_MANY = "ONE_TO_MANY"
    MANY_TO_ONE = "MANY_TO_ONE"
    MANY_TO_MANY = "MANY_TO_MANY"


class ERFormatError(ValueError):
    pass


class MappingError(ValueError):
    """The model cannot be lowered as given."""


class InvalidConceptualDesign(MappingError):
    """A key cannot be established; the conceptual designer has to revise the model."""

    def __str__(self) -> str:
        return "invalid conceptual design: " + super().__str__()


@dataclass(frozen=True)
class ERAttribute:
    name: str
    a_type: DataType = DataType.TEXT


@dataclass(frozen=True)
class EntitySet:
    name: str
    attributes: tuple[ERAttribute, ...] = ()
    key_hint: tuple[str, ...] | None = None
    fds: tuple[FD, ...] = ()

    def attribute_names(self) -> list[str]:
        return [a.name for a in self.attributes]


@dataclass(frozen=True)
class Participant:
    entity: str
    cardinality: str | None = None
    role: str | None = None

    @property
    def mark(self) -> Mark | None:
        if self.cardinality is None:
            return None
        try:
            return Mark(self.cardinality.strip().upper())
        except ValueError:
            return None


@dataclass(frozen=True)
class RelationshipSet:
    name: str
    participants: tuple[Participant, ...]
    attributes: tuple[ERAttribute, ...] = ()
    fds: tuple[FD, ...] = ()

    @property
    def mapping_cardinality(self) -> MappingCardinality | None:
        """Defined for binary relationships whose marks are both valid."""
        if len(self.participants) != 2:
            return None
        left, right = (p.mark for p in self.participants)
        if left is None or right is None:
            return None
        return {
            (Mark.ONE, Mark.ONE): MappingCardinality.ONE_TO_ONE,
            (Mark.ONE, Mark.MANY): MappingCardinality.ONE_TO_MANY,
            (Mark.MANY, Mark.ONE): MappingCardinality.MANY_TO_ONE,
            (Mark.MANY, Mark.MANY): MappingCardinality.MANY_TO_MANY,
        }[(left, right)]


@dataclass(frozen=True)
class ConceptualModel:
    entity_sets: tuple[EntitySet, ...] = ()
    relationship_sets: tuple[RelationshipSet, ...] = ()

    def entity(self, name: str) -> EntitySet | None:
        for e in self.entity_sets:
            if e.name == name:
                return e
        return None

    def with_fds(self, fds: Mapping[str, Iterable[FD]]) -> ConceptualModel:
        """Copy with extra FDs attached to the named entity/relationship sets."""
        extra = {k: tuple(v) for k, v in fds.items()}
        return ConceptualModel(
            tuple(
                EntitySet(e.name, e.attributes, e.key_hint, e.fds + extra.get(e.name, ()))
                for e in self.entity_sets
            ),
            tuple(
                RelationshipSet(r.name, r.participants, r.attributes, r.fds + extra.get(r.name, ()))
                for r in self.relationship_sets
            ),
        )


# -- text form ----------------------------------------------------------------

_TYPE_ALIASES = {
    "NUMERIC": DataType.NUMERIC, "NUMBER": DataType.NUMERIC, "INT": DataType.NUMERIC,
    "INTEGER": DataType.NUMERIC, "BIGINT": DataType.NUMERIC, "SMALLINT": DataType.NUMERIC,
    "TINYINT": DataType.NUMERIC, "FLOAT": DataType.NUMERIC, "DOUBLE": DataType.NUMERIC,
    "REAL": DataType.NUMERIC, "DECIMAL": DataType.NUMERIC,
    "TEXT": DataType.TEXT, "STRING": DataType.TEXT, "VARCHAR": DataType.TEXT,
    "CHAR": DataType.TEXT,
    "DATETIME": DataType.DATETIME, "DATE": DataType.DATETIME, "TIME": DataType.DATETIME,
    "TIMESTAMP": DataType.DATETIME,
    "BINARY": DataType.BINARY, "BLOB": DataType.BINARY, "BYTES": DataType.BINARY,
    "BOOL": DataType.BOOL, "BOOLEAN": DataType.BOOL,
}


def coerce_type(raw: Any) -> DataType:
    """Map a free-form type name onto the five-type vocabulary."""
    if raw is None or raw == "":
        return DataType.TEXT
    base = re.sub(r"\(.*\)$", "", str(raw).strip()).upper()
    try:
        return _TYPE_ALIASES[base]
    except KeyError:
        raise ERFormatError(f"unknown data type {raw!r}") from None


def _norm_key(k: str) -> str:
    return re.sub(r"[\s_\-]", "", k).casefold()


def _get(d: Mapping[str, Any], *names: str, default: Any = None) -> Any:
    wanted = {_norm_key(n) for n in names}
    for k, v in d.items():
        if _norm_key(str(k)) in wanted:
            return v
    return default


def _parse_attributes(raw: Any, where: str) -> tuple[ERAttribute, ...]:
    if raw is None:
        return ()
    if isinstance(raw, Mapping):
        return tuple(ERAttribute(str(k), coerce_type(v)) for k, v in raw.items())
    if isinstance(raw, list):
        out = []
        for item in raw:
            if isinstance(item, str):
                out.append(ERAttribute(item))
            elif isinstance(item, Mapping):
                name = _get(item, "name", "attribute")
                if not name:
                    raise ERFormatError(f"{where}: attribute without a name")
                out.append(ERAttribute(str(name), coerce_type(_get(item, "type", "data type"))))
            else:
                raise ERFormatError(f"{where}: unreadable attribute {item!r}")
        return tuple(out)
    raise ERFormatError(f"{where}: attributes must be an object or a list")


def _parse_fds(raw: Any, where: str) -> tuple[FD, ...]:
    if not raw:
        return ()
    out = []
    for item in raw:
        try:
            if isinstance(item, str):
                out.append(FD.parse(item))
            elif isinstance(item, Mapping):
                lhs, rhs = _get(item, "lhs", "left", "determinant"), _get(item, "rhs", "right", "dependent")
                lhs = [lhs] if isinstance(lhs, str) else lhs
                rhs = [rhs] if isinstance(rhs, str) else rhs
                out.append(FD(frozenset(lhs or ()), frozenset(rhs or ())))
            else:
                raise ERFormatError(f"{where}: unreadable dependency {item!r}")
        except fdx.FDError as exc:
            raise ERFormatError(f"{where}: {exc}") from None
    return tuple(out)


def _named_items(raw: Any, where: str) -> list[tuple[str, Mapping[str, Any]]]:
    if raw is None:
        return []
    if isinstance(raw, Mapping):
        items = []
        for k, v in raw.items():
            if not isinstance(v, Mapping):
                raise ERFormatError(f"{where} {k!r}: expected an object")
            items.append((str(k), v))
        return items
    if isinstance(raw, list):
        items = []
        for v in raw:
            if not isinstance(v, Mapping) or not _get(v, "name"):
                raise ERFormatError(f"{where}: list entries need a 'name'")
            items.append((str(_get(v, "name")), v))
        return items
    raise ERFormatError(f"{where}: expected an object or a list")


def _parse_participants(raw: Any, where: str) -> tuple[Participant, ...]:
    if isinstance(raw, Mapping):
        return tuple(
            Participant(str(k), None if v is None else str(v)) for k, v in raw.items()
        )
    if isinstance(raw, list):
        out = []
        for item in raw:
            if isinstance(item, str):
                out.append(Participant(item))
            elif isinstance(item, Mapping):
                entity = _get(item, "entity set", "entity")
                if not entity:
                    raise ERFormatError(f"{where}: participant without an entity set")
                card = _get(item, "cardinality", "mark")
                role = _get(item, "role")
                out.append(
                    Participant(
                        str(entity),
                        None if card is None else str(card),
                        None if role is None else str(role),
                    )
                )
            else:
                raise ERFormatError(f"{where}: unreadable participant {item!r}")
        return tuple(out)
    raise ERFormatError(f"{where}: participants must be an object or a list")


def model_from_dict(doc: Mapping[str, Any]) -> ConceptualModel:
    """Read the ``{"Entity Set": ..., "Relationship Set": ...}`` form.

    The document may be wrapped in an ``"output"`` object, as agent answers
    usually are. Type names outside the five-type vocabulary are coerced where
    an obvious alias exists (``INTEGER`` -> NUMERIC).
    """
    if not isinstance(doc, Mapping):
        raise ERFormatError("conceptual model must be an object")
    inner = _get(doc, "output")
    if isinstance(inner, Mapping):
        doc = inner
    entities_raw = _get(doc, "Entity Set", "entity sets", "entities")
    rels_raw = _get(doc, "Relationship Set", "relationship sets", "relationships")
    if entities_raw is None and rels_raw is None:
        raise ERFormatError("no 'Entity Set' or 'Relationship Set' section")

    entities = []
    for name, body in _named_items(entities_raw, "entity set"):
        where = f"entity set {name!r}"
        hint = _get(body, "Primary Key", "key", "key hint")
        if isinstance(hint, str):
            hint = [hint]
        entities.append(
            EntitySet(
                name,
                _parse_attributes(_get(body, "Attributes", "Entity Attribute"), where),
                tuple(str(h) for h in hint) if hint else None,
                _parse_fds(_get(body, "Functional Dependencies", "fds"), where),
            )
        )
    rels = []
    for name, body in _named_items(rels_raw, "relationship set"):
        where = f"relationship set {name!r}"
        rels.append(
            RelationshipSet(
                name,
                _parse_participants(_get(body, "Participants", "entity sets", default=[]), where),
                _parse_attributes(
                    _get(body, "Relationship Attribute", "Relationship Attributes", "Attributes"),
                    where,
                ),
                _parse_fds(_get(body, "Functional Dependencies", "fds"), where),
            )
        )
    return ConceptualModel(tuple(entities), tuple(rels))


def _fd_dicts(fds: Iterable[FD]) -> list[dict[str, list[str]]]:
    return [{"lhs": sorted(f.lhs), "rhs": sorted(f.rhs)} for f in fds]


def model_to_dict(m: ConceptualModel) -> dict[str, Any]:
    entities: dict[str, Any] = {}
    for e in m.entity_sets:
        body: dict[str, Any] = {"Attributes": {a.name: a.a_type.value for a in e.attributes}}
        if e.key_hint:
            body["Primary Key"] = list(e.key_hint)
        if e.fds:
            body["Functional Dependencies"] = _fd_dicts(e.fds)
        entities[e.name] = body
    rels: dict[str, Any] = {}
    for r in m.relationship_sets:
        parts = []
        for p in r.participants:
            item = {"Entity Set": p.entity, "Cardinality": p.cardinality}
            if p.role:
                item["Role"] = p.role
            parts.append(item)
        body = {
            "Participants": parts,
            "Relationship Attribute": {a.name: a.a_type.value for a in r.attributes},
        }
        if r.fds:
            body["Functional Dependencies"] = _fd_dicts(r.fds)
        rels[r.name] = body
    return {"Entity Set": entities, "Relationship Set": rels}


def model_to_text(m: ConceptualModel) -> str:
    return json.dumps(model_to_dict(m), indent=2, ensure_ascii=False)


# -- review -------------------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    severity: str
    rule: int
    location: str
    message: str
    suggestion: str

    def __str__(self) -> str:
        return f"[{self.severity}] rule {self.rule} at {self.location}: {self.message} ({self.suggestion})"


def is_identifier_like(name: str) -> bool:
    """True for ``id``, ``ID``, ``enrollment_id``, ``EnrollmentID``, ``userId``.

    The ``id`` suffix must start a word (underscore, space, hyphen or an
    upper-case ``I``), so ``paid`` and ``valid`` are not flagged.
    """
    folded = re.sub(r"[\s_\-]", "", name).casefold()
    if folded == "id":
        return True
    if not folded.endswith("id") or len(name) < 3:
        return False
    stem, tail = name[:-2], name[-2:]
    return tail in ("ID", "Id") or stem.endswith(("_", " ", "-"))


def review_conceptual_model(m: ConceptualModel) -> list[Finding]:
    """Deterministic reviewer checks; an empty list means the model passes.

    Rules: (1) relationship attributes must not be identifiers; (2) every
    participant names an existing entity set; (3) every participant carries a
    ONE/MANY mark; (4) every entity set has attributes. Rules 5 and 6 cover
    structural slips (too few participants, duplicate names).
    """
    findings: list[Finding] = []
    names = [e.name for e in m.entity_sets]
    for e in m.entity_sets:
        if names.count(e.name) > 1 and names.index(e.name) == m.entity_sets.index(e):
            findings.append(Finding(
                "error", 6, f"entity set {e.name}", "entity set declared more than once",
                "merge the duplicate declarations",
            ))
        if not e.attributes:
            findings.append(Finding(
                "error", 4, f"entity set {e.name}", "entity set has no attributes",
                "list the properties recorded for this entity",
            ))
        attr_names = e.attribute_names()
        for a in sorted({a for a in attr_names if attr_names.count(a) > 1}):
            findings.append(Finding(
                "error", 6, f"entity set {e.name}", f"attribute {a!r} declared more than once",
                "keep one declaration per attribute",
            ))

    known = set(names)
    for r in m.relationship_sets:
        loc = f"relationship set {r.name}"
        for a in r.attributes:
            if is_identifier_like(a.name):
                findings.append(Finding(
                    "error", 1, f"{loc}.{a.name}",
                    "relationship attributes should not contain identifiers",
                    "drop the identifier; the participants' keys identify the relationship",
                ))
        if len(r.participants) < 2:
            findings.append(Finding(
                "error", 5, loc, "relationship needs at least two participants",
                "name every entity set taking part in the relationship",
            ))
        for p in r.participants:
            if p.entity not in known:
                findings.append(Finding(
                    "error", 2, f"{loc} -> {p.entity}",
                    f"participant {p.entity!r} is not a declared entity set",
                    "declare the entity set or fix the participant name",
                ))
            if p.mark is None:
                shown = "missing" if p.cardinality is None else repr(p.cardinality)
                findings.append(Finding(
                    "error", 3, f"{loc} -> {p.entity}",
                    f"cardinality mark {shown} is not ONE or MANY",
                    "mark each participant as ONE or MANY",
                ))
    return findings


# -- ER -> logical ------------------------------------------------------------


def mangle(name: str) -> str:
    """Identifier form: ASCII, lower-case, words joined by underscores."""
    ascii_ = unicodedata.normalize("NFKD", name).encode("ascii", "ignore").decode()
    ascii_ = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", "_", ascii_)
    out = re.sub(r"[^0-9a-zA-Z]+", "_", ascii_).strip("_").lower()
    return out or "x"


@dataclass
class _Table:
    name: str
    columns: list[tuple[str, DataType]] = field(default_factory=list)
    pk: list[str] = field(default_factory=list)
    fks: list[tuple[str, str, str]] = field(default_factory=list)
    fds: list[FD] = field(default_factory=list)

    def has(self, col: str) -> bool:
        return any(c == col for c, _ in self.columns)

    def type_of(self, col: str) -> DataType:
        for c, t in self.columns:
            if c == col:
                return t
        raise KeyError(col)

    def add(self, col: str, a_type: DataType) -> None:
        self.columns.append((col, a_type))

    def free_name(self, *candidates: str) -> str:
        for c in candidates:
            if not self.has(c):
                return c
        base, n = candidates[-1], 2
        while self.has(f"{base}_{n}"):
            n += 1
        return f"{base}_{n}"


@dataclass(frozen=True)
class EntityKey:
    columns: tuple[str, ...]
    surrogate: bool = False


@dataclass
class LogicalDesign:
    """A schema plus, per table ID, the FDs over that table's column names."""

    schema: Schema
    table_fds: dict[str, FDSet]


def _mangled_attrs(attrs: Iterable[ERAttribute], where: str) -> list[tuple[str, DataType]]:
    out: list[tuple[str, DataType]] = []
    for a in attrs:
        col = mangle(a.name)
        if any(c == col for c, _ in out):
            raise MappingError(f"{where}: attributes collide as column {col!r}")
        out.append((col, a.a_type))
    return out


def _mangled_fds(fds: Iterable[FD]) -> list[FD]:
    return [FD({mangle(a) for a in f.lhs}, {mangle(a) for a in f.rhs}) for f in fds]


def entity_keys(m: ConceptualModel) -> dict[str, EntityKey]:
    """Key identification for every entity set (column names are mangled)."""
    keys: dict[str, EntityKey] = {}
    for e in m.entity_sets:
        table = mangle(e.name)
        cols = [c for c, _ in _mangled_attrs(e.attributes, f"entity set {e.name}")]
        fds = _mangled_fds(e.fds)
        try:
            f = FDSet(frozenset(cols), tuple(fds))
        except fdx.FDError as exc:
            raise InvalidConceptualDesign(f"entity set {e.name}: {exc}") from None
        if e.key_hint:
            hint = [mangle(h) for h in e.key_hint]
            missing = [h for h in hint if h not in cols]
            if missing:
                raise InvalidConceptualDesign(
                    f"entity set {e.name}: key {missing} is not among its attributes"
                )
            rest = frozenset(cols) - frozenset(hint)
            if rest:
                f = FDSet(f.universe, f.fds + (FD(frozenset(hint), rest),))
            if frozenset(hint) not in fdx.candidate_keys(None, f):
                raise InvalidConceptualDesign(
                    f"entity set {e.name}: declared key {hint} is not minimal under its dependencies"
                )
            keys[e.name] = EntityKey(tuple(c for c in cols if c in hint))
        elif fds:
            key = fdx.candidate_keys(None, f)[0]
            keys[e.name] = EntityKey(tuple(c for c in cols if c in key))
        elif f"{table}_id" in cols:
            keys[e.name] = EntityKey((f"{table}_id",))
        else:
            keys[e.name] = EntityKey((f"{table}_id",), surrogate=True)
    return keys


def _kind(r: RelationshipSet) -> str:
    """``junction``, ``fold`` (binary, one side ONE) or an error."""
    marks = [p.mark for p in r.participants]
    if len(r.participants) < 2:
        raise MappingError(f"relationship {r.name}: needs at least two participants")
    if any(mk is None for mk in marks):
        if len(marks) > 2:
            raise MappingError(f"relationship {r.name}: n-ary relationship with missing cardinalities")
        raise MappingError(f"relationship {r.name}: missing or invalid cardinality marks")
    if len(marks) > 2 or r.mapping_cardinality is MappingCardinality.MANY_TO_MANY:
        return "junction"
    return "fold"


def _fold_sides(r: RelationshipSet) -> tuple[Participant, Participant]:
    """(host, referenced): the host table receives the foreign key."""
    a, b = r.participants
    card = r.mapping_cardinality
    if card is MappingCardinality.ONE_TO_MANY:
        return b, a
    if card is MappingCardinality.MANY_TO_ONE:
        return a, b
    return (a, b) if mangle(a.entity) <= mangle(b.entity) else (b, a)


def relationship_keys(
    m: ConceptualModel, ekeys: Mapping[str, EntityKey] | None = None
) -> dict[str, tuple[str, ...]]:
    """Composite keys of the junction tables, checked against their FDs."""
    ekeys = entity_keys(m) if ekeys is None else ekeys
    out: dict[str, tuple[str, ...]] = {}
    for r in m.relationship_sets:
        for p in r.participants:
            if p.entity not in ekeys:
                raise MappingError(f"relationship {r.name}: unknown participant {p.entity!r}")
        if _kind(r) != "junction":
            continue
        table = _junction_table(m, r, ekeys)
        f = FDSet(frozenset(c for c, _ in table.columns), tuple(table.fds))
        if frozenset(table.pk) not in fdx.candidate_keys(None, f):
            raise InvalidConceptualDesign(
                f"relationship {r.name}: participant keys {table.pk} do not form a minimal key; "
                "check the mapping cardinality"
            )
        out[r.name] = tuple(table.pk)
    return out


def _entity_table(m: ConceptualModel, e: EntitySet, key: EntityKey) -> _Table:
    t = _Table(mangle(e.name))
    if key.surrogate:
        t.add(key.columns[0], DataType.NUMERIC)
    t.columns.extend(_mangled_attrs(e.attributes, f"entity set {e.name}"))
    t.pk = list(key.columns)
    rest = [c for c, _ in t.columns if c not in key.columns]
    if rest:
        t.fds.append(FD(frozenset(key.columns), frozenset(rest)))
    t.fds.extend(_mangled_fds(e.fds))
    return t


def _key_columns(m: ConceptualModel, entity: str, ekeys: Mapping[str, EntityKey]) -> list[tuple[str, DataType]]:
    e = m.entity(entity)
    assert e is not None
    key = ekeys[entity]
    types = dict(_mangled_attrs(e.attributes, f"entity set {e.name}"))
    return [(c, types.get(c, DataType.NUMERIC)) for c in key.columns]


def _junction_table(m: ConceptualModel, r: RelationshipSet, ekeys: Mapping[str, EntityKey]) -> _Table:
    t = _Table(mangle(r.name))
    rel = mangle(r.name)
    for p in r.participants:
        target = mangle(p.entity)
        for col, a_type in _key_columns(m, p.entity, ekeys):
            if p.role:
                name = t.free_name(f"{mangle(p.role)}_{col}")
            else:
                name = t.free_name(col, f"{rel}_{col}")
            t.add(name, a_type)
            t.pk.append(name)
            t.fks.append((name, target, col))
    for col, a_type in _mangled_attrs(r.attributes, f"relationship set {r.name}"):
        t.add(t.free_name(col, f"{rel}_{col}"), a_type)
    rest = [c for c, _ in t.columns if c not in t.pk]
    if rest:
        t.fds.append(FD(frozenset(t.pk), frozenset(rest)))
    t.fds.extend(_mangled_fds(r.fds))
    return t


def _to_design(tables: list[_Table]) -> LogicalDesign:
    b = SchemaBuilder()
    ids: dict[str, str] = {}
    fds: dict[str, FDSet] = {}
    for t in tables:
        if t.name in ids:
            raise MappingError(f"two tables would be named {t.name!r}")
        tid = b.add_table(t.name)
        ids[t.name] = tid
        for col, a_type in t.columns:
            b.add_attribute(tid, col, a_type)
        b.set_primary_key(tid, [b.column(tid, c) for c in t.pk])
        try:
            fds[tid] = FDSet(frozenset(c for c, _ in t.columns), tuple(t.fds))
        except fdx.FDError as exc:
            raise MappingError(f"table {t.name}: {exc}") from None
    for t in tables:
        tid = ids[t.name]
        for col, target, target_col in t.fks:
            b.add_foreign_key(b.column(tid, col), b.column(ids[target], target_col))
    return LogicalDesign(b.build(), fds)


def map_to_logical(m: ConceptualModel) -> LogicalDesign:
    """Lower a reviewed conceptual model to a logical schema with per-table FDs."""
    errors = [f for f in review_conceptual_model(m) if f.severity == "error"]
    if errors:
        raise MappingError("model has review errors: " + "; ".join(str(f) for f in errors))
    ekeys = entity_keys(m)
    relationship_keys(m, ekeys)

    tables = {e.name: _entity_table(m, e, ekeys[e.name]) for e in m.entity_sets}
    ordered = list(tables.values())
    for r in m.relationship_sets:
        if _kind(r) == "junction":
            ordered.append(_junction_table(m, r, ekeys))
            continue
        host_p, ref_p = _fold_sides(r)
        host = tables[host_p.entity]
        rel = mangle(r.name)
        added: list[str] = []
        for col, a_type in _key_columns(m, ref_p.entity, ekeys):
            reuse = (
                host_p.entity != ref_p.entity
                and not ref_p.role
                and host.has(col)
                and host.type_of(col) == a_type
            )
            if reuse:
                # the designer already listed the referencing column
                name = col
            elif ref_p.role:
                name = host.free_name(f"{mangle(ref_p.role)}_{col}")
                host.add(name, a_type)
            else:
                name = host.free_name(col, f"{rel}_{col}")
                host.add(name, a_type)
            added.append(name)
            host.fks.append((name, mangle(ref_p.entity), col))
        for col, a_type in _mangled_attrs(r.attributes, f"relationship set {r.name}"):
            name = host.free_name(col, f"{rel}_{col}")
            host.add(name, a_type)
            added.append(name)
        new = frozenset(added) - frozenset(host.pk)
        if new:
            host.fds.append(FD(frozenset(host.pk), new))
        host.fds.extend(_mangled_fds(r.fds))
    return _to_design(ordered)


# -- normalization ------------------------------------------------------------

_KEY_SUFFIXES = ("_id", "_no", "_code", "_number", "_num", "_key")


def _fragment_name(table: str, key: Iterable[str], taken: set[str]) -> str:
    stems = []
    for col in sorted(key):
        for suffix in _KEY_SUFFIXES:
            if col.endswith(suffix) and len(col) > len(suffix):
                col = col[: -len(suffix)]
                break
        stems.append(col)
    stem = "_".join(stems)
    for cand in (stem, f"{table}_{stem}"):
        if cand not in taken:
            return cand
    n = 2
    while f"{table}_{stem}_{n}" in taken:
        n += 1
    return f"{table}_{stem}_{n}"


def _max_index(ids: Iterable[str]) -> int:
    best = 0
    for i in ids:
        _, n, _ = id_sort_key(i)
        best = max(best, n)
    return best


def normalize_logical(s: Schema, table_fds: Mapping[str, FDSet] | None = None) -> LogicalDesign:
    """Replace every table that is not in 3NF by its synthesized fragments.

    The fragment holding the declared primary key keeps the table's ID, name
    and attribute IDs. Split-off fragments become new tables with fresh IDs,
    key columns first, referenced by a foreign key from every fragment that
    contains their key. Constraints declared on a column that left the main
    fragment move with it.

    Raises :class:`InvalidConceptualDesign` when a declared primary key is
    not a candidate key under the table's dependencies.
    """
    table_fds = dict(table_fds or {})
    plans: dict[str, tuple[FDSet, fdx.Decomposition]] = {}
    out_fds: dict[str, FDSet] = {}
    for r in s.relations:
        cols = frozenset(a.a_name for a in s.attributes_of(r.t_id))
        pk = s.primary_key_names(r.t_id)
        given = table_fds.get(r.t_id, FDSet(cols))
        try:
            f = FDSet(cols, given.fds)
        except fdx.FDError as exc:
            raise MappingError(f"table {r.t_name}: {exc}") from None
        if pk and cols - pk:
            f = FDSet(cols, f.fds + (FD(pk, cols - pk),))
        if pk and pk not in fdx.candidate_keys(None, f):
            raise InvalidConceptualDesign(
                f"table {r.t_name} declares key "
                f"{{{fdx.fmt_set(pk)}}} but its dependencies make a smaller key"
            )
        if fdx.is_3nf(None, f):
            out_fds[r.t_id] = f
        else:
            plans[r.t_id] = (f, fdx.synthesize_3nf(None, f, preferred_key=pk or None))
    if not plans:
        return LogicalDesign(s, out_fds)

    b = SchemaBuilder(
        first_table=_max_index(r.t_id for r in s.relations) + 1,
        first_attr=_max_index(a.a_id for a in s.attributes) + 1,
    )
    taken = {r.t_name for r in s.relations}
    moved: dict[str, str] = {}
    for r in s.relations:
        if r.t_id not in plans:
            b.add_table(r.t_name, t_id=r.t_id)
            for a in s.attributes_of(r.t_id):
                b.add_attribute(r.t_id, a.a_name, a.a_type, a_id=a.a_id)
            pk = s.primary_key(r.t_id)
            if pk is not None:
                b.set_primary_key(r.t_id, pk.key_attrs)
            continue

        f, d = plans[r.t_id]
        pk = s.primary_key_names(r.t_id)
        by_name = {a.a_name: a for a in s.attributes_of(r.t_id)}
        frags = list(d.fragments)
        main_i = next(
            i for i, fr in enumerate(frags)
            if (pk <= fr.attrs if pk else fdx.is_superkey(fr.attrs, f))
        )
        order = [main_i] + [i for i in range(len(frags)) if i != main_i]
        frag_ids: dict[int, str] = {}
        frag_pk: dict[int, frozenset[str]] = {}
        main_cols = {by_name[c].a_id for c in frags[main_i].attrs}
        for i in order:
            fr = frags[i]
            if i == main_i:
                tid = b.add_table(r.t_name, t_id=r.t_id)
                key = pk or fr.keys[0]
            else:
                key = fr.keys[0]
                name = _fragment_name(r.t_name, key, taken)
                taken.add(name)
                tid = b.add_table(name)
            frag_ids[i], frag_pk[i] = tid, key
            lead = frozenset() if i == main_i else key
            cols = sorted(fr.attrs, key=lambda c: (c not in lead, id_sort_key(by_name[c].a_id)))
            for col in cols:
                orig = by_name[col]
                if i == main_i:
                    b.add_attribute(tid, col, orig.a_type, a_id=orig.a_id)
                    continue
                new_id = b.add_attribute(tid, col, orig.a_type)
                if orig.a_id not in main_cols:
                    # constraints on a moved column follow its first new home
                    moved.setdefault(orig.a_id, new_id)
            b.set_primary_key(tid, [b.column(tid, c) for c in key])
            out_fds[tid] = fr.fds
        for i in order:
            for j in order:
                if i != j and frag_pk[j] <= frags[i].attrs and frag_pk[i] != frag_pk[j]:
                    for col in sorted(frag_pk[j]):
                        b.add_foreign_key(b.column(frag_ids[i], col), b.column(frag_ids[j], col))

    for fk in s.foreign_keys:
        b.add_foreign_key(moved.get(fk.from_attr, fk.from_attr), moved.get(fk.to_attr, fk.to_attr))
    for dc in s.domain_constraints:
        b.add_constraint(moved.get(dc.attr, dc.attr), dc.kind)
    return LogicalDesign(b.build(), out_fds)
