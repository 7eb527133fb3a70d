"""Deterministic tools the logical designer calls."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from ..er import (
    ConceptualModel,
    MappingError,
    entity_keys,
    map_to_logical,
    normalize_logical,
    relationship_keys,
)
from ..fd import FD, FDError
from ..schema import Schema, validate_schema

log = logging.getLogger(__name__)


@dataclass
class ToolOutcome:
    schema: Schema | None = None
    error: str | None = None
    calls: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.schema is not None


def parse_fd_mapping(raw: Any) -> dict[str, tuple[FD, ...]]:
    """``{"SetName": ["a b -> c", {"lhs": [...], "rhs": [...]}]}`` to parsed FDs."""
    if raw is None:
        return {}
    if not isinstance(raw, Mapping):
        raise ValueError("functional_dependencies must be an object keyed by set name")
    out: dict[str, tuple[FD, ...]] = {}
    for name, items in raw.items():
        if not isinstance(items, list):
            raise ValueError(f"dependencies of {name!r} must be a list")
        fds = []
        for item in items:
            if isinstance(item, str):
                fds.append(FD.parse(item))
            elif isinstance(item, Mapping) and "lhs" in item and "rhs" in item:
                fds.append(FD(frozenset(item["lhs"]), frozenset(item["rhs"])))
            else:
                raise ValueError(f"cannot read dependency {item!r} of {name!r}")
        out[str(name)] = tuple(fds)
    return out


def lmd_tool_calls(model: ConceptualModel, fds: Mapping[str, Iterable[FD]] | None = None) -> ToolOutcome:
    """Key identification for entity and relationship sets, then mapping plus 3NF decomposition.

    Any key or mapping problem is returned as an error for the conceptual
    designer instead of being raised.
    """
    out = ToolOutcome()
    unknown = sorted(
        set(fds or {})
        - {e.name for e in model.entity_sets}
        - {r.name for r in model.relationship_sets}
    )
    if unknown:
        out.error = "dependencies given for unknown sets: " + ", ".join(unknown)
        return out
    m = model.with_fds(fds or {})
    try:
        out.calls.append("entity_keys")
        ekeys = entity_keys(m)
        out.calls.append("relationship_keys")
        relationship_keys(m, ekeys)
        out.calls.append("normalize_logical")
        design = map_to_logical(m)
        normalized = normalize_logical(design.schema, design.table_fds)
    except (MappingError, FDError) as exc:
        out.error = str(exc)
        return out
    result = validate_schema(normalized.schema)
    if not result.ok:  # defensive: the tool chain should only build valid schemas
        out.error = "generated schema is invalid: " + "; ".join(result.messages())
        return out
    out.schema = normalized.schema
    return out
