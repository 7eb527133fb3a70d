"""Requirement/schema pair corpus stored as JSON lines."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .schema import Schema, SchemaFormatError, schema_from_dict, validate_schema


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusSample:
    id: str
    requirement: str
    gold_schema: Schema
    domain: str = ""


def _data_dir() -> Path:
    return Path(str(resources.files("schemagen") / "data"))


def bundled_corpus_path() -> Path:
    return _data_dir() / "corpus.jsonl"


def bundled_scripts_dir() -> Path:
    return _data_dir() / "scripts"


def parse_corpus(text: str, source: str = "<corpus>") -> list[CorpusSample]:
    """One JSON object per line with ``id``, ``requirement``, ``schema`` and optional ``domain``."""
    samples: list[CorpusSample] = []
    seen: set[str] = set()
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{source}:{n}"
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{where}: not JSON ({exc.msg})") from None
        if not isinstance(row, dict):
            raise CorpusError(f"{where}: expected an object")
        missing = [k for k in ("id", "requirement", "schema") if k not in row]
        if missing:
            raise CorpusError(f"{where}: missing {', '.join(missing)}")
        sid = str(row["id"])
        if sid in seen:
            raise CorpusError(f"{where}: duplicate id {sid!r}")
        seen.add(sid)
        try:
            gold = schema_from_dict(row["schema"])
        except SchemaFormatError as exc:
            raise CorpusError(f"{where}: {exc}") from None
        problems = validate_schema(gold).messages()
        if problems:
            raise CorpusError(f"{where}: gold schema invalid: {'; '.join(problems)}")
        samples.append(CorpusSample(sid, str(row["requirement"]), gold, str(row.get("domain", ""))))
    return samples


def load_corpus(path: str | Path | None = None) -> list[CorpusSample]:
    """Load ``path``, or the bundled corpus when ``path`` is None."""
    p = bundled_corpus_path() if path is None else Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {p}: {exc}") from exc
    return parse_corpus(text, str(p))
