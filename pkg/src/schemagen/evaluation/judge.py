"""Rubric scoring of a schema by a language model."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

from ..llm import Backend, BackendRequest, StructuredOutputError, request_structured
from ..schema import Schema, serialize_schema

log = logging.getLogger(__name__)

WEIGHTS = {"functional_coverage": 0.4, "redundancy_normalization": 0.3, "integrity_constraints": 0.3}

JUDGE_PROMPT = """You are reviewing a relational database schema written for the requirement below.

Requirement:
{requirement}

Schema (JSON):
{schema}

Give an integer from 1 (seriously deficient) to 10 (best practice) on each axis:
- functional_coverage: can every operation the requirement implies be served, and is there room to grow?
- redundancy_normalization: is redundant storage avoided, with every table in third normal form?
- integrity_constraints: are primary keys, foreign keys and other constraints complete and correct?

Answer with a JSON object holding exactly those three keys."""


@dataclass(frozen=True)
class JudgeScore:
    functional_coverage: int
    redundancy_normalization: int
    integrity_constraints: int

    def __post_init__(self) -> None:
        for name in WEIGHTS:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= 10:
                raise ValueError(f"{name} must be an integer in 1..10, got {v!r}")

    @property
    def overall(self) -> float:
        return sum(w * getattr(self, name) for name, w in WEIGHTS.items())


def _score(doc: Any) -> JudgeScore:
    if not isinstance(doc, dict):
        raise ValueError("expected a JSON object")
    missing = [k for k in WEIGHTS if k not in doc]
    if missing:
        raise ValueError("missing " + ", ".join(missing))
    return JudgeScore(**{k: doc[k] for k in WEIGHTS})


def judge(
    schema: Schema,
    requirement: str,
    backend: Backend,
    attempts: int = 3,
    temperature: float = 1.0,
    top_p: float = 1.0,
) -> JudgeScore | None:
    """Score ``schema``; ``None`` marks a judging failure after ``attempts`` tries."""
    prompt = JUDGE_PROMPT.format(requirement=requirement.strip(), schema=serialize_schema(schema).strip())
    req = BackendRequest("JUDGE", 1, prompt, temperature=temperature, top_p=top_p)
    try:
        score, _ = request_structured(backend, req, _score, attempts)
    except StructuredOutputError as exc:
        log.warning("judge failed: %s", exc)
        return None
    return score
