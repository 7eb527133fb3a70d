"""Fuzzy name matching between predicted and gold schemas, and the greedy alignment built on it."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from typing import Iterable, Protocol

from ..schema import Schema

log = logging.getLogger(__name__)


class ProviderUnavailable(RuntimeError):
    """Raised by a provider that cannot answer; the matcher treats it as an abstention."""


class SynonymProvider(Protocol):
    def synonyms(self, word: str) -> Iterable[str]: ...


class SimilarityProvider(Protocol):
    def similarity(self, a: str, b: str) -> float: ...


def normalize_name(name: str) -> str:
    return name.casefold().replace("_", "").replace(" ", "")


# Small offline lexicon of schema vocabulary; each group is mutually synonymous.
DEFAULT_SYNONYM_GROUPS: tuple[tuple[str, ...], ...] = (
    ("customer", "client"),
    ("employee", "staff", "worker"),
    ("product", "item", "goods", "merchandise"),
    ("order", "purchase"),
    ("supplier", "vendor"),
    ("teacher", "instructor", "lecturer", "professor"),
    ("student", "pupil"),
    ("course", "class", "subject"),
    ("phone", "telephone", "tel", "phonenumber"),
    ("email", "mail", "emailaddress"),
    ("address", "addr", "location"),
    ("quantity", "qty", "count"),
    ("price", "cost", "fee"),
    ("description", "desc", "details"),
    ("birthdate", "dob", "dateofbirth", "birthday"),
    ("doctor", "physician"),
    ("author", "writer"),
    ("user", "member"),
)


class LexiconSynonyms:
    def __init__(self, groups: Iterable[Iterable[str]] = DEFAULT_SYNONYM_GROUPS) -> None:
        self._index: dict[str, set[str]] = {}
        for group in groups:
            words = {normalize_name(w) for w in group}
            for w in words:
                self._index.setdefault(w, set()).update(words)

    def synonyms(self, word: str) -> set[str]:
        w = normalize_name(word)
        return self._index.get(w, set()) | {w}


class TrigramCosine:
    """Cosine similarity of padded character-trigram count vectors."""

    def __init__(self, n: int = 3) -> None:
        self.n = n

    def _grams(self, s: str) -> Counter[str]:
        padded = f"#{s}#"
        if len(padded) < self.n:
            return Counter([padded])
        return Counter(padded[i : i + self.n] for i in range(len(padded) - self.n + 1))

    def similarity(self, a: str, b: str) -> float:
        ga, gb = self._grams(a), self._grams(b)
        dot = sum(c * gb[g] for g, c in ga.items())
        norm = math.sqrt(sum(c * c for c in ga.values())) * math.sqrt(sum(c * c for c in gb.values()))
        return dot / norm if norm else 0.0


@dataclass
class MatcherConfig:
    delta0: float = 0.6
    delta1: float = 0.75
    synonym_provider: SynonymProvider | None = field(default_factory=LexiconSynonyms)
    similarity_provider: SimilarityProvider | None = field(default_factory=TrigramCosine)

    def __post_init__(self) -> None:
        for name in ("delta0", "delta1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def string_only(cls, delta1: float = 0.75) -> MatcherConfig:
        return cls(delta1=delta1, synonym_provider=None, similarity_provider=None)


def longest_common_substring(a: str, b: str) -> int:
    if not a or not b:
        return 0
    return SequenceMatcher(None, a, b, autojunk=False).find_longest_match(0, len(a), 0, len(b)).size


def lcs_ratio(a: str, b: str) -> float:
    """Longest common substring length over the longer string's length."""
    longest = max(len(a), len(b))
    return longest_common_substring(a, b) / longest if longest else 1.0


def _synonym_hit(provider: SynonymProvider, pred: str, gold: str) -> bool:
    try:
        return gold in {normalize_name(w) for w in provider.synonyms(pred)}
    except ProviderUnavailable as exc:
        log.debug("synonym provider abstained: %s", exc)
        return False


def _similarity_hit(provider: SimilarityProvider, pred: str, gold: str, threshold: float) -> bool:
    try:
        return provider.similarity(pred, gold) >= threshold
    except ProviderUnavailable as exc:
        log.debug("similarity provider abstained: %s", exc)
        return False


def names_match(predicted: str, gold: str, cfg: MatcherConfig | None = None) -> bool:
    cfg = cfg or MatcherConfig()
    p, g = normalize_name(predicted), normalize_name(gold)
    if cfg.synonym_provider is not None and _synonym_hit(cfg.synonym_provider, p, g):
        return True
    if cfg.similarity_provider is not None and _similarity_hit(cfg.similarity_provider, p, g, cfg.delta0):
        return True
    return lcs_ratio(p, g) >= cfg.delta1


@dataclass
class Alignment:
    """Injective gold-to-predicted maps for tables and, per matched table, attributes."""

    table_map: dict[str, str] = field(default_factory=dict)
    attr_maps: dict[str, dict[str, str]] = field(default_factory=dict)

    def attr_map(self) -> dict[str, str]:
        merged: dict[str, str] = {}
        for m in self.attr_maps.values():
            merged.update(m)
        return merged


def _greedy(gold: list[tuple[str, str]], pred: list[tuple[str, str]], cfg: MatcherConfig) -> dict[str, str]:
    claimed: set[str] = set()
    out: dict[str, str] = {}
    for g_id, g_name in gold:
        for p_id, p_name in pred:
            if p_id not in claimed and names_match(p_name, g_name, cfg):
                out[g_id] = p_id
                claimed.add(p_id)
                break
    return out


def align(gold: Schema, pred: Schema, cfg: MatcherConfig | None = None) -> Alignment:
    """Greedy one-to-one alignment in serialized (ID) order, gold outer and predicted inner."""
    cfg = cfg or MatcherConfig()
    tables = _greedy(
        [(r.t_id, r.t_name) for r in gold.relations],
        [(r.t_id, r.t_name) for r in pred.relations],
        cfg,
    )
    attrs = {
        g: _greedy(
            [(a.a_id, a.a_name) for a in gold.attributes_of(g)],
            [(a.a_id, a.a_name) for a in pred.attributes_of(p)],
            cfg,
        )
        for g, p in tables.items()
    }
    return Alignment(tables, attrs)
