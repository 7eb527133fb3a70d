"""Functional-dependency algebra and 3NF synthesis.

Attributes are plain strings; attribute sets are frozensets. Every operation is
a pure function. Results that are collections of sets come back sorted (by the
sorted tuple of member names) so output is reproducible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

AttrSet = frozenset[str]


class FDError(ValueError):
    pass


def attrset(attrs: Iterable[str] | str) -> AttrSet:
    if isinstance(attrs, str):
        return frozenset(attrs.split())
    return frozenset(attrs)


def set_key(attrs: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(attrs))


def fmt_set(attrs: Iterable[str]) -> str:
    return " ".join(set_key(attrs))


@dataclass(frozen=True)
class FD:
    lhs: AttrSet
    rhs: AttrSet

    def __post_init__(self) -> None:
        object.__setattr__(self, "lhs", frozenset(self.lhs))
        object.__setattr__(self, "rhs", frozenset(self.rhs))
        if not self.lhs:
            raise FDError("functional dependency needs a non-empty left side")
        if not self.rhs:
            raise FDError("functional dependency needs a non-empty right side")

    @classmethod
    def parse(cls, text: str) -> FD:
        """``"A B -> C"`` (commas also accepted as separators)."""
        if "->" not in text:
            raise FDError(f"not a functional dependency: {text!r}")
        left, right = text.split("->", 1)
        return cls(_split_names(left), _split_names(right))

    @property
    def attributes(self) -> AttrSet:
        return self.lhs | self.rhs

    def is_trivial(self) -> bool:
        return self.rhs <= self.lhs

    def __str__(self) -> str:
        return f"{fmt_set(self.lhs)} -> {fmt_set(self.rhs)}"


def _split_names(text: str) -> AttrSet:
    return frozenset(t for t in re.split(r"[\s,]+", text.strip()) if t)


@dataclass(frozen=True)
class FDSet:
    universe: AttrSet
    fds: tuple[FD, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "universe", frozenset(self.universe))
        object.__setattr__(self, "fds", tuple(self.fds))
        for fd in self.fds:
            extra = fd.attributes - self.universe
            if extra:
                raise FDError(f"{fd} uses attributes outside the universe: {fmt_set(extra)}")

    @classmethod
    def of(cls, universe: Iterable[str] | str, *fds: str | FD) -> FDSet:
        """Shorthand: ``FDSet.of("A B C", "A -> B", "B -> C")``."""
        return cls(attrset(universe), tuple(f if isinstance(f, FD) else FD.parse(f) for f in fds))

    def __iter__(self):
        return iter(self.fds)

    def __len__(self) -> int:
        return len(self.fds)

    def with_universe(self, universe: Iterable[str]) -> FDSet:
        return FDSet(frozenset(universe), self.fds)

    def __str__(self) -> str:
        return "{" + ", ".join(str(f) for f in self.fds) + "}"


def _rebase(universe: Iterable[str] | None, f: FDSet) -> FDSet:
    if universe is None:
        return f
    u = frozenset(universe)
    return f if u == f.universe else FDSet(u, f.fds)


# -- closure & implication ----------------------------------------------------


def closure(attrs: Iterable[str], f: FDSet) -> AttrSet:
    """Attribute closure by the linear counter algorithm.

    Each FD keeps a count of left-side attributes not yet reached; it fires
    when the count drops to zero.
    """
    start = frozenset(attrs)
    outside = start - f.universe
    if outside:
        raise FDError(f"attributes outside the universe: {fmt_set(outside)}")

    missing = [len(fd.lhs) for fd in f.fds]
    waiting: dict[str, list[int]] = {}
    for i, fd in enumerate(f.fds):
        for a in fd.lhs:
            waiting.setdefault(a, []).append(i)

    result = set(start)
    todo = list(start)
    while todo:
        a = todo.pop()
        for i in waiting.get(a, ()):
            missing[i] -= 1
            if missing[i] == 0:
                for b in f.fds[i].rhs:
                    if b not in result:
                        result.add(b)
                        todo.append(b)
    return frozenset(result)


def implies(f: FDSet, g: FD) -> bool:
    return g.rhs <= closure(g.lhs, f)


def equivalent(f: FDSet, g: FDSet) -> bool:
    """Mutual implication over the union of both universes."""
    u = f.universe | g.universe
    f, g = f.with_universe(u), g.with_universe(u)
    return all(implies(f, fd) for fd in g.fds) and all(implies(g, fd) for fd in f.fds)


def is_superkey(attrs: Iterable[str], f: FDSet) -> bool:
    return closure(attrs, f) == f.universe


# -- keys ---------------------------------------------------------------------


def candidate_keys(universe: Iterable[str] | None, f: FDSet) -> list[AttrSet]:
    """All minimal keys of ``universe`` under ``f``.

    Attributes that never appear on a right side belong to every key; the
    remaining ones are searched level by level, skipping supersets of keys
    already found.
    """
    f = _rebase(universe, f)
    u = f.universe
    if not u:
        raise FDError("candidate keys need a non-empty universe")
    on_rhs = set().union(*(fd.rhs - fd.lhs for fd in f.fds)) if f.fds else set()
    core = frozenset(u - on_rhs)
    if closure(core, f) == u:
        return [core]

    on_lhs = set().union(*(fd.lhs for fd in f.fds)) if f.fds else set()
    # attributes only ever derived, never deriving, cannot be in a minimal key
    middle = sorted((u - core) & on_lhs)
    keys: list[AttrSet] = []
    for size in range(1, len(middle) + 1):
        for combo in combinations(middle, size):
            cand = core | frozenset(combo)
            if any(k <= cand for k in keys):
                continue
            if closure(cand, f) == u:
                keys.append(cand)
    return sorted(keys, key=set_key)


def prime_attributes(universe: Iterable[str] | None, f: FDSet) -> AttrSet:
    return frozenset().union(*candidate_keys(universe, f))


# -- minimal cover ------------------------------------------------------------


def minimal_cover(f: FDSet) -> FDSet:
    """Equivalent FD set with singleton right sides and nothing removable.

    FDs are processed in input order (right sides split in sorted order), so
    ties between equally minimal covers are resolved by that order.
    """
    split: list[FD] = []
    for fd in f.fds:
        for a in sorted(fd.rhs - fd.lhs):
            g = FD(fd.lhs, {a})
            if g not in split:
                split.append(g)

    current = FDSet(f.universe, tuple(split))
    reduced: list[FD] = []
    for fd in split:
        lhs = fd.lhs
        for b in sorted(fd.lhs):
            if len(lhs) > 1 and fd.rhs <= closure(lhs - {b}, current):
                lhs = lhs - {b}
        g = FD(lhs, fd.rhs)
        if g not in reduced:
            reduced.append(g)

    kept = list(reduced)
    for fd in reduced:
        rest = FDSet(f.universe, tuple(g for g in kept if g != fd))
        if implies(rest, fd):
            kept.remove(fd)
    return FDSet(f.universe, tuple(kept))


# -- projection & normal forms ------------------------------------------------


def project(f: FDSet, attrs: Iterable[str]) -> FDSet:
    """FDs of ``f`` restricted to ``attrs``.

    Enumerates every subset X of ``attrs`` and records X -> (X+ & attrs) - X;
    exponential in ``len(attrs)``, which is fine at table scale.
    """
    target = frozenset(attrs)
    names = sorted(target)
    fds: list[FD] = []
    for size in range(1, len(names) + 1):
        for combo in combinations(names, size):
            x = frozenset(combo)
            rhs = (closure(x, f) & target) - x
            if rhs:
                fds.append(FD(x, rhs))
    return FDSet(target, tuple(fds))


@dataclass(frozen=True)
class NormalFormCheck:
    ok: bool
    violations: tuple[FD, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def is_3nf(universe: Iterable[str] | None, f: FDSet) -> NormalFormCheck:
    """3NF test over the FDs of ``f`` (taken to be a cover of the relation's FDs).

    An FD X -> A with A not in X violates 3NF unless X is a superkey or A is
    prime. Checking a cover is enough: any implied violation shows up as a
    violation of some FD in the cover.
    """
    f = _rebase(universe, f)
    prime = prime_attributes(None, f)
    bad: list[FD] = []
    for fd in f.fds:
        if closure(fd.lhs, f) == f.universe:
            continue
        for a in sorted(fd.rhs - fd.lhs):
            if a not in prime:
                bad.append(FD(fd.lhs, {a}))
    return NormalFormCheck(not bad, tuple(bad))


# -- decomposition ------------------------------------------------------------


@dataclass(frozen=True)
class Fragment:
    attrs: AttrSet
    fds: FDSet
    keys: tuple[AttrSet, ...]

    def __str__(self) -> str:
        keys = ", ".join("{" + fmt_set(k) + "}" for k in self.keys)
        return f"({fmt_set(self.attrs)}) keys: {keys}"


@dataclass(frozen=True)
class Decomposition:
    fragments: tuple[Fragment, ...]

    @property
    def attribute_sets(self) -> list[AttrSet]:
        return [fr.attrs for fr in self.fragments]

    def covers(self, universe: Iterable[str]) -> bool:
        return frozenset().union(*self.attribute_sets) == frozenset(universe)


def decompose(f: FDSet, parts: Iterable[Iterable[str]]) -> Decomposition:
    """Wrap raw attribute sets as a Decomposition with projected FDs and keys."""
    frags = []
    for p in parts:
        attrs = frozenset(p)
        proj = project(f, attrs)
        frags.append(Fragment(attrs, proj, tuple(candidate_keys(None, proj))))
    return Decomposition(tuple(frags))


def _as_sets(d: Decomposition | Iterable[Iterable[str]]) -> list[AttrSet]:
    if isinstance(d, Decomposition):
        return d.attribute_sets
    return [frozenset(p) for p in d]


def synthesize_3nf(
    universe: Iterable[str] | None,
    f: FDSet,
    preferred_key: Iterable[str] | None = None,
) -> Decomposition:
    """Dependency-preserving, lossless 3NF decomposition by synthesis.

    Steps: minimal cover; group FDs by left side; one fragment per group; add a key fragment if no fragment holds a candidate
    key; drop fragments contained in another. ``preferred_key`` (a candidate
    key) forces the kept key to be that one, so a declared primary key is
    never split across fragments.
    """
    f = _rebase(universe, f)
    u = f.universe
    if not u:
        raise FDError("cannot decompose an empty universe")
    cover = minimal_cover(f)

    # Grouping by identical left side; merging merely equivalent left sides
    # can leave a merged fragment outside 3NF.
    groups: dict[AttrSet, set[str]] = {}
    for fd in cover.fds:
        groups.setdefault(fd.lhs, set(fd.lhs)).update(fd.rhs)
    parts = [frozenset(attrs) for attrs in groups.values()]

    if preferred_key is not None:
        key = frozenset(preferred_key)
        if closure(key, f) != u:
            raise FDError(f"preferred key {{{fmt_set(key)}}} is not a key")
        if not any(key <= p for p in parts):
            parts.append(key)
    elif not any(closure(p, f) == u for p in parts):
        parts.append(candidate_keys(None, f)[0])

    kept: list[AttrSet] = []
    for i, p in enumerate(parts):
        if any(p < q for q in parts) or p in parts[:i]:
            continue
        kept.append(p)
    kept.sort(key=set_key)
    return decompose(f, kept)


def is_lossless(
    universe: Iterable[str] | None, f: FDSet, d: Decomposition | Iterable[Iterable[str]]
) -> bool:
    """Chase test: lossless iff the tableau acquires an all-distinguished row."""
    f = _rebase(universe, f)
    parts = _as_sets(d)
    cols = sorted(f.universe)
    if frozenset().union(*parts) != f.universe:
        raise FDError("decomposition does not cover the universe")

    # 0 is the distinguished symbol; row i column j starts as i*len+j+1
    width = len(cols)
    rows = [
        [0 if c in p else i * width + j + 1 for j, c in enumerate(cols)]
        for i, p in enumerate(parts)
    ]
    pos = {c: j for j, c in enumerate(cols)}
    fds = [([pos[a] for a in sorted(fd.lhs)], [pos[a] for a in sorted(fd.rhs)]) for fd in f.fds]

    changed = True
    while changed:
        changed = False
        for lhs, rhs in fds:
            buckets: dict[tuple[int, ...], list[list[int]]] = {}
            for row in rows:
                buckets.setdefault(tuple(row[j] for j in lhs), []).append(row)
            for group in buckets.values():
                if len(group) < 2:
                    continue
                for j in rhs:
                    target = min(row[j] for row in group)
                    for row in group:
                        if row[j] != target:
                            old = row[j]
                            # rename the symbol everywhere in the column
                            for other in rows:
                                if other[j] == old:
                                    other[j] = target
                            changed = True
        if any(all(v == 0 for v in row) for row in rows):
            return True
    return any(all(v == 0 for v in row) for row in rows)


def is_dependency_preserving(f: FDSet, d: Decomposition | Iterable[Iterable[str]]) -> bool:
    """Polynomial test without materialising projections.

    For each X -> Y grow Z from X using only what each fragment can see:
    Z |= closure(Z & R) & R, until stable; preserved iff Y is within Z.
    """
    parts = _as_sets(d)
    for fd in f.fds:
        z = set(fd.lhs)
        grew = True
        while grew:
            grew = False
            for p in parts:
                seen = frozenset(z) & p
                if not seen:
                    continue
                extra = (closure(seen, f) & p) - z
                if extra:
                    z |= extra
                    grew = True
        if not fd.rhs <= z:
            return False
    return True


# -- brute-force oracles ------------------------------------------------------

ORACLE_LIMIT = 10


def oracle_closure(attrs: Iterable[str], f: FDSet) -> AttrSet:
    """Naive fixpoint: sweep all FDs until nothing changes."""
    if len(f.universe) > ORACLE_LIMIT:
        raise FDError(f"oracle limited to universes of at most {ORACLE_LIMIT} attributes")
    result = set(attrs)
    if not result <= f.universe:
        raise FDError("attributes outside the universe")
    while True:
        before = len(result)
        for fd in f.fds:
            if fd.lhs <= result:
                result |= fd.rhs
        if len(result) == before:
            return frozenset(result)


def oracle_candidate_keys(universe: Iterable[str] | None, f: FDSet) -> list[AttrSet]:
    """Every subset is tested; keys are superkeys with no superkey proper subset."""
    f = _rebase(universe, f)
    names = sorted(f.universe)
    if len(names) > ORACLE_LIMIT:
        raise FDError(f"oracle limited to universes of at most {ORACLE_LIMIT} attributes")
    superkeys = [
        frozenset(c)
        for n in range(len(names) + 1)
        for c in combinations(names, n)
        if oracle_closure(c, f) == f.universe
    ]
    keys = [k for k in superkeys if not any(s < k for s in superkeys)]
    return sorted(keys, key=set_key)


# -- text format --------------------------------------------------------------


class FDParseError(FDError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_fd_problem(text: str) -> FDSet:
    """Parse ``universe: A B C`` followed by ``A -> B`` lines.

    Blank lines and ``#`` comments are ignored. The universe line must come
    before any dependency.
    """
    universe: AttrSet | None = None
    fds: list[FD] = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("universe:"):
            if universe is not None:
                raise FDParseError(n, "universe declared twice")
            universe = _split_names(line.split(":", 1)[1])
            if not universe:
                raise FDParseError(n, "empty universe")
            continue
        if universe is None:
            raise FDParseError(n, "dependency before the universe line")
        try:
            fd = FD.parse(line)
        except FDError as exc:
            raise FDParseError(n, str(exc)) from None
        unknown = fd.attributes - universe
        if unknown:
            raise FDParseError(n, f"unknown attribute {fmt_set(unknown)}")
        fds.append(fd)
    if universe is None:
        raise FDParseError(max(1, len(text.splitlines())), "missing universe line")
    return FDSet(universe, tuple(fds))


def format_fds(fds: Sequence[FD]) -> str:
    return "\n".join(str(fd) for fd in fds)
