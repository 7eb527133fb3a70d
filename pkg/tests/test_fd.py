import itertools
import random

import pytest
from hypothesis import given, settings

from schemagen.fd import (
    FD,
    FDError,
    FDParseError,
    FDSet,
    candidate_keys,
    closure,
    decompose,
    equivalent,
    implies,
    is_3nf,
    is_dependency_preserving,
    is_lossless,
    minimal_cover,
    oracle_candidate_keys,
    oracle_closure,
    parse_fd_problem,
    project,
    synthesize_3nf,
)

from .conftest import fd_sets, random_fd_set


def S(text):
    return frozenset(text)


def F(universe, *fds):
    return FDSet.of(" ".join(universe), *fds)


def subsets(attrs):
    attrs = sorted(attrs)
    for r in range(len(attrs) + 1):
        for c in itertools.combinations(attrs, r):
            yield frozenset(c)


def brute_3nf(universe, f):
    """Definition check over every implied FD X -> A, using the oracles only."""
    keys = oracle_candidate_keys(universe, f)
    prime = frozenset().union(*keys)
    universe = frozenset(universe)
    for x in subsets(universe):
        cl = oracle_closure(x, f)
        superkey = cl == universe
        for a in cl - x:
            if not superkey and a not in prime:
                return False
    return True


# -- closure / implication ---------------------------------------------------


@pytest.mark.parametrize(
    "attrs, f, expected",
    [
        ("A", F("ABC", "A -> B", "B -> C"), "ABC"),
        ("B", F("AB", "A -> B"), "B"),
        ("AD", F("ABCD", "A -> B", "B D -> C"), "ABCD"),
    ],
)
def test_closure_examples(attrs, f, expected):
    assert closure(S(attrs), f) == S(expected)
    assert oracle_closure(S(attrs), f) == S(expected)


def test_closure_outside_universe():
    with pytest.raises(FDError):
        closure({"Z"}, F("AB", "A -> B"))


@pytest.mark.parametrize(
    "f, g, expected",
    [
        (F("ABC", "A -> B", "B -> C"), "A -> C", True),
        (F("ABC", "A -> B"), "A C -> B", True),
        (F("AB", "A -> B"), "B -> A", False),
    ],
)
def test_implies(f, g, expected):
    assert implies(f, FD.parse(g)) is expected


def test_fd_sides_non_empty():
    with pytest.raises(FDError):
        FD(frozenset(), S("A"))
    with pytest.raises(FDError):
        FDSet(S("AB"), (FD(S("A"), S("Z")),))


@settings(max_examples=200, deadline=None)
@given(fd_sets())
def test_closure_laws(f):
    for x in subsets(f.universe):
        cx = closure(x, f)
        assert x <= cx
        assert closure(cx, f) == cx
        assert cx == oracle_closure(x, f)
        for a in f.universe - x:
            assert cx <= closure(x | {a}, f)


# -- keys ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "f, expected",
    [
        (F("ABC", "A -> B", "B -> C"), [S("A")]),
        (F("ABC", "A -> B", "B -> A"), [S("AC"), S("BC")]),
        (F("AB"), [S("AB")]),
    ],
)
def test_candidate_key_examples(f, expected):
    assert candidate_keys(None, f) == expected
    assert oracle_candidate_keys(None, f) == expected


def test_oracle_size_cap():
    with pytest.raises(FDError):
        oracle_candidate_keys(None, FDSet(frozenset("ABCDEFGHIJK")))


@settings(max_examples=200, deadline=None)
@given(fd_sets())
def test_keys_are_minimal_superkeys(f):
    keys = candidate_keys(None, f)
    assert keys
    for k in keys:
        assert closure(k, f) == f.universe
        for a in k:
            assert closure(k - {a}, f) != f.universe
    assert keys == oracle_candidate_keys(None, f)


# -- minimal cover -------------------------------------------------------------


@pytest.mark.parametrize(
    "f, expected",
    [
        (F("ABC", "A -> B C"), {"A -> B", "A -> C"}),
        (F("ABC", "A -> B", "B -> C", "A -> C"), {"A -> B", "B -> C"}),
        (F("ABC", "A B -> C", "A -> B"), {"A -> B", "A -> C"}),
    ],
)
def test_minimal_cover_examples(f, expected):
    assert {str(x) for x in minimal_cover(f)} == expected


@settings(max_examples=200, deadline=None)
@given(fd_sets())
def test_minimal_cover_properties(f):
    m = minimal_cover(f)
    assert equivalent(m, f)
    for i, g in enumerate(m.fds):
        assert len(g.rhs) == 1
        rest = FDSet(f.universe, m.fds[:i] + m.fds[i + 1:])
        assert not implies(rest, g), f"{g} is redundant"
        for a in g.lhs if len(g.lhs) > 1 else ():
            assert not implies(m, FD(g.lhs - {a}, g.rhs)), f"{a} extraneous in {g}"


# -- 3NF -----------------------------------------------------------------------


def test_is_3nf_examples():
    check = is_3nf(None, F("ABC", "A -> B", "B -> C"))
    assert not check and [str(v) for v in check.violations] == ["B -> C"]
    assert is_3nf(None, F("ABC", "A B -> C", "C -> A"))
    assert is_3nf(None, F("AB"))


@settings(max_examples=200, deadline=None)
@given(fd_sets(max_attrs=6))
def test_is_3nf_matches_definition(f):
    assert bool(is_3nf(None, f)) == brute_3nf(f.universe, f)


def test_synthesis_examples():
    d = synthesize_3nf(None, F("ABC", "A -> B", "B -> C"))
    assert d.attribute_sets == [S("AB"), S("BC")]
    assert [list(map(sorted, fr.keys)) for fr in d.fragments] == [[["A"]], [["B"]]]
    assert synthesize_3nf(None, F("AB", "A -> B")).attribute_sets == [S("AB")]
    single = synthesize_3nf(None, F("ABC"))
    assert single.attribute_sets == [S("ABC")] and single.fragments[0].keys == (S("ABC"),)


def test_synthesis_adds_key_fragment():
    d = synthesize_3nf(None, F("ABCD", "A -> B", "C -> D"))
    assert S("AC") in d.attribute_sets


def test_synthesis_is_deterministic():
    f = F("ABCDE", "A -> B", "B C -> D", "D -> E", "E -> C")
    first = [str(x) for x in synthesize_3nf(None, f).fragments]
    assert first == [str(x) for x in synthesize_3nf(None, f).fragments]


@settings(max_examples=200, deadline=None)
@given(fd_sets())
def test_synthesis_sound(f):
    d = synthesize_3nf(None, f)
    assert d.covers(f.universe)
    for fr in d.fragments:
        assert brute_3nf(fr.attrs, project(f, fr.attrs))
        assert is_3nf(fr.attrs, fr.fds)
    assert is_lossless(None, f, d)
    assert is_dependency_preserving(f, d)
    sets = d.attribute_sets
    assert not any(a < b for a in sets for b in sets)


# -- decomposition checks ----------------------------------------------------


@pytest.mark.parametrize(
    "f, parts, expected",
    [
        (F("ABC", "A -> B"), ["AB", "AC"], True),
        (F("ABC"), ["AB", "BC"], False),
        (F("ABC", "A -> B"), ["ABC", "B"], True),
    ],
)
def test_lossless_examples(f, parts, expected):
    assert is_lossless(None, f, [S(p) for p in parts]) is expected


def test_lossless_requires_cover():
    with pytest.raises(FDError):
        is_lossless(None, F("ABC"), [S("AB")])


def test_lossless_binary_criterion():
    """Two fragments are lossless iff their overlap determines one side."""
    rng = random.Random(7)
    for _ in range(300):
        f = random_fd_set(rng, max_attrs=6)
        u = sorted(f.universe)
        if len(u) < 2:
            continue
        r1 = frozenset(rng.sample(u, rng.randint(1, len(u))))
        r2 = (frozenset(u) - r1) | frozenset(rng.sample(u, rng.randint(0, len(u))))
        if not r2:
            continue
        common = oracle_closure(r1 & r2, f)
        expected = r1 <= common or r2 <= common
        assert is_lossless(None, f, [r1, r2]) is expected


@pytest.mark.parametrize(
    "f, parts, expected",
    [
        (F("ABC", "A -> B", "B -> C"), ["AB", "AC"], False),
        (F("ABC", "A -> B", "B -> C"), ["AB", "BC"], True),
        (F("ABC"), ["A", "BC"], True),
    ],
)
def test_dependency_preserving_examples(f, parts, expected):
    assert is_dependency_preserving(f, [S(p) for p in parts]) is expected


@settings(max_examples=150, deadline=None)
@given(fd_sets(max_attrs=6))
def test_dependency_preservation_matches_projection_oracle(f):
    rng = random.Random(len(f.fds))
    u = sorted(f.universe)
    parts = [frozenset(rng.sample(u, rng.randint(1, len(u)))) for _ in range(2)]
    parts.append(frozenset(u) - parts[0] - parts[1] or frozenset(u[:1]))
    union = FDSet(f.universe, tuple(g for p in parts for g in project(f, p).fds))
    assert is_dependency_preserving(f, parts) is equivalent(union, f)
    assert is_dependency_preserving(f, decompose(f, parts)) is equivalent(union, f)


# -- text format ---------------------------------------------------------------


def test_parse_fd_problem():
    f = parse_fd_problem("# demo\nuniverse: A B C\nA -> B\n\nB -> C  # chain\n")
    assert f.universe == S("ABC")
    assert [str(x) for x in f.fds] == ["A -> B", "B -> C"]


@pytest.mark.parametrize(
    "text, line",
    [
        ("universe: A B\nA -> Z\n", 2),
        ("A -> B\n", 1),
        ("universe: A\nuniverse: B\n", 2),
        ("universe: A B\n\nA B\n", 3),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(FDParseError) as info:
        parse_fd_problem(text)
    assert info.value.line == line
