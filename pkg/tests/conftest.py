from __future__ import annotations

import json
import random

import pytest
from hypothesis import strategies as st

from schemagen.fd import FD, FDSet
from schemagen.schema import schema_from_tables

LETTERS = "ABCDEFG"


@st.composite
def fd_sets(draw, max_attrs: int = 7, max_fds: int = 7):
    n = draw(st.integers(1, max_attrs))
    universe = LETTERS[:n]
    attrs = st.sets(st.sampled_from(universe), min_size=1, max_size=min(3, n))
    fds = draw(st.lists(st.tuples(attrs, attrs), max_size=max_fds))
    return FDSet(frozenset(universe), tuple(FD(frozenset(l), frozenset(r)) for l, r in fds))


def random_fd_set(rng: random.Random, max_attrs: int = 7, max_fds: int = 7) -> FDSet:
    """Seeded generator used where an exact case count is required."""
    n = rng.randint(1, max_attrs)
    universe = LETTERS[:n]

    def pick() -> frozenset[str]:
        return frozenset(rng.sample(universe, rng.randint(1, min(3, n))))

    fds = tuple(FD(pick(), pick()) for _ in range(rng.randint(0, max_fds)))
    return FDSet(frozenset(universe), fds)


@pytest.fixture
def users_orders():
    return schema_from_tables({
        "users": {"columns": [("user_id", "NUMERIC"), ("name", "TEXT")], "pk": ["user_id"]},
        "orders": {
            "columns": [("order_id", "NUMERIC"), ("user_id", "NUMERIC"), ("placed", "DATETIME")],
            "pk": ["order_id"],
            "fks": [("user_id", "users", "user_id")],
        },
    })


STUDENT_COURSE = {
    "Entity Set": {
        "Student": {"Attributes": {"student_id": "NUMERIC", "name": "TEXT"}, "Primary Key": ["student_id"]},
        "Course": {"Attributes": {"course_id": "NUMERIC", "title": "TEXT"}, "Primary Key": ["course_id"]},
    },
    "Relationship Set": {
        "Enrolls": {
            "Participants": [
                {"Entity Set": "Student", "Cardinality": "MANY"},
                {"Entity Set": "Course", "Cardinality": "MANY"},
            ],
            "Relationship Attribute": {"grade": "TEXT"},
        }
    },
}


@pytest.fixture
def student_course_doc():
    return json.loads(json.dumps(STUDENT_COURSE))


# -- scripted chats --------------------------------------------------------------

REQUIREMENT = "Students enrol in courses and receive a grade for each course they take."
PM_REPORT = "Report: students and courses in a many-to-many enrolment carrying a grade."


def reply(role, body, round=None):
    entry = {"role": role, "body": body if isinstance(body, str) else json.dumps(body)}
    if round is not None:
        entry["round"] = round
    return entry


def student_course_chat(cmr=None, te=None, qae=None, cmd=None, lmd=None):
    """Replay entries for a clean student/course run; each override replaces a role's queue."""
    model = {"conceptual_model": STUDENT_COURSE, "next_speaker": "CMR"}
    defaults = {
        "PM": [{"requirements_report": PM_REPORT, "next_speaker": "CMD"}],
        "CMD": cmd or [model],
        "CMR": cmr or [{"approved": True, "issues": [], "next_speaker": "LMD"}],
        "LMD": lmd or [{"functional_dependencies": {}, "next_speaker": "QAE"}],
        "QAE": qae or [{"test_cases": [{"operation": "enrol student 1 in course 2"}], "next_speaker": "TE"}],
        "TE": te or [{"verdict": "TERMINAL", "failures": []}],
    }
    return [reply(role, body) for role, bodies in defaults.items() for body in bodies]


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
