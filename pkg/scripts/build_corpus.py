#!/usr/bin/env python3
"""Regenerate the bundled corpus and its replay scripts.

Each sample pairs a requirement with a hand-written gold schema, and each
replay script scripts the six roles so that the deterministic tool chain
rebuilds that schema. Run from the repository root:

    python3 scripts/build_corpus.py [--check]

``--check`` runs every script through the pipeline and reports how the
generated schema scores against the gold one, without writing anything.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from schemagen.agents import run_pipeline
from schemagen.evaluation import evaluate_pair
from schemagen.llm import ScriptedBackend
from schemagen.schema import schema_from_tables, schema_to_dict, validate_schema

DATA = Path(__file__).resolve().parents[1] / "src" / "schemagen" / "data"

N, T, D, B, BOOL = "NUMERIC", "TEXT", "DATETIME", "BINARY", "BOOL"


def ent(attrs, key=None):
    body = {"Attributes": dict(attrs)}
    if key:
        body["Primary Key"] = list(key)
    return body


def rel(parts, attrs=()):
    return {
        "Participants": [
            {"Entity Set": p[0], "Cardinality": p[1], **({"Role": p[2]} if len(p) > 2 else {})}
            for p in parts
        ],
        "Relationship Attribute": dict(attrs),
    }


SAMPLES = [
    {
        "id": "edu-enrollment",
        "domain": "education",
        "requirement": (
            "A school wants to keep track of its students and the courses it offers. For each "
            "student we store an ID, full name and date of birth; for each course an ID, a title "
            "and the number of credits. Students sign up for any number of courses and receive a "
            "grade in each course they take."
        ),
        "model": {
            "Entity Set": {
                "Student": ent([("student_id", N), ("name", T), ("birth_date", D)], ["student_id"]),
                "Course": ent([("course_id", N), ("title", T), ("credits", N)], ["course_id"]),
            },
            "Relationship Set": {
                "Enrolls": rel([("Student", "MANY"), ("Course", "MANY")], [("grade", T)]),
            },
        },
        "fds": {},
        "gold": {
            "student": {"columns": [("student_id", N), ("name", T), ("birth_date", D)], "pk": ["student_id"]},
            "course": {"columns": [("course_id", N), ("title", T), ("credits", N)], "pk": ["course_id"]},
            "enrolls": {
                "columns": [("student_id", N), ("course_id", N), ("grade", T)],
                "pk": ["student_id", "course_id"],
                "fks": [("student_id", "student", "student_id"), ("course_id", "course", "course_id")],
            },
        },
    },
    {
        "id": "warehouse-tasks",
        "domain": "logistics",
        "requirement": (
            "We run several warehouses, each with a number, a name and an address. Goods are "
            "moved in as storage tasks: a task says how many units of one kind of cargo a given "
            "warehouse must hold. Every cargo kind has a cargo number and a cargo name, and a "
            "warehouse has at most one task per cargo kind."
        ),
        "model": {
            "Entity Set": {
                "Warehouse": ent(
                    [("warehouse_no", N), ("warehouse_name", T), ("address", T)], ["warehouse_no"]
                ),
                "Task": ent(
                    [("warehouse_no", N), ("cargo_no", N), ("cargo_name", T), ("quantity", N)],
                    ["warehouse_no", "cargo_no"],
                ),
            },
            "Relationship Set": {
                "Assigned": rel([("Task", "MANY"), ("Warehouse", "ONE")]),
            },
        },
        # first proposal gives the relationship its own identifier
        "rejected_model_patch": {"Assigned": {"assignment_id": N}},
        "fds": {"Task": ["warehouse_no cargo_no -> quantity", "cargo_no -> cargo_name"]},
        "gold": {
            "warehouse": {
                "columns": [("warehouse_no", N), ("warehouse_name", T), ("address", T)],
                "pk": ["warehouse_no"],
            },
            "task": {
                "columns": [("warehouse_no", N), ("cargo_no", N), ("quantity", N)],
                "pk": ["warehouse_no", "cargo_no"],
                "fks": [("warehouse_no", "warehouse", "warehouse_no"), ("cargo_no", "cargo", "cargo_no")],
            },
            "cargo": {"columns": [("cargo_no", N), ("cargo_name", T)], "pk": ["cargo_no"]},
        },
    },
    {
        "id": "shop-orders",
        "domain": "e-commerce",
        "requirement": (
            "An online shop sells products to registered customers. A customer has an ID, a name "
            "and an email address. A product has an ID, a name and a unit price. Each order is "
            "placed by one customer at a certain time and may contain several products, each with "
            "an ordered quantity."
        ),
        "model": {
            "Entity Set": {
                "Customer": ent([("customer_id", N), ("name", T), ("email", T)], ["customer_id"]),
                "Product": ent([("product_id", N), ("name", T), ("price", N)], ["product_id"]),
                "Order": ent([("order_id", N), ("placed_at", D)], ["order_id"]),
            },
            "Relationship Set": {
                "Places": rel([("Order", "MANY"), ("Customer", "ONE")]),
                "OrderLine": rel([("Order", "MANY"), ("Product", "MANY")], [("quantity", N)]),
            },
        },
        "fds": {},
        "gold": {
            "customer": {"columns": [("customer_id", N), ("name", T), ("email", T)], "pk": ["customer_id"]},
            "product": {"columns": [("product_id", N), ("name", T), ("price", N)], "pk": ["product_id"]},
            "order": {
                "columns": [("order_id", N), ("placed_at", D), ("customer_id", N)],
                "pk": ["order_id"],
                "fks": [("customer_id", "customer", "customer_id")],
            },
            "order_line": {
                "columns": [("order_id", N), ("product_id", N), ("quantity", N)],
                "pk": ["order_id", "product_id"],
                "fks": [("order_id", "order", "order_id"), ("product_id", "product", "product_id")],
            },
        },
    },
    {
        "id": "clinic-appointments",
        "domain": "healthcare",
        "requirement": (
            "A clinic books appointments between doctors and patients. Doctors have a licence "
            "number, a name and a specialty; patients have a patient number, a name and a phone "
            "number. An appointment is for one doctor and one patient at a given start time, and "
            "records whether it has been confirmed."
        ),
        "model": {
            "Entity Set": {
                "Doctor": ent([("licence_no", T), ("name", T), ("specialty", T)], ["licence_no"]),
                "Patient": ent([("patient_no", N), ("name", T), ("phone", T)], ["patient_no"]),
                "Appointment": ent(
                    [("appointment_id", N), ("starts_at", D), ("confirmed", BOOL)], ["appointment_id"]
                ),
            },
            "Relationship Set": {
                "Attends": rel([("Appointment", "MANY"), ("Doctor", "ONE")]),
                "Books": rel([("Appointment", "MANY"), ("Patient", "ONE")]),
            },
        },
        "fds": {},
        "gold": {
            "doctor": {"columns": [("licence_no", T), ("name", T), ("specialty", T)], "pk": ["licence_no"]},
            "patient": {"columns": [("patient_no", N), ("name", T), ("phone", T)], "pk": ["patient_no"]},
            "appointment": {
                "columns": [
                    ("appointment_id", N),
                    ("starts_at", D),
                    ("confirmed", BOOL),
                    ("licence_no", T),
                    ("patient_no", N),
                ],
                "pk": ["appointment_id"],
                "fks": [("licence_no", "doctor", "licence_no"), ("patient_no", "patient", "patient_no")],
            },
        },
    },
    {
        "id": "library-loans",
        "domain": "library",
        "requirement": (
            "A public library lends books to members. Books are identified by ISBN and have a "
            "title, a publication year and a publisher; each publisher has a name and a city, so "
            "the city follows from the publisher. Members have a card number and a name. A loan "
            "records which member borrowed which book on which date and when it is due."
        ),
        "model": {
            "Entity Set": {
                "Book": ent(
                    [("isbn", T), ("title", T), ("year", N), ("publisher", T), ("publisher_city", T)],
                    ["isbn"],
                ),
                "Member": ent([("card_no", N), ("name", T)], ["card_no"]),
            },
            "Relationship Set": {
                "Loan": rel(
                    [("Member", "MANY"), ("Book", "MANY")], [("loan_date", D), ("due_date", D)]
                ),
            },
        },
        "fds": {"Book": ["isbn -> title year publisher", "publisher -> publisher_city"]},
        "gold": {
            "book": {
                "columns": [("isbn", T), ("title", T), ("year", N), ("publisher", T)],
                "pk": ["isbn"],
                "fks": [("publisher", "publisher", "publisher")],
            },
            "member": {"columns": [("card_no", N), ("name", T)], "pk": ["card_no"]},
            "loan": {
                "columns": [("card_no", N), ("isbn", T), ("loan_date", D), ("due_date", D)],
                "pk": ["card_no", "isbn"],
                "fks": [("card_no", "member", "card_no"), ("isbn", "book", "isbn")],
            },
            "publisher": {"columns": [("publisher", T), ("publisher_city", T)], "pk": ["publisher"]},
        },
    },
    {
        "id": "hr-departments",
        "domain": "human resources",
        "requirement": (
            "The HR office records departments and employees. A department has a code and a name. "
            "An employee has an employee number, a name, a hire date and a salary, works in exactly "
            "one department and may report to another employee as manager."
        ),
        "model": {
            "Entity Set": {
                "Department": ent([("dept_code", T), ("dept_name", T)], ["dept_code"]),
                "Employee": ent(
                    [("emp_no", N), ("name", T), ("hire_date", D), ("salary", N)], ["emp_no"]
                ),
            },
            "Relationship Set": {
                "WorksIn": rel([("Employee", "MANY"), ("Department", "ONE")]),
                "ReportsTo": rel([("Employee", "MANY"), ("Employee", "ONE", "manager")]),
            },
        },
        "fds": {},
        "gold": {
            "department": {"columns": [("dept_code", T), ("dept_name", T)], "pk": ["dept_code"]},
            "employee": {
                "columns": [
                    ("emp_no", N),
                    ("name", T),
                    ("hire_date", D),
                    ("salary", N),
                    ("dept_code", T),
                    ("manager_emp_no", N),
                ],
                "pk": ["emp_no"],
                "fks": [("dept_code", "department", "dept_code"), ("manager_emp_no", "employee", "emp_no")],
            },
        },
    },
    {
        "id": "hotel-bookings",
        "domain": "hospitality",
        "requirement": (
            "A hotel manages rooms and guest bookings. Each room has a room number, a type and a "
            "nightly rate, and the rate is fixed per room type. Guests are registered with a guest "
            "ID, a name and a passport photo. A booking reserves one room for one guest from a "
            "check-in date to a check-out date."
        ),
        "model": {
            "Entity Set": {
                "Room": ent([("room_no", N), ("room_type", T), ("rate", N)], ["room_no"]),
                "Guest": ent([("guest_id", N), ("name", T), ("passport_photo", B)], ["guest_id"]),
                "Booking": ent([("booking_no", N), ("check_in", D), ("check_out", D)], ["booking_no"]),
            },
            "Relationship Set": {
                "Reserves": rel([("Booking", "MANY"), ("Room", "ONE")]),
                "MadeBy": rel([("Booking", "MANY"), ("Guest", "ONE")]),
            },
        },
        "fds": {"Room": ["room_type -> rate"]},
        "gold": {
            "room": {
                "columns": [("room_no", N), ("room_type", T)],
                "pk": ["room_no"],
                "fks": [("room_type", "room_type", "room_type")],
            },
            "guest": {"columns": [("guest_id", N), ("name", T), ("passport_photo", B)], "pk": ["guest_id"]},
            "booking": {
                "columns": [("booking_no", N), ("check_in", D), ("check_out", D), ("room_no", N), ("guest_id", N)],
                "pk": ["booking_no"],
                "fks": [("room_no", "room", "room_no"), ("guest_id", "guest", "guest_id")],
            },
            "room_type": {"columns": [("room_type", T), ("rate", N)], "pk": ["room_type"]},
        },
    },
    {
        "id": "blog-comments",
        "domain": "social media",
        "requirement": (
            "A blogging site has users who write posts and comment on posts. Users have a user ID, "
            "a handle and a sign-up time. A post has an ID, a title, a body and a publication "
            "time, and one author. A comment belongs to one post, is written by one user and has "
            "its own text and timestamp."
        ),
        "model": {
            "Entity Set": {
                "User": ent([("user_id", N), ("handle", T), ("joined_at", D)], ["user_id"]),
                "Post": ent([("post_id", N), ("title", T), ("body", T), ("published_at", D)], ["post_id"]),
                "Comment": ent([("comment_id", N), ("text", T), ("written_at", D)], ["comment_id"]),
            },
            "Relationship Set": {
                "Writes": rel([("Post", "MANY"), ("User", "ONE", "author")]),
                "OnPost": rel([("Comment", "MANY"), ("Post", "ONE")]),
                "Commented": rel([("Comment", "MANY"), ("User", "ONE")]),
            },
        },
        "fds": {},
        "gold": {
            "user": {"columns": [("user_id", N), ("handle", T), ("joined_at", D)], "pk": ["user_id"]},
            "post": {
                "columns": [("post_id", N), ("title", T), ("body", T), ("published_at", D), ("author_user_id", N)],
                "pk": ["post_id"],
                "fks": [("author_user_id", "user", "user_id")],
            },
            "comment": {
                "columns": [("comment_id", N), ("text", T), ("written_at", D), ("post_id", N), ("user_id", N)],
                "pk": ["comment_id"],
                "fks": [("post_id", "post", "post_id"), ("user_id", "user", "user_id")],
            },
        },
    },
    {
        "id": "airline-flights",
        "domain": "transportation",
        "requirement": (
            "An airline schedules flights between airports. Airports have a three-letter code and "
            "a city. A flight has a flight number, a departure airport, an arrival airport and a "
            "departure time. Passengers, identified by a passenger number with a name, hold a seat "
            "on a flight; a seat number is given per passenger and flight."
        ),
        "model": {
            "Entity Set": {
                "Airport": ent([("airport_code", T), ("city", T)], ["airport_code"]),
                "Flight": ent([("flight_no", T), ("departs_at", D)], ["flight_no"]),
                "Passenger": ent([("passenger_no", N), ("name", T)], ["passenger_no"]),
            },
            "Relationship Set": {
                "DepartsFrom": rel([("Flight", "MANY"), ("Airport", "ONE", "origin")]),
                "ArrivesAt": rel([("Flight", "MANY"), ("Airport", "ONE", "destination")]),
                "Seat": rel([("Passenger", "MANY"), ("Flight", "MANY")], [("seat_no", T)]),
            },
        },
        "fds": {},
        "gold": {
            "airport": {"columns": [("airport_code", T), ("city", T)], "pk": ["airport_code"]},
            "flight": {
                "columns": [
                    ("flight_no", T),
                    ("departs_at", D),
                    ("origin_airport_code", T),
                    ("destination_airport_code", T),
                ],
                "pk": ["flight_no"],
                "fks": [
                    ("origin_airport_code", "airport", "airport_code"),
                    ("destination_airport_code", "airport", "airport_code"),
                ],
            },
            "passenger": {"columns": [("passenger_no", N), ("name", T)], "pk": ["passenger_no"]},
            "seat": {
                "columns": [("passenger_no", N), ("flight_no", T), ("seat_no", T)],
                "pk": ["passenger_no", "flight_no"],
                "fks": [("passenger_no", "passenger", "passenger_no"), ("flight_no", "flight", "flight_no")],
            },
        },
    },
    {
        "id": "edu-teaching",
        "domain": "education",
        "requirement": (
            "A university records lecturers and the modules they teach. A lecturer has a staff "
            "number, a name and an office; the office determines the building. A module has a "
            "module code and a title, and each module is taught by exactly one lecturer."
        ),
        "model": {
            "Entity Set": {
                "Lecturer": ent([("staff_no", N), ("name", T), ("office", T), ("building", T)], ["staff_no"]),
                "Module": ent([("module_code", T), ("title", T)], ["module_code"]),
            },
            "Relationship Set": {
                "Teaches": rel([("Module", "MANY"), ("Lecturer", "ONE")]),
            },
        },
        "fds": {"Lecturer": ["office -> building"]},
        "gold": {
            "lecturer": {
                "columns": [("staff_no", N), ("name", T), ("office", T)],
                "pk": ["staff_no"],
                "fks": [("office", "office", "office")],
            },
            "module": {
                "columns": [("module_code", T), ("title", T), ("staff_no", N)],
                "pk": ["module_code"],
                "fks": [("staff_no", "lecturer", "staff_no")],
            },
            "office": {"columns": [("office", T), ("building", T)], "pk": ["office"]},
        },
    },
]


def _dump(doc) -> str:
    return json.dumps(doc, ensure_ascii=False)


def script_for(sample: dict) -> list[dict]:
    """Replay script: PM, nested CMD/CMR, LMD, QAE, TE."""
    rid = sample["id"]
    model = sample["model"]
    steps = [
        {"role": "PM", "body": _dump({
            "requirements_report": "Summary of the request: " + sample["requirement"],
            "next_speaker": "CMD",
        })},
    ]
    patch = sample.get("rejected_model_patch")
    if patch:
        first = json.loads(json.dumps(model))
        for rel_name, attrs in patch.items():
            first["Relationship Set"][rel_name]["Relationship Attribute"].update(attrs)
        steps.append({"role": "CMD", "body": _dump({"conceptual_model": first, "next_speaker": "CMR"})})
        steps.append({"role": "CMR", "body": _dump({
            "approved": False,
            "issues": ["a relationship set carries its own identifier attribute"],
            "next_speaker": "CMD",
        })})
    steps.append({"role": "CMD", "body": _dump({"conceptual_model": model, "next_speaker": "CMR"})})
    steps.append({"role": "CMR", "body": _dump({"approved": True, "issues": [], "next_speaker": "LMD"})})
    steps.append({"role": "LMD", "body": _dump({
        "functional_dependencies": sample["fds"],
        "next_speaker": "QAE",
    })})
    steps.append({"role": "QAE", "body": _dump({
        "test_cases": [
            {"operation": f"case {i} for {rid}", "tables": []} for i in range(1, 11)
        ],
        "next_speaker": "TE",
    })})
    steps.append({"role": "TE", "body": _dump({
        "verdict": "All ten cases are supported. TERMINAL",
        "failures": [],
    })})
    return steps


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true", help="score replays against gold; write nothing")
    args = ap.parse_args()

    rows, ok = [], True
    for sample in SAMPLES:
        gold = schema_from_tables(sample["gold"])
        problems = validate_schema(gold).messages()
        if problems:
            print(f"{sample['id']}: invalid gold schema: {problems}", file=sys.stderr)
            return 1
        script = script_for(sample)
        result = run_pipeline(sample["requirement"], ScriptedBackend.from_doc(script))
        scores = evaluate_pair(gold, result.schema) if result.schema else None
        perfect = scores is not None and all(v == 1 for v in scores.as_dict().values())
        ok &= result.converged and perfect
        print(f"{sample['id']:22s} {result.status:13s} rounds={result.rounds:2d} "
              f"{'exact' if perfect else scores}")
        rows.append({
            "id": sample["id"],
            "domain": sample["domain"],
            "requirement": sample["requirement"],
            "schema": schema_to_dict(gold),
        })
        if not args.check:
            (DATA / "scripts").mkdir(parents=True, exist_ok=True)
            (DATA / "scripts" / f"{sample['id']}.json").write_text(
                json.dumps({"responses": script}, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
            )
    if not args.check:
        with open(DATA / "corpus.jsonl", "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
