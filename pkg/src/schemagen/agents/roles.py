"""The six chat roles: prompt templates, speaking candidates, and output examples."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Role(str, Enum):
    PM = "PM"  # product manager: turns the request into a requirements report
    CMD = "CMD"  # conceptual model designer
    CMR = "CMR"  # conceptual model reviewer
    LMD = "LMD"  # logical model designer (calls the normalization tools)
    QAE = "QAE"  # QA engineer: writes operation test cases
    TE = "TE"  # test executor: checks the schema against the cases

    def __str__(self) -> str:
        return self.value


END = "END"
USER = "USER"

FORWARD_ORDER: tuple[Role, ...] = (Role.PM, Role.CMD, Role.CMR, Role.LMD, Role.QAE, Role.TE)

# Long-form names a model may emit instead of the short codes.
ROLE_ALIASES: dict[str, Role] = {
    "productmanager": Role.PM,
    "manager": Role.PM,
    "manageragent": Role.PM,
    "productmanageragent": Role.PM,
    "conceptualdesigner": Role.CMD,
    "conceptualdesigneragent": Role.CMD,
    "conceptualmodeldesigner": Role.CMD,
    "conceptualreviewer": Role.CMR,
    "conceptualrevieweragent": Role.CMR,
    "conceptualmodelreviewer": Role.CMR,
    "logicaldesigner": Role.LMD,
    "logicaldesigneragent": Role.LMD,
    "logicalmodeldesigner": Role.LMD,
    "qaengineer": Role.QAE,
    "qaengineeragent": Role.QAE,
    "testexecutor": Role.TE,
    "testexecutoragent": Role.TE,
}


def parse_role(name: object) -> Role | None:
    if not isinstance(name, str):
        return None
    key = "".join(ch for ch in name if ch.isalnum())
    try:
        return Role(key.upper())
    except ValueError:
        return ROLE_ALIASES.get(key.casefold())


@dataclass(frozen=True)
class RoleProfile:
    role_name: Role
    prompt_template: str
    candidate_next_speakers: tuple[Role, ...]
    example: str
    tools: tuple[str, ...] = ()

    def render(self, input: str, knowledge: str) -> str:
        return self.prompt_template.format(example=self.example, input=input, knowledge=knowledge)


_COMMON_TAIL = """
## Task input
{input}

## Conversation so far
{knowledge}

## Output format
Reply with one JSON object. You may add "next_speaker" naming who should act next.
Example:
{example}"""

PM_TEMPLATE = """You act as the product manager of a database project.
Read the user's request and write a requirements report: the things the system must record,
how they relate, and the operations users will run. Do not design tables yet.
""" + _COMMON_TAIL

CMD_TEMPLATE = """You design the conceptual (entity-relationship) model.
List entity sets with typed attributes (NUMERIC, TEXT, DATETIME, BINARY or BOOL) and, where
known, a "Primary Key". List relationship sets with their participants, each marked ONE or MANY,
plus any attributes that belong to the relationship itself. Address every reviewer remark.
If the requirement is unclear, set next_speaker to PM and explain what is missing.
""" + _COMMON_TAIL

CMR_TEMPLATE = """You review the latest conceptual model from the designer.
Check that relationship sets carry no identifier attributes, that every participant is a declared
entity set with a ONE or MANY mark, that each entity set has attributes, and that the model covers
the requirement. Approve only a model with no open problems.
""" + _COMMON_TAIL

LMD_TEMPLATE = """You turn the approved conceptual model into a logical schema.
State the functional dependencies you see inside each entity set and relationship set, using
attribute names exactly as in the model. Key identification, table mapping and 3NF decomposition
are done by your tools from these dependencies.
""" + _COMMON_TAIL

QAE_TEMPLATE = """You are the QA engineer. Using the requirements report and the current schema,
write 10 test cases, each a realistic data operation (insert, update, delete or query) described
in plain language together with the tables it touches.
""" + _COMMON_TAIL

TE_TEMPLATE = """You execute the QA test cases against the current schema by walking through each one.
For each case decide whether the schema supports it. If all pass, put the word TERMINAL in your
verdict. Otherwise describe the failures and set next_speaker to the role that must fix them:
LMD for table-level problems, CMD for missing concepts, PM for requirement gaps.
""" + _COMMON_TAIL

PROFILES: dict[Role, RoleProfile] = {
    Role.PM: RoleProfile(
        Role.PM,
        PM_TEMPLATE,
        (Role.CMD, Role.LMD),
        '{"requirements_report": "Track books and members; members borrow many books ...",'
        ' "next_speaker": "CMD"}',
    ),
    Role.CMD: RoleProfile(
        Role.CMD,
        CMD_TEMPLATE,
        (Role.CMR, Role.PM),
        '{"conceptual_model": {"Entity Set": {"Book": {"Attributes": {"isbn": "TEXT",'
        ' "title": "TEXT"}, "Primary Key": ["isbn"]}}, "Relationship Set": {}},'
        ' "next_speaker": "CMR"}',
    ),
    Role.CMR: RoleProfile(
        Role.CMR,
        CMR_TEMPLATE,
        (Role.CMD, Role.LMD),
        '{"approved": false, "issues": ["Borrows has an identifier attribute loan_id"],'
        ' "next_speaker": "CMD"}',
    ),
    Role.LMD: RoleProfile(
        Role.LMD,
        LMD_TEMPLATE,
        (Role.QAE, Role.TE, Role.CMD),
        '{"functional_dependencies": {"Book": ["isbn -> title"]}, "next_speaker": "QAE"}',
        tools=("entity_keys", "relationship_keys", "normalize_logical"),
    ),
    Role.QAE: RoleProfile(
        Role.QAE,
        QAE_TEMPLATE,
        (Role.TE,),
        '{"test_cases": [{"operation": "Record that member 7 borrowed book 978-0",'
        ' "tables": ["borrows"]}]}',
    ),
    Role.TE: RoleProfile(
        Role.TE,
        TE_TEMPLATE,
        (Role.LMD, Role.CMD, Role.PM),
        '{"verdict": "TERMINAL", "failures": []}',
    ),
}
