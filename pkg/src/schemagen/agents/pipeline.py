"""Turn-taking group chat over a shared message pool.

Default order is PM, CMD, CMR, LMD, QAE, TE. An agent may redirect the
conversation by naming one of its candidate successors in ``next_speaker``;
anything else falls back to the forward order. CMD and CMR talk in a nested
sub-group whose messages only they can see; once the reviewer approves, the
model is broadcast to everyone. Each agent turn is one round.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Mapping

from ..er import ConceptualModel, Finding, model_from_dict, model_to_dict, model_to_text, review_conceptual_model
from ..fd import FD
from ..llm import Backend, BackendRequest, RunConfig, StructuredOutputError, request_structured
from ..schema import Schema, serialize_schema, validate_schema
from .roles import END, FORWARD_ORDER, PROFILES, USER, Role, RoleProfile, parse_role
from .tools import ToolOutcome, lmd_tool_calls, parse_fd_mapping

log = logging.getLogger(__name__)

TERMINAL = "TERMINAL"


class Visibility(str, Enum):
    GLOBAL = "GLOBAL"
    NESTED = "NESTED"


NESTED_MEMBERS = (Role.CMD, Role.CMR)


@dataclass(frozen=True)
class Message:
    sender: str
    body: str
    visibility: Visibility = Visibility.GLOBAL
    round: int = 0
    next_speaker_hint: Role | None = None
    structured_payload: Any = None
    kind: str = "turn"  # turn | input | summary | tool


@dataclass
class ChatState:
    pool: list[Message] = field(default_factory=list)
    contexts: dict[Role, list[int]] = field(default_factory=lambda: {r: [] for r in Role})
    round: int = 0
    terminated: bool = False
    resolved_next: dict[int, str] = field(default_factory=dict)

    def post(self, msg: Message) -> int:
        idx = len(self.pool)
        self.pool.append(msg)
        audience = Role if msg.visibility is Visibility.GLOBAL else NESTED_MEMBERS
        for r in audience:
            self.contexts[r].append(idx)
        return idx

    def visible_to(self, role: Role) -> list[Message]:
        return [self.pool[i] for i in self.contexts[role]]

    def transcript(self) -> list[dict[str, Any]]:
        return [
            {
                "round": m.round,
                "sender": m.sender,
                "visibility": m.visibility.value,
                "body": m.body,
                "next_speaker": self.resolved_next.get(i),
                "kind": m.kind,
            }
            for i, m in enumerate(self.pool)
        ]


def forward_successor(role: Role) -> Role | str:
    i = FORWARD_ORDER.index(role)
    return FORWARD_ORDER[i + 1] if i + 1 < len(FORWARD_ORDER) else END


def select_next_speaker(
    current: Role, msg: Message, profiles: Mapping[Role, RoleProfile] = PROFILES
) -> Role | str:
    """The hinted role if the sender may hand over to it, else the forward successor."""
    hint = msg.next_speaker_hint
    if hint is not None:
        if hint in profiles[current].candidate_next_speakers:
            return hint
        log.info("%s hinted %s, which is not one of its successors; using forward order", current, hint)
    return forward_successor(current)


@dataclass
class PipelineResult:
    status: str  # converged | non_converged | failed
    schema: Schema | None
    transcript: list[dict[str, Any]]
    rounds: int
    diagnostics: list[str] = field(default_factory=list)
    reports: dict[str, Any] = field(default_factory=dict)
    prompts: list[tuple[str, int, str]] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def received_feedback(self) -> bool:
        return self.reports.get("feedback_events", 0) > 0

    def transcript_text(self) -> str:
        return json.dumps(self.transcript, indent=2, ensure_ascii=False) + "\n"

    def write(self, out_dir: str | Path, stem: str) -> dict[str, Path]:
        """Write ``<stem>.transcript.json``, ``<stem>.status.json`` and, if any, ``<stem>.schema.json``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"transcript": out / f"{stem}.transcript.json", "status": out / f"{stem}.status.json"}
        paths["transcript"].write_text(self.transcript_text(), encoding="utf-8")
        status = {
            "status": self.status,
            "rounds": self.rounds,
            "diagnostics": self.diagnostics,
            "feedback_events": self.reports.get("feedback_events", 0),
            "nested_iterations": self.reports.get("nested_iterations", 0),
        }
        paths["status"].write_text(json.dumps(status, indent=2) + "\n", encoding="utf-8")
        if self.schema is not None:
            paths["schema"] = out / f"{stem}.schema.json"
            paths["schema"].write_text(serialize_schema(self.schema), encoding="utf-8")
        return paths


class _RoundCap(Exception):
    pass


def _as_object(doc: Any) -> dict[str, Any]:
    if not isinstance(doc, dict):
        raise ValueError("expected a JSON object")
    return doc


def _cmd_payload(doc: Any) -> tuple[dict[str, Any], ConceptualModel]:
    doc = _as_object(doc)
    return doc, model_from_dict(doc.get("conceptual_model", doc))


def _cmr_payload(doc: Any) -> dict[str, Any]:
    doc = _as_object(doc)
    if not isinstance(doc.get("approved"), bool):
        raise ValueError("'approved' must be true or false")
    return doc


def _lmd_payload(doc: Any) -> tuple[dict[str, Any], dict[str, tuple[FD, ...]]]:
    doc = _as_object(doc)
    return doc, parse_fd_mapping(doc.get("functional_dependencies"))


def _payload_of(parsed: Any) -> dict[str, Any]:
    return parsed[0] if isinstance(parsed, tuple) else parsed


class Pipeline:
    """One run of the chat; not reusable and not shared between threads."""

    def __init__(
        self,
        requirement: str,
        backend: Backend,
        config: RunConfig | None = None,
        profiles: Mapping[Role, RoleProfile] = PROFILES,
    ) -> None:
        if not requirement or not requirement.strip():
            raise ValueError("requirement must be non-empty")
        self.requirement = requirement.strip()
        self.backend = backend
        self.config = config or RunConfig()
        self.profiles = profiles
        self.state = ChatState()
        self.prompts: list[tuple[str, int, str]] = []
        self.report: str | None = None
        self.model: ConceptualModel | None = None
        self.schema: Schema | None = None
        self.findings: list[Finding] = []
        self.test_cases: Any = None
        self.feedback_events = 0
        self.nested_iterations = 0
        self.nested_exhausted = False
        self.tool_calls: list[str] = []

    # -- prompt assembly --------------------------------------------------

    def _input_block(self, role: Role) -> str:
        parts = [f"User requirement:\n{self.requirement}"]
        if self.report is not None and role is not Role.PM:
            parts.append(f"Requirements report:\n{self.report}")
        return "\n\n".join(parts)

    def _knowledge_block(self, role: Role) -> str:
        lines = [
            f"[round {m.round}] {m.sender}: {m.body}"
            for m in self.state.visible_to(role)
            if m.kind != "input" and not (m.sender == Role.PM.value and m.kind == "turn")
        ]
        return "\n\n".join(lines) if lines else "(nothing yet)"

    def _turn(
        self,
        role: Role,
        validate: Callable[[Any], Any],
        visibility: Visibility = Visibility.GLOBAL,
        preface: str = "",
    ) -> tuple[Any, Message, int]:
        if self.state.round >= self.config.round_cap:
            raise _RoundCap()
        self.state.round += 1
        prompt = self.profiles[role].render(self._input_block(role), self._knowledge_block(role))
        if preface:
            prompt = preface + "\n\n" + prompt
        req = BackendRequest(
            role.value,
            self.state.round,
            prompt,
            temperature=self.config.temperature,
            top_p=self.config.top_p,
        )

        def record(r: BackendRequest, _body: str) -> None:
            self.prompts.append((r.role, r.round, r.prompt))

        parsed, body = request_structured(self.backend, req, validate, self.config.retry_cap, record)
        payload = _payload_of(parsed)
        raw_hint = payload.get("next_speaker")
        hint = parse_role(raw_hint)
        if raw_hint is not None and hint is None:
            log.info("%s named unknown next speaker %r", role, raw_hint)
        msg = Message(role.value, body, visibility, self.state.round, hint, payload)
        return parsed, msg, self.state.post(msg)

    def _system(self, sender: Role, body: str, kind: str) -> int:
        return self.state.post(Message(sender.value, body, Visibility.GLOBAL, self.state.round, kind=kind))

    # -- phases -----------------------------------------------------------

    def _pm(self) -> Role | str:
        parsed, msg, idx = self._turn(Role.PM, _as_object)
        report = parsed.get("requirements_report")
        self.report = report if isinstance(report, str) and report.strip() else msg.body
        return self._route(Role.PM, msg, idx)

    def nested_group_run(self) -> Role | str:
        """CMD proposes and CMR reviews until approval or the nested cap.

        Returns the next speaker: LMD after the group closes, or PM when the
        designer asks for clarification.
        """
        approved = False
        for _ in range(self.config.nested_cap):
            self.nested_iterations += 1
            parsed, msg, idx = self._turn(Role.CMD, _cmd_payload, Visibility.NESTED)
            self.model = parsed[1]
            if msg.next_speaker_hint is Role.PM:
                self.state.resolved_next[idx] = Role.PM.value
                return Role.PM
            self.state.resolved_next[idx] = Role.CMR.value

            self.findings = review_conceptual_model(self.model)
            errors = [f for f in self.findings if f.severity == "error"]
            preface = ""
            if self.findings:
                preface = "Automatic checks on the latest model found:\n" + "\n".join(
                    f"- {f}" for f in self.findings
                )
            payload, msg, idx = self._turn(Role.CMR, _cmr_payload, Visibility.NESTED, preface)
            approved = payload["approved"] and not errors
            if approved:
                self.state.resolved_next[idx] = Role.LMD.value
                break
            self.feedback_events += 1
            self.state.resolved_next[idx] = Role.CMD.value
        else:
            self.nested_exhausted = True
            log.warning("nested group hit its cap of %d without approval", self.config.nested_cap)

        status = "approved" if approved else "not approved within the review limit; best so far"
        self._system(Role.CMR, f"Conceptual model ({status}):\n{model_to_text(self.model)}", "summary")
        return Role.LMD

    def _lmd(self) -> Role | str:
        (payload, fds), msg, idx = self._turn(Role.LMD, _lmd_payload)
        if self.model is None:
            outcome = ToolOutcome(error="no conceptual model is available yet")
        else:
            outcome = lmd_tool_calls(self.model, fds)
        self.tool_calls.extend(outcome.calls)
        if not outcome.ok:
            self.feedback_events += 1
            self._system(
                Role.LMD,
                f"Tool error: {outcome.error}. "
                "The conceptual designer must revise the model.",
                "tool",
            )
            self.state.resolved_next[idx] = Role.CMD.value
            return Role.CMD
        self.schema = outcome.schema
        self._system(Role.LMD, "Logical schema:\n" + serialize_schema(self.schema).strip(), "tool")
        return self._route(Role.LMD, msg, idx)

    def _qae(self) -> Role | str:
        payload, msg, idx = self._turn(Role.QAE, _as_object)
        self.test_cases = payload.get("test_cases")
        return self._route(Role.QAE, msg, idx)

    def _te(self) -> Role | str:
        _, msg, idx = self._turn(Role.TE, _as_object)
        if TERMINAL in msg.body:
            self.state.terminated = True
            self.state.resolved_next[idx] = END
            return END
        self.feedback_events += 1
        return self._route(Role.TE, msg, idx)

    def _route(self, role: Role, msg: Message, idx: int) -> Role | str:
        nxt = select_next_speaker(role, msg, self.profiles)
        self.state.resolved_next[idx] = nxt.value if isinstance(nxt, Role) else nxt
        return nxt

    # -- driver -----------------------------------------------------------

    def run(self) -> PipelineResult:
        self.state.post(Message(USER, self.requirement, kind="input"))
        phases: dict[Role, Callable[[], Role | str]] = {
            Role.PM: self._pm,
            Role.CMD: self.nested_group_run,
            Role.CMR: self.nested_group_run,
            Role.LMD: self._lmd,
            Role.QAE: self._qae,
            Role.TE: self._te,
        }
        current: Role | str = Role.PM
        diagnostics: list[str] = []
        failed = False
        try:
            while current != END:
                current = phases[current]()
        except _RoundCap:
            diagnostics.append(f"round cap of {self.config.round_cap} reached without {TERMINAL}")
        except StructuredOutputError as exc:
            failed = True
            diagnostics.append(str(exc))

        if failed:
            status = "failed"
        elif self.state.terminated and self.schema is not None and validate_schema(self.schema).ok:
            status = "converged"
        else:
            status = "non_converged"
            if current == END and not self.state.terminated:
                diagnostics.append("conversation ended without a TERMINAL verdict")
            elif self.state.terminated and self.schema is None:
                diagnostics.append("test executor terminated before any schema was produced")
        if self.nested_exhausted:
            diagnostics.append("conceptual review limit reached without approval")

        return PipelineResult(
            status=status,
            schema=self.schema,
            transcript=self.state.transcript(),
            rounds=self.state.round,
            diagnostics=diagnostics,
            reports={
                "requirements_report": self.report,
                "conceptual_model": model_to_dict(self.model) if self.model else None,
                "review_findings": [str(f) for f in self.findings],
                "test_cases": self.test_cases,
                "tool_calls": self.tool_calls,
                "nested_iterations": self.nested_iterations,
                "feedback_events": self.feedback_events,
            },
            prompts=self.prompts,
        )


def run_pipeline(requirement: str, backend: Backend, config: RunConfig | None = None) -> PipelineResult:
    return Pipeline(requirement, backend, config).run()
