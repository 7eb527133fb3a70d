from ..llm import parse_structured, request_structured as extract_structured
from .pipeline import (
    TERMINAL,
    ChatState,
    Message,
    Pipeline,
    PipelineResult,
    Visibility,
    forward_successor,
    run_pipeline,
    select_next_speaker,
)
from .roles import END, FORWARD_ORDER, PROFILES, USER, Role, RoleProfile, parse_role
from .tools import ToolOutcome, lmd_tool_calls, parse_fd_mapping

__all__ = [
    "END",
    "FORWARD_ORDER",
    "PROFILES",
    "TERMINAL",
    "USER",
    "ChatState",
    "Message",
    "Pipeline",
    "PipelineResult",
    "Role",
    "RoleProfile",
    "ToolOutcome",
    "Visibility",
    "extract_structured",
    "forward_successor",
    "lmd_tool_calls",
    "parse_fd_mapping",
    "parse_role",
    "parse_structured",
    "run_pipeline",
    "select_next_speaker",
]
