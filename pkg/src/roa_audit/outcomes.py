"""Run-completion and failure-classification types.

Shared by audit reports (which embed a completion status) and the portal
harness (which produces them). A run is *verified* successful only when the
session's own success flag holds, no failure report was raised, and every
form stage was exposed; a failure report always overrides the internal flag.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from .trace import EvidenceRef

__all__ = ["FailureCategory", "FailureReport", "CompletionStatus"]


class FailureCategory(str, Enum):
    """The six ways a workflow run can fail."""

    AUTOMATION_INSTABILITY = "AutomationInstability"
    AGENT_INSTABILITY = "AgentInstability"
    SECURITY_BARRIER = "SecurityBarrier"
    CONTENT_FORMAT_LIMITATION = "ContentFormatLimitation"
    NAVIGATION_FAILURE = "NavigationFailure"
    INTERACTION_FAILURE = "InteractionFailure"


@dataclass(frozen=True)
class FailureReport:
    category: FailureCategory
    evidence: tuple[Union[EvidenceRef, int], ...] = ()
    narrative: str = ""


@dataclass(frozen=True)
class CompletionStatus:
    internal_success: bool
    verified_success: bool
    reason: str = ""

    @property
    def failed(self) -> bool:
        return not self.verified_success
