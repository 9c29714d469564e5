"""Shared container for compiled instances."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional


@dataclass(frozen=True)
class ReductionInstance:
    """A planning instance emitted by a compiler, plus the claim it certifies.

    ``plan`` is set when the question is plan evaluation; ``z`` and
    ``plan_class`` when it is plan existence.
    """

    construction: str
    domain: object
    theta: Fraction
    claim: str
    plan: object = None
    z: Optional[int] = None
    plan_class: Optional[str] = None
    interpretation: Optional[str] = None
    info: dict = field(default_factory=dict)
