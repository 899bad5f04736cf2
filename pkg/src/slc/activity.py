"""Activity classification and variedness propagation.

Variables are partitioned into active and passive purely by the case of the
first character of their name, so activity is decidable the moment a token is
seen and no iterative dataflow analysis is ever needed.  Variedness (whether a
value may depend on active inputs) is a synthesized boolean attribute,
propagated bottom-up as a disjunction over the operands of each reduction.
"""

from __future__ import annotations

import enum
from typing import Iterable

from .errors import CompileError


class ActivityClass(enum.Enum):
    ACTIVE = "active"
    PASSIVE = "passive"


def classify_symbol(name: str) -> ActivityClass:
    """Classify an identifier: lowercase or underscore initial is active,
    uppercase initial is passive.

    Underscore-initial names count as active; they are reserved for generated
    adjoint names which are never themselves re-compiled.
    """
    first = name[0]
    if first == "_" or first.islower():
        return ActivityClass.ACTIVE
    return ActivityClass.PASSIVE


def is_active(name: str) -> bool:
    return classify_symbol(name) is ActivityClass.ACTIVE


def propagate_variedness(child_flags: Iterable[bool]) -> bool:
    """Disjunction of the operand flags; literals contribute nothing."""
    return any(child_flags)


def check_condition_passive(condition_varied: bool, line: int) -> None:
    """Reject active branch conditions at compile time."""
    if condition_varied:
        raise CompileError("active-branch", "active branch condition", line)


def check_index_passive(index_varied: bool, line: int) -> None:
    """Indices, range bounds and allocation lengths must be passive.

    Active addressing is a nondifferentiable data-flow branch in disguise, so
    it is rejected exactly like an active branch condition.
    """
    if index_varied:
        raise CompileError("active-index", "active index expression", line)


def check_assignment_activity(lhs_varied: bool, rhs_varied: bool, line: int) -> None:
    """Reject assignment of a varied right-hand side to a passive variable."""
    if rhs_varied and not lhs_varied:
        raise CompileError(
            "active-assign", "active value assigned to passive variable", line
        )
