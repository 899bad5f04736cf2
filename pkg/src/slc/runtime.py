"""Taping stacks and the differentiable intrinsic library.

Three LIFO stacks carry everything an adjoint execution needs to reverse the
flow of control: scalar values, deep copies of vectors, and control integers
(branch flags and loop trip counts).  The intrinsics come in primal/derivative
pairs; the derivative of ``gt0`` is sigmoidally smoothed inside a band of
half-width ``h`` around the kink at zero.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from .errors import KinkError, TapeUnderflow

DEFAULT_H = 1e-3


@dataclass
class SmoothingConfig:
    """Smoothing half-width for the sigmoid band of d_gt0.  Must be positive."""

    h: float = DEFAULT_H
    strict_kinks: bool = False

    def __post_init__(self):
        if not self.h > 0.0:
            raise ValueError(f"smoothing half-width must be positive, got {self.h}")


def smoothing_from_env(h: float | None = None, strict_kinks: bool = False) -> SmoothingConfig:
    """Build a config honouring SL_SMOOTH_H; an explicit h takes precedence."""
    if h is None:
        env = os.environ.get("SL_SMOOTH_H")
        h = float(env) if env else DEFAULT_H
    return SmoothingConfig(h=h, strict_kinks=strict_kinks)


@dataclass
class ExecStats:
    """Per-execution telemetry: taping traffic and kink hits."""

    pushes_s: int = 0
    pushes_v: int = 0
    pushes_c: int = 0
    pops_s: int = 0
    pops_v: int = 0
    pops_c: int = 0
    kink_hits: int = 0
    adjoint_loop_iterations: int = 0

    @property
    def total_pushes(self) -> int:
        return self.pushes_s + self.pushes_v + self.pushes_c


class TapeStacks:
    """The three tape stacks shared by one adjoint execution.

    ``push_v`` stores a deep copy, so later mutation of the source vector can
    never corrupt the tape.  Popping an empty stack is a hard error.
    """

    def __init__(self, stats: ExecStats | None = None):
        self.scalars: list[float] = []
        self.vectors: list[list[float]] = []
        self.controls: list[int] = []
        self.stats = stats if stats is not None else ExecStats()

    def push_s(self, value: float) -> None:
        self.scalars.append(value)
        self.stats.pushes_s += 1

    def pop_s(self) -> float:
        if not self.scalars:
            raise TapeUnderflow("tape underflow on scalar stack")
        self.stats.pops_s += 1
        return self.scalars.pop()

    def push_v(self, value: list[float]) -> None:
        self.vectors.append(list(value))
        self.stats.pushes_v += 1

    def pop_v(self) -> list[float]:
        if not self.vectors:
            raise TapeUnderflow("tape underflow on vector stack")
        self.stats.pops_v += 1
        return self.vectors.pop()

    def push_c(self, value: int) -> None:
        if value < 0:
            raise ValueError(f"control stack only holds non-negative integers, got {value}")
        self.controls.append(value)
        self.stats.pushes_c += 1

    def pop_c(self) -> int:
        if not self.controls:
            raise TapeUnderflow("tape underflow on control stack")
        self.stats.pops_c += 1
        return self.controls.pop()

    @property
    def balanced(self) -> bool:
        return not (self.scalars or self.vectors or self.controls)


def gt0(x: float) -> float:
    """max(x, 0)."""
    return x if x > 0.0 else 0.0


def d_gt0(x: float, cfg: SmoothingConfig, stats: ExecStats | None = None) -> float:
    """Derivative of gt0, sigmoidally smoothed on [-h, h].

    Outside the band this equals the exact a.e. derivative (0 or 1).  Inside,
    evaluations are counted so callers can report proximity to the kink; under
    strict mode they are errors.
    """
    h = cfg.h
    if x < -h:
        return 0.0
    if x > h:
        return 1.0
    if stats is not None:
        stats.kink_hits += 1
    if cfg.strict_kinks:
        raise KinkError(f"d_gt0 evaluated at {x!r}, within the smoothing band |x| <= {h!r}")
    return 1.0 / (1.0 + math.exp(-x / h))


def d_exp(x: float) -> float:
    """Derivative partner of exp."""
    return math.exp(x)
