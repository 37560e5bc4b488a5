"""Channel-access disciplines and reliability feedback primitives.

TDMA hands each participant a slot in round-robin order for a fixed number
of cycles.  CSMA is slotted 1-persistent: uniform backoff in [0, W), the
backoff freezes while the previous slot was sensed busy, and a fresh value
is drawn after every transmission attempt.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import NodeId, SlotTime

DEFAULT_CONTENTION_WINDOW = 8
# csma timer: 4.5 s at 1 s/slot, rounded up to whole slots
DEFAULT_CSMA_TIMER = 5
DEFAULT_NACK_GRACE = 2


class TimerExpired(Exception):
    """CSMA budget ran out without a successful transmission opportunity."""


@dataclass(frozen=True)
class TdmaSchedule:
    """Slot ownership: participants[(slot - origin) mod len] for `cycles` rounds."""

    participants: tuple[NodeId, ...]
    cycles: int
    origin_slot: SlotTime

    def __post_init__(self):
        if self.cycles < 0:
            raise ValueError("cycles must be non-negative")

    @property
    def length(self) -> int:
        return self.cycles * len(self.participants)

    @property
    def end_slot(self) -> SlotTime:
        return self.origin_slot + self.length

    def owner(self, slot: SlotTime) -> NodeId | None:
        if not self.participants:
            return None
        if self.origin_slot <= slot < self.end_slot:
            return self.participants[(slot - self.origin_slot) % len(self.participants)]
        return None


def tdma_owner(schedule: TdmaSchedule, slot: SlotTime) -> NodeId | None:
    return schedule.owner(slot)


@dataclass
class CsmaState:
    """Per-node contention state; one instance per (node, contention context)."""

    window: int = DEFAULT_CONTENTION_WINDOW
    timer_budget: int = DEFAULT_CSMA_TIMER
    backoff: int = field(default=-1)  # -1 means "not yet drawn"
    attempts: int = 0

    def ensure_backoff(self, rng: np.random.Generator) -> None:
        if self.backoff < 0:
            self.backoff = int(rng.integers(0, self.window))


def csma_step(
    state: CsmaState, channel_was_busy: bool, rng: np.random.Generator
) -> tuple[CsmaState, bool]:
    """Advance the contention machine by one slot; returns (state, transmit).

    Raises TimerExpired when the budget hits zero without this slot yielding
    a transmission: the caller maps that to pattern failure.
    """
    if state.timer_budget <= 0:
        raise TimerExpired("csma timer budget already exhausted")
    state.ensure_backoff(rng)
    state.timer_budget -= 1
    transmit = False
    if not channel_was_busy:
        if state.backoff == 0:
            transmit = True
            state.attempts += 1
            state.backoff = int(rng.integers(0, state.window))
        else:
            state.backoff -= 1
    if not transmit and state.timer_budget == 0:
        raise TimerExpired(f"no transmission within budget ({state.attempts} attempts)")
    return state, transmit


@dataclass(frozen=True)
class NackBitmap:
    """Senders whose data the issuer is still missing for one pattern instance."""

    instance: str
    missing: frozenset[NodeId]

    def names(self, node: NodeId) -> bool:
        return node in self.missing


def build_nack(missing_senders: set[NodeId], instance: str) -> NackBitmap | None:
    """Bitmap of exactly the senders still missing; None when nothing is missing."""
    if not missing_senders:
        return None
    return NackBitmap(instance=instance, missing=frozenset(missing_senders))
