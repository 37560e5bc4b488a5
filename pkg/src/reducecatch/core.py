"""Deterministic building blocks shared by the whole simulator.

One slot is the atomic time unit: a frame transmission occupies exactly one
slot, and wall-clock conversion (default 1 s/slot) is applied only when
reporting metrics.  Everything stochastic is drawn from labelled RNG streams
forked from a single 64-bit master seed, so a run is replayable from its
config alone.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator

import numpy as np

SlotTime = int
NodeId = int

RNG_ALGORITHM = "pcg64"  # pinned in run metadata so results are self-describing

_MASK64 = (1 << 64) - 1


def fork_rng(master_seed: int, stream_label: str) -> np.random.Generator:
    """Return an independent, reproducible RNG stream.

    The same (master_seed, stream_label) pair always yields the same draw
    sequence; distinct labels yield independent streams.  Labels are hashed
    with sha256 so the mapping is stable across processes and platforms.
    """
    digest = hashlib.sha256(stream_label.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in (0, 4, 8, 12)]
    seq = np.random.SeedSequence([master_seed & _MASK64, *words])
    return np.random.Generator(np.random.PCG64(seq))


class RngHub:
    """Caches one labelled stream per purpose (channel, node, election, ...)."""

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)
        self._streams: dict[str, np.random.Generator] = {}

    def stream(self, label: str) -> np.random.Generator:
        rng = self._streams.get(label)
        if rng is None:
            rng = fork_rng(self.master_seed, label)
            self._streams[label] = rng
        return rng


class EventKind(str, Enum):
    TRANSMIT = "Transmit"
    DELIVER = "Deliver"
    COLLIDE = "Collide"
    DROP = "Drop"
    STATE_CHANGE = "StateChange"
    COMMIT = "Commit"
    VIEW_CHANGE = "ViewChange"
    PATTERN_START = "PatternStart"
    PATTERN_END = "PatternEnd"


@dataclass(frozen=True)
class TraceEvent:
    slot: SlotTime
    kind: EventKind
    subject: dict[str, Any]
    detail: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "slot": self.slot,
                "kind": self.kind.value,
                "subject": self.subject,
                "detail": self.detail,
            },
            sort_keys=True,
            default=str,
        )

    def to_text(self) -> str:
        subj = " ".join(f"{k}={v}" for k, v in sorted(self.subject.items()))
        det = " ".join(f"{k}={v}" for k, v in sorted(self.detail.items()))
        return f"[{self.slot:6d}] {self.kind.value:<12} {subj}" + (f" | {det}" if det else "")


class Trace:
    """Append-only event log, totally ordered by (slot, insertion order).

    Within a slot the engine inserts events in a deterministic order
    (ascending channel id, then ascending sender id), which makes traces
    byte-comparable across replays.  `kinds` filters recording so hot loops
    can skip per-delivery bookkeeping.
    """

    def __init__(self, kinds: Iterable[EventKind] | None = None):
        self.events: list[TraceEvent] = []
        self._kinds = set(kinds) if kinds is not None else None

    def record(self, event: TraceEvent) -> None:
        if self._kinds is None or event.kind in self._kinds:
            self.events.append(event)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def of_kind(self, *kinds: EventKind) -> list[TraceEvent]:
        wanted = set(kinds)
        return [e for e in self.events if e.kind in wanted]

    def to_jsonl(self) -> str:
        return "\n".join(e.to_json() for e in self.events)

    def to_text(self) -> str:
        return "\n".join(e.to_text() for e in self.events)
