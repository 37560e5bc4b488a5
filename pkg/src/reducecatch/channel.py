"""Shared half-duplex wireless medium.

Per-receiver Bernoulli loss, same-slot collision destruction, multiple
orthogonal channels, and the partial-synchrony loss schedule (bounded loss
after the stabilization slot).  Collisions destroy all colliding frames: no
capture effect, no constructive interference.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .core import EventKind, NodeId, SlotTime, Trace, TraceEvent

ChannelId = int
GLOBAL_CHANNEL: ChannelId = 0


class ChannelError(Exception):
    pass


class DuplicateTransmit(ChannelError):
    """A node enqueued a second frame in the same slot (half-duplex violation)."""


class StaleSlot(ChannelError):
    """Frame carries a slot index that is not the current slot."""


class FrameKind(str, Enum):
    DATA = "Data"
    ACK = "Ack"
    NACK = "Nack"


@dataclass
class Frame:
    """One MAC-level transmission occupying one slot on one channel."""

    sender: NodeId
    channel: ChannelId
    slot: SlotTime
    kind: FrameKind
    instance: str  # pattern instance tag; late/duplicate frames are discarded by it
    payload: Any = None


@dataclass(frozen=True)
class BurstParams:
    """Two-state (good/burst) loss process parameters.

    `alpha_good` of None means the good state uses the schedule's loss rate,
    so p_enter=0 degenerates to plain i.i.d. loss.
    """

    p_enter: float
    p_exit: float
    alpha_burst: float
    alpha_good: float | None = None

    def stationary_loss(self, base_alpha: float) -> float:
        good = base_alpha if self.alpha_good is None else self.alpha_good
        denom = self.p_enter + self.p_exit
        if denom == 0.0:
            return good  # chain never leaves the good state
        pi_burst = self.p_enter / denom
        return pi_burst * self.alpha_burst + (1.0 - pi_burst) * good


class LossSchedule:
    """Piecewise-constant loss rate over slots with a stabilization bound.

    Segments cover [0, inf) without gaps; after `gst_slot` the effective loss
    rate must stay at or below `alpha_max`.
    """

    def __init__(
        self,
        segments: list[tuple[SlotTime, float]] | None = None,
        gst_slot: SlotTime = 0,
        alpha_max: float = 1.0,
    ):
        if not segments:
            segments = [(0, 0.0)]
        segments = sorted(segments)
        if segments[0][0] != 0:
            raise ValueError("loss segments must start at slot 0")
        for _, alpha in segments:
            if not 0.0 <= alpha <= 1.0:
                raise ValueError(f"loss rate {alpha} outside [0, 1]")
        for start, alpha in segments:
            if start >= gst_slot and alpha > alpha_max:
                raise ValueError(
                    f"segment at slot {start} has loss {alpha} > alpha_max {alpha_max} "
                    "after the stabilization slot"
                )
        # a pre-GST segment can also extend past GST; check the one straddling it
        if segments and gst_slot > 0:
            active = max((s for s in segments if s[0] <= gst_slot), key=lambda s: s[0])
            following = [s for s in segments if s[0] > gst_slot]
            if active[1] > alpha_max and (not following or following[0][0] > gst_slot):
                raise ValueError(
                    f"loss {active[1]} still active at gst_slot {gst_slot} exceeds "
                    f"alpha_max {alpha_max}"
                )
        self.segments = segments
        self.gst_slot = gst_slot
        self.alpha_max = alpha_max

    @classmethod
    def constant(cls, alpha: float) -> "LossSchedule":
        return cls([(0, alpha)], gst_slot=0, alpha_max=max(alpha, 0.0))

    @classmethod
    def with_gst(
        cls, gst_slot: SlotTime, pre_alpha: float, post_alpha: float
    ) -> "LossSchedule":
        return cls(
            [(0, pre_alpha), (gst_slot, post_alpha)],
            gst_slot=gst_slot,
            alpha_max=post_alpha,
        )

    def alpha_at(self, slot: SlotTime) -> float:
        alpha = self.segments[0][1]
        for start, a in self.segments:
            if start <= slot:
                alpha = a
            else:
                break
        return alpha

    def to_dict(self) -> dict:
        return {
            "segments": [list(s) for s in self.segments],
            "gst_slot": self.gst_slot,
            "alpha_max": self.alpha_max,
        }


class TopologyMap:
    """Which channels each node can hear.

    Single-hop: every node hears channel 0 only.  Multi-hop: cluster members
    hear their cluster channel; cluster leaders additionally hear the global
    channel 0.
    """

    def __init__(self, membership: dict[NodeId, set[ChannelId]]):
        for node, channels in membership.items():
            if not channels:
                raise ValueError(f"node {node} hears no channel")
        self.membership = {node: set(chs) for node, chs in membership.items()}

    @classmethod
    def single_hop(cls, nodes: list[NodeId]) -> "TopologyMap":
        return cls({n: {GLOBAL_CHANNEL} for n in nodes})

    def nodes(self) -> list[NodeId]:
        return sorted(self.membership)

    def hears(self, node: NodeId, channel: ChannelId) -> bool:
        return channel in self.membership.get(node, ())

    def listeners(self, channel: ChannelId) -> list[NodeId]:
        return sorted(n for n, chs in self.membership.items() if channel in chs)


class Channel:
    """One orthogonal channel: frames on distinct channels never interact."""

    def __init__(
        self,
        channel_id: ChannelId,
        loss: LossSchedule,
        rng: np.random.Generator,
    ):
        self.id = channel_id
        self.loss = loss
        self.rng = rng
        self.burst: BurstParams | None = None
        self._burst_state: dict[NodeId, bool] = {}  # receiver -> in burst state
        self.scripted_drops: set[tuple[SlotTime, NodeId]] = set()
        self.pending: list[Frame] = []
        self.busy_prev: bool = False  # slot-granular carrier sense result

    def set_burst_mode(self, params: BurstParams | None) -> None:
        """Switch loss draws to a two-state process (None turns it off)."""
        self.burst = params
        self._burst_state.clear()

    def script_drop(self, slot: SlotTime, receiver: NodeId) -> None:
        """Force the frame in `slot` to be lost at `receiver` (test fault injection)."""
        self.scripted_drops.add((slot, receiver))

    def enqueue(self, frame: Frame) -> None:
        self.pending.append(frame)

    def _loss_probability(self, slot: SlotTime, receiver: NodeId) -> float:
        base = self.loss.alpha_at(slot)
        if self.burst is None:
            return base
        in_burst = self._burst_state.get(receiver, False)
        good = base if self.burst.alpha_good is None else self.burst.alpha_good
        prob = self.burst.alpha_burst if in_burst else good
        # advance the receiver's chain after using the current state
        if in_burst:
            if self.rng.random() < self.burst.p_exit:
                self._burst_state[receiver] = False
        else:
            if self.rng.random() < self.burst.p_enter:
                self._burst_state[receiver] = True
        return prob

    def resolve(
        self,
        slot: SlotTime,
        listeners: list[NodeId],
        transmitting: set[NodeId],
        trace: Trace,
    ) -> list[tuple[NodeId, Frame]]:
        """Resolve one slot: collision if >=2 frames, else per-receiver loss draws.

        `transmitting` is the set of nodes transmitting this slot on any
        channel; a half-duplex radio that transmits anywhere receives nothing.
        """
        frames = self.pending
        self.pending = []
        self.busy_prev = bool(frames)
        if not frames:
            return []
        frames.sort(key=lambda f: f.sender)
        for frame in frames:
            trace.record(
                TraceEvent(
                    slot,
                    EventKind.TRANSMIT,
                    {"channel": self.id, "sender": frame.sender},
                    {"kind": frame.kind.value, "instance": frame.instance},
                )
            )
        if len(frames) >= 2:
            trace.record(
                TraceEvent(
                    slot,
                    EventKind.COLLIDE,
                    {"channel": self.id, "senders": [f.sender for f in frames]},
                )
            )
            return []
        frame = frames[0]
        deliveries: list[tuple[NodeId, Frame]] = []
        for receiver in listeners:
            if receiver == frame.sender or receiver in transmitting:
                continue
            if (slot, receiver) in self.scripted_drops:
                lost = True
            else:
                lost = self.rng.random() < self._loss_probability(slot, receiver)
            if lost:
                trace.record(
                    TraceEvent(
                        slot,
                        EventKind.DROP,
                        {"channel": self.id, "sender": frame.sender, "receiver": receiver},
                    )
                )
            else:
                deliveries.append((receiver, frame))
                trace.record(
                    TraceEvent(
                        slot,
                        EventKind.DELIVER,
                        {"channel": self.id, "sender": frame.sender, "receiver": receiver},
                        {"kind": frame.kind.value},
                    )
                )
        return deliveries

    def metadata(self) -> dict:
        meta: dict[str, Any] = {"id": self.id, "loss": self.loss.to_dict()}
        if self.burst is not None:
            meta["burst"] = {
                "p_enter": self.burst.p_enter,
                "p_exit": self.burst.p_exit,
                "alpha_burst": self.burst.alpha_burst,
                "alpha_good": self.burst.alpha_good,
                "long_run_loss": self.burst.stationary_loss(self.loss.alpha_at(0)),
            }
        return meta
