"""Slotted simulation world: nodes, channels, and the global slot clock.

Execution order inside one slot:

1. every node's controllers are offered the radio (priority order, at most
   one frame per node per slot: half-duplex, single radio);
2. each channel resolves its enqueued frames (collision or per-receiver
   loss draws) and completed deliveries are pushed to receiving controllers;
3. monitors run (pattern coordinators, commit evaluators);
4. the slot index increments.

A frame transmitted in slot t is therefore acted upon by receivers no
earlier than slot t+1, and carrier sensing reports the busy/idle status of
slot t-1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Protocol

from .channel import (
    Channel,
    ChannelId,
    DuplicateTransmit,
    Frame,
    LossSchedule,
    StaleSlot,
    TopologyMap,
)
from .core import EventKind, NodeId, RngHub, SlotTime, Trace


@dataclass
class SlotContext:
    """What a controller may observe when deciding whether to transmit."""

    slot: SlotTime
    node_id: NodeId
    busy: dict[ChannelId, bool]  # previous slot's busy status per heard channel
    radio_free: bool = True


class Controller(Protocol):
    def on_slot(self, ctx: SlotContext) -> Frame | None: ...

    def on_deliver(self, slot: SlotTime, channel: ChannelId, frame: Frame) -> None: ...


class Node:
    """A radio-equipped participant; behavior comes from stacked controllers.

    Controllers are consulted in priority order (e.g. a cluster leader's
    global-channel duty preempts its local pattern role); the first one that
    returns a frame gets the radio for the slot.
    """

    def __init__(self, node_id: NodeId, byzantine: bool = False):
        self.id = node_id
        self.byzantine = byzantine
        self.controllers: list[Controller] = []

    def push_controller(self, controller: Controller, priority: bool = False) -> None:
        if priority:
            self.controllers.insert(0, controller)
        else:
            self.controllers.append(controller)

    def remove_controller(self, controller: Controller) -> None:
        if controller in self.controllers:
            self.controllers.remove(controller)


class StopReason(str, Enum):
    PREDICATE = "predicate"
    BUDGET = "budget"


class SimWorld:
    """One deterministic, single-threaded simulation instance."""

    def __init__(
        self,
        master_seed: int,
        topology: TopologyMap,
        loss: LossSchedule | dict[ChannelId, LossSchedule] | None = None,
        trace_kinds: Iterable[EventKind] | None = None,
    ):
        self.master_seed = master_seed
        self.topology = topology
        self.rng = RngHub(master_seed)
        self.trace = Trace(trace_kinds)
        self.slot: SlotTime = 0
        self.advances = 0
        self.nodes: dict[NodeId, Node] = {n: Node(n) for n in topology.nodes()}
        self.monitors: list = []
        self._slot_senders: set[NodeId] = set()
        self._instance_counter = 0

        channel_ids = sorted({c for chs in topology.membership.values() for c in chs})
        self.channels: dict[ChannelId, Channel] = {}
        for cid in channel_ids:
            if isinstance(loss, dict):
                schedule = loss.get(cid, LossSchedule.constant(0.0))
            elif loss is None:
                schedule = LossSchedule.constant(0.0)
            else:
                schedule = loss
            self.channels[cid] = Channel(cid, schedule, self.rng.stream(f"channel:{cid}"))

    def new_instance_id(self, tag: str) -> str:
        self._instance_counter += 1
        return f"{tag}#{self._instance_counter}"

    def enqueue(self, frame: Frame) -> None:
        if frame.slot != self.slot:
            raise StaleSlot(f"frame slot {frame.slot} != current slot {self.slot}")
        if frame.sender in self._slot_senders:
            raise DuplicateTransmit(
                f"node {frame.sender} already transmitted in slot {self.slot}"
            )
        if not self.topology.hears(frame.sender, frame.channel):
            raise ChannelMembershipError(
                f"node {frame.sender} is not on channel {frame.channel}"
            )
        self.channels[frame.channel].enqueue(frame)
        self._slot_senders.add(frame.sender)

    def busy_snapshot(self) -> dict[ChannelId, bool]:
        return {cid: ch.busy_prev for cid, ch in self.channels.items()}

    def advance_slot(self) -> "SimWorld":
        slot = self.slot
        busy = self.busy_snapshot()

        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            radio_free = node_id not in self._slot_senders
            for controller in list(node.controllers):
                ctx = SlotContext(slot, node_id, busy, radio_free)
                frame = controller.on_slot(ctx)
                if frame is not None:
                    if not radio_free:
                        raise DuplicateTransmit(
                            f"controller on node {node_id} ignored a taken radio"
                        )
                    self.enqueue(frame)
                    radio_free = False

        transmitting = set(self._slot_senders)
        for cid in sorted(self.channels):
            channel = self.channels[cid]
            listeners = self.topology.listeners(cid)
            for receiver, frame in channel.resolve(slot, listeners, transmitting, self.trace):
                for controller in list(self.nodes[receiver].controllers):
                    controller.on_deliver(slot, cid, frame)

        for monitor in list(self.monitors):
            monitor.after_slot(self)

        self._slot_senders.clear()
        self.slot += 1
        self.advances += 1
        return self

    def run_until(
        self,
        stop: Callable[["SimWorld"], bool],
        max_slots: int,
    ) -> tuple["SimWorld", Trace, StopReason]:
        """Advance until `stop(world)` holds or `max_slots` more slots elapsed."""
        if max_slots <= 0:
            raise ValueError("max_slots must be positive")
        if stop(self):
            return self, self.trace, StopReason.PREDICATE
        for _ in range(max_slots):
            self.advance_slot()
            if stop(self):
                return self, self.trace, StopReason.PREDICATE
        return self, self.trace, StopReason.BUDGET


class ChannelMembershipError(Exception):
    pass


def advance_slot(world: SimWorld) -> SimWorld:
    return world.advance_slot()


def run_until(
    world: SimWorld, stop: Callable[[SimWorld], bool], max_slots: int
) -> tuple[SimWorld, Trace, StopReason]:
    return world.run_until(stop, max_slots)
