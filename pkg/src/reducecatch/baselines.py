"""The four direct MAC+feedback combinations used as comparison subjects.

TDMA variants cycle slot ownership over *all* channel members every round,
including members with nothing to send, so the idle-slot cost of uniform
allocation is observable.  CSMA variants contend for every transmission.

ACK variants demand a positive confirmation from every intended receiver:
each delivery is answered by a dedicated ACK frame and the sender keeps
retransmitting until its ACK set is complete.  NACK variants retransmit on
demand, honoring each requester individually: a NACK from receiver j puts j
in the sender's retransmission queue and one queued entry is served per
transmission opportunity, the way a per-link wired protocol would behave
when ported to a broadcast medium.
"""
from __future__ import annotations

from collections import deque
from typing import Any

from .channel import Frame, FrameKind, LossSchedule, TopologyMap
from .core import EventKind, NodeId, SlotTime, TraceEvent
from .mac import CsmaState, NackBitmap, TimerExpired, build_nack, csma_step
from .patterns import (
    DataExchangeIO,
    Mechanism,
    PatternConfig,
    PatternIO,
    PatternKind,
    NodeStatus,
    PatternOutcome,
    PhaseBudgetExhausted,
)
from .world import SimWorld, SlotContext


class _BaselineRole:
    """Shared bookkeeping for one node inside a baseline pattern instance."""

    def __init__(
        self,
        node: NodeId,
        run: "BaselineRun",
        io: PatternIO,
        intended_receivers: set[NodeId],
    ):
        self.node = node
        self.run = run
        self.io = io
        self.intended = set(intended_receivers)  # who must confirm my data (ack mode)
        self.acked_by: set[NodeId] = set()
        self.ack_queue: deque[NodeId] = deque()  # senders I owe an ACK
        self.retx_queue: deque[NodeId] = deque()  # requesters I owe a retransmission
        self.sent_initial = False
        self.data_sends = 0
        self.owned_slots_seen = 0
        self.last_nack_owned = -(10**9)
        self.last_nack_slot = -(10**9)

    # -- reception ---------------------------------------------------------

    def on_deliver(self, slot: SlotTime, channel: int, frame: Frame) -> None:
        if channel != self.run.channel or frame.instance != self.run.instance:
            return
        if frame.kind is FrameKind.DATA:
            self.io.deliver(frame.sender, frame.payload)
            if self.run.ack_mode and self.node in self.run.intended_of(frame.sender):
                if frame.sender not in self.ack_queue:
                    self.ack_queue.append(frame.sender)
        elif frame.kind is FrameKind.ACK:
            if frame.payload == self.node:
                self.acked_by.add(frame.sender)
        elif frame.kind is FrameKind.NACK:
            bitmap: NackBitmap = frame.payload
            if bitmap.names(self.node) and self.io.outgoing() is not None:
                if frame.sender not in self.retx_queue:
                    self.retx_queue.append(frame.sender)

    # -- shared decision logic ----------------------------------------------

    def ack_settled(self) -> bool:
        if self.io.outgoing() is None:
            return True
        return self.intended <= self.acked_by

    def _data_allowed(self) -> bool:
        limit = self.run.cfg.ack_retry_limit
        return limit is None or self.data_sends < limit

    def next_payload(self, slot: SlotTime) -> tuple[FrameKind, Any] | None:
        """Highest-priority pending frame, or None when the node would idle."""
        if self.run.ack_mode:
            if self.ack_queue:
                return FrameKind.ACK, self.ack_queue.popleft()
            if (
                self.io.outgoing() is not None
                and not self.ack_settled()
                and self._data_allowed()
            ):
                self.data_sends += 1
                return FrameKind.DATA, self.io.outgoing()
            return None
        # nack mode
        if self.retx_queue:
            self.retx_queue.popleft()
            self.data_sends += 1
            return FrameKind.DATA, self.io.outgoing()
        if self.io.outgoing() is not None and not self.sent_initial:
            self.sent_initial = True
            self.data_sends += 1
            return FrameKind.DATA, self.io.outgoing()
        if self._nack_due(slot):
            bitmap = build_nack(self.io.missing(), self.run.instance)
            if bitmap is not None:
                self.last_nack_owned = self.owned_slots_seen
                self.last_nack_slot = slot
                return FrameKind.NACK, bitmap
        return None

    def _nack_due(self, slot: SlotTime) -> bool:
        raise NotImplementedError

    def has_pending(self, slot: SlotTime) -> bool:
        if self.run.ack_mode:
            return bool(self.ack_queue) or (
                self.io.outgoing() is not None
                and not self.ack_settled()
                and self._data_allowed()
            )
        return (
            bool(self.retx_queue)
            or (self.io.outgoing() is not None and not self.sent_initial)
            or (bool(self.io.missing()) and self._nack_due(slot))
        )

    def make_frame(self, slot: SlotTime, kind: FrameKind, payload: Any) -> Frame:
        self.run.count_frame(kind)
        return Frame(
            sender=self.node,
            channel=self.run.channel,
            slot=slot,
            kind=kind,
            instance=self.run.instance,
            payload=payload,
        )


class TdmaBaselineRole(_BaselineRole):
    def on_slot(self, ctx: SlotContext) -> Frame | None:
        if not ctx.radio_free or not self.run.active:
            return None
        if self.run.owner(ctx.slot) != self.node:
            return None
        self.owned_slots_seen += 1
        item = self.next_payload(ctx.slot)
        if item is None:
            return None
        return self.make_frame(ctx.slot, *item)

    def _nack_due(self, slot: SlotTime) -> bool:
        return self.owned_slots_seen - self.last_nack_owned >= self.run.renack_rounds


class CsmaBaselineRole(_BaselineRole):
    def __init__(self, *args, window: int, **kwargs):
        super().__init__(*args, **kwargs)
        self.csma = CsmaState(window=window, timer_budget=10**9)

    def on_slot(self, ctx: SlotContext) -> Frame | None:
        if not ctx.radio_free or not self.run.active:
            return None
        if not self.has_pending(ctx.slot):
            return None
        busy = ctx.busy[self.run.channel]
        if ctx.slot == self.run.start:
            busy = False  # pattern start is a known boundary
        try:
            self.csma, transmit = csma_step(self.csma, busy, self.run.mac_rng(self.node))
        except TimerExpired:
            return None
        if not transmit:
            return None
        item = self.next_payload(ctx.slot)
        if item is None:
            return None
        return self.make_frame(ctx.slot, *item)

    def _nack_due(self, slot: SlotTime) -> bool:
        return slot - self.last_nack_slot >= self.run.renack_slots


class SilentBaselineRole(_BaselineRole):
    def on_slot(self, ctx: SlotContext) -> Frame | None:
        return None

    def on_deliver(self, slot: SlotTime, channel: int, frame: Frame) -> None:
        return None

    def _nack_due(self, slot: SlotTime) -> bool:
        return False


class BaselineRun:
    """Coordinates one baseline pattern instance until completion or budget."""

    def __init__(
        self,
        world: SimWorld,
        kind: PatternKind,
        cfg: PatternConfig,
        ios: dict[NodeId, PatternIO],
        intended: dict[NodeId, set[NodeId]],
        channel: int = 0,
        instance: str | None = None,
        honest: set[NodeId] | None = None,
        completion: str = "auto",  # "acks" for standalone ack mode, "requirements" otherwise
    ):
        self.world = world
        self.kind = kind
        self.cfg = cfg
        self.ios = ios
        self._intended = intended
        self.channel = channel
        self.instance = instance or world.new_instance_id(f"bl-{kind.value}")
        self.honest = set(ios) if honest is None else set(honest)
        self.ack_mode = cfg.mechanism in (Mechanism.CSMA_ACK, Mechanism.TDMA_ACK)
        self.tdma = cfg.mechanism in (Mechanism.TDMA_ACK, Mechanism.TDMA_NACK)
        if completion == "auto":
            completion = "acks" if self.ack_mode else "requirements"
        self.completion = completion
        self.start = world.slot
        self.members = tuple(sorted(world.topology.listeners(channel)))
        self.budget = cfg.budget_factor * max(len(self.members), 1)
        self.renack_rounds = getattr(cfg, "renack_rounds", 2)
        self.renack_slots = self.renack_rounds * max(len(self.members), 1)
        self.frames = {"data": 0, "ack": 0, "nack": 0}
        self.completed_at: SlotTime | None = None
        self.budget_exhausted = False
        self.done = False
        self.active = True
        self.roles: dict[NodeId, _BaselineRole] = {}
        self._satisfied: set[NodeId] = set()

    def intended_of(self, sender: NodeId) -> set[NodeId]:
        return self._intended.get(sender, set())

    def owner(self, slot: SlotTime) -> NodeId:
        return self.members[(slot - self.start) % len(self.members)]

    def mac_rng(self, node: NodeId):
        return self.world.rng.stream(f"mac:{node}:ch{self.channel}")

    def count_frame(self, kind: FrameKind) -> None:
        self.frames[kind.value.lower()] += 1

    def build_roles(self, silent: set[NodeId] | None = None) -> None:
        silent = silent or set()
        for node, io in self.ios.items():
            intended = self.intended_of(node)
            if node in silent:
                role: _BaselineRole = SilentBaselineRole(node, self, io, intended)
            elif self.tdma:
                role = TdmaBaselineRole(node, self, io, intended)
            else:
                role = CsmaBaselineRole(node, self, io, intended, window=self.cfg.window)
            self.roles[node] = role

    def install(self) -> None:
        for node, role in self.roles.items():
            self.world.nodes[node].push_controller(role)
        self.world.monitors.append(self)
        self.world.trace.record(
            TraceEvent(
                self.world.slot,
                EventKind.PATTERN_START,
                {"instance": self.instance, "channel": self.channel},
                {"kind": self.kind.value, "mechanism": self.cfg.mechanism.value},
            )
        )

    def uninstall(self) -> None:
        for node, role in self.roles.items():
            self.world.nodes[node].remove_controller(role)
        if self in self.world.monitors:
            self.world.monitors.remove(self)

    def _complete(self) -> bool:
        if not all(self.ios[n].satisfied() for n in self.honest):
            return False
        if self.completion == "acks":
            return all(role.ack_settled() for role in self.roles.values())
        return True

    def after_slot(self, world: SimWorld) -> None:
        slot = world.slot
        for node in self.honest:
            if node not in self._satisfied and self.ios[node].satisfied():
                self._satisfied.add(node)
                world.trace.record(
                    TraceEvent(
                        slot,
                        EventKind.STATE_CHANGE,
                        {"node": node, "instance": self.instance},
                        {"status": "satisfied"},
                    )
                )
        if self._complete():
            if self.completed_at is None:
                self.completed_at = slot
            self._finish(slot)
        elif slot - self.start + 1 >= self.budget:
            self.budget_exhausted = True
            self._finish(slot)

    def _finish(self, slot: SlotTime) -> None:
        self.done = True
        self.active = False
        self.uninstall()
        self.world.trace.record(
            TraceEvent(
                slot,
                EventKind.PATTERN_END,
                {"instance": self.instance, "channel": self.channel},
                {"ok": not self.budget_exhausted, "mechanism": self.cfg.mechanism.value},
            )
        )

    def outcome(self) -> PatternOutcome:
        statuses = {
            node: NodeStatus.SATISFIED if self.ios[node].satisfied() else NodeStatus.FAILED
            for node in self.honest
        }
        end = self.completed_at if self.completed_at is not None else self.world.slot - 1
        return PatternOutcome(
            statuses=statuses,
            slots_used=end - self.start + 1,
            frames_sent=dict(self.frames),
            completed_at=self.completed_at,
            budget_exhausted=self.budget_exhausted,
        )

    def execute(self, raise_on_budget: bool = True) -> PatternOutcome:
        self.install()
        self.world.run_until(lambda w: self.done, max_slots=self.budget + 2)
        if self.budget_exhausted and raise_on_budget:
            raise PhaseBudgetExhausted(
                f"{self.cfg.mechanism.value} {self.kind.value} hit {self.budget}-slot cap"
            )
        return self.outcome()


def _build_ios(
    pattern_kind: PatternKind,
    cfg: PatternConfig,
    sender: NodeId | None = None,
    payload: Any = None,
    receivers: list[NodeId] | None = None,
    senders: list[NodeId] | None = None,
    receiver: NodeId | None = None,
    nodes: list[NodeId] | None = None,
) -> tuple[dict[NodeId, PatternIO], dict[NodeId, set[NodeId]], list[NodeId]]:
    ios: dict[NodeId, PatternIO] = {}
    intended: dict[NodeId, set[NodeId]] = {}
    if pattern_kind is PatternKind.ONE_TO_N:
        assert sender is not None and receivers is not None
        ios[sender] = DataExchangeIO(sender, payload, set())
        intended[sender] = set(receivers)
        for r in receivers:
            ios[r] = DataExchangeIO(r, None, {sender})
        participants = [sender, *receivers]
    elif pattern_kind is PatternKind.N_TO_ONE:
        assert senders is not None and receiver is not None
        ios[receiver] = DataExchangeIO(receiver, None, set(senders), cfg.require)
        for s in senders:
            ios[s] = DataExchangeIO(s, ("data", s), set())
            intended[s] = {receiver}
        participants = [*senders, receiver]
    elif pattern_kind is PatternKind.N_TO_N:
        assert nodes is not None
        for n in nodes:
            ios[n] = DataExchangeIO(n, ("data", n), set(nodes) - {n}, cfg.require)
            intended[n] = set(nodes) - {n}
        participants = list(nodes)
    else:
        raise ValueError(f"baseline mechanisms do not implement {pattern_kind}")
    return ios, intended, participants


def run_baseline(
    pattern_kind: PatternKind,
    cfg: PatternConfig,
    world: SimWorld | None = None,
    silent: set[NodeId] | None = None,
    raise_on_budget: bool = True,
    channel: int = 0,
    **role_args,
) -> PatternOutcome:
    if cfg.mechanism not in (
        Mechanism.CSMA_ACK,
        Mechanism.CSMA_NACK,
        Mechanism.TDMA_ACK,
        Mechanism.TDMA_NACK,
    ):
        raise ValueError(f"{cfg.mechanism} is not a baseline mechanism")
    ios, intended, participants = _build_ios(pattern_kind, cfg, **role_args)
    if world is None:
        world = SimWorld(
            master_seed=cfg.master_seed,
            topology=TopologyMap.single_hop(participants),
            loss=LossSchedule.constant(cfg.alpha),
        )
    silent = silent or set()
    run = BaselineRun(
        world,
        pattern_kind,
        cfg,
        ios,
        intended,
        channel=channel,
        honest=set(ios) - silent,
    )
    run.build_roles(silent=silent)
    return run.execute(raise_on_budget=raise_on_budget)
