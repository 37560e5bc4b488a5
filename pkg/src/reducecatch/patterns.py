"""Reliable communication patterns built from a reduce phase and a catch phase.

A pattern instance runs on one channel over a fixed slot schedule:

* reduce phase: TDMA slots repeat each sender's payload `ntx` times, which
  shrinks the set of nodes still missing something;
* catch phase: exactly `delta` slots in which unsatisfied nodes contend
  (slotted CSMA) to broadcast NACK bitmaps and named holders rebroadcast.

NACKs received outside the catch window are ignored, which is what stops a
malicious node from coaxing retransmissions at arbitrary times.  After
sending a NACK a node stays quiet for a short grace period so the requested
rebroadcast has room to go out.

The single receiver of an N-to-1 instance (and the vote-collecting leader of
a merged round) owns the channel for its NACK: it skips the random backoff,
but still defers to a sensed-busy slot and honors the grace period.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

import numpy as np

from .channel import Frame, FrameKind, LossSchedule, TopologyMap
from .core import EventKind, NodeId, SlotTime, TraceEvent
from .mac import (
    DEFAULT_CONTENTION_WINDOW,
    DEFAULT_NACK_GRACE,
    CsmaState,
    NackBitmap,
    TimerExpired,
    build_nack,
)
from .world import SimWorld, SlotContext


class Mechanism(str, Enum):
    REDUCE_CATCH = "reduce_catch"
    CSMA_ACK = "csma_ack"
    CSMA_NACK = "csma_nack"
    TDMA_ACK = "tdma_ack"
    TDMA_NACK = "tdma_nack"


BASELINE_MECHANISMS = (
    Mechanism.CSMA_ACK,
    Mechanism.CSMA_NACK,
    Mechanism.TDMA_ACK,
    Mechanism.TDMA_NACK,
)


class PatternKind(str, Enum):
    ONE_TO_N = "one_to_n"
    N_TO_ONE = "n_to_one"
    N_TO_N = "n_to_n"
    MERGED = "merged"


class NodeStatus(str, Enum):
    SATISFIED = "satisfied"
    FAILED = "failed"


class PhaseBudgetExhausted(Exception):
    """A baseline pattern hit its slot cap before completing."""


# default catch windows, per pattern kind
DEFAULT_DELTAS = {
    PatternKind.ONE_TO_N: 5,
    PatternKind.N_TO_ONE: 5,
    PatternKind.N_TO_N: 6,
    PatternKind.MERGED: 6,
}


@dataclass
class PatternConfig:
    """Mechanism choice plus the knobs governing one pattern instance."""

    mechanism: Mechanism = Mechanism.REDUCE_CATCH
    ntx: int = 1
    delta: int = 5
    window: int = DEFAULT_CONTENTION_WINDOW
    nack_grace: int = DEFAULT_NACK_GRACE
    budget_factor: int = 50  # baseline cap = budget_factor * N slots
    require: int | None = None  # payloads a receiver needs; None = all of them
    ack_retry_limit: int | None = None
    alpha: float = 0.0
    master_seed: int = 0

    def __post_init__(self):
        if self.ntx < 1:
            raise ValueError("ntx must be >= 1")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")


@dataclass
class PatternOutcome:
    statuses: dict[NodeId, NodeStatus]
    slots_used: int
    frames_sent: dict[str, int]
    completed_at: SlotTime | None
    post_reduce_active: frozenset[NodeId] = frozenset()
    budget_exhausted: bool = False

    @property
    def ok(self) -> bool:
        return all(s is NodeStatus.SATISFIED for s in self.statuses.values())

    @property
    def total_frames(self) -> int:
        return sum(self.frames_sent.values())


class PatternIO:
    """Per-node payload plumbing: what to send, what was received, what is owed.

    A pattern role consults this to stay payload-agnostic; plain data
    exchanges and consensus vote phases both fit behind it.
    """

    def outgoing(self) -> Any | None:
        raise NotImplementedError

    def deliver(self, sender: NodeId, payload: Any) -> None:
        raise NotImplementedError

    def satisfied(self) -> bool:
        raise NotImplementedError

    def missing(self) -> set[NodeId]:
        raise NotImplementedError


class DataExchangeIO(PatternIO):
    """Plain payload exchange: a node holds its own datum and wants others'."""

    def __init__(
        self,
        node: NodeId,
        own_payload: Any | None,
        required: set[NodeId],
        require_count: int | None = None,
    ):
        self.node = node
        self.own_payload = own_payload
        self.required = set(required)
        self.require_count = require_count
        self.have: dict[NodeId, Any] = {}

    def outgoing(self) -> Any | None:
        return self.own_payload

    def deliver(self, sender: NodeId, payload: Any) -> None:
        self.have[sender] = payload

    def satisfied(self) -> bool:
        got = self.required & self.have.keys()
        if self.require_count is None:
            return got == self.required
        return len(got) >= min(self.require_count, len(self.required))

    def missing(self) -> set[NodeId]:
        return self.required - self.have.keys()


class ConditionalVoteIO(DataExchangeIO):
    """Follower in a merged round: votes only once the leader's payload arrived."""

    def __init__(self, node: NodeId, leader: NodeId, vote_fn: Callable[[Any], Any]):
        super().__init__(node, None, required={leader})
        self.leader = leader
        self.vote_fn = vote_fn

    def outgoing(self) -> Any | None:
        proposal = self.have.get(self.leader)
        if proposal is None:
            return None
        return self.vote_fn(proposal)


@dataclass(frozen=True)
class RcSchedule:
    """Slot layout of one reduce+catch instance.

    `segments` is an ordered list of TDMA blocks (participants, cycles); the
    catch phase of `delta` slots follows immediately after the last block.
    """

    channel: int
    instance: str
    start: SlotTime
    segments: tuple[tuple[tuple[NodeId, ...], int], ...]
    delta: int

    @property
    def reduce_len(self) -> int:
        return sum(len(p) * c for p, c in self.segments)

    @property
    def catch_start(self) -> SlotTime:
        return self.start + self.reduce_len

    @property
    def end(self) -> SlotTime:
        return self.catch_start + self.delta

    def reduce_owner(self, slot: SlotTime) -> NodeId | None:
        offset = slot - self.start
        if offset < 0:
            return None
        for participants, cycles in self.segments:
            block = len(participants) * cycles
            if offset < block:
                return participants[offset % len(participants)]
            offset -= block
        return None

    def in_catch(self, slot: SlotTime) -> bool:
        return self.catch_start <= slot < self.end


class RcRole:
    """One node's state machine inside a reduce+catch instance."""

    def __init__(
        self,
        node: NodeId,
        schedule: RcSchedule,
        io: PatternIO,
        rng: np.random.Generator,
        run: "PatternRun",
        window: int = DEFAULT_CONTENTION_WINDOW,
        nack_grace: int = DEFAULT_NACK_GRACE,
        privileged_nacker: bool = False,
        privileged_responder: bool = False,
    ):
        self.node = node
        self.schedule = schedule
        self.io = io
        self.rng = rng
        self.run = run
        self.nack_grace = nack_grace
        self.privileged_nacker = privileged_nacker
        self.privileged_responder = privileged_responder
        self.csma = CsmaState(window=window, timer_budget=schedule.delta + 1)
        self.retx_requested = False
        self.respond_pending = False
        self.has_sent_data = False
        self.next_nack_slot = schedule.catch_start

    # -- reception ---------------------------------------------------------

    def on_deliver(self, slot: SlotTime, channel: int, frame: Frame) -> None:
        if channel != self.schedule.channel or frame.instance != self.schedule.instance:
            return
        if frame.kind is FrameKind.DATA:
            self.io.deliver(frame.sender, frame.payload)
        elif frame.kind is FrameKind.NACK:
            bitmap: NackBitmap = frame.payload
            if not self.schedule.in_catch(frame.slot):
                self.run.late_nacks_ignored += 1
                return
            if bitmap.names(self.node) and self.io.outgoing() is not None:
                if self.privileged_responder:
                    self.respond_pending = True
                else:
                    self.retx_requested = True

    # -- transmission ------------------------------------------------------

    def on_slot(self, ctx: SlotContext) -> Frame | None:
        slot = ctx.slot
        if not (self.schedule.start <= slot < self.schedule.end):
            return None
        if not ctx.radio_free:
            return None
        if slot < self.schedule.catch_start:
            return self._reduce_slot(slot)
        return self._catch_slot(ctx)

    def _reduce_slot(self, slot: SlotTime) -> Frame | None:
        if self.schedule.reduce_owner(slot) != self.node:
            return None
        payload = self.io.outgoing()
        if payload is None:
            return None  # e.g. a follower that never received the proposal stays silent
        self.has_sent_data = True
        return self._frame(slot, FrameKind.DATA, payload)

    def _catch_slot(self, ctx: SlotContext) -> Frame | None:
        slot = ctx.slot
        # the phase boundary is known to every participant, so the first
        # catch slot starts from a clean carrier-sense state
        busy = False if slot == self.schedule.catch_start else ctx.busy[self.schedule.channel]

        if self.privileged_responder and self.respond_pending:
            payload = self.io.outgoing()
            if payload is not None:
                self.respond_pending = False
                self.has_sent_data = True
                return self._frame(slot, FrameKind.DATA, payload)

        wants_nack = (
            not self.io.satisfied()
            and bool(self.io.missing())
            and slot >= self.next_nack_slot
        )

        if self.privileged_nacker:
            if wants_nack and not busy:
                return self._nack_frame(slot)
            return None

        pending_first = self.io.outgoing() is not None and not self.has_sent_data
        wants_retx = self.retx_requested and self.io.outgoing() is not None
        if not (wants_retx or pending_first or wants_nack):
            return None

        try:
            self.csma, transmit = _csma_step_quiet(self.csma, busy, self.rng)
        except TimerExpired:
            return None
        if not transmit:
            return None
        if wants_retx:
            self.retx_requested = False
            self.has_sent_data = True
            return self._frame(slot, FrameKind.DATA, self.io.outgoing())
        if pending_first:
            self.has_sent_data = True
            return self._frame(slot, FrameKind.DATA, self.io.outgoing())
        return self._nack_frame(slot)

    def _nack_frame(self, slot: SlotTime) -> Frame:
        bitmap = build_nack(self.io.missing(), self.schedule.instance)
        self.next_nack_slot = slot + self.nack_grace + 1
        return self._frame(slot, FrameKind.NACK, bitmap)

    def _frame(self, slot: SlotTime, kind: FrameKind, payload: Any) -> Frame:
        self.run.count_frame(kind)
        return Frame(
            sender=self.node,
            channel=self.schedule.channel,
            slot=slot,
            kind=kind,
            instance=self.schedule.instance,
            payload=payload,
        )


def _csma_step_quiet(state: CsmaState, busy: bool, rng) -> tuple[CsmaState, bool]:
    # catch-phase contention never outlives the window, so top up the budget
    if state.timer_budget <= 1:
        state.timer_budget = 2
    from .mac import csma_step

    return csma_step(state, busy, rng)


class SilentRole:
    """Byzantine stand-in that never transmits but observes deliveries."""

    def __init__(self, schedule: RcSchedule):
        self.schedule = schedule

    def on_slot(self, ctx: SlotContext) -> Frame | None:
        return None

    def on_deliver(self, slot: SlotTime, channel: int, frame: Frame) -> None:
        return None


class PatternRun:
    """Coordinates one pattern instance: roles, frame counters, outcome."""

    def __init__(
        self,
        world: SimWorld,
        schedule: RcSchedule,
        kind: PatternKind,
        ios: dict[NodeId, PatternIO],
        honest: set[NodeId] | None = None,
    ):
        self.world = world
        self.schedule = schedule
        self.kind = kind
        self.ios = ios
        self.honest = set(ios) if honest is None else set(honest)
        self.roles: dict[NodeId, Any] = {}
        self.frames = {"data": 0, "ack": 0, "nack": 0}
        self.late_nacks_ignored = 0
        self.completed_at: SlotTime | None = None
        self._satisfied: set[NodeId] = set()
        self.post_reduce_active: frozenset[NodeId] = frozenset()
        self.done = False

    def count_frame(self, kind: FrameKind) -> None:
        self.frames[kind.value.lower()] += 1

    def add_role(self, node: NodeId, role: Any) -> None:
        self.roles[node] = role

    def install(self) -> None:
        for node, role in self.roles.items():
            self.world.nodes[node].push_controller(role)
        self.world.monitors.append(self)
        self.world.trace.record(
            TraceEvent(
                self.world.slot,
                EventKind.PATTERN_START,
                {"instance": self.schedule.instance, "channel": self.schedule.channel},
                {"kind": self.kind.value, "end": self.schedule.end},
            )
        )

    def uninstall(self) -> None:
        for node, role in self.roles.items():
            self.world.nodes[node].remove_controller(role)
        if self in self.world.monitors:
            self.world.monitors.remove(self)

    # monitor hook, runs after each slot's deliveries
    def after_slot(self, world: SimWorld) -> None:
        slot = world.slot
        for node, io in self.ios.items():
            if node not in self._satisfied and io.satisfied():
                self._satisfied.add(node)
                world.trace.record(
                    TraceEvent(
                        slot,
                        EventKind.STATE_CHANGE,
                        {"node": node, "instance": self.schedule.instance},
                        {"status": "satisfied"},
                    )
                )
        if self.completed_at is None and self.honest <= self._satisfied:
            self.completed_at = slot
        if slot == self.schedule.catch_start - 1:
            self.post_reduce_active = frozenset(self.active_set())
        if slot == self.schedule.end - 1:
            self._finish(slot)

    def _finish(self, slot: SlotTime) -> None:
        self.done = True
        self.uninstall()
        self.world.trace.record(
            TraceEvent(
                slot,
                EventKind.PATTERN_END,
                {"instance": self.schedule.instance, "channel": self.schedule.channel},
                {"ok": self.honest <= self._satisfied},
            )
        )

    def active_set(self) -> set[NodeId]:
        """Nodes still requiring action: missing data, or data not yet delivered."""
        active: set[NodeId] = set()
        for node, io in self.ios.items():
            if io.missing():
                active.add(node)
                for still_missing in io.missing():
                    if still_missing in self.ios:
                        active.add(still_missing)
        return active

    def outcome(self) -> PatternOutcome:
        statuses = {
            node: NodeStatus.SATISFIED if io.satisfied() else NodeStatus.FAILED
            for node, io in self.ios.items()
            if node in self.honest
        }
        return PatternOutcome(
            statuses=statuses,
            slots_used=self.schedule.reduce_len + self.schedule.delta,
            frames_sent=dict(self.frames),
            completed_at=self.completed_at,
            post_reduce_active=self.post_reduce_active,
        )

    def execute(self) -> PatternOutcome:
        self.install()
        self.world.run_until(lambda w: self.done, max_slots=self.schedule.end - self.world.slot + 2)
        return self.outcome()


# ---------------------------------------------------------------------------
# pattern constructors


def _default_world(cfg: PatternConfig, nodes: list[NodeId]) -> SimWorld:
    return SimWorld(
        master_seed=cfg.master_seed,
        topology=TopologyMap.single_hop(nodes),
        loss=LossSchedule.constant(cfg.alpha),
    )


def _mac_rng(world: SimWorld, node: NodeId, channel: int):
    return world.rng.stream(f"mac:{node}:ch{channel}")


def build_one_to_n(
    world: SimWorld,
    sender: NodeId,
    payload: Any,
    receivers: list[NodeId],
    cfg: PatternConfig,
    channel: int = 0,
    instance: str | None = None,
    silent: set[NodeId] | None = None,
) -> PatternRun:
    instance = instance or world.new_instance_id("1toN")
    silent = silent or set()
    schedule = RcSchedule(
        channel=channel,
        instance=instance,
        start=world.slot,
        segments=(((sender,), cfg.ntx),),
        delta=cfg.delta,
    )
    ios: dict[NodeId, PatternIO] = {sender: DataExchangeIO(sender, payload, set())}
    for r in receivers:
        ios[r] = DataExchangeIO(r, None, {sender})
    run = PatternRun(world, schedule, PatternKind.ONE_TO_N, ios, honest=set(ios) - silent)
    for node, io in ios.items():
        if node in silent:
            run.add_role(node, SilentRole(schedule))
            continue
        run.add_role(
            node,
            RcRole(
                node,
                schedule,
                io,
                _mac_rng(world, node, channel),
                run,
                window=cfg.window,
                nack_grace=cfg.nack_grace,
                privileged_responder=(node == sender),
            ),
        )
    return run


def build_n_to_one(
    world: SimWorld,
    senders: list[NodeId],
    receiver: NodeId,
    cfg: PatternConfig,
    channel: int = 0,
    instance: str | None = None,
    silent: set[NodeId] | None = None,
) -> PatternRun:
    instance = instance or world.new_instance_id("Nto1")
    silent = silent or set()
    ordered = tuple(sorted(senders))
    schedule = RcSchedule(
        channel=channel,
        instance=instance,
        start=world.slot,
        segments=((ordered, cfg.ntx),) if ordered else (),
        delta=cfg.delta,
    )
    ios: dict[NodeId, PatternIO] = {
        receiver: DataExchangeIO(receiver, None, set(ordered), cfg.require)
    }
    for s in ordered:
        ios[s] = DataExchangeIO(s, ("data", s), set())
    run = PatternRun(world, schedule, PatternKind.N_TO_ONE, ios, honest=set(ios) - silent)
    for node, io in ios.items():
        if node in silent:
            run.add_role(node, SilentRole(schedule))
            continue
        run.add_role(
            node,
            RcRole(
                node,
                schedule,
                io,
                _mac_rng(world, node, channel),
                run,
                window=cfg.window,
                nack_grace=cfg.nack_grace,
                privileged_nacker=(node == receiver),
            ),
        )
    return run


def build_n_to_n(
    world: SimWorld,
    nodes: list[NodeId],
    cfg: PatternConfig,
    channel: int = 0,
    instance: str | None = None,
    payloads: dict[NodeId, Any] | None = None,
    silent: set[NodeId] | None = None,
) -> PatternRun:
    instance = instance or world.new_instance_id("NtoN")
    silent = silent or set()
    ordered = tuple(sorted(nodes))
    schedule = RcSchedule(
        channel=channel,
        instance=instance,
        start=world.slot,
        segments=((ordered, cfg.ntx),) if ordered else (),
        delta=cfg.delta,
    )
    ios: dict[NodeId, PatternIO] = {}
    for n in ordered:
        payload = payloads[n] if payloads else ("data", n)
        ios[n] = DataExchangeIO(n, payload, set(ordered) - {n}, cfg.require)
    run = PatternRun(world, schedule, PatternKind.N_TO_N, ios, honest=set(ios) - silent)
    for node, io in ios.items():
        if node in silent:
            run.add_role(node, SilentRole(schedule))
            continue
        run.add_role(
            node,
            RcRole(
                node,
                schedule,
                io,
                _mac_rng(world, node, channel),
                run,
                window=cfg.window,
                nack_grace=cfg.nack_grace,
            ),
        )
    return run


def build_merged_leader_round(
    world: SimWorld,
    leader: NodeId,
    leader_payload: Any,
    followers: list[NodeId],
    cfg: PatternConfig,
    channel: int = 0,
    instance: str | None = None,
    ntx_leader: int | None = None,
    ntx_votes: int | None = None,
    vote_fn: Callable[[Any], Any] | None = None,
    silent: set[NodeId] | None = None,
) -> PatternRun:
    """Leader broadcast and follower vote collection sharing one catch phase."""
    instance = instance or world.new_instance_id("merged")
    silent = silent or set()
    ordered = tuple(sorted(followers))
    ntx_leader = ntx_leader or cfg.ntx
    ntx_votes = ntx_votes or cfg.ntx
    vote_fn = vote_fn or (lambda proposal: ("vote", proposal))
    schedule = RcSchedule(
        channel=channel,
        instance=instance,
        start=world.slot,
        segments=(((leader,), ntx_leader), (ordered, ntx_votes)),
        delta=cfg.delta,
    )
    leader_io = DataExchangeIO(leader, leader_payload, set(ordered), cfg.require)
    ios: dict[NodeId, PatternIO] = {leader: leader_io}
    for f in ordered:
        io = ConditionalVoteIO(f, leader, vote_fn)
        ios[f] = io
    run = PatternRun(world, schedule, PatternKind.MERGED, ios, honest=set(ios) - silent)
    for node, io in ios.items():
        if node in silent:
            run.add_role(node, SilentRole(schedule))
            continue
        run.add_role(
            node,
            RcRole(
                node,
                schedule,
                io,
                _mac_rng(world, node, channel),
                run,
                window=cfg.window,
                nack_grace=cfg.nack_grace,
                privileged_nacker=(node == leader),
                privileged_responder=(node == leader),
            ),
        )
    return run


# ---------------------------------------------------------------------------
# spec-level operations (standalone execution)


def one_to_n(
    sender: NodeId,
    payload: Any,
    receivers: list[NodeId],
    cfg: PatternConfig,
    world: SimWorld | None = None,
    silent: set[NodeId] | None = None,
) -> PatternOutcome:
    if cfg.mechanism is not Mechanism.REDUCE_CATCH:
        return baseline_pattern(
            PatternKind.ONE_TO_N, cfg, sender=sender, payload=payload,
            receivers=receivers, world=world, silent=silent,
        )
    if world is None:
        world = _default_world(cfg, [sender, *receivers])
    return build_one_to_n(world, sender, payload, receivers, cfg, silent=silent).execute()


def n_to_one(
    senders: list[NodeId],
    receiver: NodeId,
    cfg: PatternConfig,
    world: SimWorld | None = None,
    silent: set[NodeId] | None = None,
) -> PatternOutcome:
    if cfg.mechanism is not Mechanism.REDUCE_CATCH:
        return baseline_pattern(
            PatternKind.N_TO_ONE, cfg, senders=senders, receiver=receiver,
            world=world, silent=silent,
        )
    if world is None:
        world = _default_world(cfg, [*senders, receiver])
    return build_n_to_one(world, senders, receiver, cfg, silent=silent).execute()


def n_to_n(
    nodes: list[NodeId],
    cfg: PatternConfig,
    world: SimWorld | None = None,
    silent: set[NodeId] | None = None,
) -> PatternOutcome:
    if cfg.mechanism is not Mechanism.REDUCE_CATCH:
        return baseline_pattern(
            PatternKind.N_TO_N, cfg, nodes=nodes, world=world, silent=silent
        )
    if world is None:
        world = _default_world(cfg, list(nodes))
    return build_n_to_n(world, nodes, cfg, silent=silent).execute()


def merged_leader_round(
    leader: NodeId,
    leader_payload: Any,
    followers: list[NodeId],
    cfg: PatternConfig,
    world: SimWorld | None = None,
    **kwargs,
) -> PatternOutcome:
    if world is None:
        world = _default_world(cfg, [leader, *followers])
    return build_merged_leader_round(
        world, leader, leader_payload, followers, cfg, **kwargs
    ).execute()


def baseline_pattern(pattern_kind: PatternKind, cfg: PatternConfig, **kwargs) -> PatternOutcome:
    from . import baselines

    return baselines.run_baseline(pattern_kind, cfg, **kwargs)


# ---------------------------------------------------------------------------
# repeat-count tuning


def predicted_active_nodes(
    alpha: float, n: int, ntx: int, kind: PatternKind = PatternKind.N_TO_N
) -> float:
    """Expected number of still-active nodes after the reduce phase.

    N-to-N: a node goes inactive only if it received all N-1 peers' data and
    all N-1 peers received its own, giving n = N - N(1 - a^ntx)^(2N-2).  The
    one-directional patterns use the per-node single-condition form.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    p_pair = alpha**ntx
    if kind is PatternKind.N_TO_N:
        return n - n * (1.0 - p_pair) ** (2 * n - 2)
    # per-receiver (1-to-N) / per-sender (N-to-1) miss probability
    return (n - 1) * p_pair


def ntx_recommend(
    alpha: float, n: int, target_active: float, kind: PatternKind = PatternKind.N_TO_N
) -> tuple[int, float]:
    """Smallest repeat count whose predicted post-reduce active count meets target."""
    if alpha >= 1.0:
        raise ValueError("no finite repeat count exists at total loss (alpha >= 1)")
    if alpha < 0.0:
        raise ValueError("alpha must be non-negative")
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if not 0 < target_active <= n:
        raise ValueError("target_active must lie in (0, N]")
    ntx = 1
    while True:
        predicted = predicted_active_nodes(alpha, n, ntx, kind)
        if predicted <= target_active:
            return ntx, predicted
        ntx += 1
        if ntx > 10_000:
            raise RuntimeError("repeat count search did not converge")


def sample_post_reduce_actives(
    alpha: float,
    n: int,
    ntx: int,
    trials: int,
    rng: np.random.Generator,
    kind: PatternKind = PatternKind.N_TO_N,
) -> np.ndarray:
    """Monte-Carlo active counts after a reduce phase, one value per trial.

    Samples the same per-(sender, receiver) Bernoulli structure the channel
    produces: a pair is missed iff all ntx scheduled repeats are lost.
    """
    p_pair = alpha**ntx
    if kind is PatternKind.N_TO_N:
        miss = rng.random((trials, n, n)) < p_pair
        eye = np.eye(n, dtype=bool)
        miss &= ~eye
        row_any = miss.any(axis=2)
        col_any = miss.any(axis=1)
        return (row_any | col_any).sum(axis=1)
    miss = rng.random((trials, n - 1)) < p_pair
    return miss.sum(axis=1)


# ---------------------------------------------------------------------------
# complexity reference (used by scaling regressions)


@dataclass(frozen=True)
class ComplexityOrder:
    message_order: str
    time_order: str
    message_growth: Callable[[int], float]
    time_growth: Callable[[int], float]


def _log2(n: int) -> float:
    return max(math.log2(n), 1.0)


_ORDERS: dict[tuple[Mechanism, PatternKind], tuple[str, str, Callable, Callable]] = {
    (Mechanism.REDUCE_CATCH, PatternKind.ONE_TO_N): (
        "log N", "log N", lambda n: _log2(n), lambda n: _log2(n)),
    (Mechanism.REDUCE_CATCH, PatternKind.N_TO_ONE): (
        "N log N", "N log N + beta n", lambda n: n * _log2(n), lambda n: n * _log2(n)),
    (Mechanism.REDUCE_CATCH, PatternKind.N_TO_N): (
        "N log N", "N log N", lambda n: n * _log2(n), lambda n: n * _log2(n)),
    (Mechanism.CSMA_ACK, PatternKind.ONE_TO_N): (
        "N log N", "beta N log(beta N)", lambda n: n * _log2(n), lambda n: n * _log2(n)),
    (Mechanism.CSMA_ACK, PatternKind.N_TO_ONE): (
        "N log N", "beta N log(beta N)", lambda n: n * _log2(n), lambda n: n * _log2(n)),
    (Mechanism.CSMA_ACK, PatternKind.N_TO_N): (
        "N^2 log N", "(beta N)^2 log(beta N)",
        lambda n: n * n * _log2(n), lambda n: n * n * _log2(n)),
    (Mechanism.CSMA_NACK, PatternKind.ONE_TO_N): (
        "N", "beta N", lambda n: float(n), lambda n: float(n)),
    (Mechanism.CSMA_NACK, PatternKind.N_TO_ONE): (
        "N log N", "beta N log(beta N)", lambda n: n * _log2(n), lambda n: n * _log2(n)),
    (Mechanism.CSMA_NACK, PatternKind.N_TO_N): (
        "N^2", "(beta N)^2", lambda n: float(n * n), lambda n: float(n * n)),
    (Mechanism.TDMA_ACK, PatternKind.ONE_TO_N): (
        "N log N", "N log N", lambda n: n * _log2(n), lambda n: n * _log2(n)),
    (Mechanism.TDMA_ACK, PatternKind.N_TO_ONE): (
        "N log N", "N log N + N", lambda n: n * _log2(n), lambda n: n * _log2(n) + n),
    (Mechanism.TDMA_ACK, PatternKind.N_TO_N): (
        "N^2 log N", "N^2 log N", lambda n: n * n * _log2(n), lambda n: n * n * _log2(n)),
    (Mechanism.TDMA_NACK, PatternKind.ONE_TO_N): (
        "N", "N log N", lambda n: float(n), lambda n: n * _log2(n)),
    (Mechanism.TDMA_NACK, PatternKind.N_TO_ONE): (
        "N log N", "N log N + N", lambda n: n * _log2(n), lambda n: n * _log2(n) + n),
    (Mechanism.TDMA_NACK, PatternKind.N_TO_N): (
        "N^2", "N^2", lambda n: float(n * n), lambda n: float(n * n)),
}


def complexity_bound(mechanism: Mechanism, pattern_kind: PatternKind) -> ComplexityOrder:
    """Symbolic message/time orders plus growth callables for regressions."""
    msg, time_, g_msg, g_time = _ORDERS[(mechanism, pattern_kind)]
    return ComplexityOrder(msg, time_, g_msg, g_time)
