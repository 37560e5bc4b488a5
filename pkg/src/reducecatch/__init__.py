"""Slot-based simulator for reliable wireless communication patterns and
partially synchronous BFT consensus protocols on top of them."""

__version__ = "0.1.0"

from .core import EventKind, SlotTime, Trace, TraceEvent, fork_rng
from .channel import (
    BurstParams,
    Channel,
    Frame,
    FrameKind,
    LossSchedule,
    TopologyMap,
)
from .world import SimWorld, StopReason, advance_slot, run_until
from .mac import CsmaState, NackBitmap, TdmaSchedule, TimerExpired, build_nack, csma_step, tdma_owner
from .patterns import (
    Mechanism,
    PatternConfig,
    PatternKind,
    PatternOutcome,
    complexity_bound,
    merged_leader_round,
    n_to_n,
    n_to_one,
    ntx_recommend,
    one_to_n,
)
