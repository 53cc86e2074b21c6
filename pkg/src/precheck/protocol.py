"""
Handover signalling with precheck-sequence verification.

Three per-node state machines (source BS, target BS, UE) exchange the
messages below. Each ``*_step`` function is pure: it takes the current state
and one delivered message and returns the new state plus outgoing messages.
Delivery (propagation delay, radio impairments, ordering) is the job of the
event loop in :mod:`precheck.harness.engine`.

Sequence:

1. UE -> source: ``MeasurementReport``
2. source -> target: ``HandoverRequest``; target -> source: ``HandoverRequestAck``
   carrying the selection start index and length
3. source -> UE: ``PrecheckForward`` with the selected symbols (the UE's
   reference copy)
4. UE -> target: ``SyncRequest`` (overheard by an FBS)
5. target -> UE: ``UlAllocation`` with the same selected symbols

The UE collects every ``UlAllocation`` until the end of its expected arrival
window and then hands them to a detector.
"""
from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .detectors import CandidateSignal, Origin, Outcome
from .errors import ProtocolError
from .geometry import propagation_delay
from .phy import Modulation, demodulate
from .seqtable import PrecheckSelection, SymbolTable, random_selection, select_precheck

__all__ = [
    "SOURCE", "TARGET", "UE", "FBS",
    "Message", "MeasurementReport", "HandoverRequest", "HandoverRequestAck",
    "PrecheckForward", "SyncRequest", "UlAllocation", "DecisionTimer",
    "SourcePhase", "TargetPhase", "UePhase",
    "SourceBsState", "TargetBsState", "UeState", "UeContext",
    "source_bs_step", "target_bs_step", "ue_step", "ue_measure",
    "expected_window", "ul_allocation_info", "EventQueue",
    "SOURCE_TRANSITIONS", "TARGET_TRANSITIONS", "UE_TRANSITIONS",
]

SOURCE = "source"
TARGET = "target"
UE = "ue"
FBS = "fbs"

LEGIT = "legit"


@dataclass(frozen=True, kw_only=True)
class Message:
    sender: str
    receiver: str
    send_time: float
    # filled in on delivery
    arrival_time: float = math.nan
    rss_dbm: float = math.nan

    @property
    def kind(self) -> str:
        return type(self).__name__

    def delivered(self, arrival_time: float, **changes) -> "Message":
        return _evolve(self, arrival_time=arrival_time, **changes)


@dataclass(frozen=True, kw_only=True)
class MeasurementReport(Message):
    rss: dict


@dataclass(frozen=True, kw_only=True)
class HandoverRequest(Message):
    ue_id: int


@dataclass(frozen=True, kw_only=True)
class HandoverRequestAck(Message):
    start_index: int
    seq_length: int
    regular_info: bytes = b""


@dataclass(frozen=True, kw_only=True, eq=False)
class PrecheckForward(Message):
    precheck: np.ndarray
    regular_info: bytes = b""


@dataclass(frozen=True, kw_only=True)
class SyncRequest(Message):
    ue_id: int


@dataclass(frozen=True, kw_only=True, eq=False)
class UlAllocation(Message):
    precheck: np.ndarray
    regular_info: bytes
    ue_id: int
    # ground truth for scoring only; ``sender`` is what the UE sees
    origin: str = LEGIT


@dataclass(frozen=True, kw_only=True)
class DecisionTimer(Message):
    """UE self-timer marking the end of the collection window."""


def ul_allocation_info(ue_id: int, ta_steps: int) -> bytes:
    """Fixed-width regular information (cell ID, TA, UL grant)."""
    return f"cell=LBS2;ue={ue_id:06d};ta={ta_steps:05d};ulgrant=0x{(ue_id * 2654435761) & 0xFFFF:04x}".encode()


def expected_window(distance_m: float, processing_delay_s: float, slack_s: float,
                    sync_time: float = 0.0) -> tuple[float, float]:
    """Arrival window for the target's reply to a sync request sent at ``sync_time``."""
    center = sync_time + 2.0 * propagation_delay(distance_m) + processing_delay_s
    return center - slack_s, center + slack_s


def _evolve(obj, **changes):
    """Cheap ``dataclasses.replace`` for frozen records already validated."""
    new = object.__new__(type(obj))
    new.__dict__.update(obj.__dict__)
    new.__dict__.update(changes)
    return new


def _reject(state, msg: Message):
    err = f"{type(state).__name__} in {state.phase.name} cannot accept {msg.kind} from {msg.sender}"
    return _evolve(state, errors=state.errors + (err,)), []


# ---------------------------------------------------------------- source BS

class SourcePhase(enum.Enum):
    IDLE = enum.auto()
    PREPARING = enum.auto()
    DONE = enum.auto()


SOURCE_TRANSITIONS = {
    SourcePhase.IDLE: {"MeasurementReport"},
    SourcePhase.PREPARING: {"HandoverRequestAck"},
    SourcePhase.DONE: set(),
}


@dataclass(frozen=True)
class SourceBsState:
    table: SymbolTable
    hysteresis_db: float = 3.0
    ue_id: int = 0
    phase: SourcePhase = SourcePhase.IDLE
    errors: tuple = ()


def source_bs_step(state: SourceBsState, msg: Message):
    if msg.kind not in SOURCE_TRANSITIONS[state.phase]:
        return _reject(state, msg)
    now = msg.arrival_time
    if isinstance(msg, MeasurementReport):
        if msg.rss[TARGET] - msg.rss[SOURCE] < state.hysteresis_db:
            return state, []
        req = HandoverRequest(sender=SOURCE, receiver=TARGET, send_time=now, ue_id=state.ue_id)
        return _evolve(state, phase=SourcePhase.PREPARING), [req]
    # HandoverRequestAck: pick the symbols named in the ack and forward them
    symbols = select_precheck(state.table, PrecheckSelection(msg.start_index, msg.seq_length))
    fwd = PrecheckForward(sender=SOURCE, receiver=UE, send_time=now, precheck=symbols,
                          regular_info=msg.regular_info)
    return _evolve(state, phase=SourcePhase.DONE), [fwd]


# ---------------------------------------------------------------- target BS

class TargetPhase(enum.Enum):
    IDLE = enum.auto()
    AWAITING_SYNC = enum.auto()
    DONE = enum.auto()


TARGET_TRANSITIONS = {
    TargetPhase.IDLE: {"HandoverRequest"},
    TargetPhase.AWAITING_SYNC: {"SyncRequest"},
    TargetPhase.DONE: set(),
}


@dataclass(frozen=True)
class TargetBsState:
    table: SymbolTable
    seq_length: int
    processing_delay_s: float = 10e-6
    ue_id: int | None = None
    selection: PrecheckSelection | None = None
    phase: TargetPhase = TargetPhase.IDLE
    errors: tuple = ()


def target_bs_step(state: TargetBsState, msg: Message, table: SymbolTable | None = None,
                   rng: np.random.Generator | None = None, ta_steps: int = 0):
    """``table`` defaults to the one held in ``state``; ``rng`` draws the start index."""
    if msg.kind not in TARGET_TRANSITIONS[state.phase]:
        return _reject(state, msg)
    table = state.table if table is None else table
    now = msg.arrival_time
    if isinstance(msg, HandoverRequest):
        sel = random_selection(table.length, state.seq_length, rng)
        info = f"rach=dedicated;ue={msg.ue_id:06d}".encode()
        ack = HandoverRequestAck(sender=TARGET, receiver=SOURCE, send_time=now,
                                 start_index=sel.start_index, seq_length=sel.length, regular_info=info)
        return _evolve(state, phase=TargetPhase.AWAITING_SYNC, selection=sel, ue_id=msg.ue_id), [ack]
    if msg.ue_id != state.ue_id:
        return state, []
    alloc = UlAllocation(sender=TARGET, receiver=UE, send_time=now + state.processing_delay_s,
                         precheck=select_precheck(table, state.selection),
                         regular_info=ul_allocation_info(msg.ue_id, ta_steps), ue_id=msg.ue_id)
    return _evolve(state, phase=TargetPhase.DONE), [alloc]


# ---------------------------------------------------------------- UE

class UePhase(enum.Enum):
    CONNECTED = enum.auto()
    AWAITING_ACK = enum.auto()
    AWAITING_UL_ALLOC = enum.auto()
    VERIFYING = enum.auto()
    HANDED_OVER = enum.auto()
    ATTACK_DETECTED = enum.auto()
    CHEAT_SUCCEEDED = enum.auto()

    @property
    def terminal(self) -> bool:
        return self in (UePhase.HANDED_OVER, UePhase.ATTACK_DETECTED, UePhase.CHEAT_SUCCEEDED)


# late UlAllocations after the decision are dropped silently
UE_TRANSITIONS = {
    UePhase.CONNECTED: set(),
    UePhase.AWAITING_ACK: {"PrecheckForward", "UlAllocation"},
    UePhase.AWAITING_UL_ALLOC: {"UlAllocation", "DecisionTimer"},
    UePhase.VERIFYING: {"UlAllocation", "DecisionTimer"},
    UePhase.HANDED_OVER: {"UlAllocation"},
    UePhase.ATTACK_DETECTED: {"UlAllocation"},
    UePhase.CHEAT_SUCCEEDED: {"UlAllocation"},
}


@dataclass(frozen=True)
class UeContext:
    """What the UE knows about its radio environment.

    ``decide(candidates, standard_bits, window)`` returns a
    :class:`~precheck.detectors.Verdict`.
    """

    mod: Modulation
    distance_to_target_m: float
    decide: Callable
    processing_delay_s: float = 10e-6
    slack_s: float = 2e-6


@dataclass(frozen=True)
class UeState:
    ue_id: int = 0
    seq_length: int = 8
    phase: UePhase = UePhase.CONNECTED
    standard_precheck: np.ndarray | None = field(default=None, compare=False)
    expected_arrival_window: tuple[float, float] | None = None
    sync_time: float | None = None
    candidates: tuple = ()
    verdict: object = None
    errors: tuple = ()


def ue_measure(state: UeState, rss: dict, now: float = 0.0):
    """Start the procedure by reporting RSS to the serving (source) BS."""
    if state.phase is not UePhase.CONNECTED:
        raise ProtocolError(f"measurement report from phase {state.phase.name}")
    mr = MeasurementReport(sender=UE, receiver=SOURCE, send_time=now, rss=dict(rss))
    return _evolve(state, phase=UePhase.AWAITING_ACK), [mr]


def _candidate(msg: UlAllocation, mod: Modulation):
    return CandidateSignal(
        demodulated_precheck=demodulate(msg.precheck, mod),
        arrival_time=msg.arrival_time,
        rss_dbm=msg.rss_dbm,
        claimed_sender=msg.sender,
        true_origin=Origin.FBS if msg.origin == FBS else Origin.LEGIT,
    )


def _close_window(state: UeState, ctx: UeContext):
    verdict = ctx.decide(list(state.candidates), state.standard_precheck, state.expected_arrival_window)
    phase = {
        Outcome.LEGIT_CHOSEN: UePhase.HANDED_OVER,
        Outcome.FBS_CHOSEN: UePhase.CHEAT_SUCCEEDED,
        Outcome.ALL_REJECTED: UePhase.ATTACK_DETECTED,
    }[verdict.detection_outcome]
    return _evolve(state, phase=phase, verdict=verdict), []


def ue_step(state: UeState, msg: Message, ctx: UeContext):
    if msg.kind not in UE_TRANSITIONS[state.phase]:
        return _reject(state, msg)
    now = msg.arrival_time
    if state.phase.terminal:
        return state, []

    if isinstance(msg, PrecheckForward):
        standard = demodulate(msg.precheck, ctx.mod)
        window = expected_window(ctx.distance_to_target_m, ctx.processing_delay_s, ctx.slack_s, sync_time=now)
        sync = SyncRequest(sender=UE, receiver=TARGET, send_time=now, ue_id=state.ue_id)
        timer = DecisionTimer(sender=UE, receiver=UE, send_time=window[1])
        new = _evolve(state, phase=UePhase.AWAITING_UL_ALLOC, standard_precheck=standard,
                      expected_arrival_window=window, sync_time=now)
        return new, [sync, timer]

    if isinstance(msg, DecisionTimer):
        return _close_window(state, ctx)

    # UlAllocation
    if msg.precheck.size != state.seq_length:
        return _evolve(state, errors=state.errors + (f"precheck length {msg.precheck.size} != {state.seq_length}",)), []
    cand = _candidate(msg, ctx.mod)
    if state.phase is UePhase.AWAITING_ACK:
        # no sync request sent yet: a legitimate target cannot be answering
        cand = _evolve(cand, arrival_time=-math.inf)
        return _evolve(state, candidates=state.candidates + (cand,)), []
    new = _evolve(state, phase=UePhase.VERIFYING, candidates=state.candidates + (cand,))
    if now > state.expected_arrival_window[1]:
        return _close_window(new, ctx)
    return new, []


# ---------------------------------------------------------------- event queue

class EventQueue:
    """Deliveries ordered by (time, insertion sequence)."""

    def __init__(self):
        self._heap = []
        self._seq = 0

    def push(self, time: float, msg: Message) -> None:
        heapq.heappush(self._heap, (time, self._seq, msg))
        self._seq += 1

    def pop(self) -> tuple[float, Message]:
        time, _, msg = heapq.heappop(self._heap)
        return time, msg

    def __len__(self) -> int:
        return len(self._heap)
