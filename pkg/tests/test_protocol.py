import math

import numpy as np
import pytest

from precheck.detectors import Outcome, psd_detect
from precheck.errors import ProtocolError
from precheck.phy import Modulation, demodulate
from precheck.protocol import (
    FBS, SOURCE, SOURCE_TRANSITIONS, TARGET, TARGET_TRANSITIONS, UE, UE_TRANSITIONS,
    DecisionTimer, EventQueue, HandoverRequest, HandoverRequestAck, MeasurementReport, PrecheckForward,
    SourceBsState, SourcePhase, SyncRequest, TargetBsState, TargetPhase, UeContext, UePhase, UeState,
    UlAllocation, expected_window, source_bs_step, target_bs_step, ue_measure, ue_step, ul_allocation_info,
)
from precheck.seqtable import PrecheckSelection, generate_table

MOD16 = Modulation(16)
TABLE = generate_table(32, MOD16, np.random.default_rng(3))


def mr(target, source, t=0.0):
    return MeasurementReport(sender=UE, receiver=SOURCE, send_time=t, arrival_time=t,
                             rss={TARGET: target, SOURCE: source})


def psd_ctx(distance=300.0):
    return UeContext(mod=MOD16, distance_to_target_m=distance,
                     decide=lambda c, std, win: psd_detect(c, std, win, None))


def alloc(symbols, t, origin="legit", sender=TARGET):
    return UlAllocation(sender=sender, receiver=UE, send_time=t, arrival_time=t, precheck=symbols,
                        regular_info=ul_allocation_info(1, 0), ue_id=1, origin=origin)


class TestSource:
    def test_report_triggers_request(self):
        state, out = source_bs_step(SourceBsState(TABLE, 3.0, ue_id=7), mr(-70, -80))
        assert state.phase is SourcePhase.PREPARING
        assert len(out) == 1 and isinstance(out[0], HandoverRequest) and out[0].ue_id == 7

    def test_weak_target_no_handover(self):
        state, out = source_bs_step(SourceBsState(TABLE, 3.0), mr(-80, -70))
        assert state.phase is SourcePhase.IDLE and out == []

    def test_ack_forwards_wrapped_selection(self):
        state = SourceBsState(TABLE, 3.0, phase=SourcePhase.PREPARING)
        ack = HandoverRequestAck(sender=TARGET, receiver=SOURCE, send_time=0, arrival_time=0.001,
                                 start_index=30, seq_length=8)
        state, out = source_bs_step(state, ack)
        assert state.phase is SourcePhase.DONE
        (fwd,) = out
        assert isinstance(fwd, PrecheckForward) and fwd.receiver == UE
        np.testing.assert_array_equal(fwd.precheck, TABLE.base_symbols[[30, 31, 0, 1, 2, 3, 4, 5]])


class TestTarget:
    def test_request_gives_ack_in_range(self):
        rng = np.random.default_rng(0)
        req = HandoverRequest(sender=SOURCE, receiver=TARGET, send_time=0, arrival_time=0.001, ue_id=1)
        state, (ack,) = target_bs_step(TargetBsState(TABLE, 8), req, rng=rng)
        assert 0 <= ack.start_index < 32 and ack.seq_length == 8
        assert state.phase is TargetPhase.AWAITING_SYNC

    def test_independent_starts(self):
        rng = np.random.default_rng(1)
        req = HandoverRequest(sender=SOURCE, receiver=TARGET, send_time=0, arrival_time=0, ue_id=1)
        starts = [target_bs_step(TargetBsState(TABLE, 8), req, rng=rng)[1][0].start_index for _ in range(32_000)]
        counts = np.bincount(starts, minlength=32)
        sigma = math.sqrt(32_000 / 32 * (31 / 32))
        assert np.all(np.abs(counts - 1000) < 4 * sigma)
        pairs = np.array(starts).reshape(-1, 2)
        assert abs(np.corrcoef(pairs.T)[0, 1]) < 0.05

    def test_allocation_matches_ack(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            req = HandoverRequest(sender=SOURCE, receiver=TARGET, send_time=0, arrival_time=0, ue_id=1)
            state, (ack,) = target_bs_step(TargetBsState(TABLE, 8, processing_delay_s=1e-5), req, rng=rng)
            sync = SyncRequest(sender=UE, receiver=TARGET, send_time=0.002, arrival_time=0.002, ue_id=1)
            state, (ul,) = target_bs_step(state, sync)
            idx = (ack.start_index + np.arange(8)) % 32
            np.testing.assert_array_equal(ul.precheck, TABLE.base_symbols[idx])
            assert ul.send_time == pytest.approx(0.002 + 1e-5)
            assert state.phase is TargetPhase.DONE

    def test_sync_from_other_ue_ignored(self):
        state = TargetBsState(TABLE, 8, ue_id=1, phase=TargetPhase.AWAITING_SYNC)
        sync = SyncRequest(sender=UE, receiver=TARGET, send_time=0, arrival_time=0, ue_id=2)
        assert target_bs_step(state, sync) == (state, [])

    def test_info_fixed_width(self):
        assert len(ul_allocation_info(1, 0)) == len(ul_allocation_info(999_999, 99_999))


def forward(symbols, t=0.0):
    return PrecheckForward(sender=SOURCE, receiver=UE, send_time=t, arrival_time=t, precheck=symbols)


def verifying_ue(symbols, ctx, t0=0.0):
    ue, _ = ue_measure(UeState(ue_id=1, seq_length=8), {SOURCE: -80, TARGET: -70})
    ue, out = ue_step(ue, forward(symbols, t0), ctx)
    return ue, out


class TestUe:
    symbols = TABLE.base_symbols[:8]

    def test_measure_only_once(self):
        ue, (m,) = ue_measure(UeState(ue_id=1), {SOURCE: -80, TARGET: -70})
        assert isinstance(m, MeasurementReport) and ue.phase is UePhase.AWAITING_ACK
        with pytest.raises(ProtocolError):
            ue_measure(ue, {})

    def test_forward_emits_sync_and_timer(self):
        ctx = psd_ctx()
        ue, (sync, timer) = verifying_ue(self.symbols, ctx, t0=1.0)
        assert isinstance(sync, SyncRequest) and sync.receiver == TARGET
        assert isinstance(timer, DecisionTimer) and timer.send_time == ue.expected_arrival_window[1]
        np.testing.assert_array_equal(ue.standard_precheck, demodulate(self.symbols, MOD16))
        assert ue.phase is UePhase.AWAITING_UL_ALLOC

    def test_honest_path(self):
        ctx = psd_ctx()
        ue, _ = verifying_ue(self.symbols, ctx)
        centre = sum(ue.expected_arrival_window) / 2
        ue, _ = ue_step(ue, alloc(self.symbols, centre), ctx)
        assert ue.phase is UePhase.VERIFYING
        ue, _ = ue_step(ue, DecisionTimer(sender=UE, receiver=UE, send_time=ue.expected_arrival_window[1],
                                          arrival_time=ue.expected_arrival_window[1]), ctx)
        assert ue.phase is UePhase.HANDED_OVER
        assert ue.verdict.detection_outcome is Outcome.LEGIT_CHOSEN

    def test_late_single_allocation(self):
        ctx = psd_ctx()
        ue, _ = verifying_ue(self.symbols, ctx)
        ue, _ = ue_step(ue, alloc(self.symbols, ue.expected_arrival_window[1] + 1e-7), ctx)
        assert ue.phase is UePhase.ATTACK_DETECTED

    def test_legit_beats_noisy_forgery(self):
        ctx = psd_ctx()
        ue, _ = verifying_ue(self.symbols, ctx)
        centre = sum(ue.expected_arrival_window) / 2
        forged = TABLE.base_symbols[16:24]
        ue, _ = ue_step(ue, alloc(forged, centre - 1e-7, origin=FBS), ctx)
        ue, _ = ue_step(ue, alloc(self.symbols, centre), ctx)
        ue, _ = ue_step(ue, DecisionTimer(sender=UE, receiver=UE, send_time=0, arrival_time=centre + 1e-6), ctx)
        assert ue.phase is UePhase.HANDED_OVER
        assert ue.verdict.bers[1] == 0 and ue.verdict.bers[0] > 0

    def test_allocation_before_sync_is_out_of_window(self):
        ctx = psd_ctx()
        ue, _ = ue_measure(UeState(ue_id=1, seq_length=8), {SOURCE: -80, TARGET: -70})
        ue, _ = ue_step(ue, alloc(self.symbols, 0.0, origin=FBS), ctx)
        assert ue.candidates[0].arrival_time == -math.inf

    def test_length_mismatch_recorded(self):
        ctx = psd_ctx()
        ue, _ = verifying_ue(self.symbols, ctx)
        ue, _ = ue_step(ue, alloc(self.symbols[:4], 1e-5), ctx)
        assert ue.errors and not ue.candidates

    def test_terminal_ignores_late_allocations(self):
        ctx = psd_ctx()
        ue, _ = verifying_ue(self.symbols, ctx)
        ue, _ = ue_step(ue, alloc(self.symbols, 1.0), ctx)
        after, out = ue_step(ue, alloc(self.symbols, 2.0), ctx)
        assert after is ue and out == []


STATE_FACTORIES = {
    "source": (SourcePhase, SOURCE_TRANSITIONS, lambda p: SourceBsState(TABLE, phase=p),
               lambda s, m: source_bs_step(s, m)),
    "target": (TargetPhase, TARGET_TRANSITIONS, lambda p: TargetBsState(TABLE, 8, ue_id=1, selection=PrecheckSelection(3, 8), phase=p),
               lambda s, m: target_bs_step(s, m, rng=np.random.default_rng(0))),
}


def sample_messages():
    sym = TABLE.base_symbols[:8]
    return [
        mr(-70, -80),
        HandoverRequest(sender=SOURCE, receiver=TARGET, send_time=0, arrival_time=0, ue_id=1),
        HandoverRequestAck(sender=TARGET, receiver=SOURCE, send_time=0, arrival_time=0, start_index=0, seq_length=8),
        forward(sym),
        SyncRequest(sender=UE, receiver=TARGET, send_time=0, arrival_time=0, ue_id=1),
        alloc(sym, 0.0),
        DecisionTimer(sender=UE, receiver=UE, send_time=0, arrival_time=0),
    ]


@pytest.mark.parametrize("node", sorted(STATE_FACTORIES))
def test_transition_table_exhaustive_bs(node):
    phases, table, make, step = STATE_FACTORIES[node]
    for phase in phases:
        for msg in sample_messages():
            state = make(phase)
            new, _ = step(state, msg)
            if msg.kind in table[phase]:
                assert not new.errors, (phase, msg.kind)
            else:
                assert len(new.errors) == 1 and new.phase is phase, (phase, msg.kind)


def test_transition_table_exhaustive_ue():
    ctx = psd_ctx()
    for phase in UePhase:
        for msg in sample_messages():
            state = UeState(ue_id=1, seq_length=8, phase=phase, expected_arrival_window=(0.0, 1.0),
                            standard_precheck=demodulate(TABLE.base_symbols[:8], MOD16))
            new, _ = ue_step(state, msg, ctx)
            if msg.kind in UE_TRANSITIONS[phase]:
                assert not new.errors, (phase, msg.kind)
            else:
                assert len(new.errors) == 1 and new.phase is phase, (phase, msg.kind)


class TestWindow:
    def test_zero_distance(self):
        lo, hi = expected_window(0.0, 0.0, 1e-6, sync_time=5.0)
        assert (lo, hi) == pytest.approx((5.0 - 1e-6, 5.0 + 1e-6))

    def test_300m(self):
        lo, hi = expected_window(300.0, 10e-6, 2e-6)
        assert (lo + hi) / 2 == pytest.approx(12.0e-6, abs=0.01e-6)

    @pytest.mark.parametrize("d,slack", [(10, 1e-6), (500, 3e-6), (1000, 0)])
    def test_width(self, d, slack):
        lo, hi = expected_window(d, 1e-5, slack, sync_time=0.3)
        assert hi - lo == pytest.approx(2 * slack)


def test_event_queue_orders_ties_by_insertion():
    q = EventQueue()
    msgs = [DecisionTimer(sender=UE, receiver=UE, send_time=t) for t in (2.0, 1.0, 1.0, 0.5)]
    for m in msgs:
        q.push(m.send_time, m)
    order = [q.pop()[1] for _ in range(len(q))]
    assert order == [msgs[3], msgs[1], msgs[2], msgs[0]]
