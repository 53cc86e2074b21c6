"""
Monte Carlo engine: one handover per trial, aggregated into successful
cheating rates (SCR, the fraction of trials in which the UE ends up on the
FBS).

Seeding: the public table and the RSS history come from ``base_seed``
alone; trial ``i`` draws everything else from ``(base_seed, i)``. Sweep
points get their own ``base_seed`` derived from the original seed and the
point's coordinate, so results do not depend on the order of values or on
how trials are split across workers.
"""
from __future__ import annotations

import csv
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..adversary import PowerPolicy, fbs_power_at_ue, fbs_react
from ..detectors import (
    Outcome,
    distance_threshold_detect,
    psd_detect,
    rss_threshold_detect,
    suspicious_region_detect,
)
from ..errors import ConfigError, TrialError
from ..geometry import mean_rss_dbm, propagation_delay, rss_dbm, sample_deployment
from ..phy import ChannelModel, equalize, noise_variance_from_snr, random_taps, transmit
from ..protocol import (
    FBS, SOURCE, TARGET, UE,
    EventQueue, SourceBsState, SyncRequest, TargetBsState, UeContext, UeState,
    UlAllocation, source_bs_step, target_bs_step, ue_measure, ue_step,
)
from ..seqtable import SymbolTable, generate_table
from .config import AXES, ScenarioConfig

__all__ = [
    "World", "TrialOutcome", "ScrEstimate", "build_world", "run_trial", "estimate_scr",
    "run_sweep", "write_csv", "CSV_HEADER", "EVENT_BUDGET", "BACKHAUL_DELAY_S",
]

log = logging.getLogger(__name__)

EVENT_BUDGET = 10_000
BACKHAUL_DELAY_S = 1e-3
UE_ID = 1
CSV_HEADER = ["scheme", "table_len", "seq_len", "snr_db", "fbs_power_dbm", "trials", "scr", "ci95_lo", "ci95_hi"]

_TABLE_STREAM, _HISTORY_STREAM, _TRIAL_STREAM = 0, 1, 2


@dataclass(frozen=True, eq=False)
class World:
    """State shared by every trial of one configuration."""

    table: SymbolTable
    history_mean_dbm: float
    history_std_db: float


@lru_cache(maxsize=32)
def build_world(cfg: ScenarioConfig) -> World:
    table = generate_table(cfg.table_length, cfg.modulation, np.random.default_rng([cfg.base_seed, _TABLE_STREAM]))
    # honest target RSS seen across many UE placements
    rng = np.random.default_rng([cfg.base_seed, _HISTORY_STREAM])
    gamma = cfg.link.path_loss_exponent
    hist = [
        rss_dbm(cfg.link, sample_deployment(cfg.geometry, rng, gamma).d_ue_target, rng)
        for _ in range(cfg.detection.history_samples)
    ]
    return World(table, float(np.mean(hist)), float(np.std(hist, ddof=1)))


@dataclass
class TrialOutcome:
    trial_index: int
    outcome: Outcome | None = None
    error: str | None = None
    handover_triggered: bool = True
    ber_legit: float = math.nan
    ber_fbs: float = math.nan
    # arrival minus window centre, seconds
    arrival_offset_legit: float = math.nan
    arrival_offset_fbs: float = math.nan
    rss_target_dbm: float = math.nan
    rss_fbs_dbm: float = math.nan
    fbs_power_dbm: float = math.nan
    true_start: int | None = None
    fbs_forged: bool = False
    protocol_errors: tuple = ()
    trace: list = field(default_factory=list)


class _Trial:
    """Event loop for a single handover attempt."""

    def __init__(self, cfg: ScenarioConfig, world: World, trial_index: int, trace: bool):
        self.cfg = cfg
        self.world = world
        self.rng = np.random.default_rng([cfg.base_seed, _TRIAL_STREAM, trial_index])
        self.out = TrialOutcome(trial_index)
        self.tracing = trace
        self.queue = EventQueue()
        self.events = 0

    # -- setup

    def setup(self):
        cfg, rng = self.cfg, self.rng
        link = cfg.link
        self.dep = dep = sample_deployment(cfg.geometry, rng, link.path_loss_exponent)
        self.rss = {
            SOURCE: rss_dbm(link, dep.d_ue_source, rng),
            TARGET: rss_dbm(link, dep.d_ue_target, rng),
        }
        self.delay = {
            SOURCE: propagation_delay(dep.d_ue_source),
            TARGET: propagation_delay(dep.d_ue_target),
            FBS: propagation_delay(dep.d_ue_fbs),
        }
        noise = noise_variance_from_snr(cfg.snr_db)
        taps = random_taps(cfg.channel_order, rng, cfg.tap_decay_db, count=3)
        self.channels = {
            SOURCE: ChannelModel(taps[0], cfg.block_size, noise),
            TARGET: ChannelModel(taps[1], cfg.block_size, noise),
        }
        self.fbs_on = cfg.fbs.enabled
        if self.fbs_on:
            self.strategy = cfg.fbs.strategy()
            power = fbs_power_at_ue(self.strategy, dep, link)
            self.rss[FBS] = rss_dbm(link, dep.d_ue_fbs, rng, tx_power_dbm=power)
            snr = cfg.snr_db
            if cfg.fbs.snr_from_rss and not math.isinf(snr):
                snr += self.rss[FBS] - self.rss[TARGET]
            self.channels[FBS] = ChannelModel(taps[2], cfg.block_size, noise_variance_from_snr(snr))
            self.out.fbs_power_dbm = power
            self.out.rss_fbs_dbm = self.rss[FBS]
            self.fbs_sent = False
        self.out.rss_target_dbm = self.rss[TARGET]

        table = self.world.table
        self.source = SourceBsState(table, cfg.hysteresis_db, ue_id=UE_ID)
        self.target = TargetBsState(table, cfg.seq_length, cfg.processing_delay_us * 1e-6)
        self.ue = UeState(ue_id=UE_ID, seq_length=cfg.seq_length)
        self.ctx = UeContext(
            mod=cfg.modulation,
            distance_to_target_m=dep.d_ue_target,
            decide=self._decider(),
            processing_delay_s=cfg.processing_delay_us * 1e-6,
            slack_s=cfg.slack_us * 1e-6,
        )

    def _decider(self):
        cfg, rng, link, world = self.cfg, self.rng, self.cfg.link, self.world
        det = cfg.detection
        name = cfg.detector
        d_target = self.dep.d_ue_target
        if name == "psd":
            return lambda c, std, win: psd_detect(c, std, win, rng, det.ber_accept_threshold)
        if name == "rss3sigma":
            return lambda c, std, win: rss_threshold_detect(c, world.history_mean_dbm, world.history_std_db, rng)
        if name == "distance":
            return lambda c, std, win: distance_threshold_detect(c, link, det.distance_threshold_m, d_target, rng=rng)
        expected = mean_rss_dbm(link, d_target)
        return lambda c, std, win: suspicious_region_detect(c, expected, det.region_alpha, det.region_sigma_db, rng)

    # -- delivery

    def _over_air(self, msg, node: str, arrival: float):
        ch = self.channels[node]
        rx = equalize(transmit(msg.precheck, ch, self.rng), ch)
        return msg.delivered(arrival, precheck=rx, rss_dbm=self.rss[node])

    def send(self, msg):
        """Schedule every reception of ``msg``."""
        q = self.queue
        t = msg.send_time
        if msg.receiver == UE and msg.sender == UE:
            q.push(t, msg.delivered(t))
        elif msg.receiver == SOURCE and msg.sender == UE:
            q.push(t + self.delay[SOURCE], msg.delivered(t + self.delay[SOURCE]))
        elif {msg.sender, msg.receiver} == {SOURCE, TARGET}:
            q.push(t + BACKHAUL_DELAY_S, msg.delivered(t + BACKHAUL_DELAY_S))
        elif msg.sender == SOURCE:
            q.push(t + self.delay[SOURCE], self._over_air(msg, SOURCE, t + self.delay[SOURCE]))
        elif isinstance(msg, SyncRequest):
            q.push(t + self.delay[TARGET], msg.delivered(t + self.delay[TARGET]))
            if self.fbs_on:
                heard = t + self.delay[FBS]
                q.push(heard, msg.delivered(heard, receiver=FBS))
        elif isinstance(msg, UlAllocation) and msg.origin == FBS:
            arrival = t + self.delay[FBS]
            q.push(arrival, self._over_air(msg, FBS, arrival))
            self.out.fbs_forged = True
            self.out.arrival_offset_fbs = arrival - self._window_centre()
        elif isinstance(msg, UlAllocation):
            arrival = t + self.delay[TARGET]
            q.push(arrival, self._over_air(msg, TARGET, arrival))
            self.out.arrival_offset_legit = arrival - self._window_centre()
        else:
            raise TrialError(f"no route for {msg.kind} {msg.sender}->{msg.receiver}")

    def _window_centre(self) -> float:
        lo, hi = self.ue.expected_arrival_window
        return 0.5 * (lo + hi)

    def _fbs_handle(self, msg):
        if isinstance(msg, SyncRequest) and not self.fbs_sent:
            self.fbs_sent = True
            true_start = self.target.selection.start_index if self.target.selection else None
            forged = fbs_react(msg, msg.arrival_time, self.world.table, self.strategy, self.cfg.seq_length,
                               self.rng, true_start=true_start)
            self.send(forged)

    # -- loop

    def run(self) -> TrialOutcome:
        self.setup()
        self.ue, out = ue_measure(self.ue, {SOURCE: self.rss[SOURCE], TARGET: self.rss[TARGET]}, now=0.0)
        for m in out:
            self.send(m)
        while self.queue:
            self.events += 1
            if self.events > EVENT_BUDGET:
                raise TrialError(f"event budget of {EVENT_BUDGET} exhausted")
            now, msg = self.queue.pop()
            if not msg.send_time <= now:
                raise TrialError(f"{msg.kind} processed at {now} before it was sent at {msg.send_time}")
            if self.tracing:
                sender = FBS if getattr(msg, "origin", None) == FBS else msg.sender
                self.out.trace.append(f"{now:.9e},{sender},{msg.receiver},{msg.kind}")
            rx = msg.receiver
            if rx == SOURCE:
                self.source, out = source_bs_step(self.source, msg)
            elif rx == TARGET:
                self.target, out = target_bs_step(self.target, msg, rng=self.rng)
            elif rx == UE:
                self.ue, out = ue_step(self.ue, msg, self.ctx)
            else:
                self._fbs_handle(msg)
                out = []
            for m in out:
                self.send(m)
        return self.finish()

    def finish(self) -> TrialOutcome:
        out = self.out
        out.protocol_errors = self.source.errors + self.target.errors + self.ue.errors
        if self.target.selection is not None:
            out.true_start = self.target.selection.start_index
        if self.source.phase.name == "IDLE":
            # measurement report never triggered a handover
            out.handover_triggered = False
            out.outcome = Outcome.ALL_REJECTED
            return out
        if not self.ue.phase.terminal:
            raise TrialError(f"UE stuck in {self.ue.phase.name}")
        verdict = self.ue.verdict
        out.outcome = verdict.detection_outcome
        for cand, b in zip(self.ue.candidates, verdict.bers):
            if cand.true_origin.value == "fbs":
                out.ber_fbs = b
            else:
                out.ber_legit = b
        return out


def run_trial(cfg: ScenarioConfig, trial_index: int, trace: bool = False) -> TrialOutcome:
    """One full handover attempt. Trial errors are captured in ``outcome.error``."""
    trial = _Trial(cfg, build_world(cfg), trial_index, trace)
    try:
        return trial.run()
    except TrialError as exc:
        trial.out.error = str(exc)
        trial.out.outcome = None
        return trial.out


@dataclass(frozen=True)
class ScrEstimate:
    scheme: str
    table_len: int
    seq_len: int
    snr_db: float
    fbs_power_dbm: float
    trials: int
    successes: int
    failures: int
    rejections: int
    errors: int

    @property
    def scr(self) -> float:
        return self.successes / self.trials

    @property
    def ci95(self) -> tuple[float, float]:
        p = self.scr
        half = 1.959963984540054 * math.sqrt(p * (1.0 - p) / self.trials)
        return max(0.0, p - half), min(1.0, p + half)

    @property
    def handover_failure_rate(self) -> float:
        return self.rejections / self.trials


def _run_chunk(args):
    cfg, lo, hi = args
    counts = {o: 0 for o in Outcome}
    errors = 0
    powers = []
    for i in range(lo, hi):
        res = run_trial(cfg, i)
        if res.outcome is None:
            errors += 1
        else:
            counts[res.outcome] += 1
        powers.append(res.fbs_power_dbm)
    return counts, errors, powers


def estimate_scr(cfg: ScenarioConfig, workers: int = 1, chunk_size: int = 2000) -> ScrEstimate:
    cfg.validate()
    chunks = [(cfg, lo, min(lo + chunk_size, cfg.trials)) for lo in range(0, cfg.trials, chunk_size)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, chunks))
    else:
        results = [_run_chunk(c) for c in chunks]
    counts = {o: 0 for o in Outcome}
    errors = 0
    powers = []
    for c, e, p in results:
        for o in Outcome:
            counts[o] += c[o]
        errors += e
        powers.extend(p)
    if cfg.fbs.policy is PowerPolicy.MATCH_TARGET:
        # coordinate is the mean power the FBS actually used
        power = float(np.nanmean(powers)) if cfg.fbs.enabled else math.nan
    else:
        power = cfg.fbs.power_dbm
    return ScrEstimate(
        scheme=cfg.detector,
        table_len=cfg.table_length,
        seq_len=cfg.seq_length,
        snr_db=cfg.snr_db,
        fbs_power_dbm=power,
        trials=cfg.trials,
        successes=counts[Outcome.FBS_CHOSEN],
        failures=counts[Outcome.LEGIT_CHOSEN],
        rejections=counts[Outcome.ALL_REJECTED],
        errors=errors,
    )


def point_seed(base_seed: int, axis: str, value) -> int:
    tag = zlib.crc32(f"{axis}={value!r}".encode())
    return int(np.random.SeedSequence([base_seed, tag]).generate_state(1, dtype=np.uint32)[0])


def _axis_value(cfg: ScenarioConfig, key: str, value):
    kind = type(cfg.get(key))
    if kind is int:
        if float(value) != int(float(value)):
            raise ConfigError(f"expected an integer, got {value!r}", key=key)
        return int(float(value))
    return float(value)


def run_sweep(cfg: ScenarioConfig, axis: str, values, workers: int = 1) -> list[ScrEstimate]:
    """One SCR estimate per admissible value of ``axis``, in ascending order.

    Sweeping ``fbs_power`` switches the FBS to the sweep power policy.
    Values that violate a config invariant are skipped and logged.
    """
    if axis not in AXES:
        raise ConfigError(f"unknown axis, expected one of {', '.join(AXES)}", key="axis")
    values = list(values)
    if not values:
        raise ConfigError("no values to sweep", key="values")
    key = AXES[axis]
    results = []
    for raw in sorted(values, key=float):
        try:
            value = _axis_value(cfg, key, raw)
            changes = {key: value}
            if axis == "fbs_power":
                changes["fbs.power_policy"] = "sweep"
            point = cfg.with_values(changes)
            point = replace(point, base_seed=point_seed(cfg.base_seed, axis, value)).validate()
        except ConfigError as exc:
            log.warning("skipping %s=%s: %s", axis, raw, exc)
            continue
        results.append(estimate_scr(point, workers=workers))
    return results


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.6g}"


def write_csv(results, path) -> None:
    results = list(results)
    if not results:
        raise ValueError("no results to write")
    rows = sorted(results, key=lambda r: (r.scheme, r.table_len, r.seq_len, r.snr_db, r.fbs_power_dbm))
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in rows:
                lo, hi = r.ci95
                w.writerow([r.scheme, r.table_len, r.seq_len, _fmt(r.snr_db), _fmt(r.fbs_power_dbm),
                            r.trials, _fmt(r.scr), _fmt(lo), _fmt(hi)])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc
