"""
False base station model.

The FBS knows the public table and the precheck length, overhears the UE's
sync request to the target, and answers with a forged UL allocation that
claims to come from the target. It never sees the handover ack, so its
start index is a guess.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import Deployment, RadioLink, mean_rss_dbm, power_for_rss
from .protocol import FBS, TARGET, UlAllocation, SyncRequest, ul_allocation_info
from .seqtable import PrecheckSelection, SymbolTable, select_precheck

__all__ = ["PowerPolicy", "FbsStrategy", "fbs_react", "fbs_power_at_ue"]

log = logging.getLogger(__name__)


class PowerPolicy(enum.Enum):
    FIXED = "fixed"
    MATCH_TARGET = "match_target"
    SWEEP = "sweep"


@dataclass(frozen=True)
class FbsStrategy:
    """How the FBS picks its transmit power and timing.

    ``power_dbm`` is the fixed power (``FIXED``) or the sweep coordinate
    (``SWEEP``). ``MATCH_TARGET`` sizes the power so the FBS's mean RSS at the
    UE equals the target's plus ``match_margin_db``, capped at
    ``max_power_dbm``. With ``oracle_start`` the FBS is handed the true start
    index (a stronger adversary than the threat model allows).
    """

    power_policy: PowerPolicy = PowerPolicy.MATCH_TARGET
    power_dbm: float = 30.0
    reaction_delay_s: float = 12e-6
    match_margin_db: float = 0.5
    max_power_dbm: float = 46.0
    oracle_start: bool = False

    def __post_init__(self):
        if not self.reaction_delay_s > 0:
            raise ConfigError("FBS reaction delay must be positive", key="fbs.reaction_delay_us")


def fbs_react(sync: SyncRequest, overheard_at: float, table: SymbolTable, strategy: FbsStrategy,
              seq_length: int, rng: np.random.Generator, true_start: int | None = None,
              ta_steps: int = 0) -> UlAllocation:
    """Forge a UL allocation in reply to an overheard sync request."""
    if strategy.oracle_start and true_start is not None:
        start = true_start
    else:
        start = int(rng.integers(table.length))
    symbols = select_precheck(table, PrecheckSelection(start, seq_length))
    return UlAllocation(
        sender=TARGET,
        receiver=sync.sender,
        send_time=overheard_at + strategy.reaction_delay_s,
        precheck=symbols,
        regular_info=ul_allocation_info(sync.ue_id, ta_steps),
        ue_id=sync.ue_id,
        origin=FBS,
    )


def fbs_power_at_ue(strategy: FbsStrategy, deployment: Deployment, link: RadioLink) -> float:
    """Transmit power (dBm) the FBS uses in this deployment.

    ``link`` describes the target BS; the FBS shares its propagation model.
    """
    if strategy.power_policy is not PowerPolicy.MATCH_TARGET:
        return strategy.power_dbm
    target_rss = mean_rss_dbm(link, deployment.d_ue_target)
    power = power_for_rss(link, deployment.d_ue_fbs, target_rss + strategy.match_margin_db)
    if power > strategy.max_power_dbm:
        log.warning("FBS needs %.1f dBm to match the target; clamped to %.1f dBm", power, strategy.max_power_dbm)
        return strategy.max_power_dbm
    return power
