"""
Legitimacy checks a UE applies to the UL allocations it receives.

``psd_detect`` is the precheck-sequence rule: drop anything outside the
expected arrival window, then keep the candidate whose precheck bits are
closest (lowest BER) to the reference copy received from the source BS.

The three baselines look only at received signal strength:

* ``rss_threshold_detect``: reject anything stronger than mean + 3 std of
  an honest RSS history.
* ``distance_threshold_detect``: invert the path-loss model with the
  claimed sender's power and reject when the implied distance is off.
* ``suspicious_region_detect``: reject RSS outside a two-sided Gaussian
  acceptance region around the predicted value.

All baselines then pick the strongest surviving candidate, which is how a
UE ordinarily chooses between signals that look alike.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import ConfigError
from .geometry import RadioLink, distance_from_rss
from .phy import ber

__all__ = [
    "Origin",
    "Outcome",
    "CandidateSignal",
    "Verdict",
    "psd_detect",
    "rss_threshold_detect",
    "distance_threshold_detect",
    "suspicious_region_detect",
    "region_half_width_db",
]


class Origin(enum.Enum):
    LEGIT = "legit"
    FBS = "fbs"


class Outcome(enum.Enum):
    LEGIT_CHOSEN = "legit_chosen"
    FBS_CHOSEN = "fbs_chosen"
    ALL_REJECTED = "all_rejected"


@dataclass(frozen=True, eq=False)
class CandidateSignal:
    """A received UL allocation as seen by the UE.

    ``true_origin`` is ground truth used for scoring; detectors never read it.
    """

    demodulated_precheck: np.ndarray
    arrival_time: float
    rss_dbm: float
    claimed_sender: str = "target"
    true_origin: Origin = Origin.LEGIT


@dataclass(frozen=True)
class Verdict:
    legal: tuple[bool, ...]
    chosen: int | None
    detection_outcome: Outcome
    bers: tuple[float, ...] = ()


def _verdict(candidates, legal, chosen, bers=()) -> Verdict:
    if chosen is None:
        outcome = Outcome.ALL_REJECTED
    elif candidates[chosen].true_origin is Origin.FBS:
        outcome = Outcome.FBS_CHOSEN
    else:
        outcome = Outcome.LEGIT_CHOSEN
    return Verdict(tuple(bool(x) for x in legal), chosen, outcome, tuple(bers))


def _pick(indices: list[int], rng: np.random.Generator | None) -> int:
    if len(indices) == 1 or rng is None:
        return indices[0]
    return indices[int(rng.integers(len(indices)))]


def _strongest_legal(candidates, legal, rng) -> Verdict:
    ok = [i for i, flag in enumerate(legal) if flag]
    if not ok:
        return _verdict(candidates, legal, None)
    best = max(candidates[i].rss_dbm for i in ok)
    return _verdict(candidates, legal, _pick([i for i in ok if candidates[i].rss_dbm == best], rng))


def psd_detect(candidates, standard_precheck, window: tuple[float, float],
               rng: np.random.Generator | None = None, ber_accept_threshold: float = 0.25) -> Verdict:
    """Precheck-sequence decision.

    Exact BER ties among the best candidates are broken uniformly at random
    with ``rng`` (first candidate if ``rng`` is None). A lone in-window
    candidate must also have BER <= ``ber_accept_threshold``.
    """
    standard = np.asarray(standard_precheck)
    if standard.size == 0:
        raise ConfigError("standard precheck sequence is empty", key="standard_precheck")
    if not candidates:
        return _verdict(candidates, [], None)
    t_lo, t_hi = window
    in_window = [t_lo <= c.arrival_time <= t_hi for c in candidates]
    bers = [ber(c.demodulated_precheck, standard) for c in candidates]
    legal = [False] * len(candidates)
    live = [i for i, ok in enumerate(in_window) if ok]
    if not live:
        return _verdict(candidates, legal, None, bers)
    if len(live) == 1:
        i = live[0]
        if bers[i] > ber_accept_threshold:
            return _verdict(candidates, legal, None, bers)
        legal[i] = True
        return _verdict(candidates, legal, i, bers)
    best = min(bers[i] for i in live)
    chosen = _pick([i for i in live if bers[i] == best], rng)
    legal[chosen] = True
    return _verdict(candidates, legal, chosen, bers)


def rss_threshold_detect(candidates, history_mean_dbm: float, history_std_db: float,
                         rng: np.random.Generator | None = None) -> Verdict:
    if history_std_db <= 0:
        raise ConfigError("RSS history standard deviation must be positive", key="history_std_db")
    limit = history_mean_dbm + 3.0 * history_std_db
    legal = [c.rss_dbm <= limit for c in candidates]
    return _strongest_legal(candidates, legal, rng)


def distance_threshold_detect(candidates, link: RadioLink, d_threshold_m: float, ue_target_distance_m: float,
                              claimed_power_dbm: dict | None = None,
                              rng: np.random.Generator | None = None) -> Verdict:
    """``claimed_power_dbm`` maps sender identity to its published transmit
    power; senders not listed use ``link.tx_power_dbm``."""
    if d_threshold_m <= 0:
        raise ConfigError("distance threshold must be positive", key="detector.distance_threshold_m")
    powers = claimed_power_dbm or {}
    legal = []
    for c in candidates:
        d_est = distance_from_rss(link, c.rss_dbm, powers.get(c.claimed_sender))
        legal.append(not math.isnan(d_est) and abs(d_est - ue_target_distance_m) <= d_threshold_m)
    return _strongest_legal(candidates, legal, rng)


def region_half_width_db(alpha: float, sigma_db: float) -> float:
    """Half-width of the two-sided ``1 - alpha`` acceptance region."""
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}", key="detector.region_alpha")
    return float(norm.ppf(1.0 - alpha / 2.0)) * sigma_db


def suspicious_region_detect(candidates, expected_rss_dbm: float, alpha: float, sigma_db: float,
                             rng: np.random.Generator | None = None) -> Verdict:
    """With ``sigma_db == 0`` the region collapses and any deviation above
    1e-9 dB is suspicious."""
    half = region_half_width_db(alpha, sigma_db)
    tol = max(half, 1e-9)
    legal = [abs(c.rss_dbm - expected_rss_dbm) <= tol for c in candidates]
    return _strongest_legal(candidates, legal, rng)
