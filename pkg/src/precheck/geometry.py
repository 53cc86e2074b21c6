"""Node placement, log-distance path loss and propagation delay."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "SPEED_OF_LIGHT",
    "GeometryConfig",
    "RadioLink",
    "Deployment",
    "sample_deployment",
    "rss_dbm",
    "mean_rss_dbm",
    "distance_from_rss",
    "power_for_rss",
    "propagation_delay",
]

log = logging.getLogger(__name__)

SPEED_OF_LIGHT = 2.998e8
REFERENCE_DISTANCE_M = 1.0


@dataclass(frozen=True)
class GeometryConfig:
    """Two adjacent cells with centres ``2 * cell_radius_m`` apart.

    The UE is placed uniformly over the junction band (both BS distances in
    ``[junction_lo, junction_hi] * cell_radius_m``) restricted to points
    where the target's path loss is at least ``min_target_advantage_db``
    lower than the source's, so the measurement report always triggers.
    """

    cell_radius_m: float = 500.0
    junction_lo: float = 0.8
    junction_hi: float = 1.2
    fbs_r_min_m: float = 50.0
    fbs_r_max_m: float = 200.0
    min_target_advantage_db: float = 3.0

    def validate(self, path_loss_exponent: float = 3.5) -> None:
        if self.cell_radius_m <= 0:
            raise ConfigError("must be positive", key="geometry.cell_radius_m")
        if not 0 <= self.fbs_r_min_m < self.fbs_r_max_m:
            raise ConfigError(
                f"need 0 <= r_min < r_max, got ({self.fbs_r_min_m}, {self.fbs_r_max_m})",
                key="geometry.fbs_r_min_m",
            )
        if not 0 < self.junction_lo <= 1 <= self.junction_hi:
            raise ConfigError("need 0 < junction_lo <= 1 <= junction_hi", key="geometry.junction_lo")
        # the distance ratio d2/d1 is smallest on the line between the cells
        ratio = 10.0 ** (-self.min_target_advantage_db / (10.0 * path_loss_exponent))
        if min(self.junction_hi, 2.0 - self.junction_lo) * (1.0 + ratio) <= 2.0:
            raise ConfigError(
                "junction band cannot satisfy min_target_advantage_db", key="geometry.min_target_advantage_db"
            )


@dataclass(frozen=True)
class RadioLink:
    tx_power_dbm: float = 46.0
    path_loss_exponent: float = 3.5
    reference_loss_db: float = 30.0
    shadowing_sigma_db: float = 0.0

    def __post_init__(self):
        if self.path_loss_exponent <= 0:
            raise ConfigError("must be positive", key="link.path_loss_exponent")
        if self.shadowing_sigma_db < 0:
            raise ConfigError("must be non-negative", key="link.shadowing_sigma_db")


@dataclass(frozen=True)
class Deployment:
    pos_lbs1: tuple[float, float]
    pos_lbs2: tuple[float, float]
    pos_ue: tuple[float, float]
    pos_fbs: tuple[float, float]
    cell_radius: float
    fbs_annulus: tuple[float, float]

    @property
    def d_ue_source(self) -> float:
        return math.dist(self.pos_ue, self.pos_lbs1)

    @property
    def d_ue_target(self) -> float:
        return math.dist(self.pos_ue, self.pos_lbs2)

    @property
    def d_ue_fbs(self) -> float:
        return math.dist(self.pos_ue, self.pos_fbs)

    @property
    def d_fbs_target(self) -> float:
        return math.dist(self.pos_fbs, self.pos_lbs2)


def sample_deployment(cfg: GeometryConfig, rng: np.random.Generator, path_loss_exponent: float = 3.5) -> Deployment:
    cfg.validate(path_loss_exponent)
    R = cfg.cell_radius_m
    lbs1 = np.array([0.0, 0.0])
    lbs2 = np.array([2.0 * R, 0.0])
    lo, hi = cfg.junction_lo * R, cfg.junction_hi * R
    ratio = 10.0 ** (-cfg.min_target_advantage_db / (10.0 * path_loss_exponent))

    # rejection sampling over a box around the admissible region; the target
    # distance never exceeds min(hi, ratio * hi)
    d2_max = min(hi, ratio * hi)
    x_lo, x_hi = 2.0 * R - d2_max, hi
    while True:
        x = x_lo + (x_hi - x_lo) * rng.random()
        y = d2_max * (2.0 * rng.random() - 1.0)
        d1 = math.hypot(x - lbs1[0], y)
        d2 = math.hypot(x - lbs2[0], y)
        if lo <= d1 <= hi and lo <= d2 <= hi and d2 <= ratio * d1:
            ue = np.array([x, y])
            break

    # area-uniform over the annulus
    r2 = rng.uniform(cfg.fbs_r_min_m ** 2, cfg.fbs_r_max_m ** 2)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    fbs = ue + math.sqrt(r2) * np.array([math.cos(theta), math.sin(theta)])

    return Deployment(
        pos_lbs1=tuple(lbs1),
        pos_lbs2=tuple(lbs2),
        pos_ue=tuple(ue),
        pos_fbs=tuple(fbs),
        cell_radius=R,
        fbs_annulus=(cfg.fbs_r_min_m, cfg.fbs_r_max_m),
    )


def mean_rss_dbm(link: RadioLink, distance_m: float, tx_power_dbm: float | None = None) -> float:
    """Path-loss prediction without shadowing."""
    p = link.tx_power_dbm if tx_power_dbm is None else tx_power_dbm
    if distance_m < REFERENCE_DISTANCE_M:
        log.warning("distance %.3g m below reference distance; clamped to %.1f m", distance_m, REFERENCE_DISTANCE_M)
        distance_m = REFERENCE_DISTANCE_M
    return p - link.reference_loss_db - 10.0 * link.path_loss_exponent * math.log10(distance_m / REFERENCE_DISTANCE_M)


def rss_dbm(link: RadioLink, distance_m: float, rng: np.random.Generator | None = None,
            tx_power_dbm: float | None = None) -> float:
    rss = mean_rss_dbm(link, distance_m, tx_power_dbm)
    if link.shadowing_sigma_db > 0:
        rss += link.shadowing_sigma_db * rng.standard_normal()
    return rss


def distance_from_rss(link: RadioLink, rss: float, tx_power_dbm: float | None = None) -> float:
    """Invert the path-loss model. Returns ``nan`` above the reference-distance bound."""
    p = link.tx_power_dbm if tx_power_dbm is None else tx_power_dbm
    excess = (p - link.reference_loss_db - rss) / (10.0 * link.path_loss_exponent)
    if excess < 0:
        return math.nan
    return REFERENCE_DISTANCE_M * 10.0 ** excess


def power_for_rss(link: RadioLink, distance_m: float, target_rss_dbm: float) -> float:
    """Transmit power that yields ``target_rss_dbm`` on average at ``distance_m``."""
    return target_rss_dbm - mean_rss_dbm(link, distance_m, 0.0)


def propagation_delay(distance_m: float) -> float:
    return distance_m / SPEED_OF_LIGHT
