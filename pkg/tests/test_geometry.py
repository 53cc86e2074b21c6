import math

import numpy as np
import pytest
from scipy.stats import chisquare

from precheck.errors import ConfigError
from precheck.geometry import (
    GeometryConfig, RadioLink, distance_from_rss, mean_rss_dbm, power_for_rss, propagation_delay, rss_dbm,
    sample_deployment,
)

CFG = GeometryConfig()
LINK = RadioLink()


@pytest.fixture(scope="module")
def deployments():
    rng = np.random.default_rng(2024)
    return [sample_deployment(CFG, rng) for _ in range(20_000)]


def test_fbs_inside_annulus(deployments):
    d = np.array([dep.d_ue_fbs for dep in deployments])
    assert d.min() >= 50 - 1e-9 and d.max() <= 200 + 1e-9


def test_fbs_area_uniform(deployments):
    # area-uniform radius: r^2 is uniform on [r_min^2, r_max^2]
    r2 = np.array([dep.d_ue_fbs for dep in deployments]) ** 2
    counts, _ = np.histogram(r2, bins=10, range=(50**2, 200**2))
    assert chisquare(counts).pvalue > 1e-4


def test_fbs_angle_uniform(deployments):
    ang = np.array([math.atan2(dep.pos_fbs[1] - dep.pos_ue[1], dep.pos_fbs[0] - dep.pos_ue[0])
                    for dep in deployments]) % (2 * math.pi)
    counts, _ = np.histogram(ang, bins=16, range=(0, 2 * math.pi))
    expect = len(ang) / 16
    sigma = math.sqrt(len(ang) * (1 / 16) * (15 / 16))
    assert np.all(np.abs(counts - expect) < 4 * sigma)
    assert chisquare(counts).pvalue > 1e-4


def test_ue_in_junction_with_target_advantage(deployments):
    for dep in deployments[:2000]:
        assert 400 - 1e-9 <= dep.d_ue_source <= 600 + 1e-9
        assert 400 - 1e-9 <= dep.d_ue_target <= 600 + 1e-9
        gap = mean_rss_dbm(LINK, dep.d_ue_target) - mean_rss_dbm(LINK, dep.d_ue_source)
        assert gap >= 3.0 - 1e-9


def test_same_seed_same_deployment():
    a = sample_deployment(CFG, np.random.default_rng(5))
    b = sample_deployment(CFG, np.random.default_rng(5))
    assert a == b


def test_unsatisfiable_advantage():
    with pytest.raises(ConfigError):
        sample_deployment(GeometryConfig(min_target_advantage_db=30), np.random.default_rng(0))


def test_reference_distance_rss():
    assert rss_dbm(LINK, 1.0) == pytest.approx(46 - 30)


def test_doubling_distance():
    drop = mean_rss_dbm(LINK, 100) - mean_rss_dbm(LINK, 200)
    assert drop == pytest.approx(35 * math.log10(2))
    assert drop == pytest.approx(10.54, abs=0.005)


def test_shadowing_std():
    link = RadioLink(shadowing_sigma_db=2.0)
    rng = np.random.default_rng(8)
    x = np.array([rss_dbm(link, 300.0, rng) for _ in range(100_000)])
    assert np.std(x) == pytest.approx(2.0, rel=0.03)
    assert np.mean(x) == pytest.approx(mean_rss_dbm(link, 300.0), abs=0.05)


def test_below_reference_clamps(caplog):
    assert mean_rss_dbm(LINK, 0.2) == mean_rss_dbm(LINK, 1.0)
    assert "clamped" in caplog.text


def test_distance_inversion():
    for d in (1.0, 37.0, 450.0, 2500.0):
        assert distance_from_rss(LINK, mean_rss_dbm(LINK, d)) == pytest.approx(d)
    assert math.isnan(distance_from_rss(LINK, 20.0))


def test_power_for_rss():
    p = power_for_rss(LINK, 150.0, -70.0)
    assert mean_rss_dbm(LINK, 150.0, tx_power_dbm=p) == pytest.approx(-70.0)


def test_propagation_delay():
    assert propagation_delay(0.0) == 0.0
    assert propagation_delay(299.8) == pytest.approx(1e-6)
    d = np.sort(np.random.default_rng(0).uniform(0, 1000, 50))
    assert np.all(np.diff([propagation_delay(x) for x in d]) > 0)


def test_bad_link():
    with pytest.raises(ConfigError):
        RadioLink(path_loss_exponent=0)
    with pytest.raises(ConfigError):
        RadioLink(shadowing_sigma_db=-1)
