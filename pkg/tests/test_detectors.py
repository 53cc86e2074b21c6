import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from precheck.detectors import (
    CandidateSignal, Origin, Outcome, distance_threshold_detect, psd_detect, region_half_width_db,
    rss_threshold_detect, suspicious_region_detect,
)
from precheck.errors import ConfigError
from precheck.geometry import RadioLink, mean_rss_dbm

from oracles import two_sided_quantile

LINK = RadioLink()
WINDOW = (10e-6, 14e-6)
STANDARD = np.zeros(50, dtype=np.uint8)


def with_ber(fraction, n=50):
    bits = np.zeros(n, dtype=np.uint8)
    bits[: round(fraction * n)] = 1
    return bits


def cand(bits=STANDARD, t=12e-6, rss=-80.0, origin=Origin.LEGIT):
    return CandidateSignal(demodulated_precheck=bits, arrival_time=t, rss_dbm=rss, true_origin=origin)


class TestPsd:
    def test_lower_ber_wins(self):
        v = psd_detect([cand(with_ber(0.48), origin=Origin.FBS), cand(with_ber(0.02))], STANDARD, WINDOW)
        assert v.detection_outcome is Outcome.LEGIT_CHOSEN
        assert v.bers == (0.48, 0.02) and v.legal == (False, True)

    def test_tie_coin(self):
        rng = np.random.default_rng(0)
        cands = [cand(origin=Origin.FBS), cand()]
        n = 10_000
        wins = sum(psd_detect(cands, STANDARD, WINDOW, rng).detection_outcome is Outcome.FBS_CHOSEN
                   for _ in range(n))
        assert abs(wins - n / 2) < 4 * math.sqrt(n / 4)

    def test_tie_without_rng_takes_first(self):
        v = psd_detect([cand(origin=Origin.FBS), cand()], STANDARD, WINDOW)
        assert v.chosen == 0

    @pytest.mark.parametrize("t", [WINDOW[1] + 1e-12, WINDOW[0] - 1e-12, -math.inf])
    def test_out_of_window_rejected(self, t):
        v = psd_detect([cand(t=t, origin=Origin.FBS), cand(with_ber(0.1))], STANDARD, WINDOW)
        assert v.chosen == 1 and v.legal[0] is False

    def test_lone_candidate_threshold(self):
        assert psd_detect([cand(with_ber(0.2))], STANDARD, WINDOW).detection_outcome is Outcome.LEGIT_CHOSEN
        assert psd_detect([cand(with_ber(0.5))], STANDARD, WINDOW).detection_outcome is Outcome.ALL_REJECTED

    def test_none_in_window(self):
        v = psd_detect([cand(t=1.0)], STANDARD, WINDOW)
        assert v.detection_outcome is Outcome.ALL_REJECTED and v.chosen is None

    def test_empty(self):
        assert psd_detect([], STANDARD, WINDOW).detection_outcome is Outcome.ALL_REJECTED
        with pytest.raises(ConfigError):
            psd_detect([cand()], [], WINDOW)


class TestRss:
    def test_below_limit_legal_and_strongest(self):
        v = rss_threshold_detect([cand(rss=-78), cand(rss=-76, origin=Origin.FBS)], -80, 2)
        assert v.legal == (True, True) and v.detection_outcome is Outcome.FBS_CHOSEN

    def test_above_limit(self):
        v = rss_threshold_detect([cand(rss=-70)], -80, 2)
        assert v.legal == (False,) and v.detection_outcome is Outcome.ALL_REJECTED

    def test_matched_forgery_passes_with_target(self):
        rng = np.random.default_rng(0)
        for rss in rng.uniform(-100, -60, 200):
            v = rss_threshold_detect([cand(rss=rss), cand(rss=rss, origin=Origin.FBS)], -80, 2)
            assert v.legal[0] == v.legal[1]

    def test_bad_std(self):
        with pytest.raises(ConfigError):
            rss_threshold_detect([cand()], -80, 0)


class TestDistance:
    def test_honest_exact(self):
        for d in (50.0, 400.0, 900.0):
            v = distance_threshold_detect([cand(rss=mean_rss_dbm(LINK, d))], LINK, 1e-6, d)
            assert v.legal == (True,)

    def test_close_fbs_at_bs_power(self):
        v = distance_threshold_detect([cand(rss=mean_rss_dbm(LINK, 100.0), origin=Origin.FBS)], LINK, 100.0, 600.0)
        assert v.legal == (False,)

    def test_matched_forgery_legal(self):
        rss = mean_rss_dbm(LINK, 600.0)
        v = distance_threshold_detect([cand(rss=rss), cand(rss=rss + 0.5, origin=Origin.FBS)], LINK, 100.0, 600.0)
        assert v.legal == (True, True) and v.detection_outcome is Outcome.FBS_CHOSEN

    def test_claimed_power_table(self):
        c = CandidateSignal(STANDARD, 0.0, mean_rss_dbm(LINK, 100.0, 20.0), claimed_sender="small")
        v = distance_threshold_detect([c], LINK, 1.0, 100.0, claimed_power_dbm={"small": 20.0})
        assert v.legal == (True,)

    def test_uninvertible(self):
        v = distance_threshold_detect([cand(rss=30.0)], LINK, 100.0, 500.0)
        assert v.legal == (False,)


class TestRegion:
    def test_half_width(self):
        assert region_half_width_db(0.05, 2.0) == pytest.approx(3.92, abs=0.005)
        assert region_half_width_db(0.05, 2.0) == pytest.approx(two_sided_quantile(0.05) * 2.0)

    def test_honest_coverage(self):
        rng = np.random.default_rng(1)
        n = 10_000
        hits = sum(suspicious_region_detect([cand(rss=-80 + 2 * rng.standard_normal())], -80, 0.05, 2).legal[0]
                   for _ in range(n))
        assert abs(hits - 0.95 * n) < 4 * math.sqrt(n * 0.95 * 0.05)

    @pytest.mark.parametrize("alpha", [1e-6, 0.05, 0.5, 0.999])
    def test_exact_expected_legal(self, alpha):
        assert suspicious_region_detect([cand(rss=-80)], -80, alpha, 2).legal == (True,)

    def test_matched_forgery_same_rate(self):
        rng = np.random.default_rng(2)
        n = 5000
        legit = fbs = 0
        for _ in range(n):
            v = suspicious_region_detect([cand(rss=-80 + 2 * rng.standard_normal()),
                                          cand(rss=-80 + 2 * rng.standard_normal(), origin=Origin.FBS)], -80, 0.05, 2)
            legit += v.legal[0]
            fbs += v.legal[1]
        assert abs(legit - fbs) < 4 * math.sqrt(2 * n * 0.95 * 0.05)

    def test_zero_sigma(self):
        assert suspicious_region_detect([cand(rss=-80 + 1e-6)], -80, 0.05, 0).legal == (False,)

    def test_bad_alpha(self):
        with pytest.raises(ConfigError):
            region_half_width_db(1.0, 2.0)


@given(st.lists(st.floats(-120, -40), min_size=1, max_size=5), st.permutations(range(32)))
def test_baselines_ignore_bits(rss_values, perm):
    # RSS-only schemes must not look at the precheck bits
    base = np.array([i % 2 for i in range(32)], dtype=np.uint8)
    a = [cand(base, rss=r) for r in rss_values]
    b = [cand(base[list(perm)], rss=r) for r in rss_values]
    for detect in (lambda c: rss_threshold_detect(c, -80, 3),
                   lambda c: distance_threshold_detect(c, LINK, 100, 500),
                   lambda c: suspicious_region_detect(c, -80, 0.05, 2)):
        assert detect(a) == detect(b)
