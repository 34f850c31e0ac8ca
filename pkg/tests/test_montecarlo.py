"""Calibration and Pd-sweep tests."""

import json
import math

import numpy as np
import pytest

from symdet.batch import simulate_statistics
from symdet.detectors import DetectorKind
from symdet.errors import InsufficientTrials
from symdet.montecarlo import (
    CalibrationResult,
    PdPoint,
    calibrate,
    calibrate_many,
    calibration_json,
    parse_calibration_json,
    pd_sweep,
    pd_sweep_many,
    pd_table_csv,
    threshold_rank,
    wilson_ci,
)
from symdet.scenario import Scenario

SC = Scenario(n=4, k=6, rho_c=0.9, cnr_db=15.0)


class TestWilson:
    def test_hand_value(self):
        lo, hi = wilson_ci(5, 10)
        # standard Wilson bounds for 5/10 at z = 1.96
        assert abs(lo - 0.2366) < 2e-3
        assert abs(hi - 0.7634) < 2e-3

    def test_edges(self):
        lo, hi = wilson_ci(0, 50)
        assert lo == 0.0 and 0.0 < hi < 0.1
        lo, hi = wilson_ci(50, 50)
        assert 0.9 < lo < 1.0 and hi == 1.0

    def test_contains_point_estimate(self):
        rng = np.random.default_rng(60)
        for _ in range(50):
            n = int(rng.integers(1, 1000))
            k = int(rng.integers(0, n + 1))
            lo, hi = wilson_ci(k, n)
            assert lo <= k / n <= hi

    def test_invalid(self):
        with pytest.raises(ValueError):
            wilson_ci(5, 0)
        with pytest.raises(ValueError):
            wilson_ci(11, 10)


class TestThresholdRank:
    def test_rank_values(self):
        assert threshold_rank(10000, 0.5) == 5001
        assert threshold_rank(1000, 0.0123) == 13
        # integral trials*pfa: the rank must still leave exceedance <= pfa
        assert threshold_rank(100000, 1e-2) == 1001

    def test_hard_floor(self):
        with pytest.raises(InsufficientTrials):
            threshold_rank(900, 1e-2)  # 9 < 10
        threshold_rank(1000, 1e-2)

    def test_invalid_pfa(self):
        with pytest.raises(ValueError):
            threshold_rank(1000, 0.0)
        with pytest.raises(ValueError):
            threshold_rank(1000, 1.0)


class TestCalibrate:
    def test_order_statistic_invariant(self):
        """Exceedance rate at the threshold <= pfa; at the next-lower order
        statistic it exceeds pfa.  Includes an integral trials*pfa case."""
        for pfa, trials in [(0.05, 4000), (0.01, 1000), (0.013, 3000)]:
            res = calibrate(DetectorKind.SS_AMF, SC, pfa, trials, seed=70)
            stats = simulate_statistics(
                SC, [DetectorKind.SS_AMF], None, trials, 70
            )[DetectorKind.SS_AMF]
            at_eta = np.count_nonzero(stats > res.threshold) / trials
            assert at_eta <= pfa
            below = np.sort(stats)[::-1][threshold_rank(trials, pfa)]
            assert np.count_nonzero(stats > below) / trials > pfa

    def test_median_threshold_sanity(self):
        res = calibrate(DetectorKind.SS_AMF, SC, 0.5, 10000, seed=71)
        fresh = simulate_statistics(
            SC, [DetectorKind.SS_AMF], None, 10000, 72
        )[DetectorKind.SS_AMF]
        pfa_hat = np.count_nonzero(fresh > res.threshold) / 10000
        assert abs(pfa_hat - 0.5) <= 0.02

    def test_deterministic(self):
        a = calibrate(DetectorKind.KELLY, SC, 0.02, 2000, seed=73)
        b = calibrate(DetectorKind.KELLY, SC, 0.02, 2000, seed=73)
        assert a.threshold == b.threshold
        assert a.pfa_ci == b.pfa_ci

    def test_self_consistency(self):
        """A fresh sample's empirical Pfa at the calibrated threshold matches
        the target within combined sampling noise.

        Both the threshold (an order statistic of one sample) and the fresh
        rate carry binomial noise of sd sqrt(pfa (1-pfa) / trials), so the
        difference has sd sqrt(2) times that; accept within 1.96 combined
        standard errors.
        """
        pfa, trials = 0.05, 20000
        res = calibrate(DetectorKind.I_GLRT, SC, pfa, trials, seed=74)
        fresh = simulate_statistics(
            SC, [DetectorKind.I_GLRT], None, trials, 75
        )[DetectorKind.I_GLRT]
        rate = np.count_nonzero(fresh > res.threshold) / trials
        tol = 1.959963984540054 * math.sqrt(2.0 * pfa * (1.0 - pfa) / trials)
        assert abs(rate - pfa) <= tol

    def test_monotone_in_pfa(self):
        r1 = calibrate(DetectorKind.SS_RAO, SC, 0.05, 5000, seed=76)
        r2 = calibrate(DetectorKind.SS_RAO, SC, 0.01, 5000, seed=76)
        assert r2.threshold >= r1.threshold

    def test_warns_below_recommended_trials(self):
        with pytest.warns(UserWarning, match="recommended"):
            calibrate(DetectorKind.SS_AMF, SC, 0.05, 400, seed=77)

    def test_insufficient_trials(self):
        with pytest.raises(InsufficientTrials):
            calibrate(DetectorKind.SS_AMF, SC, 1e-3, 5000, seed=78)

    def test_many_shares_trials(self):
        both = calibrate_many(
            [DetectorKind.SS_AMF, DetectorKind.SS_RAO], SC, 0.05, 2000, seed=79
        )
        single = calibrate(DetectorKind.SS_AMF, SC, 0.05, 2000, seed=79)
        assert both[DetectorKind.SS_AMF].threshold == single.threshold


class TestPdSweep:
    def test_null_continuity(self):
        """At SINR = -inf (zero amplitude) Pd estimates the false-alarm
        rate."""
        pfa, trials = 0.1, 4000
        res = calibrate(DetectorKind.SS_AMF, SC, pfa, 20000, seed=80)
        pts = pd_sweep(
            DetectorKind.SS_AMF, SC, res.threshold, [-math.inf], trials, seed=81
        )
        assert len(pts) == 1
        lo, hi = pts[0].ci95
        assert lo <= pfa <= hi

    def test_saturation(self):
        res = calibrate(DetectorKind.BENCH_GLRT, SC, 0.05, 2000, seed=82)
        pts = pd_sweep(
            DetectorKind.BENCH_GLRT, SC, res.threshold, [40.0], 500, seed=83
        )
        assert pts[0].pd == 1.0

    def test_monotone_within_noise(self):
        res = calibrate(DetectorKind.SS_AMF, SC, 0.1, 2000, seed=84)
        grid = [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0]
        pts = pd_sweep(DetectorKind.SS_AMF, SC, res.threshold, grid, 1000, seed=85)
        pds = [p.pd for p in pts]
        for a, b in zip(pds, pds[1:]):
            assert b >= a - 0.05

    def test_accepts_calibration_results(self):
        cal = calibrate_many([DetectorKind.SS_AMF], SC, 0.1, 2000, seed=86)
        by_result = pd_sweep_many(cal, SC, [5.0], 300, seed=87)
        by_value = pd_sweep_many(
            {DetectorKind.SS_AMF: cal[DetectorKind.SS_AMF].threshold},
            SC,
            [5.0],
            300,
            seed=87,
        )
        assert by_result[DetectorKind.SS_AMF][0] == by_value[DetectorKind.SS_AMF][0]

    def test_points_use_disjoint_trials(self):
        """Two grid points with identical SINR give different (independent)
        estimates, not copies."""
        res = calibrate(DetectorKind.SS_AMF, SC, 0.1, 2000, seed=88)
        pts = pd_sweep(
            DetectorKind.SS_AMF, SC, res.threshold, [8.0, 8.0], 2000, seed=89
        )
        assert pts[0].pd != pts[1].pd  # same law, disjoint counter ranges


class TestSerialization:
    def test_csv_schema(self):
        pts = {
            DetectorKind.SS_AMF: [
                PdPoint(sinr_db=5.0, pd=0.5, trials=100, ci95=(0.4, 0.6))
            ],
            DetectorKind.KELLY: [
                PdPoint(sinr_db=-math.inf, pd=0.1, trials=100, ci95=(0.05, 0.17))
            ],
        }
        text = pd_table_csv(pts)
        lines = text.strip().splitlines()
        assert lines[0] == "detector,sinr_db,pd,ci_lo,ci_hi,trials"
        assert lines[1].startswith("kelly,-inf,0.1,")
        assert lines[2].startswith("ss-amf,5.0,0.5,0.4,0.6,100")
        assert "\r\n" in text  # RFC 4180 line endings

    def test_json_round_trip(self):
        cal = calibrate_many(
            [DetectorKind.SS_AMF, DetectorKind.I_GLRT], SC, 0.05, 2000, seed=90
        )
        text = calibration_json(cal, SC, 0.05, 2000, seed=90)
        scenario, pfa, trials, seed, sweeps, thresholds = parse_calibration_json(text)
        assert scenario == SC
        assert (pfa, trials, seed, sweeps) == (0.05, 2000, 90, 3)
        assert thresholds[DetectorKind.SS_AMF] == cal[DetectorKind.SS_AMF].threshold
        assert thresholds[DetectorKind.I_GLRT] == cal[DetectorKind.I_GLRT].threshold

    def test_json_deterministic_and_infinity_safe(self):
        white = Scenario(n=4, k=6, cnr_db=-math.inf)
        cal = calibrate_many([DetectorKind.SS_AMF], white, 0.05, 2000, seed=91)
        a = calibration_json(cal, white, 0.05, 2000, seed=91)
        b = calibration_json(cal, white, 0.05, 2000, seed=91)
        assert a == b
        doc = json.loads(a)  # strict JSON must parse
        assert doc["scenario"]["cnr_db"] == "-inf"
        scenario, *_ = parse_calibration_json(a)
        assert scenario.cnr_db == -math.inf
