"""Threshold calibration and Pd-versus-SINR sweeps.

Thresholds are empirical order statistics of simulated null statistics
(distribution-free, matching a counting definition of the false-alarm
rate): with T trials and target Pfa, the threshold is the m-th largest
null statistic with m = floor(T * Pfa) + 1.  That is the unique order
statistic at which the strict exceedance rate is <= Pfa while the rate at
the next-lower order statistic is > Pfa.

Detection probabilities are exceedance counts at a fixed threshold with
Wilson 95% confidence intervals.  All trial data comes from the
counter-based engine in :mod:`symdet.batch`, so every result is a pure
function of (scenario, seed) regardless of chunking or thread count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .batch import simulate_statistics
from .detectors import DEFAULT_SWEEPS, DetectorKind
from .errors import InsufficientTrials
from .scenario import Scenario

# two-sided 95%
_Z95 = 1.959963984540054


def wilson_ci(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    zz = z * z / trials
    center = (p + zz / 2.0) / (1.0 + zz)
    half = (
        z
        * math.sqrt(p * (1.0 - p) / trials + zz / (4.0 * trials))
        / (1.0 + zz)
    )
    # At the boundary counts the analytic endpoint is exactly 0 or 1;
    # evaluate it directly rather than through the cancellation-prone
    # center +- half difference.
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)


def threshold_rank(trials: int, pfa: float) -> int:
    """1-based rank (m-th largest) of the calibration order statistic."""
    if not 0.0 < pfa < 1.0:
        raise ValueError(f"pfa must be in (0, 1), got {pfa}")
    if trials * pfa < 10.0:
        raise InsufficientTrials(
            f"trials * pfa = {trials * pfa:g} < 10; "
            f"need at least {math.ceil(10.0 / pfa)} trials for pfa = {pfa:g}"
        )
    return int(math.floor(trials * pfa)) + 1


@dataclass(frozen=True)
class CalibrationResult:
    """Threshold for one detector at one scenario/Pfa.

    ``pfa_ci`` is the Wilson 95% interval of the strict exceedance rate of
    the calibration sample at the chosen threshold.
    """

    detector: DetectorKind
    pfa_target: float
    trials: int
    threshold: float
    pfa_ci: tuple[float, float]


@dataclass(frozen=True)
class PdPoint:
    """Estimated detection probability at one SINR point."""

    sinr_db: float
    pd: float
    trials: int
    ci95: tuple[float, float]


def _threshold_from_stats(stats: np.ndarray, pfa: float) -> tuple[float, tuple]:
    trials = stats.size
    m = threshold_rank(trials, pfa)
    # m-th largest == element at index (trials - m) of the ascending order
    eta = float(np.partition(stats, trials - m)[trials - m])
    exceed = int(np.count_nonzero(stats > eta))
    return eta, wilson_ci(exceed, trials)


def calibrate_many(
    detectors,
    scenario: Scenario,
    pfa: float,
    trials: int,
    seed: int,
    sweeps: int = DEFAULT_SWEEPS,
    threads: int = 1,
) -> dict:
    """Calibrate several detectors on one shared set of null trials."""
    detectors = list(detectors)
    threshold_rank(trials, pfa)  # validate before simulating
    if trials * pfa < 100.0:
        warnings.warn(
            f"trials = {trials} is below the recommended 100/pfa = "
            f"{math.ceil(100.0 / pfa)} for pfa = {pfa:g}; "
            "the threshold will be noisy",
            stacklevel=2,
        )
    stats = simulate_statistics(
        scenario, detectors, None, trials, seed, sweeps=sweeps, threads=threads
    )
    out = {}
    for kind in detectors:
        eta, ci = _threshold_from_stats(stats[kind], pfa)
        out[kind] = CalibrationResult(
            detector=kind,
            pfa_target=pfa,
            trials=trials,
            threshold=eta,
            pfa_ci=ci,
        )
    return out


def calibrate(
    detector: DetectorKind,
    scenario: Scenario,
    pfa: float,
    trials: int,
    seed: int,
    sweeps: int = DEFAULT_SWEEPS,
    threads: int = 1,
) -> CalibrationResult:
    """Set one detector's threshold to the calibration order statistic of
    `trials` simulated null statistics."""
    return calibrate_many(
        [detector], scenario, pfa, trials, seed, sweeps=sweeps, threads=threads
    )[detector]


def pd_sweep_many(
    thresholds: dict,
    scenario: Scenario,
    sinr_grid_db,
    trials_per_point: int,
    seed: int,
    sweeps: int = DEFAULT_SWEEPS,
    threads: int = 1,
) -> dict:
    """Pd curves for several detectors over a common SINR grid.

    ``thresholds`` maps DetectorKind to a threshold (or to a
    CalibrationResult, whose threshold is used).  All detectors see the
    same per-trial data at each grid point; distinct grid points use
    disjoint trial-index ranges of the same master seed.
    """
    eta = {
        kind: (t.threshold if isinstance(t, CalibrationResult) else float(t))
        for kind, t in thresholds.items()
    }
    kinds = list(eta)
    grid = [float(s) for s in sinr_grid_db]
    out = {kind: [] for kind in kinds}
    for idx, sinr_db in enumerate(grid):
        alpha = scenario.alpha_at(sinr_db)
        stats = simulate_statistics(
            scenario,
            kinds,
            alpha,
            trials_per_point,
            seed,
            sweeps=sweeps,
            threads=threads,
            first_trial=idx * trials_per_point,
        )
        for kind in kinds:
            hits = int(np.count_nonzero(stats[kind] > eta[kind]))
            out[kind].append(
                PdPoint(
                    sinr_db=sinr_db,
                    pd=hits / trials_per_point,
                    trials=trials_per_point,
                    ci95=wilson_ci(hits, trials_per_point),
                )
            )
    return out


def pd_sweep(
    detector: DetectorKind,
    scenario: Scenario,
    threshold: float,
    sinr_grid_db,
    trials_per_point: int,
    seed: int,
    sweeps: int = DEFAULT_SWEEPS,
    threads: int = 1,
) -> list:
    """Pd versus SINR for one detector at a fixed threshold."""
    return pd_sweep_many(
        {detector: threshold},
        scenario,
        sinr_grid_db,
        trials_per_point,
        seed,
        sweeps=sweeps,
        threads=threads,
    )[detector]


def pd_table_csv(curves: dict) -> str:
    """Render Pd curves as CSV: detector,sinr_db,pd,ci_lo,ci_hi,trials."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["detector", "sinr_db", "pd", "ci_lo", "ci_hi", "trials"])
    for kind in sorted(curves, key=lambda k: k.value):
        for pt in curves[kind]:
            writer.writerow(
                [
                    kind.value,
                    repr(pt.sinr_db),
                    repr(pt.pd),
                    repr(pt.ci95[0]),
                    repr(pt.ci95[1]),
                    pt.trials,
                ]
            )
    return buf.getvalue()


def calibration_json(
    results: dict,
    scenario: Scenario,
    pfa: float,
    trials: int,
    seed: int,
    sweeps: int = DEFAULT_SWEEPS,
) -> str:
    """Serialize calibration results (with full provenance) as canonical
    JSON: sorted keys, fixed separators, repr-exact floats."""
    # cnr_db may be -inf (pure white noise): JSON has no infinities, so the
    # value goes through as the string "-inf", which float() parses back.
    cnr = scenario.cnr_db if math.isfinite(scenario.cnr_db) else str(scenario.cnr_db)
    doc = {
        "scenario": {
            "n": scenario.n,
            "k": scenario.k,
            "rho_c": scenario.rho_c,
            "cnr_db": cnr,
            "nu_d": scenario.nu_d,
            "fd": scenario.fd,
            "phase": scenario.phase,
            "sigma_n2": scenario.sigma_n2,
        },
        "pfa": pfa,
        "trials": trials,
        "seed": seed,
        "sweeps": sweeps,
        "thresholds": {
            kind.value: {
                "threshold": res.threshold,
                "pfa_ci": [res.pfa_ci[0], res.pfa_ci[1]],
            }
            for kind, res in results.items()
        },
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def parse_calibration_json(text: str):
    """Inverse of :func:`calibration_json`.

    Returns (scenario, pfa, trials, seed, sweeps, {kind: threshold}).
    """
    doc = json.loads(text)
    sc = doc["scenario"]
    scenario = Scenario(
        n=int(sc["n"]),
        k=int(sc["k"]),
        rho_c=float(sc["rho_c"]),
        cnr_db=float(sc["cnr_db"]),
        nu_d=float(sc["nu_d"]),
        fd=float(sc["fd"]),
        phase=float(sc["phase"]),
        sigma_n2=float(sc["sigma_n2"]),
    )
    thresholds = {
        DetectorKind(name): float(rec["threshold"])
        for name, rec in doc["thresholds"].items()
    }
    return (
        scenario,
        float(doc["pfa"]),
        int(doc["trials"]),
        int(doc["seed"]),
        int(doc["sweeps"]),
        thresholds,
    )
