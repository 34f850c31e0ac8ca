"""symdet: adaptive radar detection under symmetric-spectrum clutter.

Real-covariance (split-domain) detectors with their complex-domain
competitors, Monte-Carlo threshold calibration, Pd-versus-SINR sweeps,
and sliding-window CFAR analysis of range-time data cubes.

The usual entry points:

* :class:`Scenario` bundles the interference model, steering, and target
  amplitude mapping for a simulation study.
* :func:`calibrate` / :func:`calibrate_many` find detection thresholds
  for a false-alarm target; :func:`pd_sweep` / :func:`pd_sweep_many`
  trace detection probability against SINR.
* :class:`RangeTimeCube` plus :func:`window_statistics`,
  :func:`measure_pfa`, and :func:`measure_pd_injected` run the detectors
  over sliding windows of recorded (or synthetic) range-time data.
* :data:`DetectorKind` names the eight decision statistics; the scalar
  forms (:func:`ss_amf`, :func:`i_glrt`, ...) live in
  :mod:`symdet.detectors`.

The ``symdet`` command-line tool (:mod:`symdet.cli`) wraps all of the
above behind ``calibrate``, ``pd``, ``cfar``, and ``estimate-demo``
subcommands.
"""

from .cfar import (
    BINARY_FORMAT,
    CSV_FORMAT,
    CUBE_FORMATS,
    PfaEstimate,
    RangeTimeCube,
    WindowConfig,
    WindowScan,
    load_cube,
    measure_pd_injected,
    measure_pfa,
    pfa_report_json,
    save_cube,
    sliding_windows,
    stacked_windows,
    synthetic_cube,
    window_count,
    window_positions,
    window_rows_csv,
    window_statistics,
)
from .detectors import (
    ALL_DETECTORS,
    COMPLEX_DETECTORS,
    SCALE_INVARIANT,
    SPLIT_DETECTORS,
    DetectorKind,
    amf,
    c_rao,
    check_training_size,
    complex_statistic,
    fisher_aa,
    i_glrt,
    i_glrt_log,
    i_wald,
    kelly_glrt,
    known_m_glrt,
    split_statistic,
    ss_amf,
    ss_rao,
)
from .errors import (
    DegenerateToConstant,
    DimensionMismatch,
    InsufficientTrials,
    InsufficientWindows,
    InvalidModel,
    MalformedHeader,
    NonFinitePayload,
    NotPositiveDefinite,
    SymdetError,
    TruncatedPayload,
)
from .estimator import (
    EstimationTrace,
    HContext,
    algorithm1,
    h_eval,
    solve_cubic_real,
    two_step_estimate,
    two_step_from_context,
)
from .montecarlo import (
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
from .realspd import SpdMatrix, logdet, quad_form, spd_from_entries
from .scenario import (
    Amplitude,
    ClutterModel,
    Scenario,
    SplitObservation,
    SteeringPair,
    alpha_for_sinr,
    clutter_covariance,
    complex_clutter_covariance,
    sample,
    sample_complex,
    sinr,
    steering,
    trial_rng,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_DETECTORS",
    "Amplitude",
    "BINARY_FORMAT",
    "COMPLEX_DETECTORS",
    "CSV_FORMAT",
    "CUBE_FORMATS",
    "CalibrationResult",
    "ClutterModel",
    "DegenerateToConstant",
    "DetectorKind",
    "DimensionMismatch",
    "EstimationTrace",
    "HContext",
    "InsufficientTrials",
    "InsufficientWindows",
    "InvalidModel",
    "MalformedHeader",
    "NonFinitePayload",
    "NotPositiveDefinite",
    "PdPoint",
    "PfaEstimate",
    "RangeTimeCube",
    "SCALE_INVARIANT",
    "SPLIT_DETECTORS",
    "Scenario",
    "SpdMatrix",
    "SplitObservation",
    "SteeringPair",
    "SymdetError",
    "TruncatedPayload",
    "WindowConfig",
    "WindowScan",
    "algorithm1",
    "alpha_for_sinr",
    "amf",
    "c_rao",
    "calibrate",
    "calibrate_many",
    "calibration_json",
    "check_training_size",
    "clutter_covariance",
    "complex_clutter_covariance",
    "complex_statistic",
    "fisher_aa",
    "h_eval",
    "i_glrt",
    "i_glrt_log",
    "i_wald",
    "kelly_glrt",
    "known_m_glrt",
    "load_cube",
    "logdet",
    "measure_pd_injected",
    "measure_pfa",
    "parse_calibration_json",
    "pd_sweep",
    "pd_sweep_many",
    "pd_table_csv",
    "pfa_report_json",
    "quad_form",
    "sample",
    "sample_complex",
    "save_cube",
    "sinr",
    "sliding_windows",
    "solve_cubic_real",
    "spd_from_entries",
    "split_statistic",
    "ss_amf",
    "ss_rao",
    "stacked_windows",
    "steering",
    "synthetic_cube",
    "threshold_rank",
    "trial_rng",
    "two_step_estimate",
    "two_step_from_context",
    "wilson_ci",
    "window_count",
    "window_positions",
    "window_rows_csv",
    "window_statistics",
]
