"""Command-line front end: threshold calibration, Pd sweeps, cube
analysis, and an estimator comparison demo, emitting plot-ready CSV/JSON.

Commands
--------
* ``symdet calibrate``    — Monte-Carlo thresholds, written as canonical JSON.
* ``symdet pd``           — Pd-versus-SINR curves as RFC-4180 CSV, using a
  calibration file or calibrating internally first.
* ``symdet cfar``         — sliding-window analysis of a range-time cube
  (measured Pfa report, per-window CSV, or injected-target Pd curves), plus
  a ``--self-test`` mode that builds a synthetic white cube and checks that
  white-noise thresholds hold their false-alarm rate on it.
* ``symdet estimate-demo`` — per-trial amplitude estimates (two-step versus
  coordinate descent) as CSV.

Configuration values resolve in increasing precedence: built-in defaults,
the SYMDET_THREADS environment variable (thread count only), ``--preset``,
``--config`` file (flat ``key = value`` lines), then explicit flags.  Every
command is a pure function of its resolved configuration: reruns produce
byte-identical output.

Exit codes: 0 success; 2 configuration or input-file error; 3 numerical
failure while computing.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from .batch import draw_trials, estimates_from_arrays, split_view
from .cfar import (
    BINARY_FORMAT,
    CUBE_FORMATS,
    WindowConfig,
    load_cube,
    measure_pd_injected,
    measure_pfa,
    pfa_report_json,
    synthetic_cube,
    window_statistics,
    window_rows_csv,
)
from .detectors import (
    ALL_DETECTORS,
    DetectorKind,
    SPLIT_DETECTORS,
    check_training_size,
)
from .errors import (
    DegenerateToConstant,
    NotPositiveDefinite,
    SymdetError,
)
from .montecarlo import (
    calibrate_many,
    calibration_json,
    parse_calibration_json,
    pd_sweep_many,
    pd_table_csv,
    threshold_rank,
)
from .scenario import DEFAULT_PHASE, Scenario

THREADS_ENV = "SYMDET_THREADS"


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters shared by all commands."""

    n: int = 8
    k: int = 16
    rho_c: float = 0.9
    cnr_db: float = 20.0
    nu_d: float = 0.0
    phase: float = DEFAULT_PHASE
    pfa: float = 1e-3
    detectors: tuple = SPLIT_DETECTORS
    trials: int = 100_000
    pd_trials: int = 2_000
    sweeps: int = 3
    sinr_start: float = 0.0
    sinr_stop: float = 32.0
    sinr_step: float = 1.0
    demo_sinr_db: float = 15.0
    demo_trials: int = 1_000
    guard: int = 0
    seed: int = 0
    threads: int = 1
    out: str = ""


def parse_detectors(text: str) -> tuple:
    names = [part.strip() for part in text.split(",") if part.strip()]
    if not names:
        raise ValueError("detector list is empty")
    kinds = []
    for name in names:
        try:
            kinds.append(DetectorKind(name))
        except ValueError:
            valid = ", ".join(k.value for k in ALL_DETECTORS)
            raise ValueError(f"unknown detector {name!r}; valid: {valid}") from None
    return tuple(kinds)


_FIELD_PARSERS = {
    "n": int,
    "k": int,
    "rho_c": float,
    "cnr_db": float,
    "nu_d": float,
    "phase": float,
    "pfa": float,
    "detectors": parse_detectors,
    "trials": int,
    "pd_trials": int,
    "sweeps": int,
    "sinr_start": float,
    "sinr_stop": float,
    "sinr_step": float,
    "demo_sinr_db": float,
    "demo_trials": int,
    "guard": int,
    "seed": int,
    "threads": int,
    "out": str,
}
CONFIG_FIELDS = tuple(_FIELD_PARSERS)
_SCENARIO_FIELDS = ("n", "k", "rho_c", "cnr_db", "nu_d", "phase", "sweeps")

_SPLIT4 = "ss-amf,i-glrt,ss-rao,i-wald"
_SEVEN = _SPLIT4 + ",kelly,amf,c-rao"
_EIGHT = _SEVEN + ",bench-glrt"

# Desk-scale scenario recipes: four canned training regimes (K = 6, 12,
# 16, 32 at N = 8) with the false-alarm probability set to 1e-3 so a
# laptop run stays in minutes.
PRESETS = {
    "fig4-desk": {
        "n": "8", "k": "6", "pfa": "1e-3", "detectors": _SPLIT4,
        "nu_d": "0", "sinr_start": "5", "sinr_stop": "35", "sinr_step": "1",
    },
    "fig5-desk": {
        "n": "8", "k": "12", "pfa": "1e-3", "detectors": _SEVEN,
        "nu_d": "0", "sinr_start": "0", "sinr_stop": "30", "sinr_step": "1",
    },
    "fig6-desk": {
        "n": "8", "k": "16", "pfa": "1e-3", "detectors": _SEVEN,
        "nu_d": "0", "sinr_start": "0", "sinr_stop": "28", "sinr_step": "1",
    },
    "fig7-desk": {
        "n": "8", "k": "32", "pfa": "1e-3", "detectors": _EIGHT,
        "nu_d": "0", "sinr_start": "0", "sinr_stop": "25", "sinr_step": "1",
    },
}


def render_config_text(cfg: RunConfig) -> str:
    """Serialize a configuration as flat `key = value` lines (the inverse
    of :func:`parse_config_text` followed by field parsing)."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "detectors":
            value = ",".join(k.value for k in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> dict:
    """Flat key=value config lines -> raw string dict.

    Blank lines and `#` comments are ignored; unknown keys are errors.
    """
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_PARSERS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        raw[key] = value.strip()
    return raw


def resolve_config(args) -> tuple:
    """Merge defaults, environment, preset, config file, and flags.

    Returns (RunConfig, explicitly-set-field-names).  Raises ValueError or
    a library error (both config errors) when anything is inconsistent.
    """
    raw = {}
    if getattr(args, "preset", None):
        raw.update(PRESETS[args.preset])
    if getattr(args, "config", None):
        with open(args.config, "r") as f:
            raw.update(parse_config_text(f.read()))
    for name in CONFIG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            raw[name] = value
    if "threads" not in raw and os.environ.get(THREADS_ENV):
        raw["threads"] = os.environ[THREADS_ENV]

    kwargs = {}
    for name, value in raw.items():
        try:
            kwargs[name] = _FIELD_PARSERS[name](value)
        except ValueError as exc:
            raise ValueError(f"bad value for {name}: {exc}") from None
    cfg = replace(RunConfig(), **kwargs)
    _validate(cfg, args.command)
    return cfg, frozenset(raw)


def _validate(cfg: RunConfig, command: str) -> None:
    if cfg.n < 2:
        raise ValueError(f"n must be at least 2, got {cfg.n}")
    if cfg.k < 1:
        raise ValueError(f"k must be positive, got {cfg.k}")
    if not 0.0 < cfg.pfa < 1.0:
        raise ValueError(f"pfa must be in (0, 1), got {cfg.pfa}")
    if cfg.sweeps < 0:
        raise ValueError(f"sweeps must be non-negative, got {cfg.sweeps}")
    for name in ("trials", "pd_trials", "demo_trials", "threads"):
        if getattr(cfg, name) < 1:
            raise ValueError(f"{name} must be positive, got {getattr(cfg, name)}")
    if cfg.guard < 0:
        raise ValueError(f"guard must be non-negative, got {cfg.guard}")
    if cfg.sinr_step <= 0:
        raise ValueError(f"sinr_step must be positive, got {cfg.sinr_step}")
    if cfg.sinr_stop < cfg.sinr_start:
        raise ValueError("sinr_stop must be >= sinr_start")
    # re-validate downstream constraints at parse time so violations are
    # reported as configuration errors, naming the rule
    for kind in cfg.detectors:
        check_training_size(kind, cfg.n, cfg.k)
    if command == "estimate-demo" and 2 * cfg.k < cfg.n:
        raise ValueError(
            f"estimation needs 2K >= N training vectors, got N={cfg.n}, K={cfg.k}"
        )
    if command in ("calibrate", "pd"):
        threshold_rank(cfg.trials, cfg.pfa)  # raises InsufficientTrials


def scenario_from(cfg: RunConfig) -> Scenario:
    return Scenario(
        n=cfg.n,
        k=cfg.k,
        rho_c=cfg.rho_c,
        cnr_db=cfg.cnr_db,
        nu_d=cfg.nu_d,
        phase=cfg.phase,
        sweeps=cfg.sweeps,
    )


def sinr_grid(cfg: RunConfig) -> list:
    count = int(math.floor((cfg.sinr_stop - cfg.sinr_start) / cfg.sinr_step + 1e-9))
    return [cfg.sinr_start + i * cfg.sinr_step for i in range(count + 1)]


def _write_out(text: str, out: str) -> None:
    if out:
        with open(out, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _load_calibration(path: str, cfg: RunConfig, explicit) -> tuple:
    """Scenario + thresholds from a calibration file, restricted to the
    explicitly requested detectors (all of the file's otherwise)."""
    clashes = sorted(set(explicit) & set(_SCENARIO_FIELDS))
    if clashes:
        raise ValueError(
            "scenario comes from the calibration file; "
            f"drop the conflicting flag(s): {', '.join(clashes)}"
        )
    with open(path, "r") as f:
        scenario, pfa, _trials, _seed, sweeps, thresholds = parse_calibration_json(
            f.read()
        )
    if "detectors" in explicit:
        missing = [k.value for k in cfg.detectors if k not in thresholds]
        if missing:
            raise ValueError(
                f"calibration file has no threshold for: {', '.join(missing)}"
            )
        thresholds = {k: thresholds[k] for k in cfg.detectors}
    return scenario, pfa, sweeps, thresholds


def cmd_calibrate(cfg: RunConfig, args, explicit) -> int:
    scenario = scenario_from(cfg)
    results = calibrate_many(
        list(cfg.detectors),
        scenario,
        cfg.pfa,
        cfg.trials,
        cfg.seed,
        sweeps=cfg.sweeps,
        threads=cfg.threads,
    )
    _write_out(
        calibration_json(results, scenario, cfg.pfa, cfg.trials, cfg.seed, cfg.sweeps),
        cfg.out,
    )
    return 0


def cmd_pd(cfg: RunConfig, args, explicit) -> int:
    if args.calibration:
        scenario, _pfa, sweeps, thresholds = _load_calibration(
            args.calibration, cfg, explicit
        )
        sweep_seed = cfg.seed
    else:
        scenario = scenario_from(cfg)
        thresholds = calibrate_many(
            list(cfg.detectors),
            scenario,
            cfg.pfa,
            cfg.trials,
            cfg.seed,
            sweeps=cfg.sweeps,
            threads=cfg.threads,
        )
        sweeps = cfg.sweeps
        # draw the sweep from a different master seed than the calibration
        # so threshold noise and Pd-trial noise stay independent
        sweep_seed = cfg.seed + 1
    curves = pd_sweep_many(
        thresholds,
        scenario,
        sinr_grid(cfg),
        cfg.pd_trials,
        sweep_seed,
        sweeps=sweeps,
        threads=cfg.threads,
    )
    _write_out(pd_table_csv(curves), cfg.out)
    return 0


def _cfar_self_test(cfg: RunConfig, args) -> int:
    scenario = Scenario(
        n=cfg.n,
        k=cfg.k,
        rho_c=cfg.rho_c,
        cnr_db=float("-inf"),
        nu_d=0.0,
        phase=cfg.phase,
        sweeps=cfg.sweeps,
    )
    thresholds = calibrate_many(
        list(cfg.detectors),
        scenario,
        cfg.pfa,
        cfg.trials,
        cfg.seed,
        sweeps=cfg.sweeps,
        threads=cfg.threads,
    )
    window_cfg = WindowConfig(n=cfg.n, k=cfg.k, guard=cfg.guard)
    ns = args.windows + cfg.k + 2 * cfg.guard
    cube = synthetic_cube(cfg.n, ns, scenario.model(), cfg.seed + 1)
    m = scenario.m_split() if DetectorKind.BENCH_GLRT in cfg.detectors else None
    results = measure_pfa(
        cube, window_cfg, thresholds, nu_d=0.0, sweeps=cfg.sweeps, m=m
    )
    _write_out(pfa_report_json(results, cfg.pfa), cfg.out)
    bad = [
        res.detector.value
        for res in results.values()
        if not res.ci95[0] <= cfg.pfa <= res.ci95[1]
    ]
    if bad:
        print(
            f"self-test failed: measured Pfa outside the 95% interval for "
            f"{', '.join(sorted(bad))}",
            file=sys.stderr,
        )
        return 3
    print(
        f"self-test passed: {len(results)} detector(s) hold pfa = {cfg.pfa:g} "
        f"over {next(iter(results.values())).windows} windows",
        file=sys.stderr,
    )
    return 0


def cmd_cfar(cfg: RunConfig, args, explicit) -> int:
    if args.self_test:
        return _cfar_self_test(cfg, args)
    if not args.cube:
        raise ValueError("cfar needs a --cube file (or --self-test)")
    if not args.calibration:
        raise ValueError("cfar needs --calibration thresholds for the cube")
    scenario, pfa, sweeps, thresholds = _load_calibration(
        args.calibration, cfg, explicit
    )
    kinds = list(thresholds)
    window_cfg = WindowConfig(n=scenario.n, k=scenario.k, guard=cfg.guard)
    cube = load_cube(args.cube, args.cube_format)
    m = (
        scenario.m_split()
        if DetectorKind.BENCH_GLRT in kinds
        else None
    )
    if args.inject:
        curves = measure_pd_injected(
            cube,
            window_cfg,
            thresholds,
            sinr_grid(cfg),
            cfg.seed,
            nu_d=scenario.nu_d,
            sweeps=sweeps,
            m=m,
        )
        _write_out(pd_table_csv(curves), cfg.out)
    elif args.verbose:
        scan = window_statistics(
            cube, window_cfg, kinds, nu_d=scenario.nu_d, sweeps=sweeps, m=m
        )
        _write_out(window_rows_csv(scan, thresholds), cfg.out)
    else:
        results = measure_pfa(
            cube,
            window_cfg,
            thresholds,
            nu_d=scenario.nu_d,
            pfa_target=pfa,
            sweeps=sweeps,
            m=m,
        )
        _write_out(pfa_report_json(results, pfa), cfg.out)
    return 0


def cmd_estimate_demo(cfg: RunConfig, args, explicit) -> int:
    scenario = scenario_from(cfg)
    alpha = scenario.alpha_at(cfg.demo_sinr_db)
    r, rs = draw_trials(scenario, alpha, cfg.seed, 0, cfg.demo_trials)
    z1, z2, zs = split_view(r, rs)
    a1_ts, a2_ts, a1, a2 = estimates_from_arrays(
        z1, z2, zs, scenario.steering_pair(), sweeps=cfg.sweeps
    )
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        [
            "trial",
            "alpha1_ts",
            "alpha2_ts",
            "alpha1_alg1",
            "alpha2_alg1",
            "alpha1_true",
            "alpha2_true",
        ]
    )
    for i in range(cfg.demo_trials):
        writer.writerow(
            [
                i,
                repr(float(a1_ts[i])),
                repr(float(a2_ts[i])),
                repr(float(a1[i])),
                repr(float(a2[i])),
                repr(alpha.a1),
                repr(alpha.a2),
            ]
        )
    _write_out(buf.getvalue(), cfg.out)
    mse_ts = float(np.mean((a1_ts - alpha.a1) ** 2 + (a2_ts - alpha.a2) ** 2))
    mse_alg = float(np.mean((a1 - alpha.a1) ** 2 + (a2 - alpha.a2) ** 2))
    print(
        f"mse: two-step {mse_ts:.6g}, descended {mse_alg:.6g} "
        f"over {cfg.demo_trials} trials",
        file=sys.stderr,
    )
    return 0


_FLAG_HELP = {
    "n": "vector length N (pulses per window)",
    "k": "secondary-data count K",
    "rho_c": "clutter one-lag correlation, in (0, 1)",
    "cnr_db": "clutter-to-noise ratio in dB (-inf for white noise)",
    "nu_d": "steering Doppler frequency, cycles/sample",
    "phase": "injected target phase, radians",
    "pfa": "false-alarm probability target",
    "detectors": "comma-separated detector names",
    "trials": "calibration trials",
    "pd_trials": "trials per Pd grid point",
    "sweeps": "coordinate-descent sweeps for the iterative detectors",
    "sinr_start": "SINR grid start, dB",
    "sinr_stop": "SINR grid stop, dB (inclusive)",
    "sinr_step": "SINR grid step, dB",
    "demo_sinr_db": "target SINR for the estimator demo, dB",
    "demo_trials": "trials for the estimator demo",
    "guard": "guard cells on each side of the primary cell",
    "seed": "master seed (all outputs are deterministic given it)",
    "threads": f"worker threads (default from ${THREADS_ENV} if set)",
    "out": "output path (default: stdout)",
}

COMMANDS = {
    "calibrate": cmd_calibrate,
    "pd": cmd_pd,
    "cfar": cmd_cfar,
    "estimate-demo": cmd_estimate_demo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("configuration")
    group.add_argument("--config", metavar="FILE", help="flat key = value config file")
    group.add_argument(
        "--preset",
        choices=sorted(PRESETS),
        help="named desk-scale scenario recipe (flags still override)",
    )
    for name in CONFIG_FIELDS:
        group.add_argument(
            "--" + name.replace("_", "-"),
            dest=name,
            metavar="V",
            help=_FLAG_HELP[name],
        )

    parser = argparse.ArgumentParser(
        prog="symdet",
        description=(
            "Adaptive radar detection with symmetric-spectrum clutter: "
            "Monte-Carlo threshold calibration, Pd sweeps, and sliding-window "
            "cube analysis."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "calibrate",
        parents=[common],
        help="simulate null statistics and write thresholds as JSON",
    )

    p_pd = sub.add_parser(
        "pd",
        parents=[common],
        help="Pd-versus-SINR curves as CSV",
    )
    p_pd.add_argument(
        "--calibration",
        metavar="FILE",
        help="thresholds JSON from `symdet calibrate` (otherwise calibrate first)",
    )

    p_cfar = sub.add_parser(
        "cfar",
        parents=[common],
        help="sliding-window analysis of a range-time cube",
    )
    p_cfar.add_argument("--cube", metavar="FILE", help="range-time cube file")
    p_cfar.add_argument(
        "--cube-format",
        choices=CUBE_FORMATS,
        default=BINARY_FORMAT,
        help="cube file encoding",
    )
    p_cfar.add_argument(
        "--calibration", metavar="FILE", help="thresholds JSON for the cube analysis"
    )
    p_cfar.add_argument(
        "--self-test",
        action="store_true",
        help="synthesize a white cube and verify the thresholds hold their Pfa",
    )
    p_cfar.add_argument(
        "--windows",
        type=int,
        default=10_000,
        metavar="W",
        help="window count for --self-test",
    )
    p_cfar.add_argument(
        "--inject",
        action="store_true",
        help="inject synthetic targets and report Pd curves instead of Pfa",
    )
    p_cfar.add_argument(
        "--verbose",
        action="store_true",
        help="write one CSV row per (detector, window) instead of the aggregate",
    )

    sub.add_parser(
        "estimate-demo",
        parents=[common],
        help="per-trial two-step versus descended amplitude estimates as CSV",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, explicit = resolve_config(args)
    except (SymdetError, ValueError, OSError) as exc:
        print(f"symdet: error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args, explicit)
    except (
        NotPositiveDefinite,
        DegenerateToConstant,
        np.linalg.LinAlgError,
        FloatingPointError,
        OverflowError,
    ) as exc:
        print(f"symdet: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (SymdetError, ValueError, OSError) as exc:
        print(f"symdet: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
