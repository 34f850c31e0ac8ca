"""Sliding-window analysis over range-time data cubes.

A cube is an Nt x Ns complex matrix: rows are pulse times, columns are
range cells.  An N x (K+1) window slides over both axes; at each position
the primary vector is the N consecutive returns from the cell under test
and the training set is the K/2 cells on each side (optionally separated
by guard cells).  Every valid position is one trial, so a recorded or
synthetic cube yields (Nt-N+1) x (Ns-K-2*guard) decision-statistic
realizations per detector — enough to estimate the actual false-alarm
rate of thresholds that were calibrated on white noise, or the detection
rate when a synthetic target is injected into each primary vector.

File formats (shared with the command-line front end):

* binary-f64-interleaved: a 16-byte header of two little-endian uint64
  (Nt, Ns) followed by Nt*Ns samples as interleaved little-endian
  float64 (re, im), row-major over time then range.
* csv: one header row with the two integers ``nt,ns``, then one
  ``t,s,re,im`` row per cell with repr-exact floats, so the round trip
  is bit-identical and matches the binary encoding of the same cube.
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .batch import (
    complex_statistics_from_arrays,
    split_statistics_from_arrays,
    split_view,
)
from .detectors import (
    COMPLEX_DETECTORS,
    DEFAULT_SWEEPS,
    SPLIT_DETECTORS,
    DetectorKind,
    check_training_size,
)
from .errors import (
    DimensionMismatch,
    InsufficientWindows,
    InvalidModel,
    MalformedHeader,
    NonFinitePayload,
    TruncatedPayload,
)
from .montecarlo import CalibrationResult, PdPoint, wilson_ci
from .realspd import SpdMatrix
from .scenario import ClutterModel, SteeringPair, complex_clutter_covariance, steering

_HEADER = struct.Struct("<QQ")
BINARY_FORMAT = "binary-f64-interleaved"
CSV_FORMAT = "csv"
CUBE_FORMATS = (BINARY_FORMAT, CSV_FORMAT)


@dataclass(frozen=True, eq=False)
class RangeTimeCube:
    """Nt x Ns complex returns; rows are pulse times, columns range cells."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2:
            raise DimensionMismatch(f"cube must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidModel(f"cube dimensions must be positive, got {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def nt(self) -> int:
        return self.data.shape[0]

    @property
    def ns(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window geometry: N pulses, K training cells, guard cells.

    The K training cells split evenly around the cell under test, so K
    must be even; `guard` cells adjacent to the primary on each side are
    skipped (0 reproduces the adjacent-training layout).  Whether K is
    large enough depends on the detector: 2K >= N for the split-domain
    statistics, K >= N for the complex-domain ones — checked when a
    detector is actually applied.
    """

    n: int
    k: int
    guard: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidModel(f"need at least 2 pulses per window, got {self.n}")
        if self.k < 2 or self.k % 2 != 0:
            raise InvalidModel(f"k must be a positive even number, got {self.k}")
        if self.guard < 0:
            raise InvalidModel(f"guard must be non-negative, got {self.guard}")

    @property
    def span(self) -> int:
        """Cells consumed on each side of the primary (training + guard)."""
        return self.k // 2 + self.guard

    @property
    def min_ns(self) -> int:
        """Smallest cube width that admits at least one window."""
        return 2 * self.span + 1


def save_cube(cube: RangeTimeCube, path, fmt: str = BINARY_FORMAT) -> None:
    """Write a cube in the binary or CSV interchange format."""
    if fmt == BINARY_FORMAT:
        payload = np.ascontiguousarray(cube.data).astype("<c16", copy=False)
        with open(path, "wb") as f:
            f.write(_HEADER.pack(cube.nt, cube.ns))
            f.write(payload.tobytes())
    elif fmt == CSV_FORMAT:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([cube.nt, cube.ns])
            for t in range(cube.nt):
                for s in range(cube.ns):
                    z = cube.data[t, s]
                    writer.writerow([t, s, repr(float(z.real)), repr(float(z.imag))])
    else:
        raise ValueError(f"unknown cube format {fmt!r}; expected one of {CUBE_FORMATS}")


def _load_binary(path) -> RangeTimeCube:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise MalformedHeader(
            f"file has {len(raw)} bytes, shorter than the {_HEADER.size}-byte header"
        )
    nt, ns = _HEADER.unpack_from(raw)
    if nt == 0 or ns == 0:
        raise MalformedHeader(f"header declares an empty cube ({nt} x {ns})")
    expected = nt * ns * 16
    body = len(raw) - _HEADER.size
    if body < expected:
        raise TruncatedPayload(
            f"header declares {nt} x {ns} samples ({expected} bytes), "
            f"payload has only {body}"
        )
    if body > expected:
        raise MalformedHeader(
            f"payload has {body - expected} bytes beyond the declared {nt} x {ns} samples"
        )
    data = np.frombuffer(raw, dtype="<c16", count=nt * ns, offset=_HEADER.size)
    data = data.reshape(nt, ns).copy()
    if not np.all(np.isfinite(data)):
        raise NonFinitePayload("cube contains NaN or infinite samples")
    return RangeTimeCube(data)


def _load_csv(path) -> RangeTimeCube:
    with open(path, "r", newline="") as f:
        rows = [row for row in csv.reader(f) if row]
    if not rows:
        raise MalformedHeader("empty cube file")
    head = rows[0]
    if len(head) != 2:
        raise MalformedHeader(f"header row must be `nt,ns`, got {len(head)} fields")
    try:
        nt, ns = int(head[0]), int(head[1])
    except ValueError as exc:
        raise MalformedHeader(f"non-integer header row {head!r}") from exc
    if nt <= 0 or ns <= 0:
        raise MalformedHeader(f"header declares an empty cube ({nt} x {ns})")
    data = np.zeros((nt, ns), dtype=np.complex128)
    seen = np.zeros((nt, ns), dtype=bool)
    for row in rows[1:]:
        if len(row) != 4:
            raise MalformedHeader(
                f"data rows must be `t,s,re,im`, got {len(row)} fields"
            )
        try:
            t, s = int(row[0]), int(row[1])
            re, im = float(row[2]), float(row[3])
        except ValueError as exc:
            raise MalformedHeader(f"unparseable data row {row!r}") from exc
        if not (0 <= t < nt and 0 <= s < ns):
            raise MalformedHeader(f"cell ({t}, {s}) outside the {nt} x {ns} cube")
        if seen[t, s]:
            raise MalformedHeader(f"duplicate cell ({t}, {s})")
        seen[t, s] = True
        data[t, s] = complex(re, im)
    if not seen.all():
        missing = int(seen.size - np.count_nonzero(seen))
        raise TruncatedPayload(f"{missing} of {nt * ns} cells missing")
    if not np.all(np.isfinite(data)):
        raise NonFinitePayload("cube contains NaN or infinite samples")
    return RangeTimeCube(data)


def load_cube(path, fmt: str = BINARY_FORMAT) -> RangeTimeCube:
    """Read a cube written by :func:`save_cube` (bit-identical round trip)."""
    if fmt == BINARY_FORMAT:
        return _load_binary(path)
    if fmt == CSV_FORMAT:
        return _load_csv(path)
    raise ValueError(f"unknown cube format {fmt!r}; expected one of {CUBE_FORMATS}")


def _training_offsets(cfg: WindowConfig) -> np.ndarray:
    """Column offsets of the K training cells relative to the primary."""
    half, g = cfg.k // 2, cfg.guard
    left = np.arange(-g - half, -g)
    right = np.arange(g + 1, g + half + 1)
    return np.concatenate([left, right])


def window_positions(cube: RangeTimeCube, cfg: WindowConfig):
    """Valid (time-start, primary-cell) index ranges for the configuration."""
    if cube.nt < cfg.n:
        raise InvalidModel(
            f"cube has {cube.nt} pulses, window needs at least {cfg.n}"
        )
    if cube.ns < cfg.min_ns:
        raise InvalidModel(
            f"cube has {cube.ns} range cells, window needs at least {cfg.min_ns}"
        )
    ts = np.arange(cube.nt - cfg.n + 1)
    pcs = np.arange(cfg.span, cube.ns - cfg.span)
    return ts, pcs


def window_count(cube: RangeTimeCube, cfg: WindowConfig) -> int:
    """(Nt - N + 1) * (Ns - K - 2*guard): one trial per window position."""
    ts, pcs = window_positions(cube, cfg)
    return ts.size * pcs.size


def secondary_cells(cfg: WindowConfig, pc: int) -> np.ndarray:
    """Training-cell column indices for primary cell pc, left block first."""
    return pc + _training_offsets(cfg)


def sliding_windows(cube: RangeTimeCube, cfg: WindowConfig):
    """Yield (primary, secondary, t, pc) for every window position.

    `primary` is the length-N return from the cell under test, `secondary`
    the N x K matrix of training returns (columns ordered left block then
    right block).  Positions are visited time-major: all primary cells for
    t = 0, then t = 1, and so on.
    """
    ts, pcs = window_positions(cube, cfg)
    offsets = _training_offsets(cfg)
    for t in ts:
        block = cube.data[t : t + cfg.n]
        for pc in pcs:
            yield block[:, pc].copy(), block[:, pc + offsets], int(t), int(pc)


def stacked_windows(cube: RangeTimeCube, cfg: WindowConfig):
    """All windows as arrays: (r, rs, t, pc) of shapes (W, N), (W, N, K), (W,), (W,).

    Row w holds the same window the w-th step of :func:`sliding_windows`
    yields (time-major order).
    """
    ts, pcs = window_positions(cube, cfg)
    # view[i, s, :] is the length-N temporal slice starting at pulse i
    view = np.lib.stride_tricks.sliding_window_view(cube.data, cfg.n, axis=0)
    r = view[:, pcs, :].reshape(-1, cfg.n)
    sec_idx = pcs[:, None] + _training_offsets(cfg)[None, :]
    rs = view[:, sec_idx, :].transpose(0, 1, 3, 2).reshape(-1, cfg.n, cfg.k)
    t = np.repeat(ts, pcs.size)
    pc = np.tile(pcs, ts.size)
    return np.ascontiguousarray(r), np.ascontiguousarray(rs), t, pc


@dataclass(frozen=True, eq=False)
class WindowScan:
    """Per-window decision statistics over a whole cube."""

    stats: dict
    t: np.ndarray
    pc: np.ndarray

    @property
    def windows(self) -> int:
        return self.t.shape[0]


def _statistics(kinds, r, rs, v: SteeringPair, sweeps: int, m: SpdMatrix | None) -> dict:
    """Requested statistics over stacked windows (split kinds through the
    real/imaginary view, complex kinds directly)."""
    out = {}
    split_kinds = [k for k in kinds if k in SPLIT_DETECTORS]
    wants_bench = DetectorKind.BENCH_GLRT in kinds
    if split_kinds or wants_bench:
        z1, z2, zs = split_view(r, rs)
        out.update(
            split_statistics_from_arrays(
                split_kinds + ([DetectorKind.BENCH_GLRT] if wants_bench else []),
                z1,
                z2,
                zs,
                v,
                sweeps=sweeps,
                m=m,
            )
        )
    complex_kinds = [k for k in kinds if k in COMPLEX_DETECTORS]
    if complex_kinds:
        out.update(
            complex_statistics_from_arrays(complex_kinds, r, rs, v.as_complex())
        )
    return out


def window_statistics(
    cube: RangeTimeCube,
    cfg: WindowConfig,
    kinds,
    nu_d: float = 0.0,
    sweeps: int = DEFAULT_SWEEPS,
    m: SpdMatrix | None = None,
) -> WindowScan:
    """Evaluate detectors on every window of a cube (deterministic, no RNG)."""
    kinds = list(kinds)
    for kind in kinds:
        check_training_size(kind, cfg.n, cfg.k)
    r, rs, t, pc = stacked_windows(cube, cfg)
    v = steering(cfg.n, nu_d)
    return WindowScan(stats=_statistics(kinds, r, rs, v, sweeps, m), t=t, pc=pc)


def _resolve_thresholds(thresholds: dict) -> dict:
    return {
        kind: (t.threshold if isinstance(t, CalibrationResult) else float(t))
        for kind, t in thresholds.items()
    }


@dataclass(frozen=True)
class PfaEstimate:
    """Measured false-alarm rate of one detector over a cube."""

    detector: DetectorKind
    windows: int
    exceedances: int
    pfa_hat: float
    ci95: tuple[float, float]


def measure_pfa(
    cube: RangeTimeCube,
    cfg: WindowConfig,
    thresholds: dict,
    nu_d: float = 0.0,
    pfa_target: float | None = None,
    sweeps: int = DEFAULT_SWEEPS,
    m: SpdMatrix | None = None,
) -> dict:
    """Actual false-alarm rate of pre-calibrated thresholds on a cube.

    ``thresholds`` maps DetectorKind to a threshold (or a
    CalibrationResult, whose threshold and target Pfa are used).  Every
    window is one trial; the estimate is exceedances / windows with a
    Wilson 95% interval.  Warns InsufficientWindows when the cube gives
    fewer than 10 expected false alarms at the target Pfa.
    """
    eta = _resolve_thresholds(thresholds)
    if pfa_target is None:
        targets = [
            t.pfa_target for t in thresholds.values() if isinstance(t, CalibrationResult)
        ]
        pfa_target = max(targets) if targets else None
    w = window_count(cube, cfg)
    if pfa_target is not None and w < 10.0 / pfa_target:
        warnings.warn(
            InsufficientWindows(
                f"{w} windows give under 10 expected false alarms at "
                f"pfa = {pfa_target:g}; need at least {math.ceil(10.0 / pfa_target)}"
            ),
            stacklevel=2,
        )
    scan = window_statistics(cube, cfg, list(eta), nu_d=nu_d, sweeps=sweeps, m=m)
    out = {}
    for kind, threshold in eta.items():
        exc = int(np.count_nonzero(scan.stats[kind] > threshold))
        out[kind] = PfaEstimate(
            detector=kind,
            windows=w,
            exceedances=exc,
            pfa_hat=exc / w,
            ci95=wilson_ci(exc, w),
        )
    return out


def measure_pd_injected(
    cube: RangeTimeCube,
    cfg: WindowConfig,
    thresholds: dict,
    sinr_grid_db,
    seed: int,
    nu_d: float = 0.0,
    sweeps: int = DEFAULT_SWEEPS,
    m: SpdMatrix | None = None,
) -> dict:
    """Pd versus SINR with synthetic targets injected into each primary.

    The injected amplitude magnitude is set per window from the training
    sample covariance: with S the split-domain scatter of the 2K training
    vectors, S/(2K) stands in for the unknown covariance, so the target
    SINR is |alpha|^2 * K * (v1' S^-1 v1 + v2' S^-1 v2).  Phases are drawn
    uniformly per window from `seed`; a -inf dB point injects exactly
    nothing and reproduces :func:`measure_pfa` counts.
    """
    eta = _resolve_thresholds(thresholds)
    kinds = list(eta)
    for kind in kinds:
        check_training_size(kind, cfg.n, cfg.k)
    grid = [float(s) for s in sinr_grid_db]
    for sinr_db in grid:
        if math.isnan(sinr_db) or sinr_db == math.inf:
            raise InvalidModel(f"SINR grid entries must be < +inf, got {sinr_db!r}")

    r0, rs, _, _ = stacked_windows(cube, cfg)
    v = steering(cfg.n, nu_d)
    vc = v.as_complex()
    w = r0.shape[0]

    # per-window amplitude scale from the estimated clutter power
    z1, z2, zs = split_view(r0, rs)
    s = zs @ zs.transpose(0, 2, 1)
    rhs = np.stack([v.v1, v.v2], axis=1)
    sol = np.linalg.solve(s, np.broadcast_to(rhs, (w, cfg.n, 2)))
    q = sol[:, :, 0] @ v.v1 + sol[:, :, 1] @ v.v2

    rng = np.random.default_rng(seed)
    out = {kind: [] for kind in kinds}
    for sinr_db in grid:
        phases = rng.uniform(0.0, 2.0 * math.pi, w)
        sinr_lin = 10.0 ** (sinr_db / 10.0)
        if sinr_lin == 0.0:
            r = r0
        else:
            mag = np.sqrt(sinr_lin / (cfg.k * q))
            r = r0 + (mag * np.exp(1j * phases))[:, None] * vc[None, :]
        stats = _statistics(kinds, r, rs, v, sweeps, m)
        for kind in kinds:
            hits = int(np.count_nonzero(stats[kind] > eta[kind]))
            out[kind].append(
                PdPoint(
                    sinr_db=sinr_db,
                    pd=hits / w,
                    trials=w,
                    ci95=wilson_ci(hits, w),
                )
            )
    return out


def synthetic_cube(nt: int, ns: int, model: ClutterModel, seed: int) -> RangeTimeCube:
    """Draw a cube whose every N-pulse window follows the clutter model.

    Each range cell is an independent temporal series with the model's
    covariance law extended to Nt lags, so any N consecutive pulses of any
    cell have exactly the N x N model covariance.  A -inf dB
    clutter-to-noise ratio gives pure white noise.
    """
    if nt < 2 or ns < 1:
        raise InvalidModel(f"cube dimensions must be at least 2 x 1, got {nt} x {ns}")
    big = replace(model, n=nt)
    low = np.linalg.cholesky(complex_clutter_covariance(big))
    rng = np.random.default_rng(seed)
    white = (
        rng.standard_normal((ns, nt)) + 1j * rng.standard_normal((ns, nt))
    ) / math.sqrt(2.0)
    return RangeTimeCube((white @ low.T).T)


def window_rows_csv(scan: WindowScan, thresholds: dict) -> str:
    """Per-window results as CSV: detector,pc,t,statistic,decide."""
    eta = _resolve_thresholds(thresholds)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["detector", "pc", "t", "statistic", "decide"])
    for kind in sorted(scan.stats, key=lambda k: k.value):
        stats = scan.stats[kind]
        threshold = eta[kind]
        for i in range(scan.windows):
            val = float(stats[i])
            writer.writerow(
                [
                    kind.value,
                    int(scan.pc[i]),
                    int(scan.t[i]),
                    repr(val),
                    int(val > threshold),
                ]
            )
    return buf.getvalue()


def pfa_report_json(results: dict, pfa_target: float | None = None) -> str:
    """Aggregate false-alarm report as canonical JSON."""
    windows = {res.windows for res in results.values()}
    doc = {
        "pfa_target": pfa_target,
        "windows": windows.pop() if len(windows) == 1 else sorted(windows),
        "detectors": {
            kind.value: {
                "exceedances": res.exceedances,
                "pfa_hat": res.pfa_hat,
                "ci95": [res.ci95[0], res.ci95[1]],
            }
            for kind, res in results.items()
        },
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
