"""Decision statistics for the split-domain detector family.

Four adaptive detectors work on the real/imaginary split of the data and
exploit the doubled training set it provides (2K real secondary vectors
from K complex cells): a matched-filter ratio with the secondary-only
sample covariance, the same ratio with the primary data folded into the
covariance (score test), an iterative GLRT driven by the coordinate
descent in :mod:`symdet.estimator`, and an iterative Wald test built on
the same estimates.  A known-covariance matched-filter ratio serves as
the benchmark, and three standard complex-domain detectors (Kelly's GLRT,
the adaptive matched filter, and the complex-domain score test) are the
references the split detectors are compared against.

Conventions
-----------
* Split sample covariance: S = Zs Zs' (unnormalized outer-product sum);
  normalization constants are absorbed by threshold calibration.
* The iterative detectors run a fixed sweep budget of the coordinate
  descent (default 3) seeded with the two-step estimate; tolerances are
  disabled so a sweep count is an exact iteration budget, identical to
  the batched Monte-Carlo engine.
* The iterative-GLRT statistic is computed in the log domain and
  calibrated there (see ``split_statistic``); :func:`i_glrt` exposes the
  plain ratio for direct use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite
from .estimator import (
    HContext,
    algorithm1,
    two_step_from_context,
)
from .realspd import SpdMatrix, quad_form, rank_two_update_logdet, spd_from_entries
from .scenario import Amplitude, SplitObservation, SteeringPair

# Disables the early-stop test of the coordinate descent so that a sweep
# count is an exact iteration budget (fixed-iteration mode).
_FIXED_SWEEP_EPS = 1e-300

DEFAULT_SWEEPS = 3


class DetectorKind(Enum):
    """The eight decision statistics, keyed by their command-line names."""

    SS_AMF = "ss-amf"
    I_GLRT = "i-glrt"
    SS_RAO = "ss-rao"
    I_WALD = "i-wald"
    BENCH_GLRT = "bench-glrt"
    KELLY = "kelly"
    AMF = "amf"
    C_RAO = "c-rao"

    @property
    def uses_split_data(self) -> bool:
        """True for the detectors that consume the real/imaginary split."""
        return self in SPLIT_DETECTORS or self is DetectorKind.BENCH_GLRT

    @property
    def is_adaptive(self) -> bool:
        """False only for the known-covariance benchmark."""
        return self is not DetectorKind.BENCH_GLRT


# Adaptive split-domain detectors: need 2K >= N real secondary vectors.
SPLIT_DETECTORS = (
    DetectorKind.SS_AMF,
    DetectorKind.I_GLRT,
    DetectorKind.SS_RAO,
    DetectorKind.I_WALD,
)
# Complex-domain references: need K >= N complex secondary vectors.
COMPLEX_DETECTORS = (
    DetectorKind.KELLY,
    DetectorKind.AMF,
    DetectorKind.C_RAO,
)
ALL_DETECTORS = SPLIT_DETECTORS + (DetectorKind.BENCH_GLRT,) + COMPLEX_DETECTORS
# Statistics exactly invariant to a common positive rescaling of all data.
SCALE_INVARIANT = (
    DetectorKind.SS_AMF,
    DetectorKind.I_GLRT,
    DetectorKind.SS_RAO,
    DetectorKind.KELLY,
    DetectorKind.C_RAO,
)


@dataclass(frozen=True)
class DecisionRecord:
    """One detector decision; ``decide_h1`` is derived, never supplied."""

    detector: DetectorKind
    statistic: float
    threshold: float
    decide_h1: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "decide_h1", bool(self.statistic > self.threshold))


def check_training_size(kind: DetectorKind, n: int, k: int) -> None:
    """Raise NotPositiveDefinite if K is too small for the detector's
    sample covariance to be invertible (2K >= N split, K >= N complex)."""
    if kind in SPLIT_DETECTORS and 2 * k < n:
        raise NotPositiveDefinite(
            f"{kind.value}: split sample covariance needs 2K >= N, "
            f"got N={n}, K={k}"
        )
    if kind in COMPLEX_DETECTORS and k < n:
        raise NotPositiveDefinite(
            f"{kind.value}: complex sample covariance needs K >= N, "
            f"got N={n}, K={k}"
        )


def _split_sample_cov(obs: SplitObservation) -> SpdMatrix:
    if 2 * obs.k < obs.n:
        raise NotPositiveDefinite(
            f"split sample covariance needs 2K >= N, got N={obs.n}, K={obs.k}"
        )
    return spd_from_entries(obs.zs @ obs.zs.T)


def _matched_ratio(z1, z2, v: SteeringPair, w: SpdMatrix) -> float:
    """[(v1'W^-1 z1 + v2'W^-1 z2)^2 + (v1'W^-1 z2 - v2'W^-1 z1)^2]
    / (v1'W^-1 v1 + v2'W^-1 v2)."""
    sol = w.solve(np.column_stack([v.v1, v.v2]))
    w1, w2 = sol[:, 0], sol[:, 1]
    t1 = (w1 @ z1 + w2 @ z2) ** 2
    t2 = (w1 @ z2 - w2 @ z1) ** 2
    den = w1 @ v.v1 + w2 @ v.v2
    return float((t1 + t2) / den)


def _residuals(obs: SplitObservation, v: SteeringPair, a: Amplitude):
    u1 = obs.z1 - (a.a1 * v.v1 - a.a2 * v.v2)
    u2 = obs.z2 - (a.a1 * v.v2 + a.a2 * v.v1)
    return u1, u2


def iterative_estimate(
    ctx: HContext, sweeps: int = DEFAULT_SWEEPS, seed: Amplitude | None = None
) -> Amplitude:
    """Amplitude estimate after a fixed number of coordinate-descent sweeps.

    ``sweeps = 0`` returns the seed itself (the two-step estimate when no
    seed is given).
    """
    if sweeps < 0:
        raise ValueError("sweeps must be >= 0")
    if sweeps == 0:
        return seed if seed is not None else two_step_from_context(ctx)
    est, _ = algorithm1(
        ctx, seed=seed, max_iter=sweeps, eps1=_FIXED_SWEEP_EPS, eps2=_FIXED_SWEEP_EPS
    )
    return est


def ss_amf(obs: SplitObservation, v: SteeringPair) -> float:
    """Matched-filter ratio with the secondary-only split sample covariance."""
    return _matched_ratio(obs.z1, obs.z2, v, _split_sample_cov(obs))


def known_m_glrt(z1, z2, v: SteeringPair, m: SpdMatrix) -> float:
    """Benchmark: the same matched-filter ratio with the true covariance."""
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    if z1.shape != (m.dim,) or z2.shape != (m.dim,) or v.n != m.dim:
        raise DimensionMismatch("z1, z2, v and M must share dimension")
    return _matched_ratio(z1, z2, v, m)


def i_glrt_log(
    obs: SplitObservation,
    v: SteeringPair,
    sweeps: int = DEFAULT_SWEEPS,
    seed: Amplitude | None = None,
) -> float:
    """Log of the iterative GLRT: ln det[ZZ'+S] - ln det[UU'+S] with U the
    residual matrix at the coordinate-descent estimate."""
    s = _split_sample_cov(obs)
    ctx = HContext(obs.z1, obs.z2, v, s)
    est = iterative_estimate(ctx, sweeps, seed)
    u1, u2 = _residuals(obs, v, est)
    return rank_two_update_logdet(s, obs.z1, obs.z2) - rank_two_update_logdet(
        s, u1, u2
    )


def i_glrt(
    obs: SplitObservation,
    v: SteeringPair,
    sweeps: int = DEFAULT_SWEEPS,
    seed: Amplitude | None = None,
) -> float:
    """Iterative GLRT as a plain determinant ratio (exp of the log form)."""
    return math.exp(i_glrt_log(obs, v, sweeps, seed))


def ss_rao(obs: SplitObservation, v: SteeringPair) -> float:
    """Score test: the matched-filter ratio with the primary data folded
    into the sample covariance (S0 = z1 z1' + z2 z2' + S)."""
    s = _split_sample_cov(obs)
    s0 = spd_from_entries(
        s.entries + np.outer(obs.z1, obs.z1) + np.outer(obs.z2, obs.z2)
    )
    return _matched_ratio(obs.z1, obs.z2, v, s0)


def i_wald(
    obs: SplitObservation,
    v: SteeringPair,
    sweeps: int = DEFAULT_SWEEPS,
    seed: Amplitude | None = None,
) -> float:
    """Iterative Wald test: sigma_F * (a1^2 + a2^2) at the coordinate-descent
    estimate, with sigma_F the steering quadratic form under the H1
    covariance estimate (residual outer products plus S, over 2K+2)."""
    s = _split_sample_cov(obs)
    ctx = HContext(obs.z1, obs.z2, v, s)
    est = iterative_estimate(ctx, sweeps, seed)
    u1, u2 = _residuals(obs, v, est)
    m1 = spd_from_entries(
        (s.entries + np.outer(u1, u1) + np.outer(u2, u2)) / (2.0 * obs.k + 2.0)
    )
    sigma_f = quad_form(m1, v.v1, v.v1) + quad_form(m1, v.v2, v.v2)
    return float(sigma_f * (est.a1 ** 2 + est.a2 ** 2))


def fisher_aa(m: SpdMatrix, v: SteeringPair) -> np.ndarray:
    """Closed-form amplitude block of the Fisher information matrix:
    (v1' M^-1 v1 + v2' M^-1 v2) * I2."""
    if v.n != m.dim:
        raise DimensionMismatch("steering and covariance dimensions differ")
    return (quad_form(m, v.v1, v.v1) + quad_form(m, v.v2, v.v2)) * np.eye(2)


def fisher_numeric(
    m: SpdMatrix,
    v: SteeringPair,
    alpha: Amplitude,
    samples: int,
    rng: np.random.Generator,
    step: float = 1e-4,
):
    """Monte-Carlo estimate of the Fisher blocks (F_AA, F_AB).

    Draws `samples` primary pairs at the given amplitude, forms per-sample
    scores by central differences of the exact log-density (with respect
    to the two amplitudes and to every distinct covariance entry), and
    averages the outer products.  Only the primary pair enters: the
    secondary term of the likelihood carries no amplitude dependence, so
    it cannot contribute to either block.

    Returns ``(faa_hat, fab_hat)`` of shapes (2, 2) and (2, P) with
    P = N(N+1)/2 covariance parameters (upper triangle, row-major).
    The closed form :func:`fisher_aa` should match ``faa_hat`` up to
    Monte-Carlo error, and ``fab_hat`` should vanish within it.
    """
    n = m.dim
    e1 = rng.standard_normal((samples, n)) @ m.chol.T
    e2 = rng.standard_normal((samples, n)) @ m.chol.T
    m1 = alpha.a1 * v.v1 - alpha.a2 * v.v2
    m2 = alpha.a1 * v.v2 + alpha.a2 * v.v1
    z1 = e1 + m1
    z2 = e2 + m2

    def loglik(a1: float, a2: float, cov: np.ndarray) -> np.ndarray:
        """Per-sample log-density of the primary pair (constants dropped)."""
        low = np.linalg.cholesky(cov)
        r1 = z1 - (a1 * v.v1 - a2 * v.v2)
        r2 = z2 - (a1 * v.v2 + a2 * v.v1)
        y1 = solve_triangular(low, r1.T, lower=True)
        y2 = solve_triangular(low, r2.T, lower=True)
        ld = 2.0 * float(np.sum(np.log(np.diagonal(low))))
        return -ld - 0.5 * (np.sum(y1 * y1, axis=0) + np.sum(y2 * y2, axis=0))

    cov = m.entries
    s_a = np.empty((samples, 2))
    s_a[:, 0] = (
        loglik(alpha.a1 + step, alpha.a2, cov)
        - loglik(alpha.a1 - step, alpha.a2, cov)
    ) / (2.0 * step)
    s_a[:, 1] = (
        loglik(alpha.a1, alpha.a2 + step, cov)
        - loglik(alpha.a1, alpha.a2 - step, cov)
    ) / (2.0 * step)

    idx = [(i, j) for i in range(n) for j in range(i, n)]
    s_m = np.empty((samples, len(idx)))
    for p, (i, j) in enumerate(idx):
        delta = np.zeros((n, n))
        delta[i, j] = step
        delta[j, i] = step
        s_m[:, p] = (
            loglik(alpha.a1, alpha.a2, cov + delta)
            - loglik(alpha.a1, alpha.a2, cov - delta)
        ) / (2.0 * step)

    faa_hat = s_a.T @ s_a / samples
    fab_hat = s_a.T @ s_m / samples
    return faa_hat, fab_hat


def _complex_sample_cov(rs, n: int) -> np.ndarray:
    rs = np.asarray(rs, dtype=np.complex128)
    if rs.ndim != 2 or rs.shape[0] != n:
        raise DimensionMismatch(
            f"secondary matrix of shape {rs.shape} against dimension {n}"
        )
    if rs.shape[1] < n:
        raise NotPositiveDefinite(
            f"complex sample covariance needs K >= N, got N={n}, K={rs.shape[1]}"
        )
    return rs @ rs.conj().T


def _herm_chol(sc: np.ndarray) -> np.ndarray:
    try:
        low = np.linalg.cholesky(sc)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            "complex sample covariance is not positive definite"
        ) from exc
    return low


def _complex_forms(r, rs, v):
    """(v' Sc^-1 r, v' Sc^-1 v, r' Sc^-1 r) through one Hermitian factor."""
    r = np.asarray(r, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    n = r.shape[0]
    if r.shape != (n,) or v.shape != (n,):
        raise DimensionMismatch("primary vector and steering must share shape")
    low = _herm_chol(_complex_sample_cov(rs, n))
    y = solve_triangular(low, np.column_stack([r, v]), lower=True)
    yr, yv = y[:, 0], y[:, 1]
    vr = np.vdot(yv, yr)
    vv = float(np.vdot(yv, yv).real)
    rr = float(np.vdot(yr, yr).real)
    return vr, vv, rr


def kelly_glrt(r, rs, v) -> float:
    """|v' Sc^-1 r|^2 / [(v' Sc^-1 v)(1 + r' Sc^-1 r)]; always in [0, 1)."""
    vr, vv, rr = _complex_forms(r, rs, v)
    return float(abs(vr) ** 2 / (vv * (1.0 + rr)))


def amf(r, rs, v) -> float:
    """|v' Sc^-1 r|^2 / (v' Sc^-1 v)."""
    vr, vv, _ = _complex_forms(r, rs, v)
    return float(abs(vr) ** 2 / vv)


def c_rao(r, rs, v) -> float:
    """Complex-domain score test: the AMF form with the primary vector
    folded into the sample covariance (S0c = Sc + r r')."""
    r = np.asarray(r, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    n = r.shape[0]
    if r.shape != (n,) or v.shape != (n,):
        raise DimensionMismatch("primary vector and steering must share shape")
    s0c = _complex_sample_cov(rs, n) + np.outer(r, r.conj())
    low = _herm_chol(s0c)
    y = solve_triangular(low, np.column_stack([r, v]), lower=True)
    vr = np.vdot(y[:, 1], y[:, 0])
    vv = float(np.vdot(y[:, 1], y[:, 1]).real)
    return float(abs(vr) ** 2 / vv)


def split_statistic(
    kind: DetectorKind,
    obs: SplitObservation,
    v: SteeringPair,
    sweeps: int = DEFAULT_SWEEPS,
    m: SpdMatrix | None = None,
) -> float:
    """Calibration-domain statistic for a split-data detector.

    This is the single place that fixes which domain each detector is
    calibrated in: the iterative GLRT is evaluated and thresholded in the
    log domain, everything else in its natural scale.
    """
    if kind is DetectorKind.SS_AMF:
        return ss_amf(obs, v)
    if kind is DetectorKind.I_GLRT:
        return i_glrt_log(obs, v, sweeps)
    if kind is DetectorKind.SS_RAO:
        return ss_rao(obs, v)
    if kind is DetectorKind.I_WALD:
        return i_wald(obs, v, sweeps)
    if kind is DetectorKind.BENCH_GLRT:
        if m is None:
            raise ValueError("the known-covariance benchmark needs m")
        return known_m_glrt(obs.z1, obs.z2, v, m)
    raise ValueError(f"{kind!r} is not a split-data detector")


def complex_statistic(kind: DetectorKind, r, rs, v) -> float:
    """Calibration-domain statistic for a complex-domain detector."""
    if kind is DetectorKind.KELLY:
        return kelly_glrt(r, rs, v)
    if kind is DetectorKind.AMF:
        return amf(r, rs, v)
    if kind is DetectorKind.C_RAO:
        return c_rao(r, rs, v)
    raise ValueError(f"{kind!r} is not a complex-domain detector")
