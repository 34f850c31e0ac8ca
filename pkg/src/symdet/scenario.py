"""Scenario construction: steering vectors, clutter covariance, sampling.

The complex baseband model with a *real* interference covariance splits
into an equivalent real-valued problem: if the length-N complex return is
r = alpha * v + n with circular noise n of real covariance M0, then
(Re r, Im r) are independent real Gaussians with covariance M = M0 / 2 and
means

    m1 = a1*v1 - a2*v2,     m2 = a1*v2 + a2*v1,

where v = v1 + j*v2 and alpha = a1 + j*a2.  Each complex secondary vector
contributes two real training vectors, which is what lets the split-domain
detectors run with half the usual training support.

All sampling is driven by explicit numpy Generators.  Monte-Carlo code
uses `trial_rng(master_seed, trial_index)`, a counter-based stream, so
any trial can be regenerated in isolation and results do not depend on
batching or worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidModel
from .realspd import SpdMatrix, quad_form, spd_from_entries

DEFAULT_PHASE = math.pi / 4.0


@dataclass(frozen=True, eq=False)
class SteeringPair:
    """Real and imaginary parts (v1, v2) of a unit-norm steering vector."""

    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        v1 = np.asarray(self.v1, dtype=np.float64)
        v2 = np.asarray(self.v2, dtype=np.float64)
        if v1.ndim != 1 or v1.shape != v2.shape:
            raise DimensionMismatch("v1 and v2 must be 1-D of equal length")
        norm2 = float(v1 @ v1 + v2 @ v2)
        if abs(norm2 - 1.0) > 1e-12:
            raise InvalidModel(f"steering pair has squared norm {norm2!r}, want 1")
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "v2", v2)

    @property
    def n(self) -> int:
        return self.v1.shape[0]

    def as_complex(self) -> np.ndarray:
        return self.v1 + 1j * self.v2


@dataclass(frozen=True)
class Amplitude:
    """Real pair (a1, a2) = (Re alpha, Im alpha) of the target response."""

    a1: float
    a2: float

    def __post_init__(self):
        if not (math.isfinite(self.a1) and math.isfinite(self.a2)):
            raise InvalidModel("amplitude components must be finite")

    @property
    def abs2(self) -> float:
        return self.a1 * self.a1 + self.a2 * self.a2

    def as_complex(self) -> complex:
        return complex(self.a1, self.a2)


@dataclass(frozen=True, eq=False)
class SplitObservation:
    """Primary pair (z1, z2) plus the N x 2K real training matrix zs.

    Column layout of zs: the first K columns are the real parts of the
    complex secondaries, the last K their imaginary parts.
    """

    z1: np.ndarray
    z2: np.ndarray
    zs: np.ndarray

    def __post_init__(self):
        z1 = np.asarray(self.z1, dtype=np.float64)
        z2 = np.asarray(self.z2, dtype=np.float64)
        zs = np.asarray(self.zs, dtype=np.float64)
        n = z1.shape[0]
        if z1.ndim != 1 or z2.shape != (n,):
            raise DimensionMismatch("z1 and z2 must be 1-D of equal length")
        if zs.ndim != 2 or zs.shape[0] != n or zs.shape[1] % 2 != 0:
            raise DimensionMismatch(
                f"zs must be N x 2K with N = {n}, got shape {zs.shape}"
            )
        object.__setattr__(self, "z1", z1)
        object.__setattr__(self, "z2", z2)
        object.__setattr__(self, "zs", zs)

    @property
    def n(self) -> int:
        return self.z1.shape[0]

    @property
    def k(self) -> int:
        return self.zs.shape[1] // 2

    def as_complex(self) -> tuple[np.ndarray, np.ndarray]:
        """Complex view (r, rs) with r = z1 + j z2 and rs N x K."""
        k = self.k
        return self.z1 + 1j * self.z2, self.zs[:, :k] + 1j * self.zs[:, k:]


@dataclass(frozen=True)
class ClutterModel:
    """Gaussian-correlated clutter plus white noise.

    Covariance law: M0[i, j] = sigma_n2 * delta_ij
                              + sigma_c2 * rho_c**((i-j)**2) * exp(j*2*pi*fd*(i-j))
    with sigma_c2 = sigma_n2 * 10**(cnr_db / 10).  The exponent on rho_c is
    the squared lag, giving a Gaussian-shaped correlation.  With fd = 0 the
    covariance is real and symmetric (even spectrum); fd != 0 produces a
    complex Hermitian covariance used only by the complex-domain detectors.
    """

    n: int
    rho_c: float
    cnr_db: float
    fd: float = 0.0
    sigma_n2: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidModel(f"need at least 2 channels, got {self.n}")
        if not (0.0 < self.rho_c < 1.0):
            raise InvalidModel(f"rho_c must be in (0, 1), got {self.rho_c!r}")
        if math.isnan(self.cnr_db) or self.cnr_db == math.inf:
            raise InvalidModel(f"cnr_db must be < +inf, got {self.cnr_db!r}")
        if self.sigma_n2 <= 0.0:
            raise InvalidModel("sigma_n2 must be positive")

    @property
    def sigma_c2(self) -> float:
        return self.sigma_n2 * 10.0 ** (self.cnr_db / 10.0)


def steering(n: int, nu_d: float) -> SteeringPair:
    """Temporal steering pair at normalized Doppler nu_d (cycles/sample).

    v[k] = exp(j*2*pi*k*nu_d) / sqrt(N), so v1[k] = cos(2*pi*k*nu_d)/sqrt(N)
    and v2[k] = sin(2*pi*k*nu_d)/sqrt(N).
    """
    if n < 2:
        raise InvalidModel(f"need at least 2 channels, got {n}")
    phases = 2.0 * math.pi * nu_d * np.arange(n)
    scale = 1.0 / math.sqrt(n)
    return SteeringPair(np.cos(phases) * scale, np.sin(phases) * scale)


def clutter_covariance(model: ClutterModel) -> SpdMatrix:
    """Real covariance M0 of the model; requires fd == 0."""
    if model.fd != 0.0:
        raise InvalidModel(
            "real covariance requires fd == 0; use complex_clutter_covariance"
        )
    lag = np.arange(model.n)
    lag2 = (lag[:, None] - lag[None, :]) ** 2
    m0 = model.sigma_c2 * model.rho_c ** lag2 + model.sigma_n2 * np.eye(model.n)
    return spd_from_entries(m0)


def complex_clutter_covariance(model: ClutterModel) -> np.ndarray:
    """Complex Hermitian covariance M0 (any fd); equals the real M0 at fd=0."""
    lag = np.arange(model.n)
    diff = lag[:, None] - lag[None, :]
    m0 = model.sigma_c2 * model.rho_c ** (diff ** 2) * np.exp(
        2j * math.pi * model.fd * diff
    )
    m0 += model.sigma_n2 * np.eye(model.n)
    return m0


def split_chol(model: ClutterModel) -> np.ndarray:
    """Lower Cholesky factor of the split covariance M = M0 / 2."""
    return clutter_covariance(model).chol / math.sqrt(2.0)


def sample(
    model: ClutterModel,
    v: SteeringPair,
    alpha: Amplitude | None,
    k: int,
    rng: np.random.Generator,
) -> SplitObservation:
    """Draw one split observation: primary pair plus 2K training columns.

    All 2K + 2 real vectors are iid N(0, M0/2); under H1 the means
    (a1*v1 - a2*v2, a1*v2 + a2*v1) are added to the primary pair.

    The draw order is fixed (z1 whites, z2 whites, then the 2K training
    whites) so that a given generator state always yields the same
    observation.
    """
    n = model.n
    if v.n != n:
        raise DimensionMismatch(f"steering length {v.n} != model channels {n}")
    if 2 * k < n:
        raise DimensionMismatch(f"need 2K >= N, got K={k}, N={n}")
    low = split_chol(model)
    white = rng.standard_normal((2 * k + 2, n))
    colored = white @ low.T
    z1 = colored[0]
    z2 = colored[1]
    if alpha is not None:
        z1 = z1 + alpha.a1 * v.v1 - alpha.a2 * v.v2
        z2 = z2 + alpha.a1 * v.v2 + alpha.a2 * v.v1
    return SplitObservation(z1, z2, colored[2:].T)


def sample_complex(
    model: ClutterModel,
    v: SteeringPair,
    alpha: Amplitude | None,
    k: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (r, rs) directly in the complex domain (supports fd != 0).

    r = alpha*v + n with n circular CN(0, M0); the K secondary columns are
    iid CN(0, M0).  At fd = 0 this is the same law as `sample` viewed
    through SplitObservation.as_complex().
    """
    n = model.n
    if v.n != n:
        raise DimensionMismatch(f"steering length {v.n} != model channels {n}")
    m0 = complex_clutter_covariance(model)
    low = np.linalg.cholesky(m0)
    white = (
        rng.standard_normal((k + 1, n)) + 1j * rng.standard_normal((k + 1, n))
    ) / math.sqrt(2.0)
    colored = white @ low.T
    r = colored[0]
    if alpha is not None:
        r = r + alpha.as_complex() * v.as_complex()
    return r, colored[1:].T


def sinr(alpha: Amplitude, v: SteeringPair, m0) -> float:
    """SINR in dB: 10*log10(|alpha|^2 * v^H M0^{-1} v).

    `m0` is the complex-domain covariance: an SpdMatrix when it is real
    (fd = 0) or a complex Hermitian ndarray otherwise.
    """
    return 10.0 * math.log10(alpha.abs2 * steering_gain(v, m0))


def steering_gain(v: SteeringPair, m0) -> float:
    """The quadratic form v^H M0^{-1} v (real and positive)."""
    if isinstance(m0, SpdMatrix):
        return quad_form(m0, v.v1, v.v1) + quad_form(m0, v.v2, v.v2)
    m0 = np.asarray(m0)
    vc = v.as_complex()
    val = np.vdot(vc, np.linalg.solve(m0, vc))
    return float(val.real)


def alpha_for_sinr(target_sinr_db: float, phase: float, v: SteeringPair, m0) -> Amplitude:
    """Amplitude whose modulus attains the requested SINR, at the given phase.

    -inf dB is the zero-amplitude (target-absent) limit and is allowed.
    """
    if math.isnan(target_sinr_db) or target_sinr_db == math.inf:
        raise InvalidModel("target SINR must be finite or -inf")
    mag = math.sqrt(10.0 ** (target_sinr_db / 10.0) / steering_gain(v, m0))
    return Amplitude(mag * math.cos(phase), mag * math.sin(phase))


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based per-trial generator.

    Trial t draws from a Philox stream keyed by the master seed with the
    256-bit counter pre-advanced to t * 2**64; distinct trials can never
    overlap (a trial would need to consume 2**64 blocks) and any trial is
    reproducible without generating its predecessors.
    """
    if trial_index < 0:
        raise InvalidModel("trial_index must be non-negative")
    bitgen = np.random.Philox(key=master_seed, counter=trial_index << 64)
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class Scenario:
    """Bundle of everything a Monte-Carlo run needs to draw one trial.

    `cnr_db = -inf` is allowed and produces exactly white noise
    (sigma_c2 = 0), which is how CFAR thresholds are pre-calibrated.
    """

    n: int
    k: int
    rho_c: float = 0.9
    cnr_db: float = 20.0
    nu_d: float = 0.0
    fd: float = 0.0
    phase: float = DEFAULT_PHASE
    sweeps: int = 3
    sigma_n2: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise InvalidModel(f"need at least one secondary vector, got {self.k}")
        if self.sweeps < 0:
            raise InvalidModel("sweeps must be >= 0")
        self.model()  # validate the clutter parameters eagerly

    def model(self) -> ClutterModel:
        return ClutterModel(
            n=self.n,
            rho_c=self.rho_c,
            cnr_db=self.cnr_db,
            fd=self.fd,
            sigma_n2=self.sigma_n2,
        )

    def steering_pair(self) -> SteeringPair:
        return steering(self.n, self.nu_d)

    def m0(self) -> SpdMatrix:
        """Complex-equivalent covariance (real branch, fd must be 0)."""
        return clutter_covariance(self.model())

    def m_split(self) -> SpdMatrix:
        """Covariance M0/2 of the split real vectors."""
        return spd_from_entries(self.m0().entries / 2.0)

    def alpha_at(self, sinr_db: float) -> Amplitude:
        return alpha_for_sinr(sinr_db, self.phase, self.steering_pair(), self.m0())

    def draw(self, alpha: Amplitude | None, rng: np.random.Generator) -> SplitObservation:
        return sample(self.model(), self.steering_pair(), alpha, self.k, rng)
