"""Minimization of the determinant-ratio objective h(a1, a2).

The exact-GLRT denominator factors as det(S) * h(a1, a2) with

    h = (1 + q11) * (1 + q22) - q12**2,
    qij = (zi - mi)' S^{-1} (zj - mj),
    m1 = a1*v1 - a2*v2,   m2 = a1*v2 + a2*v1.

h is strictly positive and coercive, and along either coordinate it is a
quartic with positive leading coefficient, so each coordinate minimum is a
real root of a cubic.  The solver alternates exact coordinate minima
(cyclic coordinate descent), seeded by default with the closed-form
two-step estimates; the objective sequence is non-increasing by
construction.

Everything is expressed through ten cached inner products
{v1,v2,z1,z2}' S^{-1} {v1,v2,z1,z2}, so a full minimization costs a
handful of scalar cubics after one matrix factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateToConstant, DimensionMismatch
from .realspd import SpdMatrix, spd_from_entries
from .scenario import Amplitude, SplitObservation, SteeringPair

# All coefficients at or below this magnitude: the derivative polynomial is
# identically zero and the objective is flat along the coordinate.
DEGENERATE_ATOL = 1e-14
# Leading coefficients below this fraction of the largest one trigger the
# quadratic/linear fallback.
LEADING_RTOL = 1e-12
# Roots closer than this are reported once.
DEDUP_ATOL = 1e-10


class HContext:
    """Immutable bundle of h's arguments plus the cached inner products.

    The Gram matrix of S^{-1} over the basis (z1, z2, v1, v2) contains the
    ten distinct scalars every h evaluation, derivative table and detector
    statistic needs; nothing downstream touches S again.
    """

    __slots__ = ("z1", "z2", "v", "s", "gram")

    def __init__(self, z1, z2, v: SteeringPair, s: SpdMatrix):
        z1 = np.asarray(z1, dtype=np.float64)
        z2 = np.asarray(z2, dtype=np.float64)
        n = s.dim
        if z1.shape != (n,) or z2.shape != (n,) or v.n != n:
            raise DimensionMismatch("z1, z2, v and S must share dimension")
        basis = np.column_stack([z1, z2, v.v1, v.v2])
        solved = s.solve(basis)
        gram = basis.T @ solved
        gram = (gram + gram.T) / 2.0
        gram.setflags(write=False)
        self.z1 = z1
        self.z2 = z2
        self.v = v
        self.s = s
        self.gram = gram

    @classmethod
    def from_observation(cls, obs: SplitObservation, v: SteeringPair) -> "HContext":
        s = spd_from_entries(obs.zs @ obs.zs.T)
        return cls(obs.z1, obs.z2, v, s)

    # basis order (z1, z2, v1, v2)
    @property
    def zz11(self):
        return self.gram[0, 0]

    @property
    def zz12(self):
        return self.gram[0, 1]

    @property
    def zz22(self):
        return self.gram[1, 1]

    @property
    def vz11(self):
        return self.gram[2, 0]

    @property
    def vz12(self):
        return self.gram[2, 1]

    @property
    def vz21(self):
        return self.gram[3, 0]

    @property
    def vz22(self):
        return self.gram[3, 1]

    @property
    def vv11(self):
        return self.gram[2, 2]

    @property
    def vv12(self):
        return self.gram[2, 3]

    @property
    def vv22(self):
        return self.gram[3, 3]

    def scalars(self) -> tuple:
        """The ten cached inner products, in a fixed documented order."""
        return (
            self.vv11, self.vv12, self.vv22,
            self.vz11, self.vz12, self.vz21, self.vz22,
            self.zz11, self.zz12, self.zz22,
        )


@dataclass
class EstimationTrace:
    """Iterate/objective history of one coordinate-descent run."""

    iterates: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    converged: bool = False
    iterations_used: int = 0

    def is_monotone(self, slack: float = 1e-12) -> bool:
        obj = self.objective
        return all(obj[i + 1] <= obj[i] * (1.0 + slack) for i in range(len(obj) - 1))


def two_step_estimate(z1, z2, v: SteeringPair, w: SpdMatrix) -> Amplitude:
    """Closed-form amplitude estimates for a known (or plug-in) covariance W.

    Solves the linear stationarity system of the compressed log-likelihood:

        a1 = (v1'W^{-1}z1 + v2'W^{-1}z2) / (v1'W^{-1}v1 + v2'W^{-1}v2)
        a2 = (v1'W^{-1}z2 - v2'W^{-1}z1) / (v1'W^{-1}v1 + v2'W^{-1}v2)

    Callers pass W = S for the adaptive seed or the true covariance for the
    benchmark detector.
    """
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    solved = w.solve(np.column_stack([z1, z2, v.v1, v.v2]))
    vz11 = float(v.v1 @ solved[:, 0])
    vz12 = float(v.v1 @ solved[:, 1])
    vz21 = float(v.v2 @ solved[:, 0])
    vz22 = float(v.v2 @ solved[:, 1])
    den = float(v.v1 @ solved[:, 2] + v.v2 @ solved[:, 3])
    return Amplitude((vz11 + vz22) / den, (vz12 - vz21) / den)


def two_step_from_context(ctx: HContext) -> Amplitude:
    """Two-step estimate with W = S, read off the cached Gram matrix."""
    den = ctx.vv11 + ctx.vv22
    return Amplitude((ctx.vz11 + ctx.vz22) / den, (ctx.vz12 - ctx.vz21) / den)


def h_eval(ctx: HContext, a: Amplitude) -> float:
    """Evaluate h(a1, a2) from the cached Gram matrix."""
    c1 = np.array([1.0, 0.0, -a.a1, a.a2])
    c2 = np.array([0.0, 1.0, -a.a2, -a.a1])
    g = ctx.gram
    q11 = float(c1 @ g @ c1)
    q22 = float(c2 @ g @ c2)
    q12 = float(c1 @ g @ c2)
    return (1.0 + q11) * (1.0 + q22) - q12 * q12


def a_table(scalars, t):
    """Coefficient table for the profile h1(a1) with a2 fixed at t.

    Returns (a1..a15).  Writing the profile as h1 = A*B - C**2 with
    quadratics A = 1 + q11, B = 1 + q22, C = q12:

        A = a6*x**2 + a7*x + a8     A' = a1*x + a2
        B = a3*x**2 + a4*x + a5     B' = a9*x + a10
        C = a11*x**2 + a12*x + a13  C' = a14*x + a15

    Accepts scalars or numpy arrays (vectorized over trials).
    """
    vv11, vv12, vv22, vz11, vz12, vz21, vz22, zz11, zz12, zz22 = scalars
    a1 = 2.0 * vv11
    a2 = -2.0 * t * vv12 - 2.0 * vz11
    a3 = vv22
    a4 = -2.0 * vz22 + 2.0 * t * vv12
    a5 = t * t * vv11 - 2.0 * t * vz12 + zz22 + 1.0
    a6 = vv11
    a7 = -2.0 * vz11 - 2.0 * t * vv12
    a8 = t * t * vv22 + 2.0 * t * vz21 + zz11 + 1.0
    a9 = 2.0 * vv22
    a10 = 2.0 * t * vv12 - 2.0 * vz22
    a11 = vv12
    a12 = -vz21 - vz12 + t * (vv11 - vv22)
    a13 = zz12 + t * (vz22 - vz11) - t * t * vv12
    a14 = 2.0 * vv12
    a15 = a12
    return (a1, a2, a3, a4, a5, a6, a7, a8, a9, a10, a11, a12, a13, a14, a15)


def c_table(scalars, u):
    """Coefficient table for the profile h2(a2) with a1 fixed at u.

    Same layout as `a_table` (the procedure is dual in the two coordinates).
    """
    vv11, vv12, vv22, vz11, vz12, vz21, vz22, zz11, zz12, zz22 = scalars
    c1 = 2.0 * vv22
    c2 = -2.0 * u * vv12 + 2.0 * vz21
    c3 = vv11
    c4 = -2.0 * vz12 + 2.0 * u * vv12
    c5 = u * u * vv22 - 2.0 * u * vz22 + zz22 + 1.0
    c6 = vv22
    c7 = 2.0 * vz21 - 2.0 * u * vv12
    c8 = u * u * vv11 - 2.0 * u * vz11 + zz11 + 1.0
    c9 = 2.0 * vv11
    c10 = 2.0 * u * vv12 - 2.0 * vz12
    c11 = -vv12
    c12 = -vz11 + vz22 + u * (vv11 - vv22)
    c13 = zz12 - u * (vz21 + vz12) + u * u * vv12
    c14 = -2.0 * vv12
    c15 = c12
    return (c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12, c13, c14, c15)


def derivative_coeffs(table):
    """Cubic coefficients of d(profile)/dx = b1*x**3 + b2*x**2 + b3*x + b4
    assembled from a profile table (A'B + AB' - 2CC')."""
    (a1, a2, a3, a4, a5, a6, a7, a8,
     a9, a10, a11, a12, a13, a14, a15) = table
    b1 = a1 * a3 + a9 * a6 - 2.0 * a11 * a14
    b2 = a1 * a4 + a2 * a3 + a6 * a10 + a9 * a7 - 2.0 * a11 * a15 - 2.0 * a12 * a14
    b3 = a1 * a5 + a2 * a4 + a7 * a10 + a9 * a8 - 2.0 * a12 * a15 - 2.0 * a13 * a14
    b4 = a2 * a5 + a8 * a10 - 2.0 * a13 * a15
    return (b1, b2, b3, b4)


def profile_h(table, x):
    """Evaluate the profile h = A*B - C**2 at x from a coefficient table."""
    (_, _, a3, a4, a5, a6, a7, a8, _, _, a11, a12, a13, _, _) = table
    aa = (a6 * x + a7) * x + a8
    bb = (a3 * x + a4) * x + a5
    cc = (a11 * x + a12) * x + a13
    return aa * bb - cc * cc


def cubic_coeffs_alpha1(ctx: HContext, alpha2_fixed: float) -> tuple:
    """Cubic coefficients of d h1 / d a1 with a2 frozen at alpha2_fixed."""
    return derivative_coeffs(a_table(ctx.scalars(), alpha2_fixed))


def cubic_coeffs_alpha2(ctx: HContext, alpha1_fixed: float) -> tuple:
    """Cubic coefficients of d h2 / d a2 with a1 frozen at alpha1_fixed."""
    return derivative_coeffs(c_table(ctx.scalars(), alpha1_fixed))


def cubic_roots_batch(b1, b2, b3, b4):
    """Real roots of stacked cubics b1*x^3 + b2*x^2 + b3*x + b4.

    Vectorized Cardano in its discriminant-split form: the trigonometric
    branch for three real roots, the single-real-root branch otherwise,
    with quadratic/linear fallbacks for (relatively) vanishing leading
    coefficients.  Two Newton polishing steps on the full cubic follow the
    closed forms; near-coincident roots are deduplicated.

    Returns (roots, valid): float arrays of shape (..., 3), roots sorted
    ascending per row with NaN in invalid slots.  Rows whose coefficients
    give no computable real root (all-zero polynomial, or a non-vanishing
    constant) end up with zero valid roots; scalar callers raise
    DegenerateToConstant for those.
    """
    b1, b2, b3, b4 = np.broadcast_arrays(
        *(np.asarray(b, dtype=np.float64) for b in (b1, b2, b3, b4))
    )
    shape = b1.shape
    b1 = b1.ravel()
    b2 = b2.ravel()
    b3 = b3.ravel()
    b4 = b4.ravel()
    m = b1.size
    roots = np.full((m, 3), np.nan)
    valid = np.zeros((m, 3), dtype=bool)

    scale = np.maximum.reduce([np.abs(b1), np.abs(b2), np.abs(b3), np.abs(b4)])
    alive = scale > DEGENERATE_ATOL
    lead_ok = np.abs(b1) > LEADING_RTOL * scale

    cubic = alive & lead_ok
    if np.any(cubic):
        a = b2[cubic] / b1[cubic]
        b = b3[cubic] / b1[cubic]
        c = b4[cubic] / b1[cubic]
        q = (a * a - 3.0 * b) / 9.0
        r = (2.0 * a ** 3 - 9.0 * a * b + 27.0 * c) / 54.0
        three = (r * r <= q ** 3) & (q > 0.0)

        sub = np.full((cubic.sum(), 3), np.nan)
        vsub = np.zeros_like(sub, dtype=bool)
        if np.any(three):
            qq = q[three]
            ratio = np.clip(r[three] / np.sqrt(qq ** 3), -1.0, 1.0)
            theta = np.arccos(ratio)
            mag = -2.0 * np.sqrt(qq)
            off = a[three] / 3.0
            sub[three, 0] = mag * np.cos(theta / 3.0) - off
            sub[three, 1] = mag * np.cos((theta + 2.0 * np.pi) / 3.0) - off
            sub[three, 2] = mag * np.cos((theta - 2.0 * np.pi) / 3.0) - off
            vsub[three] = True
        one = ~three
        if np.any(one):
            ro = r[one]
            qo = q[one]
            big = np.cbrt(np.abs(ro) + np.sqrt(np.maximum(ro * ro - qo ** 3, 0.0)))
            big = -np.sign(ro) * big
            with np.errstate(divide="ignore", invalid="ignore"):
                small = np.where(big != 0.0, qo / np.where(big != 0.0, big, 1.0), 0.0)
            sub[one, 0] = (big + small) - a[one] / 3.0
            vsub[one, 0] = True
        roots[cubic] = sub
        valid[cubic] = vsub

    quad = alive & ~lead_ok & (np.abs(b2) > LEADING_RTOL * scale)
    if np.any(quad):
        disc = b3[quad] ** 2 - 4.0 * b2[quad] * b4[quad]
        pos = disc >= 0.0
        sq = np.sqrt(np.maximum(disc, 0.0))
        # stable quadratic: avoid subtracting nearly equal quantities
        sgn = np.where(b3[quad] >= 0.0, 1.0, -1.0)
        qq = -(b3[quad] + sgn * sq) / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = qq / b2[quad]
            r2 = np.where(qq != 0.0, b4[quad] / np.where(qq != 0.0, qq, 1.0), 0.0)
        sub = np.full((quad.sum(), 3), np.nan)
        vsub = np.zeros_like(sub, dtype=bool)
        sub[pos, 0] = r1[pos]
        sub[pos, 1] = r2[pos]
        vsub[pos, :2] = True
        roots[quad] = sub
        valid[quad] = vsub

    lin = (
        alive
        & ~lead_ok
        & (np.abs(b2) <= LEADING_RTOL * scale)
        & (np.abs(b3) > LEADING_RTOL * scale)
    )
    if np.any(lin):
        roots[lin, 0] = -b4[lin] / b3[lin]
        valid[lin, 0] = True

    # Newton polish on the full cubic (two steps, kept only when improving).
    for _ in range(2):
        x = roots
        with np.errstate(invalid="ignore"):
            p = ((b1[:, None] * x + b2[:, None]) * x + b3[:, None]) * x + b4[:, None]
            dp = (3.0 * b1[:, None] * x + 2.0 * b2[:, None]) * x + b3[:, None]
            step_ok = valid & (np.abs(dp) > 0.0)
            xn = np.where(step_ok, x - p / np.where(dp != 0.0, dp, 1.0), x)
            pn = ((b1[:, None] * xn + b2[:, None]) * xn + b3[:, None]) * xn + b4[:, None]
            roots = np.where(step_ok & (np.abs(pn) <= np.abs(p)), xn, x)

    roots = np.where(valid, roots, np.nan)
    roots = np.sort(roots, axis=1)  # NaNs sort last
    valid = ~np.isnan(roots)
    # deduplicate near-coincident roots (keep the first of each cluster)
    for j in (1, 2):
        with np.errstate(invalid="ignore"):
            dup = valid[:, j] & valid[:, j - 1] & (
                np.abs(roots[:, j] - roots[:, j - 1]) <= DEDUP_ATOL
            )
        roots[dup, j:] = np.roll(roots[dup, j:], -1, axis=1)
        roots[dup, -1] = np.nan
        valid = ~np.isnan(roots)

    return roots.reshape(shape + (3,)), valid.reshape(shape + (3,))


def solve_cubic_real(coeffs) -> list:
    """All distinct real roots of b1*x^3 + b2*x^2 + b3*x + b4, ascending.

    Raises DegenerateToConstant when the polynomial carries no root
    information (all coefficients at noise level, or constant-only); the
    minimizer then keeps the current coordinate value.
    """
    b1, b2, b3, b4 = (float(c) for c in coeffs)
    roots, valid = cubic_roots_batch(b1, b2, b3, b4)
    out = [float(r) for r, ok in zip(roots, valid) if ok]
    if not out:
        raise DegenerateToConstant(
            f"derivative polynomial {coeffs!r} has no usable real root"
        )
    return out


def coordinate_min(ctx: HContext, coord: int, other_fixed: float) -> float:
    """Exact minimum of h along one coordinate with the other frozen.

    Picks, among the real roots of the profile-derivative cubic, the one
    with the smallest profile value (ties broken toward smaller |root|).
    """
    if coord == 1:
        table = a_table(ctx.scalars(), other_fixed)
    elif coord == 2:
        table = c_table(ctx.scalars(), other_fixed)
    else:
        raise ValueError(f"coord must be 1 or 2, got {coord!r}")
    roots = solve_cubic_real(derivative_coeffs(table))
    best = roots[0]
    best_key = (profile_h(table, best), abs(best))
    for r in roots[1:]:
        key = (profile_h(table, r), abs(r))
        if key < best_key:
            best, best_key = r, key
    return float(best)


def algorithm1(
    ctx: HContext,
    seed: Amplitude | None = None,
    max_iter: int = 50,
    eps1: float = 1e-6,
    eps2: float = 1e-6,
) -> tuple[Amplitude, EstimationTrace]:
    """Cyclic coordinate descent on h from a seed amplitude.

    Each sweep minimizes exactly over a1 (a2 frozen) and then over a2
    (a1 frozen).  The default seed is the two-step estimate with W = S;
    pass Amplitude(0, 0) for a cold start.  Stops when both coordinate
    moves fall at or below their tolerances, or after max_iter sweeps.
    A flat coordinate (degenerate derivative) keeps its current value.

    Returns the final iterate together with the full trace; the objective
    sequence is non-increasing because every accepted move is an exact
    coordinate minimum.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if eps1 <= 0.0 or eps2 <= 0.0:
        raise ValueError("tolerances must be positive")
    if seed is None:
        seed = two_step_from_context(ctx)

    trace = EstimationTrace()
    a1, a2 = float(seed.a1), float(seed.a2)
    trace.iterates.append(Amplitude(a1, a2))
    trace.objective.append(h_eval(ctx, trace.iterates[-1]))

    for sweep in range(max_iter):
        prev1, prev2 = a1, a2
        try:
            a1 = coordinate_min(ctx, 1, a2)
        except DegenerateToConstant:
            pass
        try:
            a2 = coordinate_min(ctx, 2, a1)
        except DegenerateToConstant:
            pass
        trace.iterates.append(Amplitude(a1, a2))
        trace.objective.append(h_eval(ctx, trace.iterates[-1]))
        trace.iterations_used = sweep + 1
        if abs(a1 - prev1) <= eps1 and abs(a2 - prev2) <= eps2:
            trace.converged = True
            break

    return trace.iterates[-1], trace
