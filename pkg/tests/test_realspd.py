"""Tests for the SPD matrix core.

Oracles used here are deliberately independent of the implementation:
determinants come from a hand-rolled cofactor expansion, quadratic forms
from an explicitly materialized inverse, and the rank-two update from
direct assembly of the updated matrix.
"""

import math

import numpy as np
import pytest

from symdet.errors import DimensionMismatch, NotPositiveDefinite
from symdet.realspd import (
    SpdMatrix,
    logdet,
    quad_form,
    rank_two_update_logdet,
    spd_from_entries,
)


def det_cofactor(a):
    """Determinant by recursive cofactor expansion (oracle, N <= 6)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += ((-1.0) ** j) * a[0, j] * det_cofactor(minor)
    return total


def random_spd(rng, n, scale=1.0):
    r = rng.standard_normal((n, 2 * n))
    return scale * (r @ r.T) / (2 * n) + 0.1 * scale * np.eye(n)


class TestConstruction:
    def test_identity_logdet_zero(self):
        a = spd_from_entries(np.eye(3))
        assert logdet(a) == 0.0

    def test_2x2_logdet_by_hand(self):
        a = spd_from_entries([[2.0, 1.0], [1.0, 2.0]])
        assert abs(logdet(a) - math.log(3.0)) < 1e-14

    def test_indefinite_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            spd_from_entries([[1.0, 2.0], [2.0, 1.0]])

    def test_symmetrization(self):
        a = spd_from_entries([[2.0, 0.4], [0.0, 2.0]])
        assert a.entries[0, 1] == a.entries[1, 0] == 0.2

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatch):
            spd_from_entries(np.ones((2, 3)))

    def test_nonfinite_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            spd_from_entries([[1.0, 0.0], [0.0, np.nan]])

    def test_tiny_pivot_rejected(self):
        # PD but with a pivot far below the relative tolerance.
        with pytest.raises(NotPositiveDefinite):
            spd_from_entries(np.diag([1.0, 1e-30]))

    def test_entries_immutable(self):
        a = spd_from_entries(np.eye(2))
        with pytest.raises(ValueError):
            a.entries[0, 0] = 5.0


class TestQuadForm:
    def test_identity_basis_vector(self):
        a = spd_from_entries(np.eye(4))
        e1 = np.array([1.0, 0.0, 0.0, 0.0])
        assert quad_form(a, e1, e1) == 1.0

    def test_scaled_identity(self):
        a = spd_from_entries(2.0 * np.eye(4))
        ones = np.ones(4)
        assert abs(quad_form(a, ones, ones) - 2.0) < 1e-14

    def test_matches_explicit_inverse(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m = random_spd(rng, 6)
            a = spd_from_entries(m)
            x = rng.standard_normal(6)
            y = rng.standard_normal(6)
            want = x @ np.linalg.inv(a.entries) @ y
            got = quad_form(a, x, y)
            assert abs(got - want) <= 1e-10 * max(1.0, abs(want))

    def test_symmetry_in_arguments(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            a = spd_from_entries(random_spd(rng, 5))
            x = rng.standard_normal(5)
            y = rng.standard_normal(5)
            fxy = quad_form(a, x, y)
            fyx = quad_form(a, y, x)
            assert abs(fxy - fyx) <= 1e-12 * max(1.0, abs(fxy))

    def test_positive_for_nonzero(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            a = spd_from_entries(random_spd(rng, 5))
            x = rng.standard_normal(5)
            assert quad_form(a, x, x) > 0.0

    def test_dimension_mismatch(self):
        a = spd_from_entries(np.eye(3))
        with pytest.raises(DimensionMismatch):
            quad_form(a, np.ones(4), np.ones(3))


class TestLogdet:
    def test_identity_8(self):
        assert logdet(spd_from_entries(np.eye(8))) == 0.0

    def test_diag_123(self):
        a = spd_from_entries(np.diag([1.0, 2.0, 3.0]))
        assert abs(logdet(a) - math.log(6.0)) < 1e-14

    def test_matches_cofactor_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            m = random_spd(rng, 5)
            a = spd_from_entries(m)
            want = math.log(det_cofactor(a.entries))
            assert abs(logdet(a) - want) <= 1e-10 * max(1.0, abs(want))


class TestRankTwoUpdate:
    def test_identity_with_unit_vectors(self):
        a = spd_from_entries(np.eye(2))
        got = rank_two_update_logdet(a, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert abs(got - math.log(4.0)) < 1e-14

    def test_zero_update_is_identity(self):
        a = spd_from_entries(np.eye(3))
        assert rank_two_update_logdet(a, np.zeros(3), np.zeros(3)) == 0.0

    def test_matches_direct_assembly(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            m = random_spd(rng, 4)
            a = spd_from_entries(m)
            u = rng.standard_normal(4)
            w = rng.standard_normal(4)
            updated = spd_from_entries(a.entries + np.outer(u, u) + np.outer(w, w))
            want = logdet(updated)
            got = rank_two_update_logdet(a, u, w)
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))

    def test_matches_direct_assembly_various_sizes(self):
        rng = np.random.default_rng(32)
        for n in range(2, 9):
            m = random_spd(rng, n, scale=3.0)
            a = spd_from_entries(m)
            u = rng.standard_normal(n)
            w = rng.standard_normal(n)
            updated = spd_from_entries(a.entries + np.outer(u, u) + np.outer(w, w))
            want = logdet(updated)
            got = rank_two_update_logdet(a, u, w)
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))

    def test_dimension_mismatch(self):
        a = spd_from_entries(np.eye(3))
        with pytest.raises(DimensionMismatch):
            rank_two_update_logdet(a, np.ones(2), np.ones(3))


class TestSolve:
    def test_solve_matches_inverse(self):
        rng = np.random.default_rng(41)
        m = random_spd(rng, 6)
        a = spd_from_entries(m)
        b = rng.standard_normal((6, 3))
        want = np.linalg.inv(a.entries) @ b
        got = a.solve(b)
        assert np.max(np.abs(got - want)) < 1e-10
