import numpy as np
import pytest

from cdare import errors
from cdare.matcore import (
    UNIT_ROUNDOFF,
    as_cmatrix,
    condition_estimate,
    conj,
    conj_transpose,
    frob,
    hermitian_verdict,
    inverse,
    loewner_geq,
    smw_inverse,
    solve_linear,
    spectral_radius,
    stein_solve_conjugate,
    symmetrize,
)
from conftest import crandn, random_hpd


class TestAsCmatrix:
    def test_scalar_becomes_1x1(self):
        assert as_cmatrix(2.0).shape == (1, 1)

    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="non-finite"):
            as_cmatrix([[np.nan, 0.0], [0.0, 1.0]])

    def test_rejects_inf(self):
        with pytest.raises(ValueError, match="non-finite"):
            as_cmatrix([[1.0, np.inf], [0.0, 1.0]])

    def test_copies_input(self):
        src = np.eye(2, dtype=complex)
        out = as_cmatrix(src)
        out[0, 0] = 5.0
        assert src[0, 0] == 1.0


class TestConj:
    def test_real_matrix_fixed(self, rng):
        m = rng.standard_normal((3, 3))
        assert np.array_equal(conj(m), m)

    def test_single_imaginary_entry(self):
        assert conj(np.array([[1j]]))[0, 0] == -1j

    def test_involution(self, rng):
        m = crandn(rng, 4)
        assert np.array_equal(conj(conj(m)), m)


class TestConjTranspose:
    def test_identity_fixed(self):
        assert np.array_equal(conj_transpose(np.eye(3)), np.eye(3))

    def test_shift_matrix(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert np.array_equal(conj_transpose(m), m.T)

    def test_product_rule(self, rng):
        a, b = crandn(rng, 3), crandn(rng, 3)
        lhs = conj_transpose(a @ b)
        rhs = conj_transpose(b) @ conj_transpose(a)
        assert frob(lhs - rhs) <= 1e-14 * frob(lhs)


class TestSolveLinear:
    def test_identity(self, rng):
        b = crandn(rng, 4, 2)
        assert np.allclose(solve_linear(np.eye(4), b), b)

    def test_scaled_identity(self):
        z = solve_linear(2 * np.eye(3), np.eye(3))
        assert np.allclose(z, 0.5 * np.eye(3))

    def test_residual_of_random_system(self, rng):
        m = crandn(rng, 5) + 3 * np.eye(5)
        rhs = crandn(rng, 5, 3)
        z = solve_linear(m, rhs)
        assert frob(m @ z - rhs) <= 1e-12 * frob(rhs)

    def test_singular_raises(self):
        m = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(errors.SingularMatrix):
            solve_linear(m, np.eye(2))

    def test_ill_conditioned_warns_but_solves(self):
        # unit-triangular with -1 above the diagonal: clean pivots, but
        # the inverse grows like 2^n, so the condition estimate blows up
        n = 70
        m = np.eye(n) - np.triu(np.ones((n, n)), 1)
        with pytest.warns(errors.IllConditionedWarning):
            z = solve_linear(m, np.eye(n))
        assert np.all(np.isfinite(z))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            solve_linear(np.eye(3), np.eye(2))


class TestSmwInverse:
    def test_zero_update_gives_plain_inverse(self, rng):
        x = random_hpd(rng, 4)
        out = smw_inverse(x, np.zeros((4, 4)), np.eye(4), np.zeros((4, 4)))
        assert np.allclose(out, inverse(x), atol=1e-12)

    def test_scalar_case(self):
        one = np.ones((1, 1))
        out = smw_inverse(2 * one, one, one, one, sign=1)
        assert abs(out[0, 0] - 1.0 / 3.0) < 1e-15

    @pytest.mark.parametrize("sign", [1, -1])
    def test_matches_direct_inverse(self, rng, sign):
        x = random_hpd(rng, 4, shift=4.0)
        y = random_hpd(rng, 4, shift=4.0)
        a, b = crandn(rng, 4), crandn(rng, 4)
        direct = np.linalg.inv(x + sign * a @ y @ b)
        out = smw_inverse(x, a, y, b, sign=sign)
        assert frob(out - direct) <= 1e-12 * frob(direct)

    def test_inverse_property_over_sizes(self, rng):
        for n in range(2, 9):
            x = random_hpd(rng, n, shift=3.0)
            y = random_hpd(rng, n, shift=3.0)
            a, b = crandn(rng, n), crandn(rng, n)
            full = x + a @ y @ b
            if condition_estimate(full) > 1e6:
                continue
            out = smw_inverse(x, a, y, b, sign=1)
            assert frob(out @ full - np.eye(n)) <= 1e-11

    def test_bad_sign(self):
        with pytest.raises(ValueError):
            smw_inverse(np.eye(2), np.eye(2), np.eye(2), np.eye(2), sign=2)


class TestSpectralRadius:
    def test_identity(self):
        assert spectral_radius(np.eye(5)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert spectral_radius(np.diag([0.5, -0.25])) == pytest.approx(0.5)

    def test_companion_of_fibonacci_polynomial(self):
        # z^2 - z - 1 has the golden ratio as dominant root
        m = np.array([[1.0, 1.0], [1.0, 0.0]])
        golden = (1.0 + np.sqrt(5.0)) / 2.0
        assert spectral_radius(m) == pytest.approx(golden, abs=1e-10)

    def test_gelfand_consistency(self, rng):
        for _ in range(5):
            m = crandn(rng, 4)
            m *= 0.8 / spectral_radius(m)
            rho = spectral_radius(m)
            for k in (2, 4, 8):
                rho_k = spectral_radius(np.linalg.matrix_power(m, k)) ** (1.0 / k)
                assert rho_k <= rho * (1.0 + 1e-6)


class TestHermitianVerdict:
    def test_identity(self):
        v = hermitian_verdict(np.eye(3))
        assert v.is_hermitian
        assert v.min_eigenvalue == pytest.approx(1.0)
        assert v.is_positive_definite

    def test_non_hermitian(self):
        v = hermitian_verdict(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert not v.is_hermitian
        assert not v.is_positive_definite

    def test_below_tolerance_floor(self):
        v = hermitian_verdict(np.diag([1.0, -1e-18]), tol=1e-12)
        assert v.is_hermitian
        assert not v.is_positive_definite

    def test_pd_iff_min_eig_above_threshold(self, rng):
        for _ in range(10):
            m = symmetrize(crandn(rng, 3))
            v = hermitian_verdict(m)
            assert v.is_positive_definite == (v.min_eigenvalue > v.tolerance_used)


class TestLoewnerGeq:
    def test_ordered_scalars_of_identity(self):
        assert loewner_geq(2 * np.eye(3), np.eye(3))
        assert not loewner_geq(np.eye(3), 2 * np.eye(3))

    def test_reflexive(self, rng):
        x = symmetrize(crandn(rng, 4))
        assert loewner_geq(x, x)

    def test_rejects_non_hermitian(self, rng):
        with pytest.raises(errors.NotHermitian):
            loewner_geq(crandn(rng, 3), np.eye(3))

    def test_consistent_with_verdict(self, rng):
        tol = 1e-12
        for _ in range(10):
            a = random_hpd(rng, 3)
            b = random_hpd(rng, 3)
            expected = hermitian_verdict(a - b).min_eigenvalue >= -tol * max(
                1.0, frob(a), frob(b)
            )
            assert loewner_geq(a, b, tol) == expected


def _stein_series_oracle(a, q, terms):
    # independent brute-force route: plain summation of the series
    m = np.conj(a) @ a
    rhs = a.conj().T @ np.conj(q) @ a + q
    acc = rhs.copy()
    term = rhs
    for _ in range(terms):
        term = m.conj().T @ term @ m
        acc = acc + term
    return acc


class TestSteinSolveConjugate:
    def test_zero_a_returns_q(self, rng):
        q = random_hpd(rng, 3)
        x = stein_solve_conjugate(np.zeros((3, 3)), q)
        assert np.allclose(x, q, atol=1e-13)

    def test_scalar_geometric_series(self):
        x = stein_solve_conjugate(0.5 * np.ones((1, 1)), np.ones((1, 1)))
        assert x[0, 0] == pytest.approx(4.0 / 3.0, abs=1e-14)

    def test_matches_series_oracle(self, rng):
        a = crandn(rng, 4)
        a *= np.sqrt(0.6 / spectral_radius(np.conj(a) @ a))
        q = random_hpd(rng, 4)
        x = stein_solve_conjugate(a, q)
        oracle = _stein_series_oracle(a, q, 200)
        assert frob(x - oracle) <= 1e-10 * frob(x)

    def test_is_fixed_point(self, rng):
        a = crandn(rng, 5)
        a *= np.sqrt(0.5 / spectral_radius(np.conj(a) @ a))
        q = random_hpd(rng, 5)
        x = stein_solve_conjugate(a, q)
        resid = frob(x - (q + a.conj().T @ np.conj(x) @ a))
        assert resid <= 1e-10 * frob(x)
        assert hermitian_verdict(x).is_positive_definite

    def test_rejects_large_spectral_radius(self, rng):
        a = crandn(rng, 3)
        a *= np.sqrt(1.2 / spectral_radius(np.conj(a) @ a))
        with pytest.raises(errors.SpectralRadiusTooLarge):
            stein_solve_conjugate(a, random_hpd(rng, 3))

    def test_rejects_indefinite_q(self, rng):
        with pytest.raises(errors.NotPositiveDefinite):
            stein_solve_conjugate(0.1 * np.eye(2), np.diag([1.0, -1.0]))

    def test_series_fallback_matches_kron(self, rng, monkeypatch):
        import cdare.matcore as mc

        a = crandn(rng, 6)
        a *= np.sqrt(0.4 / spectral_radius(np.conj(a) @ a))
        q = random_hpd(rng, 6)
        x_kron = stein_solve_conjugate(a, q)
        monkeypatch.setattr(mc, "STEIN_KRON_LIMIT", 2)
        x_series = stein_solve_conjugate(a, q)
        assert frob(x_kron - x_series) <= 1e-10 * frob(x_kron)


def test_unit_roundoff_value():
    assert UNIT_ROUNDOFF == 2.0 ** -52
