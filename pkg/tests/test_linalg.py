import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fidbounds.errors import (
    ConvergenceFailure,
    DimensionMismatch,
    IndexOutOfRange,
    NonHermitianInput,
    NotInBall,
    NotPositiveSemidefinite,
    TraceNotOne,
)
from fidbounds.linalg import (
    NONDECREASING,
    BlochVector,
    DensityMatrix,
    HermitianMatrix,
    Spectrum,
    bloch_map,
    bloch_radius,
    bloch_unmap,
    elementary_symmetric,
    gell_mann_basis,
    hermitian_eig,
    lorentz_form,
    psd_sqrt,
    trace_norm,
    validate_density,
)
from fidbounds.matfile import dumps_matrix, loads_matrix
from fidbounds.randgen import random_hermitian, random_psd, rng_for

from conftest import induced, ket_projector, pure


def charpoly_eigenvalues(h, dps=50):
    """Eigenvalues via Faddeev-LeVerrier coefficients and polynomial roots."""
    with mpmath.workdps(dps):
        n = h.shape[0]
        a = mpmath.matrix([[mpmath.mpc(complex(h[i, j])) for j in range(n)] for i in range(n)])
        coeffs = [mpmath.mpf(1)]
        m = mpmath.zeros(n, n)
        for k in range(1, n + 1):
            m = a * m + coeffs[-1] * mpmath.eye(n)
            am = a * m
            coeffs.append(-sum(am[i, i] for i in range(n)) / k)
        roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=200)
        return sorted((float(mpmath.re(r)) for r in roots), reverse=True)


class TestHermitianEig:
    def test_identity(self):
        dec = hermitian_eig(np.eye(2))
        np.testing.assert_allclose(dec.spectrum.values, [1, 1])
        np.testing.assert_allclose(dec.vectors.conj().T @ dec.vectors, np.eye(2), atol=1e-14)

    def test_diagonal(self):
        np.testing.assert_allclose(hermitian_eig(np.diag([0.25, 0.75])).spectrum.values, [0.75, 0.25])

    def test_seed7_against_extended_precision_charpoly(self):
        h = random_hermitian(5, rng_for(7))
        got = hermitian_eig(h).spectrum.values
        np.testing.assert_allclose(got, charpoly_eigenvalues(h), rtol=0, atol=1e-10)

    @pytest.mark.parametrize("n", [2, 5, 16, 64])
    def test_reconstruction(self, n):
        h = random_hermitian(n, rng_for(3, n))
        dec = hermitian_eig(h)
        assert np.max(np.abs(dec.reconstruct() - h)) <= 1e-10 * n
        assert np.all(np.diff(dec.spectrum.values) <= 0)
        np.testing.assert_allclose(h @ dec.vectors, dec.vectors * dec.spectrum.values, atol=1e-10 * n)

    def test_non_hermitian(self):
        with pytest.raises(NonHermitianInput):
            hermitian_eig(np.array([[0, 1], [0, 0]]))

    def test_convergence_failure_wrapped(self):
        with pytest.raises((ConvergenceFailure, NonHermitianInput, ValueError)):
            hermitian_eig(np.array([[np.nan, 0], [0, 1]]))


class TestPsdSqrt:
    def test_diagonal(self):
        r = psd_sqrt(np.diag([4, 9]) / 13).data
        np.testing.assert_allclose(r, np.diag([2, 3]) / math.sqrt(13), atol=1e-15)

    def test_maximally_mixed(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(3) / 3).data, np.eye(3) / math.sqrt(3), atol=1e-15)

    def test_projector(self):
        p = pure(4, 1)
        np.testing.assert_allclose(psd_sqrt(p).data, p, atol=1e-12)

    def test_clamps_tiny_negative(self):
        r = psd_sqrt(np.diag([1.0, -1e-12])).data
        np.testing.assert_allclose(r, np.diag([1.0, 0.0]))

    def test_rejects_negative(self):
        with pytest.raises(NotPositiveSemidefinite):
            psd_sqrt(np.diag([1.0, -1e-3]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2 ** 32))
    def test_square_is_input(self, n, seed):
        a = random_psd(n, rng_for(seed), rank=max(1, n // 2))
        r = psd_sqrt(a).data
        assert np.min(np.linalg.eigvalsh(r)) >= -1e-12
        np.testing.assert_allclose(r @ r, a, atol=1e-10 * max(1.0, np.abs(a).max()))


class TestTraceNorm:
    def test_diagonal(self):
        assert trace_norm(np.diag([0.5, -0.5])) == pytest.approx(1.0)

    def test_density_matrix(self):
        assert trace_norm(induced(4, 2)) == pytest.approx(1.0, abs=1e-12)

    def test_seed11_product_against_singular_value_oracle(self):
        rng = rng_for(11)
        a = random_psd(3, rng)
        b = random_psd(3, rng)
        x = (a / np.trace(a).real) @ (b / np.trace(b).real)
        oracle = np.sum(np.sqrt(np.clip(np.linalg.eigvalsh(x @ x.conj().T), 0, None)))
        assert trace_norm(x) == pytest.approx(oracle, abs=1e-10)


class TestElementarySymmetric:
    def test_pair(self):
        assert elementary_symmetric(2, [0.5, 0.5]) == pytest.approx(0.25)

    def test_pairwise_sum(self):
        assert elementary_symmetric(2, [0.5, 0.3, 0.2]) == pytest.approx(0.15 + 0.10 + 0.06)

    def test_top_is_determinant(self):
        rho = np.kron(induced(3, 4), np.eye(1))
        w = hermitian_eig(rho).spectrum
        assert elementary_symmetric(3, w) == pytest.approx(np.linalg.det(rho).real, rel=1e-10)

    def test_zero_is_one(self):
        assert elementary_symmetric(0, [0.1, 0.2]) == 1.0

    @pytest.mark.parametrize("k", [-1, 4])
    def test_out_of_range(self, k):
        with pytest.raises(IndexOutOfRange):
            elementary_symmetric(k, [0.1, 0.2, 0.7])

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0, 10), min_size=1, max_size=9), st.data())
    def test_matches_subset_enumeration(self, xs, data):
        from itertools import combinations

        k = data.draw(st.integers(0, len(xs)))
        brute = sum(math.prod(c) for c in combinations(xs, k))
        assert elementary_symmetric(k, xs) == pytest.approx(brute, rel=1e-12, abs=1e-12)

    def test_large_n_is_fast_and_stable(self):
        x = np.full(200, 1 / 200)
        assert elementary_symmetric(200, x) == pytest.approx((1 / 200) ** 200, rel=1e-10)
        assert elementary_symmetric(2, x) == pytest.approx(math.comb(200, 2) / 200 ** 2)


class TestLorentzForm:
    def test_maximally_mixed_qubit(self):
        assert lorentz_form(np.eye(2) / 2, np.eye(2) / 2) == pytest.approx(0.5)

    def test_pure(self):
        p = pure(3, 8)
        assert lorentz_form(p, p) == pytest.approx(0.0, abs=1e-14)

    def test_symmetric(self):
        a, b = random_hermitian(4, rng_for(1)), random_hermitian(4, rng_for(2))
        assert lorentz_form(a, b) == pytest.approx(lorentz_form(b, a))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            lorentz_form(np.eye(2), np.eye(3))

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_expansion_in_orthonormal_basis(self, n):
        # X = a_0 I/sqrt(N) + sum_j a_j lambda_j with tr(H_j H_k) = delta_jk
        rng = rng_for(27, n)
        coeffs = rng.standard_normal(n * n)
        x = coeffs[0] * np.eye(n) / math.sqrt(n) + np.einsum("k,kij->ij", coeffs[1:], gell_mann_basis(n))
        expected = (n - 1) * coeffs[0] ** 2 - np.sum(coeffs[1:] ** 2)
        assert lorentz_form(x, x) == pytest.approx(expected, rel=1e-12, abs=1e-12)


class TestBloch:
    @pytest.mark.parametrize("n", [2, 3, 4, 7])
    def test_basis_orthonormal_traceless(self, n):
        b = gell_mann_basis(n)
        gram = np.einsum("kij,mji->km", b, b)
        np.testing.assert_allclose(gram, np.eye(n * n - 1), atol=1e-14)
        np.testing.assert_allclose(np.einsum("kii->k", b), 0, atol=1e-14)
        np.testing.assert_allclose(b, np.conj(np.transpose(b, (0, 2, 1))))

    def test_maximally_mixed_is_origin(self):
        np.testing.assert_allclose(bloch_map(np.eye(4) / 4).tau, 0, atol=1e-15)

    def test_pure_qubit_on_sphere(self):
        assert bloch_map(np.diag([1.0, 0.0])).length == pytest.approx(1 / math.sqrt(2))
        assert bloch_radius(2) == pytest.approx(1 / math.sqrt(2))

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_round_trip_and_purity(self, n):
        rho = induced(n, 31, k=2)
        tau = bloch_map(rho)
        np.testing.assert_allclose(bloch_unmap(tau).data, rho, atol=1e-14)
        purity = np.trace(rho @ rho).real
        assert purity == pytest.approx(1 / n + tau.length ** 2, abs=1e-14)

    def test_qutrit_ball_point_that_is_not_a_state(self):
        # lambda_8 = diag(1, 1, -2)/sqrt(6): +R_3 gives diag(2/3, 2/3, -1/3),
        # while -R_3 lands on the pure state diag(0, 0, 1)
        tau = np.zeros(8)
        tau[7] = bloch_radius(3)
        m = bloch_unmap(tau, check_psd=False).data
        np.testing.assert_allclose(np.diag(m).real, [2 / 3, 2 / 3, -1 / 3], atol=1e-14)
        with pytest.raises(NotPositiveSemidefinite):
            bloch_unmap(tau)
        np.testing.assert_allclose(bloch_unmap(-tau).data, np.diag([0, 0, 1]), atol=1e-14)

    def test_outside_ball(self):
        with pytest.raises(NotInBall):
            BlochVector(2, [1.0, 0.0, 0.0])


class TestValidation:
    def test_accepts(self):
        assert isinstance(validate_density(np.diag([0.5, 0.5])), DensityMatrix)

    def test_trace(self):
        with pytest.raises(TraceNotOne) as err:
            validate_density(np.diag([0.6, 0.6]))
        assert err.value.violation == pytest.approx(0.2)

    def test_psd(self):
        with pytest.raises(NotPositiveSemidefinite) as err:
            validate_density(np.diag([1.1, -0.1]))
        assert err.value.violation == pytest.approx(-0.1)
        assert "NotPositiveSemidefinite" in str(err.value)

    def test_hermitian(self):
        with pytest.raises(NonHermitianInput):
            validate_density(np.array([[0.5, 0.1], [0.2, 0.5]]))

    def test_never_renormalizes(self):
        with pytest.raises(TraceNotOne):
            validate_density(2 * np.eye(2))

    def test_immutable(self):
        h = HermitianMatrix(np.eye(2))
        with pytest.raises(ValueError):
            h.data[0, 0] = 3

    def test_spectrum_order(self):
        with pytest.raises(ValueError):
            Spectrum([0.1, 0.9])
        s = Spectrum.from_values([0.1, 0.9, 0.5], NONDECREASING)
        np.testing.assert_allclose(s.values, [0.1, 0.5, 0.9])
        np.testing.assert_allclose(s.reordered("nonincreasing").values, [0.9, 0.5, 0.1])


class TestMatrixFile:
    def test_round_trip_is_exact(self):
        m = induced(3, 5)
        np.testing.assert_array_equal(loads_matrix(dumps_matrix(m)), m)

    def test_malformed(self):
        from fidbounds.errors import ValidationError

        with pytest.raises(ValidationError):
            loads_matrix("{not json")
        with pytest.raises(DimensionMismatch):
            loads_matrix('{"dim": 2, "re": [[1]], "im": [[0]]}')
