import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fidbounds.errors import (
    DimensionMismatch,
    InvalidPermutation,
    NotPowerOfTwoDimension,
    ParameterOutOfRange,
    ProbabilityOutOfRange,
)
from fidbounds.fidelity import sub_fidelity, super_fidelity
from fidbounds.measure import (
    BLOCK,
    admissible_permutations,
    anticoalescence_probs,
    default_w_observable,
    estimate,
    estimate_sub_fidelity,
    estimate_super_fidelity,
    is_cyclic,
    multi_photon_anticoalescence,
    network_expectation,
    permutation_matrix,
    permutation_observable,
    product_form_anticoalescence,
    shot_estimator,
    sub_fidelity_from_expectations,
    super_fidelity_from_probs,
    swap_and_projectors,
)
from fidbounds.randgen import maximally_mixed, orthogonal_support_pair

from conftest import induced, ket_projector, pure, random_pair


def tr(x):
    return np.trace(x).real


class TestSwap:
    def test_qubit_matrix(self):
        v, _, _ = swap_and_projectors(2)
        e = np.eye(4)
        assert np.array_equal(v, np.stack([e[0], e[2], e[1], e[3]]))

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_projectors(self, n):
        _, pp, pm = swap_and_projectors(n)
        assert np.allclose(pp @ pp, pp) and np.allclose(pm @ pm, pm)
        assert np.allclose(pp @ pm, 0) and np.allclose(pp + pm, np.eye(n * n))
        assert tr(pm) == n * (n - 1) / 2

    def test_maximally_mixed(self):
        v, _, _ = swap_and_projectors(2)
        rho = np.eye(2) / 2
        assert tr(v @ np.kron(rho, rho)) == pytest.approx(0.5)

    def test_swap_trick_qutrits(self):
        a, b = random_pair(3, 4)
        v, _, _ = swap_and_projectors(3)
        assert tr(v @ np.kron(a, b)) == pytest.approx(tr(a @ b), abs=1e-12)

    def test_small_n(self):
        with pytest.raises(ParameterOutOfRange):
            swap_and_projectors(1)


class TestPermutations:
    def test_matrix_permutes_factors(self):
        rng = np.random.default_rng(0)
        vecs = [rng.standard_normal(2) for _ in range(3)]
        pi = (2, 3, 1)
        # output factor m carries input factor pi(m)
        out = permutation_matrix(pi, 2) @ np.kron(np.kron(vecs[0], vecs[1]), vecs[2])
        expected = np.kron(np.kron(vecs[1], vecs[2]), vecs[0])
        assert np.allclose(out, expected)

    def test_admissible_set(self):
        s = admissible_permutations()
        assert len(s) == 8
        assert (2, 3, 4, 1) in s and (3, 2, 1, 4) in s
        assert (2, 3, 1, 4) not in s and (1, 4, 2, 3) not in s

    def test_cyclic(self):
        assert is_cyclic((2, 3, 4, 1)) and is_cyclic((4, 1, 2, 3))
        assert not is_cyclic((2, 1, 4, 3))

    def test_invalid(self):
        with pytest.raises(InvalidPermutation):
            permutation_observable((2, 3, 1, 4), [(2, 3, 4, 1)], 2)
        with pytest.raises(InvalidPermutation):
            permutation_observable((2, 3, 4, 1), [(1, 4, 2, 3)], 2)
        with pytest.raises(InvalidPermutation):
            permutation_observable((2, 1, 4, 3), [(2, 3, 4, 1)], 2)
        with pytest.raises(InvalidPermutation):
            permutation_observable((2, 3, 4, 1), [], 2)
        with pytest.raises(InvalidPermutation):
            permutation_matrix((1, 1, 2), 2)

    @pytest.mark.parametrize("pi0", [(2, 3, 4, 1), (4, 1, 2, 3)])
    def test_single_spectrum(self, pi0):
        w = permutation_observable(pi0, [pi0], 2)
        spec = np.round(w.spectrum(), 10)
        assert set(spec) <= {-1.0, 0.0, 1.0}

    def test_default_hermitian(self):
        w = default_w_observable(2).matrix.data
        assert np.allclose(w, w.conj().T)

    def test_seed9_qubit_pair(self):
        a, b = random_pair(2, 9)
        w = default_w_observable(2)
        direct = tr(a @ b @ a @ b)
        assert w.expectation(np.kron(np.kron(a, b), np.kron(a, b))) == pytest.approx(direct, abs=1e-10)

    def test_equal_states_give_fourth_moment(self):
        rho = induced(2, 3)
        w = default_w_observable(2)
        four = np.kron(np.kron(rho, rho), np.kron(rho, rho))
        assert w.expectation(four) == pytest.approx(tr(np.linalg.matrix_power(rho, 4)), abs=1e-12)

    @pytest.mark.parametrize("s_prime", [[(2, 3, 4, 1)], [(4, 1, 2, 3)], [(2, 3, 4, 1), (3, 2, 1, 4)]])
    def test_subsets(self, s_prime):
        a, b = random_pair(2, 11)
        w = permutation_observable((2, 3, 4, 1), s_prime, 2)
        assert w.expectation(np.kron(np.kron(a, b), np.kron(a, b))) == pytest.approx(tr(a @ b @ a @ b), abs=1e-10)


class TestProbabilities:
    def test_examples(self):
        p0, p1 = ket_projector([1, 0]), ket_projector([0, 1])
        assert anticoalescence_probs(p0, p1) == (0.0, 0.5, 0.0)
        assert anticoalescence_probs(np.eye(2) / 2, p0)[0] == pytest.approx(0.25)

    def test_against_projector(self):
        a, b = random_pair(3, 6)
        _, _, pm = swap_and_projectors(3)
        p11, p12, p22 = anticoalescence_probs(a, b)
        assert p12 == pytest.approx(tr(pm @ np.kron(a, b)), abs=1e-12)
        assert p11 == pytest.approx(tr(pm @ np.kron(a, a)), abs=1e-12)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            anticoalescence_probs(np.eye(2) / 2, np.eye(3) / 3)

    def test_g_from_probs_examples(self):
        assert super_fidelity_from_probs(0.2, 0.2, 0.2) == (pytest.approx(1.0), True)
        assert super_fidelity_from_probs(0.0, 0.5, 0.0) == (0.0, True)
        a, b = orthogonal_support_pair(4)
        assert super_fidelity_from_probs(*anticoalescence_probs(a, b))[0] == pytest.approx(0.5, abs=1e-15)

    def test_flag(self):
        assert super_fidelity_from_probs(0.0, 1.0, 0.0) == (-1.0, False)
        assert super_fidelity_from_probs(0.0, 1.0, 0.0, margin=0.5)[1]
        with pytest.raises(ProbabilityOutOfRange):
            super_fidelity_from_probs(0.0, 1.5, 0.0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2 ** 40))
    def test_pipeline_exact(self, n, seed):
        a, b = random_pair(n, seed)
        g, ok = super_fidelity_from_probs(*anticoalescence_probs(a, b))
        assert ok and g == pytest.approx(super_fidelity(a, b), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 2 ** 40))
    def test_e_reconstruction(self, n, seed):
        a, b = random_pair(n, seed)
        four = np.kron(np.kron(a, b), np.kron(a, b))
        t = tr(a @ b)
        w = default_w_observable(n).expectation(four)
        assert w == pytest.approx(tr(a @ b @ a @ b), abs=1e-10)
        assert sub_fidelity_from_expectations(t, w) == pytest.approx(sub_fidelity(a, b), abs=1e-9)


def enumerate_odd_parity(pair_probs):
    """Sum over all sign patterns with an odd number of anticoalescences."""
    total = 0.0
    for pattern in itertools.product((0, 1), repeat=len(pair_probs)):
        if sum(pattern) % 2:
            total += math.prod(p if s else 1 - p for p, s in zip(pair_probs, pattern))
    return total


class TestMultiPhoton:
    def test_single_pair(self):
        a, b = random_pair(2, 1)
        assert multi_photon_anticoalescence(a, b) == pytest.approx(anticoalescence_probs(a, b)[1], abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_product_states(self, n):
        left = [random_pair(2, 10 + k) for k in range(n)]
        a = left[0][0]
        b = left[0][1]
        for x, y in left[1:]:
            a, b = np.kron(a, x), np.kron(b, y)
        pair_probs = [anticoalescence_probs(x, y)[1] for x, y in left]
        expected = enumerate_odd_parity(pair_probs)
        assert multi_photon_anticoalescence(a, b) == pytest.approx(expected, abs=1e-12)
        assert product_form_anticoalescence(pair_probs) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_general_states(self, n):
        a, b = random_pair(2 ** n, 20 + n)
        assert multi_photon_anticoalescence(a, b) == pytest.approx((1 - tr(a @ b)) / 2, abs=1e-12)

    def test_entangled_pure(self):
        bell = ket_projector([1, 0, 0, 1])
        assert multi_photon_anticoalescence(bell, bell) == pytest.approx(0.0, abs=1e-15)

    def test_not_power_of_two(self):
        with pytest.raises(NotPowerOfTwoDimension):
            multi_photon_anticoalescence(np.eye(3) / 3, np.eye(3) / 3)


class TestNetwork:
    def test_pure(self):
        p = pure(3, 2)
        assert [network_expectation(k, p, p) for k in ("zero_zero", "one_zero", "bell")] == pytest.approx([1, 1, 0], abs=1e-14)

    def test_maximally_mixed(self):
        # tr (I/2)^2 = 1/2, tr (I/2)^4 = 1/8, bell = (1/8 - 1/4)/2
        r = np.eye(2) / 2
        assert [network_expectation(k, r, r) for k in ("zero_zero", "one_zero", "bell")] == pytest.approx([0.5, 0.125, -0.0625], abs=1e-15)

    def test_qutrit_oracles_and_radicand(self):
        a, b = random_pair(3, 17, ("induced",))
        t, w = tr(a @ b), tr(a @ b @ a @ b)
        bell = network_expectation("bell", a, b)
        assert network_expectation("zero_zero", a, b) == pytest.approx(t, abs=1e-10)
        assert network_expectation("one_zero", a, b) == pytest.approx(w, abs=1e-10)
        assert bell == pytest.approx((w - t * t) / 2, abs=1e-10)
        radicand = 2 * (t * t - w)
        assert radicand == pytest.approx(-4 * bell, abs=1e-14)

    def test_unknown(self):
        with pytest.raises(ParameterOutOfRange):
            network_expectation("swap", np.eye(2) / 2, np.eye(2) / 2)


class TestShots:
    def test_zero_probability(self):
        est = shot_estimator(0.0, shots=1000, seed=1)
        assert (est.value, est.std_error) == (0.0, 0.0)

    def test_half(self):
        est = shot_estimator(0.5, shots=10 ** 4, seed=2026)
        assert abs(est.value - 0.5) <= 5 * est.std_error

    def test_deterministic(self):
        assert shot_estimator(0.3, shots=5000, seed=7) == shot_estimator(0.3, shots=5000, seed=7)
        assert shot_estimator(0.3, shots=5000, seed=7) != shot_estimator(0.3, shots=5000, seed=8)

    def test_block_prefix_invariance(self):
        # the first block of a longer run uses the same stream as a one-block run
        one = shot_estimator(0.4, shots=BLOCK, seed=3)
        two = shot_estimator(0.4, shots=2 * BLOCK, seed=3)
        second = shot_estimator(0.4, shots=BLOCK, seed=3)
        assert one == second
        assert two.value * 2 * BLOCK - one.value * BLOCK == pytest.approx(
            round(two.value * 2 * BLOCK - one.value * BLOCK))

    def test_observable(self):
        rho = induced(2, 1)
        obs = default_w_observable(2)
        four = np.kron(np.kron(rho, rho), np.kron(rho, rho))
        est = shot_estimator(obs, four, shots=10 ** 5, seed=4)
        assert est.truth == pytest.approx(obs.expectation(four), abs=1e-12)
        assert abs(est.value - est.truth) <= 5 * est.std_error

    def test_bad_inputs(self):
        with pytest.raises(ParameterOutOfRange):
            shot_estimator(0.5, shots=0)
        with pytest.raises(ProbabilityOutOfRange):
            shot_estimator(1.5, shots=10)
        with pytest.raises(DimensionMismatch):
            shot_estimator(default_w_observable(2), np.eye(4) / 4, shots=10)


class TestEstimation:
    def test_super_within_error(self):
        a, b = random_pair(2, 31)
        run = estimate_super_fidelity(a, b, 10 ** 6, 5)
        assert abs(run.estimates["G"] - run.truths["G"]) <= 5 * run.std_errors["G"]
        assert run.estimates["consistent"]

    def test_sub_within_error(self):
        a, b = random_pair(2, 32, ("induced",))
        run = estimate_sub_fidelity(a, b, 10 ** 6, 5)
        for key in ("tr_prod", "w"):
            assert abs(run.estimates[key] - run.truths[key]) <= 5 * run.std_errors[key]
        assert run.truths["E"] == pytest.approx(sub_fidelity(a, b))

    def test_biased_source(self):
        a, b = random_pair(2, 33)
        run = estimate("super", a, b, 10 ** 5, 1, swap_bias=0.3)
        assert abs(run.estimates["G"] - run.truths["G"]) <= 5 * run.std_errors["G"]
        sub = estimate("sub", a, b, 10 ** 5, 1, swap_bias=0.3)
        assert abs(sub.estimates["w"] - sub.truths["w"]) <= 5 * sub.std_errors["w"]

    def test_json(self):
        a, b = random_pair(2, 34)
        d = json.loads(estimate("super", a, b, 100, 0).to_json())
        assert d["scheme"] == "super" and set(d["estimates"]) >= {"G", "p11", "p12", "p22"}

    def test_std_error_scaling(self):
        a, b = random_pair(2, 35)
        se = [estimate("super", a, b, s, 2).std_errors["p12"] for s in (10 ** 2, 10 ** 4, 10 ** 6)]
        for lo, hi in zip(se, se[1:]):
            assert 5 <= lo / hi <= 20

    def test_bad(self):
        a, b = np.eye(2) / 2, maximally_mixed(2).data
        with pytest.raises(ParameterOutOfRange):
            estimate("super", a, b, 0, 0)
        with pytest.raises(ParameterOutOfRange):
            estimate("super", a, b, 10, 0, swap_bias=2.0)
        with pytest.raises(ParameterOutOfRange):
            estimate("other", a, b, 10, 0)
        with pytest.raises(ParameterOutOfRange):
            estimate("sub", np.eye(9) / 9, np.eye(9) / 9, 10, 0)
