"""Exact and shot-sampled simulation of the two- and four-copy estimation schemes.

Permutations are one-line tuples of the 1-based images ``(pi(1), ..., pi(k))``.
``V^pi`` maps ``|psi_1 ... psi_k>`` to ``|psi_pi(1) ... psi_pi(k)>``.

Shot sampling draws counts in fixed blocks of :data:`BLOCK` shots, block ``b``
from its own Philox stream ``(seed, *stream, b)``. The aggregate therefore
depends only on ``(seed, stream, shots)``, never on how blocks are scheduled.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
import json
import math

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidPermutation,
    NotPowerOfTwoDimension,
    ParameterOutOfRange,
    ProbabilityOutOfRange,
)
from .fidelity import _pair, lorentz_self, sub_fidelity, super_fidelity, trace_product
from .linalg import HermitianMatrix, as_matrix
from .randgen import rng_for

MAX_DIM = 4096
BLOCK = 65536
PROGRAMS = ("zero_zero", "one_zero", "bell")
SCHEMES = ("super", "sub")
_PROB_TOL = 1e-12
RADICAND_FLOOR = 256.0 * np.finfo(float).eps


@lru_cache(maxsize=None)
def _perm_indices(pi, n):
    k = len(pi)
    idx = np.arange(n ** k).reshape((n,) * k)
    # entry j is the input index feeding output j; output factor m is input factor pi(m)
    return np.transpose(idx, [p - 1 for p in pi]).ravel()


def _check_perm(pi):
    pi = tuple(int(x) for x in pi)
    if sorted(pi) != list(range(1, len(pi) + 1)):
        raise InvalidPermutation(f"{pi} is not a permutation of 1..{len(pi)}")
    return pi


def permutation_matrix(pi, n):
    """Unitary ``V^pi`` on ``(C^n)^{(x) k}`` with ``k = len(pi)``.

    ``V^pi (psi_1 (x) ... (x) psi_k) = psi_pi(1) (x) ... (x) psi_pi(k)``.
    """
    pi = _check_perm(pi)
    dim = n ** len(pi)
    if dim > MAX_DIM:
        raise ParameterOutOfRange(f"dimension {dim} exceeds {MAX_DIM}")
    v = np.zeros((dim, dim))
    v[np.arange(dim), _perm_indices(pi, n)] = 1.0
    return v


def inverse_permutation(pi):
    inv = [0] * len(pi)
    for i, p in enumerate(pi, start=1):
        inv[p - 1] = i
    return tuple(inv)


def is_cyclic(pi):
    """True for a single cycle through all elements."""
    seen, j = 1, pi[0]
    while j != 1:
        j = pi[j - 1]
        seen += 1
    return seen == len(pi)


def swap_and_projectors(n):
    """SWAP ``V`` on ``C^n (x) C^n`` and the projectors ``P+- = (I +- V)/2``."""
    if n < 2:
        raise ParameterOutOfRange(f"N={n} must be >= 2")
    v = permutation_matrix((2, 1), n)
    eye = np.eye(n * n)
    return v, 0.5 * (eye + v), 0.5 * (eye - v)


def _alternates_parity(seq):
    return all((a - b) % 2 for a, b in zip(seq, seq[1:]))


@lru_cache(maxsize=None)
def admissible_permutations():
    """Permutations of (1,2,3,4) whose image sequence alternates odd and even.

    These are the eight permutations that never put two odd or two even
    entries next to each other, found by filtering all 24.
    """
    return tuple(p for p in permutations(range(1, 5)) if _alternates_parity(p))


@dataclass(frozen=True)
class Observable:
    copies: int
    matrix: HermitianMatrix
    label: str = ""

    @property
    def dim(self):
        return self.matrix.dim

    def expectation(self, state):
        return trace_product(self.matrix.data, as_matrix(state))

    def spectrum(self):
        return np.linalg.eigvalsh(self.matrix.data)


def permutation_observable(pi0, s_prime, n, strict=True):
    """Averaged four-copy observable ``W`` for base permutation ``pi0``.

    ``W = (1/2|S'|) sum_{pi in S'} (V^pi V^pi0 V^pi + V^pi^-1 V^pi0^-1 V^pi^-1)``.

    Args:
        pi0: base permutation, must be admissible.
        s_prime: nonempty collection of admissible permutations.
        n: single-copy dimension.
        strict: also require ``pi0`` to be a 4-cycle. Only then does
            ``tr W (rho1 (x) rho2 (x) rho1 (x) rho2)`` equal
            ``tr (rho1 rho2)^2``; the other admissible choices give products
            of traces instead.

    Raises:
        InvalidPermutation: if ``pi0`` or a member of ``s_prime`` is not
            admissible, or ``pi0`` is not cyclic under ``strict``.
    """
    admissible = admissible_permutations()
    pi0 = _check_perm(pi0)
    s_prime = [_check_perm(p) for p in s_prime]
    if not s_prime:
        raise InvalidPermutation("S' must not be empty")
    for p in [pi0, *s_prime]:
        if p not in admissible:
            raise InvalidPermutation(f"{p} is not in the admissible set")
    if strict and not is_cyclic(pi0):
        raise InvalidPermutation(f"{pi0} is not a 4-cycle")
    v0 = permutation_matrix(pi0, n)
    v0_inv = v0.T
    acc = np.zeros_like(v0)
    for p in s_prime:
        vp = permutation_matrix(p, n)
        vp_inv = vp.T
        acc += vp @ v0 @ vp + vp_inv @ v0_inv @ vp_inv
    w = acc / (2 * len(s_prime))
    return Observable(4, HermitianMatrix(w), label=f"W[{len(s_prime)}]{pi0}")


def default_w_observable(n):
    """``W^{S, pi0}`` over the full admissible set, ``pi0 = (2,3,4,1)``."""
    return permutation_observable((2, 3, 4, 1), admissible_permutations(), n)


def _prob(x, what):
    if not -_PROB_TOL <= x <= 1 + _PROB_TOL:
        raise ProbabilityOutOfRange(f"{what}={x!r}")
    return min(max(float(x), 0.0), 1.0)


def anticoalescence_probs(rho1, rho2):
    """``(p11, p12, p22)`` with ``p_ij = tr P- (rho_i (x) rho_j) = (1 - tr rho_i rho_j)/2``.

    ``p_ii`` is taken from the spectrum as ``(tr rho)^2 - tr rho^2`` over 2,
    so it is exactly 0 for pure states.
    """
    a, b = _pair(rho1, rho2)
    return (0.5 * lorentz_self(a), 0.5 * (1.0 - trace_product(a, b)), 0.5 * lorentz_self(b))


def super_fidelity_from_probs(p11, p12, p22, margin=0.0):
    """``G = 1 - 2 (p12 - sqrt(p11 p22))`` and a physicality flag.

    The flag is false when ``p12 - sqrt(p11 p22) > 0.5 + margin``, which
    would make G negative beyond ``margin``; estimated probabilities pass
    their error bar as ``margin``.

    Raises:
        ProbabilityOutOfRange: if any probability is outside [0, 1].
    """
    p11, p12, p22 = (_prob(p, n) for p, n in ((p11, "p11"), (p12, "p12"), (p22, "p22")))
    gap = p12 - math.sqrt(p11 * p22)
    return 1.0 - 2.0 * gap, gap <= 0.5 + margin


def sub_fidelity_from_expectations(t, w):
    """``E = t + sqrt(2 (t^2 - w))`` from ``t = <V>`` and ``w = <W>``.

    Both inputs are expectations on unit-trace states, so their round-off is
    absolute; a radicand within ``RADICAND_FLOOR`` of zero is treated as
    zero. Negative ones are clipped too, since with sampled inputs they are
    noise, not a logic error.
    """
    rad = 2.0 * (t * t - w)
    if rad <= RADICAND_FLOOR:
        rad = 0.0
    return t + math.sqrt(rad)


def _qubit_count(dim):
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise NotPowerOfTwoDimension(f"N={dim}")
    return n


def odd_parity_projector(n_qubits):
    """Sum over sign patterns with odd many ``-`` of per-pair projectors.

    The two copies are laid out as ``(a_1..a_n, b_1..b_n)``; pair ``k``
    couples ``a_k`` with ``b_k``.
    """
    dim = 4 ** n_qubits
    if dim > MAX_DIM:
        raise ParameterOutOfRange(f"dimension {dim} exceeds {MAX_DIM}")
    v, p_plus, p_minus = swap_and_projectors(2)
    local = {1: p_plus.reshape(2, 2, 2, 2), -1: p_minus.reshape(2, 2, 2, 2)}
    total = np.zeros((dim, dim))
    for signs in np.ndindex(*(2,) * n_qubits):
        if sum(signs) % 2 == 0:
            continue
        # tensor over pairs, indices (a_k, b_k; a'_k, b'_k) for each k
        op = np.ones(())
        for s in signs:
            op = np.multiply.outer(op, local[-1 if s else 1])
        # axes are [a1 b1 a1' b1' a2 b2 a2' b2' ...]; regroup to (a.., b..; a'.., b'..)
        order = ([4 * k for k in range(n_qubits)] + [4 * k + 1 for k in range(n_qubits)]
                 + [4 * k + 2 for k in range(n_qubits)] + [4 * k + 3 for k in range(n_qubits)])
        total += np.transpose(op, order).reshape(dim, dim)
    return total


def multi_photon_anticoalescence(rho1, rho2):
    """Probability of an odd number of anticoalescence events over n pairs.

    Raises:
        NotPowerOfTwoDimension: unless the single-copy dimension is ``2^n``.
    """
    a, b = _pair(rho1, rho2)
    n = _qubit_count(a.shape[0])
    return trace_product(odd_parity_projector(n), np.kron(a, b))


def product_form_anticoalescence(pair_probs):
    """Odd-parity total from independent per-pair anticoalescence probabilities."""
    # prod(1 - 2p) is the mean sign; the odd-count probability is its complement
    q = np.prod([1.0 - 2.0 * p for p in pair_probs])
    return 0.5 * (1.0 - q)


def network_expectation(program, rho1, rho2):
    """Output of the programmable network for ``program`` in :data:`PROGRAMS`.

    ``zero_zero``: ``tr rho1 rho2``; ``one_zero``: ``tr (rho1 rho2)^2``;
    ``bell``: ``(tr (rho1 rho2)^2 - (tr rho1 rho2)^2) / 2``.
    """
    a, b = _pair(rho1, rho2)
    if program not in PROGRAMS:
        raise ParameterOutOfRange(f"unknown program {program!r}")
    t = trace_product(a, b)
    if program == "zero_zero":
        return t
    ab = a @ b
    w = trace_product(ab, ab)
    if program == "one_zero":
        return w
    return 0.5 * (w - t * t)


@dataclass(frozen=True)
class ShotEstimate:
    value: float
    shots: int
    std_error: float
    seed: int
    truth: float

    def to_dict(self):
        return {"value": self.value, "shots": self.shots, "std_error": self.std_error,
                "seed": self.seed, "truth": self.truth}


def _blocks(shots):
    full, rest = divmod(shots, BLOCK)
    return [BLOCK] * full + ([rest] if rest else [])


def _sample_counts(probs, shots, seed, stream):
    counts = np.zeros(len(probs), dtype=np.int64)
    for b, size in enumerate(_blocks(shots)):
        counts += rng_for(seed, *stream, b).multinomial(size, probs)
    return counts


def _outcome_distribution(target, state):
    """Outcome values and probabilities for a Bernoulli or observable target."""
    if isinstance(target, Observable):
        rho = as_matrix(state)
        if rho.shape[0] != target.dim:
            raise DimensionMismatch(f"state N={rho.shape[0]}, observable N={target.dim}")
        w, v = np.linalg.eigh(target.matrix.data)
        probs = np.einsum("ji,jk,ki->i", v.conj(), rho, v).real
        # merge degenerate eigenvalues so the multinomial stays short
        values, inverse = np.unique(np.round(w, 12), return_inverse=True)
        merged = np.zeros(values.size)
        np.add.at(merged, inverse, probs)
        merged = np.clip(merged, 0.0, None)
        return values, merged / merged.sum()
    p = _prob(target, "p")
    return np.array([0.0, 1.0]), np.array([1.0 - p, p])


def shot_estimator(target, state=None, shots=1, seed=0, stream=()):
    """Sample mean of ``shots`` simulated measurements.

    Args:
        target: a success probability (Bernoulli outcome 0/1) or an
            :class:`Observable` measured in its eigenbasis.
        state: density matrix the observable is measured on.
        shots: number of repetitions, at least 1.
        seed, stream: RNG key; results are bit-identical for equal keys.

    Returns:
        :class:`ShotEstimate` with ``std_error = sample std / sqrt(shots)``.
    """
    if shots < 1:
        raise ParameterOutOfRange(f"shots={shots} must be >= 1")
    values, probs = _outcome_distribution(target, state)
    counts = _sample_counts(probs, shots, seed, stream)
    mean = float(counts @ values) / shots
    truth = float(probs @ values)
    if shots > 1:
        var = float(counts @ (values - mean) ** 2) / (shots - 1)
    else:
        var = 0.0
    return ShotEstimate(mean, shots, math.sqrt(max(var, 0.0) / shots), seed, truth)


def _mixed_order_prob(p_forward, p_backward, shots, swap_bias, seed, stream):
    """Bernoulli estimate when each shot's source order is flipped with ``swap_bias``."""
    p_forward = _prob(p_forward, "p")
    p_backward = _prob(p_backward, "p")
    counts = 0
    for b, size in enumerate(_blocks(shots)):
        rng = rng_for(seed, *stream, b)
        flipped = int(rng.binomial(size, swap_bias))
        counts += int(rng.binomial(size - flipped, p_forward)) + int(rng.binomial(flipped, p_backward))
    mean = counts / shots
    var = mean * (1.0 - mean) * shots / (shots - 1) if shots > 1 else 0.0
    return mean, math.sqrt(var / shots)


@dataclass
class EstimationRun:
    scheme: str
    shots: int
    seed: int
    estimates: dict = field(default_factory=dict)
    truths: dict = field(default_factory=dict)
    std_errors: dict = field(default_factory=dict)

    def to_dict(self):
        return {"scheme": self.scheme, "shots": self.shots, "seed": self.seed,
                "estimates": self.estimates, "truths": self.truths,
                "std_errors": self.std_errors}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def g_std_error(p11, p12, p22, se11, se12, se22):
    """Delta-method standard error of ``1 - 2(p12 - sqrt(p11 p22))``.

    A term whose probability estimate is 0 with zero spread is dropped, since
    the derivative of the square root is undefined there.
    """
    var = 4.0 * se12 ** 2
    if p11 > 0:
        var += (p22 / p11) * se11 ** 2
    if p22 > 0:
        var += (p11 / p22) * se22 ** 2
    return math.sqrt(var)


def estimate_super_fidelity(rho1, rho2, shots, seed, swap_bias=0.0):
    """Estimate G from three simulated beamsplitter experiments.

    ``swap_bias`` is the probability that the mixed source emits
    ``rho2 (x) rho1`` instead of ``rho1 (x) rho2`` on a given shot.
    """
    if shots < 1:
        raise ParameterOutOfRange(f"shots={shots} must be >= 1")
    if not 0.0 <= swap_bias <= 1.0:
        raise ParameterOutOfRange(f"swap_bias={swap_bias}")
    exact = anticoalescence_probs(rho1, rho2)
    est, se = [], []
    for k, p in enumerate(exact):
        m, s = _mixed_order_prob(p, p, shots, swap_bias, seed, (k,))
        est.append(m)
        se.append(s)
    se_g = g_std_error(*est, *se)
    # G = 1 - 2 gap, so three error bars on the gap are 1.5 on G
    g_hat, consistent = super_fidelity_from_probs(*est, margin=1.5 * se_g)
    run = EstimationRun("super", shots, seed)
    run.estimates = {"p11": est[0], "p12": est[1], "p22": est[2], "G": g_hat,
                     "consistent": consistent}
    run.truths = {"p11": exact[0], "p12": exact[1], "p22": exact[2],
                  "G": super_fidelity(rho1, rho2)}
    run.std_errors = {"p11": se[0], "p12": se[1], "p22": se[2],
                      "G": se_g}
    return run


def estimate_sub_fidelity(rho1, rho2, shots, seed, swap_bias=0.0):
    """Estimate E from a SWAP-test and a four-copy ``W`` measurement.

    The order flip sends ``rho1 rho2 rho1 rho2`` to ``rho2 rho1 rho2 rho1``
    on the four-copy source, with probability ``swap_bias`` per shot.
    """
    if shots < 1:
        raise ParameterOutOfRange(f"shots={shots} must be >= 1")
    if not 0.0 <= swap_bias <= 1.0:
        raise ParameterOutOfRange(f"swap_bias={swap_bias}")
    a, b = _pair(rho1, rho2)
    n = a.shape[0]
    if n ** 4 > MAX_DIM:
        raise ParameterOutOfRange(f"four copies of N={n} exceed dimension {MAX_DIM}")
    p12 = 0.5 * (1.0 - trace_product(a, b))
    m12, s12 = _mixed_order_prob(p12, p12, shots, swap_bias, seed, (0,))
    t_hat, se_t = 1.0 - 2.0 * m12, 2.0 * s12

    w_obs = default_w_observable(n)
    fwd = np.kron(np.kron(a, b), np.kron(a, b))
    bwd = np.kron(np.kron(b, a), np.kron(b, a))
    flipped = sum(int(rng_for(seed, 1, blk).binomial(size, swap_bias))
                  for blk, size in enumerate(_blocks(shots)))
    parts = []
    for k, (state, count) in enumerate(((fwd, shots - flipped), (bwd, flipped))):
        if count:
            parts.append(shot_estimator(w_obs, state, count, seed, (2 + k,)))
    w_hat = sum(p.value * p.shots for p in parts) / shots
    sq = sum(((p.shots - 1) * p.std_error ** 2 * p.shots + p.shots * (p.value - w_hat) ** 2)
             for p in parts)
    se_w = math.sqrt(sq / max(shots - 1, 1) / shots)

    e_hat = sub_fidelity_from_expectations(t_hat, w_hat)
    rad = (e_hat - t_hat) ** 2
    if rad > 0:
        root = math.sqrt(rad)
        se_e = math.hypot((1.0 + 2.0 * t_hat / root) * se_t, se_w / root)
    else:
        se_e = se_t
    ab = a @ b
    run = EstimationRun("sub", shots, seed)
    run.estimates = {"tr_prod": t_hat, "w": w_hat, "E": e_hat}
    run.truths = {"tr_prod": trace_product(a, b), "w": trace_product(ab, ab),
                  "E": sub_fidelity(a, b)}
    run.std_errors = {"tr_prod": se_t, "w": se_w, "E": se_e}
    return run


def estimate(scheme, rho1, rho2, shots, seed, swap_bias=0.0):
    if scheme == "super":
        return estimate_super_fidelity(rho1, rho2, shots, seed, swap_bias)
    if scheme == "sub":
        return estimate_sub_fidelity(rho1, rho2, shots, seed, swap_bias)
    raise ParameterOutOfRange(f"unknown scheme {scheme!r}")
