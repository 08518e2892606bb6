"""Fidelity, sub- and super-fidelity, and the other universal bounds.

Conventions: ``t = tr(rho1 rho2)`` and ``mu`` are the eigenvalues of
``sqrt(rho1) rho2 sqrt(rho1)`` (equivalently of ``rho1 rho2``), so that
``F = (sum sqrt(mu))**2``. Quantities whose closed form hides a cancellation
(``(tr X)^2 - tr X^2``) are evaluated as ``2 e_2`` of an eigenvalue list
instead, which is exact for rank-deficient inputs.
"""

from dataclasses import asdict, dataclass
import json
import logging
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DimensionMismatch,
    NotAProbabilityVector,
    NotPositiveSemidefinite,
    NumericalInconsistency,
    ParameterOutOfRange,
    RankTooHigh,
    SingularState,
)
from .linalg import (
    PSD_TOL,
    Spectrum,
    as_matrix,
    elementary_symmetric_all,
    noise_floor,
    psd_spectral_sqrt,
    same_dim,
)
from .randgen import depolarized, haar_vector, maximally_mixed, rng_for

log = logging.getLogger(__name__)

SLACK = 1e-9
RADICAND_TOL = 1e-12
RANK_TOL_FACTOR = 1e-12
SINGULAR_COND = 1e12
_EPS = np.finfo(float).eps


def _pair(rho1, rho2):
    a = as_matrix(rho1)
    b = as_matrix(rho2)
    same_dim(a, b)
    return a, b


def _clamp(x, what):
    if x < 0.0:
        if x >= -RADICAND_TOL:
            return 0.0
        raise NumericalInconsistency(what, violation=x)
    return x


def _e2(values):
    return float(elementary_symmetric_all(values)[2]) if len(values) > 1 else 0.0


def trace_product(a, b):
    """``Re tr(AB)`` without forming the product."""
    return float(np.einsum("ij,ji->", a, b).real)


class _Spectra:
    """Shared spectral data of a pair; computed once, reused by every bound."""

    __slots__ = ("a", "b", "p", "q", "mu", "t")

    def __init__(self, rho1, rho2, psd_tol=PSD_TOL):
        a, b = _pair(rho1, rho2)
        root, p, _ = psd_spectral_sqrt(a, psd_tol)
        q = np.linalg.eigvalsh(b)
        if q[0] < -psd_tol:
            raise NotPositiveSemidefinite(violation=float(q[0]))
        q = np.where(q <= noise_floor(q), 0.0, q)
        m = root @ b @ root
        mu = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        scale = max(p[-1] * q[-1], float(np.max(np.abs(mu))))
        floor = 64.0 * a.shape[0] * _EPS * scale
        mu = np.where(mu <= floor, 0.0, mu)[::-1]
        self.a, self.b = a, b
        self.p, self.q = p[::-1], q[::-1]
        self.mu = mu
        self.t = trace_product(a, b)

    @property
    def root_f(self):
        return float(np.sum(np.sqrt(self.mu)))

    def rank(self, rank_tol=None):
        if rank_tol is None:
            rank_tol = self.mu.size * RANK_TOL_FACTOR * float(self.mu[0])
        r = int(np.count_nonzero(self.mu > rank_tol))
        if log.isEnabledFor(logging.DEBUG):
            near = self.mu[(self.mu > rank_tol / 100) & (self.mu < rank_tol * 100)]
            log.debug("numerical rank %d at tol %.3g; eigenvalues near threshold: %s",
                      r, rank_tol, near)
        return r


def root_spectrum(rho1, rho2, psd_tol=PSD_TOL):
    """Eigenvalues of ``sqrt(rho1) rho2 sqrt(rho1)``, nonincreasing.

    Round-off-level values are set to zero.
    """
    return Spectrum(_Spectra(rho1, rho2, psd_tol).mu)


def root_fidelity(rho1, rho2):
    """``tr sqrt(sqrt(rho1) rho2 sqrt(rho1))``."""
    return _Spectra(rho1, rho2).root_f


def fidelity(rho1, rho2):
    """Uhlmann-Jozsa fidelity ``(tr|sqrt(rho1) sqrt(rho2)|)^2``.

    Inputs need only be PSD of equal size; unit trace is not required, so the
    same routine serves unnormalized operators.

    Raises:
        DimensionMismatch: for operands of different size.
        NotPositiveSemidefinite: if an operand has a clearly negative
            eigenvalue.
    """
    return _Spectra(rho1, rho2).root_f ** 2


def sub_fidelity(rho1, rho2, method="spectral"):
    """Sub-fidelity ``E = tr X + sqrt(2[(tr X)^2 - tr X^2])``, ``X = rho1 rho2``.

    ``method="traces"`` evaluates the three traces literally and works for
    any Hermitian pair. The default ``"spectral"`` evaluates the radicand as
    ``4 e_2(mu)``, the same number without the cancellation, and needs
    ``rho1`` PSD.
    """
    if method == "traces":
        a, b = _pair(rho1, rho2)
        x = a @ b
        t = float(np.trace(x).real)
        rad = 2.0 * (t * t - float(np.einsum("ij,ji->", x, x).real))
        return t + math.sqrt(_clamp(rad, "sub-fidelity radicand"))
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    s = _Spectra(rho1, rho2)
    return s.t + 2.0 * math.sqrt(_clamp(_e2(s.mu), "s_2(rho1 rho2)"))


def lorentz_self(a):
    """``(A, A)_L = (tr A)^2 - tr A^2 = 2 e_2(spectrum of A)``."""
    w = np.linalg.eigvalsh(as_matrix(a))
    w = np.where(np.abs(w) <= noise_floor(w), 0.0, w)
    return 2.0 * _e2(w)


def super_fidelity(rho1, rho2):
    """Super-fidelity ``G = tr(AB) + sqrt((A,A)_L (B,B)_L)``.

    For density matrices ``(rho, rho)_L = 1 - tr rho^2``. Defined for any
    Hermitian pair in the forward cone.
    """
    a, b = _pair(rho1, rho2)
    la = _clamp(lorentz_self(a), "(A,A)_L")
    lb = _clamp(lorentz_self(b), "(B,B)_L")
    return trace_product(a, b) + math.sqrt(la * lb)


def _e_prime(s, rank_tol=None):
    r = s.rank(rank_tol)
    if r < 2:
        return s.t, r
    top = s.mu[:r]
    return s.t + r * (r - 1) * math.exp(float(np.mean(np.log(top)))), r


def rank_symmetric_bound(rho1, rho2, rank_tol=None):
    """``E' = tr(rho1 rho2) + r(r-1) s_r(rho1 rho2)^(1/r)``, r the numerical rank.

    ``rank_tol`` defaults to ``N * 1e-12 * max(mu)``. E' is discontinuous
    in r, so callers near a rank boundary may want to set it explicitly.
    """
    return _e_prime(_Spectra(rho1, rho2), rank_tol)[0]


def numerical_rank(rho1, rho2, rank_tol=None):
    return _Spectra(rho1, rho2).rank(rank_tol)


def _prob_vector(p, name):
    v = np.asarray(p.values if isinstance(p, Spectrum) else p, dtype=float).ravel()
    if v.size == 0 or np.min(v) < -1e-12 or abs(v.sum() - 1.0) > 1e-9:
        raise NotAProbabilityVector(f"{name}={v}")
    return np.clip(v, 0.0, None)


def classical_fidelity(p, q):
    """``(E, F, G)`` for commuting states with spectra ``p`` and ``q``.

    The vectors are paired entry by entry as given; sort them first to get
    the ordered classical bounds.
    """
    p = _prob_vector(p, "p")
    q = _prob_vector(q, "q")
    if p.size != q.size:
        raise DimensionMismatch(f"len(p)={p.size}, len(q)={q.size}")
    pq = p * q
    e = float(pq.sum() + 2.0 * math.sqrt(_e2(pq)))
    f = float(np.sum(np.sqrt(pq)) ** 2)
    g = float(pq.sum() + 2.0 * math.sqrt(_e2(p) * _e2(q)))
    return e, f, g


def _classical_f(p, q):
    return float(np.sum(np.sqrt(np.clip(p, 0, None) * np.clip(q, 0, None))) ** 2)


@dataclass(frozen=True)
class FidelityReport:
    F: float
    root_F: float
    E: float
    G: float
    E_prime: float
    tr_prod: float
    lower_tr: float
    upper_tr: float
    classical_lo: float
    classical_hi: float
    rank_used: int
    chain_ok: bool

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def violations(self, slack=SLACK):
        """Names of the inequalities in the bound chain that fail."""
        checks = {
            "tr <= E": self.lower_tr <= self.E + slack,
            "E <= F": self.E <= self.F + slack,
            "F <= G": self.F <= self.G + slack,
            "G <= 1": self.G <= 1.0 + slack,
            "F <= N tr|rho1 rho2|": self.F <= self.upper_tr + slack,
            "F(p_up, q_down) <= F": self.classical_lo <= self.F + slack,
            "F <= F(p_up, q_up)": self.F <= self.classical_hi + slack,
        }
        return [name for name, ok in checks.items() if not ok]


def bound_chain(rho1, rho2, rank_tol=None):
    """Every bound on F for one pair, with the inequality chain checked."""
    s = _Spectra(rho1, rho2)
    n = s.a.shape[0]
    root_f = s.root_f
    f = root_f ** 2
    e = s.t + 2.0 * math.sqrt(_clamp(_e2(s.mu), "s_2(rho1 rho2)"))
    g = s.t + 2.0 * math.sqrt(_clamp(_e2(s.p), "s_2(rho1)") * _clamp(_e2(s.q), "s_2(rho2)"))
    e_prime, r = _e_prime(s, rank_tol)
    upper = n * float(np.sum(np.linalg.svd(s.a @ s.b, compute_uv=False)))
    p_up = s.p[::-1]
    lo = _classical_f(p_up, s.q)
    hi = _classical_f(p_up, s.q[::-1])
    report = FidelityReport(
        F=f, root_F=root_f, E=e, G=g, E_prime=e_prime, tr_prod=s.t,
        lower_tr=s.t, upper_tr=upper, classical_lo=lo, classical_hi=hi,
        rank_used=r, chain_ok=True)
    if report.violations():
        report = FidelityReport(**{**report.to_dict(), "chain_ok": False})
    return report


class DepolarizedValues(NamedTuple):
    E: float
    E_prime: float
    F: float
    G: float


def _check_family(n, a):
    if int(n) != n or n < 2:
        raise ParameterOutOfRange(f"N={n} must be an integer >= 2")
    if not 0.0 <= a <= 1.0:
        raise ParameterOutOfRange(f"a={a} outside [0, 1]")


def depolarized_closed_forms(n, a):
    """Closed-form E, E', F, G between ``a|psi><psi| + (1-a)I/N`` and ``I/N``."""
    _check_family(n, a)
    f = (math.sqrt((n - 1) * a + 1) + (n - 1) * math.sqrt(1 - a)) ** 2 / n ** 2
    root = math.sqrt(1 - a * a)
    e = 1 / n + math.sqrt(2) / n * math.sqrt(1 - 1 / n) * root
    e_prime = 1 / n + (1 - 1 / n) * (((n - 1) * a + 1) * (1 - a) ** (n - 1)) ** (1 / n)
    g = 1 / n + (1 - 1 / n) * root
    return DepolarizedValues(e, e_prime, f, g)


def depolarized_matrix_path(n, a, psi=None, seed=None):
    """Same four numbers computed from explicit matrices.

    ``psi`` is the pure component; with ``seed`` a Haar-random one is drawn.
    """
    _check_family(n, a)
    if psi is None and seed is not None:
        psi = haar_vector(n, rng_for(seed))
    rho_a = depolarized(n, a, psi)
    rho_star = maximally_mixed(n)
    s = _Spectra(rho_a, rho_star)
    e = s.t + 2.0 * math.sqrt(_clamp(_e2(s.mu), "s_2"))
    g = super_fidelity(rho_a, rho_star)
    return DepolarizedValues(e, _e_prime(s)[0], s.root_f ** 2, g)


def depolarized_crossover(n, grid=2001):
    """Largest ``a`` below 1 where E and E' cross on the depolarized family.

    Above it E > E'. Returns None when no crossing is found (N = 2, where
    the two coincide).
    """
    _check_family(n, 0.0)

    def gap(a):
        v = depolarized_closed_forms(n, a)
        return v.E - v.E_prime

    xs = np.linspace(0.0, 1.0, grid)[:-1]
    d = np.array([gap(x) for x in xs])
    if np.max(np.abs(d)) < 1e-12:
        return None
    sign_change = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
    if sign_change.size == 0:
        return None
    i = sign_change[-1]
    return float(brentq(gap, xs[i], xs[i + 1], xtol=1e-14))


@dataclass(frozen=True)
class Rank3Residuals:
    residual_primary: float
    residual_inverse: Optional[float]


def _product_symmetric(a, b, n_max):
    """e_0..e_n of the (real, nonnegative) eigenvalues of ``a @ b``."""
    x = np.linalg.eigvals(a @ b).real
    x = np.where(np.abs(x) <= noise_floor(x), 0.0, x)
    return elementary_symmetric_all(np.clip(x, 0.0, None))[:n_max + 1]


def rank3_inverse_residual(rho1, rho2):
    """``|F(A,B) - tr AB - 2 sqrt(det(AB) F(A^-1, B^-1))|``.

    The inverses are not renormalized.

    Raises:
        SingularState: if either condition number exceeds 1e12.
    """
    a, b = _pair(rho1, rho2)
    for name, m in (("rho1", a), ("rho2", b)):
        c = np.linalg.cond(m)
        if not np.isfinite(c) or c > SINGULAR_COND:
            raise SingularState(f"{name} has condition number {c:.3g}")
    ai = np.linalg.inv(a)
    bi = np.linalg.inv(b)
    ai = 0.5 * (ai + ai.conj().T)
    bi = 0.5 * (bi + bi.conj().T)
    det = float((np.linalg.det(a) * np.linalg.det(b)).real)
    f = fidelity(a, b)
    f_inv = fidelity(ai, bi)
    return abs(f - trace_product(a, b) - 2.0 * math.sqrt(_clamp(det * f_inv, "det(AB) F(1/A,1/B)")))


def rank3_relations(rho1, rho2, rank_tol=None):
    """Residuals of the two fidelity identities valid when rank(rho1 rho2) <= 3.

    The primary residual uses ``s_2, s_3`` of the non-Hermitian product
    ``rho1 rho2`` and an independently computed F. The inverse-form residual
    is None when either state is singular.

    Raises:
        RankTooHigh: if the numerical rank of ``rho1 rho2`` exceeds 3.
    """
    s = _Spectra(rho1, rho2)
    r = s.rank(rank_tol)
    if r > 3:
        raise RankTooHigh(f"numerical rank {r}")
    f = s.root_f ** 2
    e = _product_symmetric(s.a, s.b, 3)
    s2 = float(e[2]) if e.size > 2 else 0.0
    s3 = float(e[3]) if e.size > 3 else 0.0
    inner = _clamp(s2 + 2.0 * math.sqrt(f) * math.sqrt(_clamp(s3, "s_3")), "rank-3 radicand")
    primary = abs(f - s.t - 2.0 * math.sqrt(inner))
    try:
        inverse = rank3_inverse_residual(s.a, s.b)
    except SingularState:
        inverse = None
    return Rank3Residuals(primary, inverse)


class LemmaTerms(NamedTuple):
    s2_root: float
    s2_diag: float
    s2_bound: float


def lemma_terms(rho1, rho2):
    """The three members of the two-lemma chain behind the upper bound.

    ``s2_root = e_2(sqrt(mu))``, ``s2_diag = e_2(sqrt(p q))`` with both
    spectra nonincreasing, ``s2_bound = sqrt(e_2(p) e_2(q))``; the lemmas
    state ``s2_root <= s2_diag <= s2_bound``.
    """
    s = _Spectra(rho1, rho2)
    return LemmaTerms(
        _e2(np.sqrt(s.mu)),
        _e2(np.sqrt(s.p * s.q)),
        math.sqrt(max(_e2(s.p), 0.0) * max(_e2(s.q), 0.0)),
    )
