"""Dense Hermitian linear algebra used throughout the package.

Operators are plain ``numpy`` arrays wherever speed matters; the small
wrapper classes below carry validated matrices across API boundaries.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    IndexOutOfRange,
    NonHermitianInput,
    NotInBall,
    NotPositiveSemidefinite,
    TraceNotOne,
)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
PSD_TOL = 1e-9

NONINCREASING = "nonincreasing"
NONDECREASING = "nondecreasing"

_EPS = np.finfo(float).eps


def as_matrix(x):
    """Return ``x`` as a square complex ndarray (no copy when possible)."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def same_dim(a, b):
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")


def hermiticity_violation(a):
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def noise_floor(values):
    """Magnitude below which an eigenvalue is indistinguishable from zero.

    Scaled to the backward error of a dense Hermitian eigensolve.
    """
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    return 64.0 * values.size * _EPS * float(np.max(np.abs(values)))


class HermitianMatrix:
    """Complex square matrix that equals its conjugate transpose.

    The stored entries are the Hermitian part ``(H + H^dagger) / 2`` of the
    input, which differs from it by at most ``tol``.
    """

    __slots__ = ("_data",)

    def __init__(self, data, tol=HERMITICITY_TOL):
        a = as_matrix(data)
        if a.shape[0] < 1:
            raise DimensionMismatch("dimension must be at least 1")
        viol = hermiticity_violation(a)
        if viol > tol:
            raise NonHermitianInput(violation=viol)
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        self._data = a

    @property
    def data(self):
        return self._data

    @property
    def dim(self):
        return self._data.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class DensityMatrix(HermitianMatrix):
    """Hermitian, positive semidefinite, unit-trace matrix.

    Build these with :func:`validate_density`; the constructor runs the same
    checks.
    """

    __slots__ = ("trace_tol", "psd_tol")

    def __init__(self, data, trace_tol=TRACE_TOL, psd_tol=PSD_TOL,
                 herm_tol=HERMITICITY_TOL):
        super().__init__(data, tol=herm_tol)
        tr = float(np.trace(self._data).real)
        if abs(tr - 1.0) > trace_tol:
            raise TraceNotOne(violation=tr - 1.0)
        lo = float(np.linalg.eigvalsh(self._data)[0])
        if lo < -psd_tol:
            raise NotPositiveSemidefinite(violation=lo)
        self.trace_tol = trace_tol
        self.psd_tol = psd_tol


@dataclass(frozen=True)
class Spectrum:
    """Real eigenvalues with an explicit ordering convention."""

    values: np.ndarray
    order: str = NONINCREASING

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if self.order not in (NONINCREASING, NONDECREASING):
            raise ValueError(f"unknown order {self.order!r}")
        diffs = np.diff(v)
        ok = np.all(diffs <= 0) if self.order == NONINCREASING else np.all(diffs >= 0)
        if not ok:
            raise ValueError(f"values are not sorted {self.order}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values, order=NONINCREASING):
        v = np.sort(np.asarray(values, dtype=float))
        if order == NONINCREASING:
            v = v[::-1]
        return cls(v, order)

    def reordered(self, order):
        if order == self.order:
            return self
        return Spectrum(self.values[::-1], order)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class EigDecomposition:
    spectrum: Spectrum
    vectors: np.ndarray

    def reconstruct(self):
        v = self.vectors
        return (v * self.spectrum.values) @ v.conj().T


@dataclass(frozen=True)
class BlochVector:
    """Coefficients of ``rho - I/N`` in the generalized Gell-Mann basis."""

    dim: int
    tau: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tau, dtype=float)
        if t.shape != (self.dim ** 2 - 1,):
            raise DimensionMismatch(
                f"expected {self.dim ** 2 - 1} components, got {t.shape}")
        r = np.linalg.norm(t)
        if r > bloch_radius(self.dim) + 1e-9:
            raise NotInBall(violation=r - bloch_radius(self.dim))
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "tau", t)

    @property
    def length(self):
        return float(np.linalg.norm(self.tau))


def bloch_radius(n):
    """Radius ``sqrt((N-1)/N)`` of the ball containing all N-level states."""
    return math.sqrt((n - 1) / n)


def hermitian_eig(h, tol=HERMITICITY_TOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues nonincreasing.

    Args:
        h: Hermitian matrix (array-like or :class:`HermitianMatrix`).
        tol: hermiticity tolerance.

    Returns:
        :class:`EigDecomposition` with orthonormal eigenvector columns.

    Raises:
        NonHermitianInput: if ``h`` is not Hermitian within ``tol``.
        ConvergenceFailure: if LAPACK fails to converge.
    """
    a = HermitianMatrix(h, tol=tol).data
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return EigDecomposition(Spectrum(w[::-1]), v[:, ::-1])


def psd_spectral_sqrt(a, psd_tol=PSD_TOL):
    """Square root of a PSD ndarray together with its clamped spectrum.

    Hot-path variant of :func:`psd_sqrt` working on raw arrays. Returns
    ``(sqrt_a, w, v)`` where ``w`` (nondecreasing) has noise-level entries
    set to zero.
    """
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    if w[0] < -psd_tol:
        raise NotPositiveSemidefinite(violation=float(w[0]))
    w = np.where(w <= noise_floor(w), 0.0, w)
    root = (v * np.sqrt(w)) @ v.conj().T
    return root, w, v


def psd_sqrt(a, psd_tol=PSD_TOL):
    """Unique PSD square root of a positive semidefinite matrix.

    Eigenvalues in ``[-psd_tol, 0)`` and positive ones at round-off level are
    clamped to zero; anything more negative is an error.
    """
    m = HermitianMatrix(a).data
    root, _, _ = psd_spectral_sqrt(m, psd_tol)
    return HermitianMatrix(root)


def trace_norm(a):
    """Schatten 1-norm: the sum of singular values of ``a``."""
    m = as_matrix(a)
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def _values_of(s):
    if isinstance(s, Spectrum):
        return s.values
    return np.asarray(s, dtype=float).ravel()


def elementary_symmetric_all(values):
    """All elementary symmetric polynomials ``e_0 .. e_n`` of ``values``.

    Uses the product expansion ``prod (1 + x_j t)`` one factor at a time,
    which only ever adds products of the inputs: no cancellation for
    nonnegative data, O(n^2) work.
    """
    x = _values_of(values)
    e = np.zeros(x.size + 1)
    e[0] = 1.0
    for j, xj in enumerate(x, start=1):
        e[1:j + 1] = e[1:j + 1] + xj * e[0:j]
    return e


def elementary_symmetric(k, s):
    """k-th elementary symmetric function of the values in ``s``.

    ``s_0 = 1`` and ``s_N`` is the product of all values.

    Raises:
        IndexOutOfRange: if ``k`` is outside ``[0, N]``.
    """
    x = _values_of(s)
    if not 0 <= k <= x.size:
        raise IndexOutOfRange(f"k={k} outside [0, {x.size}]")
    return float(elementary_symmetric_all(x)[k])


def lorentz_form(x1, x2):
    """Quadratic Lorentz form ``(tr X1)(tr X2) - tr(X1 X2)``."""
    a = as_matrix(x1)
    b = as_matrix(x2)
    same_dim(a, b)
    return float((np.trace(a) * np.trace(b) - np.einsum("ij,ji->", a, b)).real)


@lru_cache(maxsize=None)
def _gell_mann_stack(n):
    mats = []
    for j in range(n):
        for k in range(j + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[j, k] = m[k, j] = 1 / math.sqrt(2)
            mats.append(m)
    for j in range(n):
        for k in range(j + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[j, k] = -1j / math.sqrt(2)
            m[k, j] = 1j / math.sqrt(2)
            mats.append(m)
    for l in range(1, n):
        m = np.zeros((n, n), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1.0
        m[l, l] = -l
        mats.append(m / math.sqrt(l * (l + 1)))
    stack = np.array(mats).reshape(n * n - 1, n, n)
    stack.setflags(write=False)
    return stack


def gell_mann_basis(n):
    """Traceless Hermitian generators with ``tr(l_k l_m) = delta_km``.

    Order: symmetric off-diagonal, antisymmetric off-diagonal, diagonal.
    Returns a read-only array of shape ``(n*n - 1, n, n)``.
    """
    if n < 1:
        raise DimensionMismatch("dimension must be at least 1")
    return _gell_mann_stack(n)


def bloch_map(rho):
    a = as_matrix(rho)
    basis = gell_mann_basis(a.shape[0])
    tau = np.einsum("kij,ji->k", basis, a).real
    return BlochVector(a.shape[0], tau)


def bloch_unmap(tau, psd_tol=PSD_TOL, check_psd=True):
    """Rebuild ``I/N + tau . lambda`` from a Bloch vector.

    For N >= 3 a vector inside the ball can still map to a non-positive
    matrix, so the result is checked unless ``check_psd`` is false.

    Raises:
        NotPositiveSemidefinite: if the reconstruction has a negative
            eigenvalue below ``-psd_tol``.
    """
    if not isinstance(tau, BlochVector):
        t = np.asarray(tau, dtype=float)
        tau = BlochVector(int(round(math.sqrt(t.size + 1))), t)
    n = tau.dim
    m = np.eye(n, dtype=complex) / n + np.einsum("k,kij->ij", tau.tau, gell_mann_basis(n))
    if check_psd:
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -psd_tol:
            raise NotPositiveSemidefinite(violation=lo)
    return HermitianMatrix(m)


def validate_density(h, trace_tol=TRACE_TOL, psd_tol=PSD_TOL,
                     herm_tol=HERMITICITY_TOL):
    """Check that ``h`` is a density matrix; never renormalizes.

    Raises:
        NonHermitianInput, TraceNotOne, NotPositiveSemidefinite
    """
    if isinstance(h, DensityMatrix):
        return h
    return DensityMatrix(h, trace_tol=trace_tol, psd_tol=psd_tol,
                         herm_tol=herm_tol)

