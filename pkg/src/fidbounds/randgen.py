"""Seeded generators for pure, mixed and structured density matrices.

All randomness flows from counter-based Philox streams keyed by
``SeedSequence([seed, *stream])``; there is no global RNG state, so any state
can be rebuilt from its :class:`StateSpec` string alone.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from .errors import OddDimension, ParameterOutOfRange, ValidationError
from .linalg import DensityMatrix

KINDS = ("haar", "induced", "depolarized", "rank", "commuting", "orthogonal")
PAIR_ONLY = ("commuting", "orthogonal")


def rng_for(seed, *stream):
    """Independent generator for ``(seed, *stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


def derive_seed(seed, *stream):
    """Deterministic 63-bit child seed, for specs that must be printable."""
    return int(np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(2, np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class StateSpec:
    """Recipe for a random state or pair, e.g. ``N=4;kind=induced;K=4;seed=17``."""

    dim: int
    kind: str
    seed: int = 0
    K: int = None
    a: float = None
    r: int = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterOutOfRange(f"unknown state kind {self.kind!r}")
        if self.dim < 1:
            raise ParameterOutOfRange(f"N={self.dim} must be >= 1")
        if self.kind == "induced" and (self.K is None or self.K < 1):
            raise ParameterOutOfRange("induced states need K >= 1")
        if self.kind == "depolarized" and (self.a is None or not 0.0 <= self.a <= 1.0):
            raise ParameterOutOfRange("depolarized states need 0 <= a <= 1")
        if self.kind == "rank" and (self.r is None or not 1 <= self.r <= self.dim):
            raise ParameterOutOfRange(f"rank states need 1 <= r <= N={self.dim}")
        if self.kind == "orthogonal" and self.dim % 2:
            raise OddDimension(f"N={self.dim}")

    def __str__(self):
        parts = [f"N={self.dim}", f"kind={self.kind}"]
        if self.K is not None:
            parts.append(f"K={self.K}")
        if self.a is not None:
            parts.append(f"a={self.a!r}")
        if self.r is not None:
            parts.append(f"r={self.r}")
        parts.append(f"seed={self.seed}")
        return ";".join(parts)

    @classmethod
    def parse(cls, text):
        fields = {}
        for item in text.strip().split(";"):
            if not item:
                continue
            key, sep, value = item.partition("=")
            if not sep:
                raise ValidationError(f"malformed state spec item {item!r}")
            fields[key.strip()] = value.strip()
        unknown = set(fields) - {"N", "kind", "seed", "K", "a", "r"}
        if unknown:
            raise ValidationError(f"unknown state spec fields {sorted(unknown)}")
        try:
            return cls(
                dim=int(fields["N"]),
                kind=fields["kind"],
                seed=int(fields.get("seed", 0)),
                K=int(fields["K"]) if "K" in fields else None,
                a=float(fields["a"]) if "a" in fields else None,
                r=int(fields["r"]) if "r" in fields else None,
            )
        except KeyError as exc:
            raise ValidationError(f"state spec missing field {exc}") from exc
        except ValidationError:
            raise
        except ValueError as exc:
            raise ValidationError(f"malformed state spec {text!r}: {exc}") from exc


def haar_vector(n, rng):
    psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return psi / np.linalg.norm(psi)


def haar_unitary(n, rng):
    """Haar-random unitary via QR of a Ginibre matrix with phase correction."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _ginibre_state(n, k, rng):
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def haar_pure(n, seed):
    """Rank-one projector onto a Haar-random unit vector."""
    psi = haar_vector(n, rng_for(seed))
    return DensityMatrix(np.outer(psi, psi.conj()))


def induced_mixed(n, k, seed):
    """``G G^dagger / tr(G G^dagger)`` for an N x K complex Ginibre ``G``."""
    if k < 1:
        raise ParameterOutOfRange(f"K={k} must be >= 1")
    return DensityMatrix(_ginibre_state(n, k, rng_for(seed)))


def maximally_mixed(n):
    return DensityMatrix(np.eye(n, dtype=complex) / n)


def depolarized(n, a, psi=None):
    """``a |psi><psi| + (1 - a) I/N``; ``psi`` defaults to the first basis vector."""
    if not 0.0 <= a <= 1.0:
        raise ParameterOutOfRange(f"a={a} outside [0, 1]")
    if psi is None:
        psi = np.zeros(n, dtype=complex)
        psi[0] = 1.0
    psi = np.asarray(psi, dtype=complex)
    return DensityMatrix(a * np.outer(psi, psi.conj()) + (1.0 - a) * np.eye(n) / n)


def orthogonal_support_pair(n):
    """Two states ``(2/N) diag(1..1, 0..0)`` and ``(2/N) diag(0..0, 1..1)``."""
    if n % 2:
        raise OddDimension(f"N={n}")
    half = np.r_[np.ones(n // 2), np.zeros(n // 2)]
    return (DensityMatrix(np.diag(half * 2 / n).astype(complex)),
            DensityMatrix(np.diag(half[::-1] * 2 / n).astype(complex)))


def _single(spec, rng):
    n = spec.dim
    if spec.kind == "haar":
        psi = haar_vector(n, rng)
        return DensityMatrix(np.outer(psi, psi.conj()))
    if spec.kind == "induced":
        return DensityMatrix(_ginibre_state(n, spec.K, rng))
    if spec.kind == "rank":
        return DensityMatrix(_ginibre_state(n, spec.r, rng))
    if spec.kind == "depolarized":
        return depolarized(n, spec.a, haar_vector(n, rng))
    raise ParameterOutOfRange(f"kind {spec.kind!r} describes a pair, not a state")


def make_state(spec):
    """Realize a single-state spec (haar, induced, rank, depolarized)."""
    if isinstance(spec, str):
        spec = StateSpec.parse(spec)
    return _single(spec, rng_for(spec.seed))


def structured_pair(spec):
    """Realize a pair spec.

    * ``depolarized``: ``(rho_a, I/N)``
    * ``orthogonal``: the half-rank pair on orthogonal supports (even N)
    * ``commuting``: two random spectra in one shared random eigenbasis
    * ``rank``: an exact-rank-r state and a full-rank induced partner
    * ``haar`` / ``induced``: two independent draws of that kind
    """
    if isinstance(spec, str):
        spec = StateSpec.parse(spec)
    n = spec.dim
    if spec.kind == "depolarized":
        return make_state(spec), maximally_mixed(n)
    if spec.kind == "orthogonal":
        return orthogonal_support_pair(n)
    if spec.kind == "commuting":
        rng = rng_for(spec.seed)
        u = haar_unitary(n, rng)
        p = rng.exponential(size=n)
        q = rng.exponential(size=n)
        p, q = p / p.sum(), q / q.sum()
        return (DensityMatrix((u * p) @ u.conj().T),
                DensityMatrix((u * q) @ u.conj().T))
    if spec.kind == "rank":
        return (_single(spec, rng_for(spec.seed, 0)),
                DensityMatrix(_ginibre_state(n, n, rng_for(spec.seed, 1))))
    return _single(spec, rng_for(spec.seed, 0)), _single(spec, rng_for(spec.seed, 1))


def random_spec(n, rng, kinds=("haar", "induced", "rank")):
    """Draw a single-state spec of dimension ``n`` from a mix of ensembles.

    ``induced`` uses K uniform in [1, 2N]; ``rank`` picks r uniform in
    [1, N]; ``depolarized`` picks a in [0.9, 1) to sit near the boundary.
    """
    kind = kinds[int(rng.integers(len(kinds)))]
    seed = int(rng.integers(2 ** 62))
    if kind == "induced":
        return StateSpec(n, "induced", seed, K=int(rng.integers(1, 2 * n + 1)))
    if kind == "rank":
        return StateSpec(n, "rank", seed, r=int(rng.integers(1, n + 1)))
    if kind == "depolarized":
        return StateSpec(n, "depolarized", seed, a=float(0.9 + 0.1 * rng.random()))
    return StateSpec(n, kind, seed)


def with_seed(spec, seed):
    return replace(spec, seed=seed)


def random_psd(n, rng, rank=None):
    """Unnormalized random PSD matrix (Wishart), optionally of given rank."""
    k = n if rank is None else rank
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    return g @ g.conj().T


def random_hermitian(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (g + g.conj().T)
