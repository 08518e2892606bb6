"""Distances and angles built from fidelity and super-fidelity.

The G-based quantities live on the unit sphere of ``Herm(N) + R`` via the
embedding ``H -> (H, sqrt(1 - tr H^2))``, whose inner product is G. That makes
``sqrt(2 - 2G)``, ``sqrt(1 - G)`` and ``arccos G`` metrics; whether
``sqrt(2 - 2 sqrt(G))`` and ``arccos sqrt(G)`` are is not known, so the audit
below only reports on them.
"""

from dataclasses import asdict, dataclass
import json
import math
from typing import Optional

import numpy as np

from .errors import (
    NotInBall,
    NumericalInconsistency,
    UnknownMetric,
    WrongDimension,
)
from .fidelity import _Spectra, lorentz_self, super_fidelity, trace_product
from .linalg import HermitianMatrix, as_matrix, bloch_map, same_dim
from .randgen import make_state, random_spec, rng_for

ARC_TOL = 1e-12


def _clip_unit(x, lo=-1.0):
    """Clamp into ``[lo, 1]``, tolerating ``ARC_TOL`` of overshoot."""
    if x > 1.0 + ARC_TOL or x < lo - ARC_TOL:
        raise NumericalInconsistency(f"value {x!r} outside [{lo}, 1]")
    return min(max(x, lo), 1.0)


def _sqrt_nonneg(x):
    if x < -ARC_TOL:
        raise NumericalInconsistency(f"negative radicand {x!r}")
    return math.sqrt(max(x, 0.0))


@dataclass(frozen=True)
class DistanceReport:
    d_hs: float
    d_trace: float
    d_bures: float
    bures_angle: float
    root_infidelity: float
    d_g: float
    d_g_angle: float
    c_prime: float
    d_m: float
    d_m_angle: float
    p_mielnik: float

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _bures_from_f(f):
    rf = math.sqrt(_clip_unit(f, 0.0))
    return (
        _sqrt_nonneg(2.0 - 2.0 * rf),
        math.acos(rf),
        _sqrt_nonneg(1.0 - _clip_unit(f, 0.0)),
    )


def _g_from_g(g):
    g = _clip_unit(g, 0.0)
    rg = math.sqrt(g)
    p_m = (1.0 + g) / 2.0
    return (
        _sqrt_nonneg(2.0 - 2.0 * rg),
        math.acos(rg),
        _sqrt_nonneg(1.0 - g),
        2.0 * _sqrt_nonneg(1.0 - p_m),
        math.acos(g),
        p_m,
    )


def bures_metrics(rho1, rho2):
    """``(D_F, D'_F, C)``: Bures distance, Bures angle and root infidelity."""
    return _bures_from_f(_Spectra(rho1, rho2).root_f ** 2)


def g_metrics(rho1, rho2):
    """``(D_G, D'_G, C', D_M, D'_M, p_M)`` from one super-fidelity value.

    ``p_M = (1 + G)/2`` is Mielnik's transition probability of the embedded
    points, ``D_M = 2 sqrt(1 - p_M)`` and ``D'_M = arccos G``.
    """
    return _g_from_g(super_fidelity(rho1, rho2))


def flat_metrics(rho1, rho2):
    """``(D_HS, D_tr)``: Hilbert-Schmidt and trace distance."""
    a = as_matrix(rho1)
    b = as_matrix(rho2)
    same_dim(a, b)
    d = a - b
    d_hs = math.sqrt(max(float(np.vdot(d, d).real), 0.0))
    d_tr = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))
    return d_hs, d_tr


def distance_report(rho1, rho2):
    f = _Spectra(rho1, rho2).root_f ** 2
    g = super_fidelity(rho1, rho2)
    d_f, d_f_angle, c = _bures_from_f(f)
    d_g, d_g_angle, c_p, d_m, d_m_angle, p_m = _g_from_g(g)
    d_hs, d_tr = flat_metrics(rho1, rho2)
    return DistanceReport(d_hs, d_tr, d_f, d_f_angle, c, d_g, d_g_angle,
                          c_p, d_m, d_m_angle, p_m)


@dataclass(frozen=True)
class EmbeddedPoint:
    dim: int
    h_part: HermitianMatrix
    x_part: float

    def inner(self, other):
        return trace_product(self.h_part.data, other.h_part.data) + self.x_part * other.x_part

    def norm(self):
        return math.sqrt(self.inner(self))

    def distance(self, other):
        d = self.h_part.data - other.h_part.data
        return math.sqrt(float(np.vdot(d, d).real) + (self.x_part - other.x_part) ** 2)


def embed(h, tol=1e-9):
    """Map ``H`` with ``tr H = 1``, ``tr H^2 <= 1`` to the unit sphere.

    Raises:
        NotInBall: if either condition fails beyond ``tol``.
    """
    hm = h if isinstance(h, HermitianMatrix) else HermitianMatrix(h)
    a = hm.data
    tr = float(np.trace(a).real)
    if abs(tr - 1.0) > tol:
        raise NotInBall(f"tr H = {tr!r}", violation=tr - 1.0)
    purity = float(np.vdot(a, a).real)
    if purity > 1.0 + tol:
        raise NotInBall(f"tr H^2 = {purity!r}", violation=purity - 1.0)
    # 1 - tr H^2 via the Lorentz form: exact zero for pure states
    return EmbeddedPoint(hm.dim, hm, math.sqrt(max(lorentz_self(a), 0.0)))


def uhlmann_hemisphere(rho):
    """Extended Bloch vector ``(x, y, z, t)`` of a qubit, ``t = sqrt(1/2 - |tau|^2)``.

    Raises:
        WrongDimension: for anything but a 2 x 2 state.
    """
    a = as_matrix(rho)
    if a.shape[0] != 2:
        raise WrongDimension(f"N={a.shape[0]}, need N=2")
    # 1/2 - |tau|^2 = 1 - tr rho^2, taken from the spectrum to avoid cancellation
    return np.r_[bloch_map(a).tau, _sqrt_nonneg(lorentz_self(a))]


def hemisphere_angle(v1, v2):
    """Angle between two extended Bloch vectors, stable near 0 and pi."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    return 2.0 * math.atan2(np.linalg.norm(v1 - v2), np.linalg.norm(v1 + v2))


# metric id -> whether the triangle inequality is proven
METRICS = {
    "d_bures": True,
    "bures_angle": True,
    "root_infidelity": True,
    "d_g": False,
    "d_g_angle": False,
    "c_prime": True,
    "d_m": True,
    "d_m_angle": True,
    "d_hs": True,
    "d_trace": True,
}

_F_METRICS = {"d_bures", "bures_angle", "root_infidelity"}
_G_METRICS = {"d_g", "d_g_angle", "c_prime", "d_m", "d_m_angle"}
_FLAT_METRICS = {"d_hs", "d_trace"}
AUDIT_KINDS = ("haar", "induced", "rank", "depolarized")
AUDIT_DIMS = (2, 3, 4, 5, 6)
TRIANGLE_SLACK = 1e-9


@dataclass(frozen=True)
class AuditRecord:
    metric: str
    n_triples: int
    seed: int
    worst_slack: float
    witness: Optional[list]
    proven: bool

    @property
    def violated(self):
        return self.worst_slack > TRIANGLE_SLACK

    def to_dict(self):
        return {
            "metric": self.metric,
            "n_triples": self.n_triples,
            "seed": self.seed,
            "worst_slack": self.worst_slack,
            "witness": self.witness,
            "proven": self.proven,
            "violated": self.violated,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _pair_values(a, b, metrics):
    out = {}
    if metrics & _F_METRICS:
        vals = _bures_from_f(_Spectra(a, b).root_f ** 2)
        out.update(zip(("d_bures", "bures_angle", "root_infidelity"), vals))
    if metrics & _G_METRICS:
        vals = _g_from_g(super_fidelity(a, b))
        out.update(zip(("d_g", "d_g_angle", "c_prime", "d_m", "d_m_angle"), vals))
    if metrics & _FLAT_METRICS:
        out.update(zip(("d_hs", "d_trace"), flat_metrics(a, b)))
    return out


def audit_triple_specs(seed, index):
    """State specs of triple ``index`` in the audit stream of ``seed``."""
    rng = rng_for(seed, index)
    n = AUDIT_DIMS[int(rng.integers(len(AUDIT_DIMS)))]
    return [random_spec(n, rng, AUDIT_KINDS) for _ in range(3)]


def triangle_audit_many(metric_ids, n_triples, seed):
    """Audit several metrics on one shared stream of random state triples.

    For each triple the worst of its three rotations of
    ``d(x, z) - d(x, y) - d(y, z)`` is kept. Triples are drawn across
    N = 2..6 from Haar-pure, induced, rank-deficient and near-pure
    depolarized states, reproducible from ``(seed, index)``.

    Returns:
        dict mapping metric id to :class:`AuditRecord`.
    """
    metric_ids = list(metric_ids)
    for m in metric_ids:
        if m not in METRICS:
            raise UnknownMetric(repr(m))
    wanted = set(metric_ids)
    worst = {m: -math.inf for m in metric_ids}
    witness = {m: None for m in metric_ids}
    for i in range(n_triples):
        specs = audit_triple_specs(seed, i)
        states = [make_state(s).data for s in specs]
        d01 = _pair_values(states[0], states[1], wanted)
        d12 = _pair_values(states[1], states[2], wanted)
        d02 = _pair_values(states[0], states[2], wanted)
        for m in metric_ids:
            x, y, z = d01[m], d12[m], d02[m]
            slack = max(z - x - y, x - y - z, y - x - z)
            if slack > worst[m]:
                worst[m] = slack
                witness[m] = [str(s) for s in specs]
    return {
        m: AuditRecord(m, n_triples, seed, float(worst[m]),
                       witness[m] if worst[m] > TRIANGLE_SLACK else None,
                       METRICS[m])
        for m in metric_ids
    }


def triangle_audit(metric_id, n_triples, seed):
    """Search for triangle-inequality violations of one distance.

    ``witness`` holds the state specs of the worst triple when its slack
    exceeds 1e-9, else None.

    Raises:
        UnknownMetric: if ``metric_id`` is not one of :data:`METRICS`.
    """
    return triangle_audit_many([metric_id], n_triples, seed)[metric_id]


__all__ = [
    "AuditRecord", "DistanceReport", "EmbeddedPoint", "METRICS",
    "bures_metrics", "distance_report", "embed", "flat_metrics", "g_metrics",
    "hemisphere_angle", "triangle_audit", "triangle_audit_many",
    "uhlmann_hemisphere",
]
