"""Seeded property suites over random states.

Every property is reported as a worst slack: the largest amount by which the
inequality or identity is violated over all instances (negative when it holds
with room to spare), together with the state specs of the worst instance.
A property passes when its worst slack is at most its tolerance. Findings
are reported the same way but never fail a suite.
"""

from dataclasses import dataclass, field
import json
import math
from typing import Optional

import numpy as np

from . import geometry, measure
from .errors import ParameterOutOfRange, UnknownSuite
from .fidelity import (
    _Spectra,
    bound_chain,
    fidelity,
    lemma_terms,
    rank3_relations,
    rank_symmetric_bound,
    root_fidelity,
    sub_fidelity,
    super_fidelity,
    trace_product,
)
from .linalg import bloch_map, bloch_radius, elementary_symmetric_all
from .randgen import (
    StateSpec,
    derive_seed,
    haar_unitary,
    make_state,
    random_hermitian,
    random_psd,
    random_spec,
    rng_for,
)

CHAIN_DIMS = tuple(range(2, 9))
SMALL_DIMS = tuple(range(2, 7))
CHAIN_SLACK = 1e-9


@dataclass
class PropertyResult:
    property: str
    worst_slack: float = -math.inf
    witness: Optional[list] = None
    tol: float = CHAIN_SLACK
    finding: bool = False
    count: int = 0

    @property
    def passed(self):
        return self.finding or self.worst_slack <= self.tol

    def to_dict(self):
        return {"property": self.property, "worst_slack": self.worst_slack,
                "witness": self.witness, "tol": self.tol, "count": self.count,
                "finding": self.finding, "passed": self.passed}


@dataclass
class SuiteSummary:
    suite: str
    samples: int
    seed: int
    results: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def result(self, name):
        for r in self.results:
            if r.property == name:
                return r
        raise KeyError(name)

    def to_dict(self):
        return {"suite": self.suite, "samples": self.samples, "seed": self.seed,
                "results": [r.to_dict() for r in self.results],
                "passed": self.passed}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


class _Tracker:
    """Keeps the worst slack per property, in first-seen order."""

    def __init__(self):
        self.rows = {}

    def add(self, name, slack, witness, tol=CHAIN_SLACK, finding=False):
        row = self.rows.get(name)
        if row is None:
            row = self.rows[name] = PropertyResult(name, tol=tol, finding=finding)
        row.count += 1
        slack = float(slack)
        if row.witness is None or slack > row.worst_slack:
            row.worst_slack = slack
            row.witness = [str(w) for w in witness]

    def results(self):
        return list(self.rows.values())


def _spec_pair(seed, tag, n, i, kinds=("haar", "induced", "rank")):
    rng = rng_for(seed, tag, n, i)
    specs = [random_spec(n, rng, kinds), random_spec(n, rng, kinds)]
    return specs, [make_state(s).data for s in specs]


def _random_dim(rng, dims=SMALL_DIMS):
    return dims[int(rng.integers(len(dims)))]


def _kron(*ms):
    out = ms[0]
    for m in ms[1:]:
        out = np.kron(out, m)
    return out


# --- bounds chain -----------------------------------------------------------

def suite_bounds_chain(samples, seed, **_):
    """Bound chain per N in 2..8 (``samples`` pairs each), plus saturation,
    strictness and unitary invariance on ``samples`` further pairs."""
    tr = _Tracker()
    for n in CHAIN_DIMS:
        for i in range(samples):
            specs, (a, b) = _spec_pair(seed, 0, n, i)
            rep = bound_chain(a, b)
            tr.add("tr <= E", rep.lower_tr - rep.E, specs)
            tr.add("E <= F", rep.E - rep.F, specs)
            tr.add("F <= G", rep.F - rep.G, specs)
            tr.add("G <= 1", rep.G - 1.0, specs)
            tr.add("F <= N tr|rho1 rho2|", rep.F - rep.upper_tr, specs)
            tr.add("F(p_up, q_down) <= F", rep.classical_lo - rep.F, specs)
            tr.add("F <= F(p_up, q_up)", rep.F - rep.classical_hi, specs)
            tr.add("E' <= F", rep.E_prime - rep.F, specs)
            if n == 2:
                tr.add("N=2: |E - F|", abs(rep.E - rep.F), specs, tol=1e-10)
                tr.add("N=2: |G - F|", abs(rep.G - rep.F), specs, tol=1e-10)
    for i in range(samples):
        rng = rng_for(seed, 1, i)
        n = _random_dim(rng, CHAIN_DIMS)
        pure = StateSpec(n, "haar", int(rng.integers(2 ** 62)))
        other = random_spec(n, rng, ("haar", "induced", "rank", "depolarized"))
        a, b = make_state(pure).data, make_state(other).data
        tr.add("pure: |G - F|", abs(super_fidelity(a, b) - fidelity(a, b)), [pure, other])

        low = StateSpec(n, "rank", int(rng.integers(2 ** 62)), r=int(rng.integers(1, 3)))
        other = random_spec(n, rng, ("haar", "induced", "rank"))
        a, b = make_state(low).data, make_state(other).data
        tr.add("rank(rho1 rho2) <= 2: |E - F|",
               abs(sub_fidelity(a, b) - fidelity(a, b)), [low, other])

        if n >= 3:
            full = [StateSpec(n, "induced", int(rng.integers(2 ** 62)), K=n + int(rng.integers(n)))
                    for _ in range(2)]
            a, b = (make_state(s).data for s in full)
            tr.add("rank(rho1 rho2) > 2: E < F", sub_fidelity(a, b) - fidelity(a, b), full, tol=0.0)

        specs, (a, b) = _spec_pair(seed, 2, n, i)
        u = haar_unitary(n, rng_for(seed, 3, i))
        ua, ub = u @ a @ u.conj().T, u @ b @ u.conj().T
        for name, fn in (("E", sub_fidelity), ("F", fidelity), ("G", super_fidelity),
                         ("E'", rank_symmetric_bound)):
            tr.add(f"unitary invariance of {name}", abs(fn(a, b) - fn(ua, ub)),
                   specs + [f"U=haar;seed={seed};stream=3,{i}"])
    return tr.results()


# --- concavity --------------------------------------------------------------

def suite_concavity(samples, seed, **_):
    tr = _Tracker()
    for i in range(samples):
        rng = rng_for(seed, 10, i)
        n = _random_dim(rng)
        specs = [random_spec(n, rng, ("haar", "induced", "rank")) for _ in range(4)]
        a, b, c, d = (make_state(s).data for s in specs)
        alpha = float(rng.uniform(0.0, 1.0))
        mix = alpha * b + (1 - alpha) * c
        wit = specs[:3] + [f"alpha={alpha!r}"]
        for name, fn in (("E", sub_fidelity), ("G", super_fidelity)):
            rhs = alpha * fn(a, b) + (1 - alpha) * fn(a, c)
            tr.add(f"concavity of {name}", rhs - fn(a, mix), wit)
        lhs = root_fidelity(alpha * a + (1 - alpha) * b, alpha * c + (1 - alpha) * d)
        rhs = alpha * root_fidelity(a, c) + (1 - alpha) * root_fidelity(b, d)
        tr.add("joint concavity of sqrt F", rhs - lhs, specs + [f"alpha={alpha!r}"])
    return tr.results()


# --- multiplicativity -------------------------------------------------------

def suite_multiplicativity(samples, seed, **_):
    tr = _Tracker()
    for i in range(samples):
        rng = rng_for(seed, 20, i)
        n1, n2 = (int(rng.integers(2, 5)) for _ in range(2))
        specs = [random_spec(n, rng, ("haar", "induced", "rank")) for n in (n1, n2, n1, n2)]
        a, b, c, d = (make_state(s).data for s in specs)
        ab, cd = np.kron(a, b), np.kron(c, d)
        tr.add("G super-multiplicative",
               super_fidelity(a, c) * super_fidelity(b, d) - super_fidelity(ab, cd), specs)
        tr.add("E sub-multiplicative",
               sub_fidelity(ab, cd) - sub_fidelity(a, c) * sub_fidelity(b, d), specs)
        tr.add("F multiplicative",
               abs(fidelity(ab, cd) - fidelity(a, c) * fidelity(b, d)), specs, tol=1e-8)
    a = np.diag([1.0, 0.0])
    c = np.diag([0.0, 1.0])
    half = np.eye(2) / 2
    gap = super_fidelity(np.kron(a, half), np.kron(c, half)) - super_fidelity(a, c) * super_fidelity(half, half)
    tr.add("G strict example: gap = 1/2", abs(gap - 0.5),
           ["A=diag(1,0)", "B=I/2", "C=diag(0,1)", "D=I/2"], tol=1e-12)
    return tr.results()


# --- lemmas -----------------------------------------------------------------

def _log_majorized_pair(rng, n):
    """``(x, y)``, both nonincreasing, with the prefix products of x bounded
    by those of y and equal full products."""
    y = np.sort(rng.exponential(size=n) ** 2 + 1e-3)[::-1]
    beta = np.log(y)
    weights = rng.dirichlet(np.ones(n))
    doubly = sum(w * np.eye(n)[rng.permutation(n)] for w in weights)
    alpha = np.sort(doubly @ beta)[::-1]
    alpha += (beta.sum() - alpha.sum()) / n
    return np.exp(alpha), y


def _g_pairs(x):
    r = np.sqrt(x)
    return float(r.sum() ** 2 - (r * r).sum())


def suite_lemmas(samples, seed, **_):
    tr = _Tracker()
    for i in range(samples):
        rng = rng_for(seed, 30, i)
        n = _random_dim(rng)
        specs, (a, b) = _spec_pair(seed, 31, n, i)
        t = lemma_terms(a, b)
        tr.add("Lemma 1: s2(sqrt(root product)) <= s2(sqrt(pq))", t.s2_root - t.s2_diag, specs)
        tr.add("Lemma 2: s2(sqrt(pq)) <= sqrt(s2(p) s2(q))", t.s2_diag - t.s2_bound, specs)
        x, y = _log_majorized_pair(rng, n)
        tr.add("Proposition 4: g(x) <= g(y)", _g_pairs(x) - _g_pairs(y),
               [f"x={x.tolist()}", f"y={y.tolist()}"])
    return tr.results()


# --- facts ------------------------------------------------------------------

def suite_facts(samples, seed, **_):
    """Hoelder runs ``samples`` pairs per N in 2..6; the rest ``samples`` total."""
    tr = _Tracker()
    for n in SMALL_DIMS:
        for i in range(samples):
            rng = rng_for(seed, 40, n, i)
            a = random_psd(n, rng, int(rng.integers(1, n + 1)))
            b = random_psd(n, rng, int(rng.integers(1, n + 1)))
            lhs = trace_product(a, b)
            rhs = math.sqrt(trace_product(a, a) * trace_product(b, b))
            tr.add("Hoelder (a=2): tr AB <= sqrt(tr A^2 tr B^2)", (lhs - rhs) / rhs,
                   [f"wishart;N={n};seed={seed};stream=40,{n},{i}"])
    for i in range(samples):
        rng = rng_for(seed, 41, i)
        n = _random_dim(rng)
        specs, (a, b) = _spec_pair(seed, 42, n, i)
        pa, pb = trace_product(a, a), trace_product(b, b)
        tr.add("Fact 8", math.sqrt(max((1 - pa) * (1 - pb), 0.0)) - (1 - math.sqrt(pa * pb)), specs)

        s = _Spectra(a, b)
        mu = s.mu
        ab = np.sort(np.linalg.eigvals(a @ b).real)[::-1]
        ba = np.sort(np.linalg.eigvalsh(_sandwich(b, a)))[::-1]
        scale = max(float(mu[0]), 1e-300)
        tr.add("Facts 4-5: spectra of AB, sqrt(A)B sqrt(A), sqrt(B)A sqrt(B) agree",
               max(np.max(np.abs(ab - mu)), np.max(np.abs(ba - mu))) / scale, specs)
        tr.add("Facts 4-5: eigenvalues of AB nonnegative", -float(np.min(ab)), specs)

        r = int(rng.integers(1, n + 1))
        m = random_psd(n, rng, r)
        w = np.linalg.eigvalsh(m)[::-1][:r]
        e = elementary_symmetric_all(w)
        worst = -math.inf
        for k in range(1, r):
            left = (e[k] / math.comb(r, k)) ** (1 / k)
            right = (e[k + 1] / math.comb(r, k + 1)) ** (1 / (k + 1))
            worst = max(worst, (right - left) / left)
        if r > 1:
            tr.add("Maclaurin", worst, [f"wishart;N={n};rank={r};seed={seed};stream=41,{i}"])
    return tr.results()


def _sandwich(a, b):
    """``sqrt(a) b sqrt(a)``, Hermitian part."""
    w, v = np.linalg.eigh(a)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    m = root @ b @ root
    return 0.5 * (m + m.conj().T)


# --- metrics ----------------------------------------------------------------

_PROVEN = [m for m, proven in geometry.METRICS.items() if proven]
_OPEN = [m for m, proven in geometry.METRICS.items() if not proven]


def suite_metrics(samples, seed, **_):
    """Triangle audit on ``samples`` triples, pointwise checks on ``samples`` pairs."""
    tr = _Tracker()
    records = geometry.triangle_audit_many(list(geometry.METRICS), samples, seed)
    for m, rec in records.items():
        tr.add(f"triangle inequality: {m}", rec.worst_slack, rec.witness or [],
               finding=not rec.proven)
    for i in range(samples):
        rng = rng_for(seed, 50, i)
        n = _random_dim(rng)
        specs, (a, b) = _spec_pair(seed, 51, n, i, ("haar", "induced", "rank", "depolarized"))
        d = geometry.distance_report(a, b)
        g = super_fidelity(a, b)
        f = fidelity(a, b)
        tr.add("D_tr <= C", d.d_trace - d.root_infidelity, specs)
        tr.add("D_M = sqrt(2 - 2G)", abs(d.d_m - math.sqrt(max(2 - 2 * g, 0.0))), specs, tol=1e-12)
        tr.add("D'_M = 2 arccos sqrt(p_M)",
               abs(d.d_m_angle - 2 * math.acos(math.sqrt(d.p_mielnik))), specs, tol=1e-12)
        tr.add("cos D'_M = G", abs(math.cos(d.d_m_angle) - g), specs, tol=1e-12)
        tr.add("cos^2 D'_F = F", abs(math.cos(d.bures_angle) ** 2 - f), specs, tol=1e-12)
        tr.add("D_M = 2 sin(D'_M / 2)", abs(d.d_m - 2 * math.sin(d.d_m_angle / 2)), specs, tol=1e-12)
        tr.add("D_G <= D_F", d.d_g - d.d_bures, specs)
        tr.add("D'_G <= D'_F", d.d_g_angle - d.bures_angle, specs)
        pa, pb = geometry.embed(a), geometry.embed(b)
        tr.add("embedded norm = 1", max(abs(pa.norm() - 1), abs(pb.norm() - 1)), specs, tol=1e-12)
        tr.add("embedded distance = sqrt(2 - 2G)",
               abs(pa.distance(pb) - math.sqrt(max(2 - 2 * g, 0.0))), specs, tol=1e-12)
        off = a - np.eye(n) / n
        tr.add("tr(rho - I/N)^2 <= (N-1)/N", trace_product(off, off) - bloch_radius(n) ** 2, specs)

        qspecs, (qa, qb) = _spec_pair(seed, 52, 2, i, ("haar", "induced", "rank", "depolarized"))
        theta = geometry.hemisphere_angle(geometry.uhlmann_hemisphere(qa),
                                          geometry.uhlmann_hemisphere(qb))
        tr.add("N=2: hemisphere angle = 2 D'_F",
               abs(theta - 2 * geometry.bures_metrics(qa, qb)[1]), qspecs)
        dq = geometry.distance_report(qa, qb)
        tr.add("N=2: D_G = D_F", abs(dq.d_g - dq.d_bures), qspecs, tol=1e-10)
        tr.add("N=2: D_HS = Bloch distance",
               abs(dq.d_hs - float(np.linalg.norm(_bloch(qa) - _bloch(qb)))), qspecs, tol=1e-12)
    return tr.results()


def _bloch(rho):
    return bloch_map(rho).tau


# --- measurement ------------------------------------------------------------

SAMPLED_PAIRS = 100
SCALING_SHOTS = (10 ** 2, 10 ** 4, 10 ** 6)


def suite_measurement(samples, seed, shots=10 ** 6, **_):
    """Exact pipelines on ``samples`` pairs; shot-noise checks on
    ``min(samples, 100)`` qubit pairs at ``shots`` shots each."""
    if shots is None or shots < 1:
        raise ParameterOutOfRange(f"shots={shots} must be >= 1")
    tr = _Tracker()
    for n in SMALL_DIMS:
        v, pp, pm = measure.swap_and_projectors(n)
        eye = np.eye(n * n)
        err = max(np.max(np.abs(pp + pm - eye)), np.max(np.abs(pp @ pp - pp)),
                  np.max(np.abs(pm @ pm - pm)), np.max(np.abs(pp @ pm)))
        tr.add("P+ + P- = I, idempotent, orthogonal", err, [f"N={n}"], tol=1e-12)
    w_obs = {n: measure.default_w_observable(n) for n in (2, 3)}
    for i in range(samples):
        rng = rng_for(seed, 60, i)
        n = _random_dim(rng)
        x, y = random_hermitian(n, rng), random_hermitian(n, rng)
        v = measure.swap_and_projectors(n)[0]
        tr.add("tr V(A (x) B) = tr AB", abs(trace_product(v, np.kron(x, y)) - trace_product(x, y)),
               [f"hermitian;N={n};seed={seed};stream=60,{i}"], tol=1e-12)

        specs, (a, b) = _spec_pair(seed, 61, n, i, ("haar", "induced", "rank", "depolarized"))
        g_probs, _ = measure.super_fidelity_from_probs(*measure.anticoalescence_probs(a, b))
        tr.add("G from three probabilities", abs(g_probs - super_fidelity(a, b)), specs, tol=1e-12)

        p12_proj = trace_product(measure.swap_and_projectors(n)[2], np.kron(a, b))
        tr.add("p12 = tr P-(rho1 (x) rho2)", abs(p12_proj - measure.anticoalescence_probs(a, b)[1]),
               specs, tol=1e-12)

        m = 2 + i % 2
        qspecs, (qa, qb) = _spec_pair(seed, 62, m, i, ("haar", "induced", "rank", "depolarized"))
        four = _kron(qa, qb, qa, qb)
        w = w_obs[m].expectation(four)
        x2 = qa @ qb
        w_direct = float(np.trace(x2 @ x2).real)
        tr.add("W expectation = tr (rho1 rho2)^2", abs(w - w_direct), qspecs, tol=1e-10)
        t = trace_product(measure.swap_and_projectors(m)[0], np.kron(qa, qb))
        e_rec = measure.sub_fidelity_from_expectations(t, w)
        tr.add("E from V and W expectations", abs(e_rec - sub_fidelity(qa, qb)), qspecs)

        outs = {p: measure.network_expectation(p, qa, qb) for p in measure.PROGRAMS}
        t_qab = float(np.trace(qa @ qb).real)
        net_err = max(abs(outs["zero_zero"] - t_qab), abs(outs["one_zero"] - w_direct),
                      abs(outs["bell"] - 0.5 * (w_direct - t_qab ** 2)))
        tr.add("network outputs match traces", net_err, qspecs, tol=1e-10)

        k = 1 + i % 3
        pspecs, (ma, mb) = _spec_pair(seed, 63, 2 ** k, i, ("haar", "induced", "rank"))
        p_odd = measure.multi_photon_anticoalescence(ma, mb)
        tr.add("odd-parity probability = (1 - tr rho1 rho2)/2",
               abs(p_odd - 0.5 * (1 - trace_product(ma, mb))), pspecs, tol=1e-12)

    n_pairs = min(samples, SAMPLED_PAIRS)
    misses = 0
    fired = 0
    worst = (-math.inf, None)
    for i in range(n_pairs):
        specs, (a, b) = _spec_pair(seed, 64, 2, i, ("haar", "induced", "rank"))
        run = measure.estimate_super_fidelity(a, b, shots, derive_seed(seed, 64, i))
        z = abs(run.estimates["G"] - run.truths["G"]) / max(run.std_errors["G"], 1e-300)
        misses += z > 3
        fired += not run.estimates["consistent"]
        if z > worst[0]:
            worst = (z, specs)
    if n_pairs:
        tr.add("sampled G within 3 standard errors (>= 95%)", misses / n_pairs - 0.05,
               worst[1] + [f"worst z={worst[0]:.3g}"], tol=0.0)
        tr.add("consistency flag never fires", fired, [f"pairs={n_pairs}"], tol=0.0)

        specs, (a, b) = _spec_pair(seed, 65, 2, 0, ("induced",))
        ses = [measure.estimate_super_fidelity(a, b, s, derive_seed(seed, 65, s)).std_errors["G"]
               for s in SCALING_SHOTS]
        worst_ratio = 0.0
        for (s1, e1), (s2, e2) in zip(zip(SCALING_SHOTS, ses), zip(SCALING_SHOTS[1:], ses[1:])):
            expected = math.sqrt(s2 / s1)
            worst_ratio = max(worst_ratio, abs(math.log2((e1 / e2) / expected)))
        tr.add("std_error ~ shots^-1/2 within factor 2", worst_ratio - 1.0,
               specs + [f"std_errors={ses}"], tol=0.0)

        n_bias = min(n_pairs, 20)
        miss_g = miss_e = 0
        for i in range(n_bias):
            specs, (a, b) = _spec_pair(seed, 66, 2, i, ("induced",))
            bias = float(rng_for(seed, 67, i).uniform(0.05, 0.95))
            rg = measure.estimate_super_fidelity(a, b, shots, derive_seed(seed, 66, i), swap_bias=bias)
            re = measure.estimate_sub_fidelity(a, b, shots, derive_seed(seed, 68, i), swap_bias=bias)
            miss_g += abs(rg.estimates["G"] - rg.truths["G"]) > 3 * rg.std_errors["G"]
            miss_e += any(abs(re.estimates[k] - re.truths[k]) > 3 * re.std_errors[k]
                          for k in ("tr_prod", "w"))
        tr.add("biased source order: G unbiased (>= 90% within 3 se)", miss_g / n_bias - 0.1,
               [f"pairs={n_bias}"], tol=0.0)
        tr.add("biased source order: <V>, <W> for E unbiased (>= 90% within 3 se)",
               miss_e / n_bias - 0.1,
               [f"pairs={n_bias}"], tol=0.0)
    return tr.results()


# --- rank 3 -----------------------------------------------------------------

def suite_rank3(samples, seed, **_):
    tr = _Tracker()
    for i in range(samples):
        rng = rng_for(seed, 70, i)
        specs = [StateSpec(3, "induced", int(rng.integers(2 ** 62)), K=int(rng.integers(3, 7)))
                 for _ in range(2)]
        a, b = (make_state(s).data for s in specs)
        res = rank3_relations(a, b)
        tr.add("rank-3 identity residual", res.residual_primary, specs, tol=1e-8)
        if res.residual_inverse is not None:
            tr.add("inverse-form identity residual", res.residual_inverse, specs, tol=1e-8)
        low = [StateSpec(3, "rank", int(rng.integers(2 ** 62)), r=int(rng.integers(1, 3))),
               random_spec(3, rng, ("haar", "induced", "rank"))]
        a, b = (make_state(s).data for s in low)
        tr.add("rank <= 2: rank-3 identity residual", rank3_relations(a, b).residual_primary,
               low, tol=1e-8)
    return tr.results()


SUITES = {
    "bounds-chain": suite_bounds_chain,
    "concavity": suite_concavity,
    "multiplicativity": suite_multiplicativity,
    "lemmas": suite_lemmas,
    "facts": suite_facts,
    "metrics": suite_metrics,
    "measurement": suite_measurement,
    "rank3": suite_rank3,
}


def run_suite(name, samples, seed, shots=10 ** 6):
    """Run a registered suite and collect its :class:`SuiteSummary`.

    Raises:
        UnknownSuite: if ``name`` is not registered.
        ParameterOutOfRange: for ``samples < 1`` or, in the measurement
            suite, ``shots < 1``.
    """
    if name not in SUITES:
        raise UnknownSuite(f"{name!r}; known: {', '.join(SUITES)}")
    if samples < 1:
        raise ParameterOutOfRange(f"samples={samples} must be >= 1")
    results = SUITES[name](samples, seed, shots=shots)
    return SuiteSummary(name, samples, seed, results)
