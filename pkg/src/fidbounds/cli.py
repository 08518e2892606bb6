"""Command-line front end.

Exit codes: 0 success, 1 I/O error, 2 validation or domain error,
3 property failure.
"""

import argparse
import csv
import json
import sys

from . import geometry, measure
from .errors import FidboundsError, ParameterOutOfRange
from .fidelity import bound_chain, depolarized_closed_forms, depolarized_matrix_path
from .linalg import validate_density
from .matfile import load_matrix
from .randgen import derive_seed
from .suites import SUITES, run_suite

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_PROPERTY = 3

SWEEP_HEADER = ("N", "a", "E", "Eprime", "F", "G")
SWEEP_AGREEMENT = 1e-10


class PropertyFailure(Exception):
    """A computed result violates a property the command promises."""


def _load_state(path):
    return validate_density(load_matrix(path))


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _dump(obj, out):
    json.dump(obj, out, indent=2)
    out.write("\n")


def cmd_compute(args, out):
    rho1 = _load_state(args.file1)
    rho2 = _load_state(args.file2)
    report = bound_chain(rho1, rho2, rank_tol=args.rank_tol)
    distances = geometry.distance_report(rho1, rho2)
    _dump({"fidelity": report.to_dict(), "distances": distances.to_dict()}, out)
    if not report.chain_ok:
        raise PropertyFailure(f"bound chain violated: {', '.join(report.violations())}")


def sweep_rows(dims, steps, seed):
    """Rows ``(N, a, E, E', F, G)`` on a uniform a-grid, each cross-checked.

    The closed forms are compared against explicit matrices whose pure
    component is Haar-random under ``seed``.

    Raises:
        ParameterOutOfRange: for ``N < 2`` or ``steps < 2``.
        PropertyFailure: if the two evaluations differ by more than 1e-10.
    """
    if steps < 2:
        raise ParameterOutOfRange(f"steps={steps} must be >= 2")
    for n in dims:
        if n < 2:
            raise ParameterOutOfRange(f"N={n} must be >= 2")
    rows = []
    for n in dims:
        for k in range(steps):
            a = k / (steps - 1)
            closed = depolarized_closed_forms(n, a)
            matrix = depolarized_matrix_path(n, a, seed=None if seed is None else derive_seed(seed, n))
            diff = max(abs(x - y) for x, y in zip(closed, matrix))
            if diff > SWEEP_AGREEMENT:
                raise PropertyFailure(f"N={n}, a={a!r}: closed form and matrix path differ by {diff:.3g}")
            rows.append((n, a, *closed))
    return rows


def cmd_sweep(args, out):
    rows = sweep_rows(args.n, args.steps, args.seed)
    fh = open(args.out, "w", newline="") if args.out else out
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for n, a, *vals in rows:
            writer.writerow([n, repr(a), *(repr(float(v)) for v in vals)])
    finally:
        if fh is not out:
            fh.close()


def cmd_suite(args, out):
    summary = run_suite(args.suite, args.samples, args.seed, shots=args.shots)
    _dump(summary.to_dict(), out)
    if not summary.passed:
        failed = [r.property for r in summary.results if not r.passed]
        raise PropertyFailure(f"failed: {', '.join(failed)}")


def cmd_simulate(args, out):
    rho1 = _load_state(args.file1)
    rho2 = _load_state(args.file2)
    run = measure.estimate(args.scheme, rho1, rho2, args.shots, args.seed, args.swap_bias)
    _dump(run.to_dict(), out)


def cmd_audit(args, out):
    record = geometry.triangle_audit(args.metric, args.n, args.seed)
    _dump(record.to_dict(), out)
    if record.proven and record.violated:
        raise PropertyFailure(f"triangle inequality violated for {args.metric}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fidbounds",
        description="Fidelity, its sub-/super-fidelity bounds, induced distances and SWAP-test simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="bound chain and distances for two matrix files")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--rank-tol", type=float, default=None,
                   help="eigenvalue threshold for the numerical rank used by E'")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("sweep", help="E, E', F, G on the depolarized family as CSV")
    p.add_argument("--n", type=_int_list, default=[2, 3, 4, 5], help="comma-separated dimensions")
    p.add_argument("--steps", type=int, default=101, help="grid points for a in [0, 1]")
    p.add_argument("--seed", type=int, default=None,
                   help="draw the pure component at random (default: first basis vector)")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("suite", help="run a property suite")
    p.add_argument("--suite", required=True, help=f"one of: {', '.join(SUITES)}")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=10 ** 6, help="shots per estimate (measurement suite)")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("simulate", help="shot-sampled estimate of G or E for two matrix files")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--scheme", choices=measure.SCHEMES, default="super")
    p.add_argument("--shots", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--swap-bias", type=float, default=0.0,
                   help="probability that the source emits the pair in swapped order")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("audit", help="search for triangle-inequality violations")
    p.add_argument("--metric", required=True, help=f"one of: {', '.join(geometry.METRICS)}")
    p.add_argument("--n", type=int, default=10 ** 4, help="number of random triples")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        args.func(args, out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FidboundsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PropertyFailure as exc:
        print(f"property failure: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
