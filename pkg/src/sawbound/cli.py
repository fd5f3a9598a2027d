"""Command-line interface: ``sawbound <command> ...``.

Exit status is 0 on success, 1 on domain errors (bad weights, matrices
that are not primitive, corrupted files, failed validation) and 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from typing import Sequence, TextIO

import numpy as np

from .cluster import KPInstance, find_epsilon0, format_certificate, kp_check, save_certificate
from .exceptions import LatticeError, SawboundError
from .gmatrix import DEFAULT_MAX_EXTENSIONS, GMatrix, build_gmatrix, load_gmatrix, matrix_info, save_gmatrix
from .lattice import builtin_lattice, builtin_names
from .scan import (
    GridSpec,
    default_directions,
    domain_contains,
    grid_scan,
    ray_frontier,
    validate,
    write_frontier_csv,
    write_grid_csv,
)
from .spectral import DEFAULT_TOL, lambda_at, mu_upper_bound
from .walks import count_by_weight, dump_walks, enumerate_walks, weighted_count

THREADS_ENV = "SAWBOUND_THREADS"


class UsageError(Exception):
    pass


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            n = int(value)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
        if n < 1:
            raise UsageError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
        return n
    return os.cpu_count() or 1


def parse_vector(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated decimals, got {text!r}")
    return values


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


# -- argument groups -------------------------------------------------------

def _add_lattice_args(p: argparse.ArgumentParser, mode_default: str = "saw") -> None:
    p.add_argument("--lattice", default="square", help="builtin lattice name (see `lattices`)")
    p.add_argument("--scheme", default="general", help="weighting scheme")
    p.add_argument("--mode", default=mode_default, choices=["saw", "sat"])


def _add_source_args(p: argparse.ArgumentParser, mode_default: str = "saw", m=1, n=2) -> None:
    p.add_argument("--matrix", help="load a saved matrix instead of building one")
    _add_lattice_args(p, mode_default)
    p.add_argument("-m", type=int, default=m, help="prefix length")
    p.add_argument("-n", type=int, default=n, help="walk length")
    p.add_argument("--max-extensions", type=int, default=DEFAULT_MAX_EXTENSIONS)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="structured output instead of CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sawbound",
        description="Certified upper bounds on weighted connective constants.",
    )
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help=f"cap on worker processes (default: ${THREADS_ENV} or CPU count)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattices", help="list builtin lattices")
    _add_output_args(p)

    walks = sub.add_parser("walks", help="enumerate walks").add_subparsers(dest="action", required=True)
    p = walks.add_parser("count", help="weighted walk counts by length")
    _add_lattice_args(p)
    p.add_argument("-n", type=int, required=True, help="maximum length")
    p.add_argument("--class", dest="start_class", type=int, default=None)
    p.add_argument("-z", type=parse_vector, default=None, help="edge-class weights")
    _add_output_args(p)
    p = walks.add_parser("dump", help="write every n-step walk")
    _add_lattice_args(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--class", dest="start_class", type=int, default=None)
    p.add_argument("-o", "--output")

    matrix = sub.add_parser("matrix", help="build or inspect transfer matrices").add_subparsers(
        dest="action", required=True
    )
    p = matrix.add_parser("build")
    _add_lattice_args(p)
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--max-extensions", type=int, default=DEFAULT_MAX_EXTENSIONS)
    p.add_argument("-o", "--output", required=True)
    p = matrix.add_parser("info")
    p.add_argument("path")
    _add_output_args(p)

    p = sub.add_parser("bound", help="certified upper bound at one weight vector")
    _add_source_args(p)
    p.add_argument("-z", type=parse_vector, required=True)
    _add_output_args(p)

    scan = sub.add_parser("scan", help="grid scans and frontier sweeps").add_subparsers(
        dest="action", required=True
    )
    p = scan.add_parser("grid")
    _add_source_args(p)
    p.add_argument("--min", type=float, default=0.01)
    p.add_argument("--max", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("-o", "--output")
    _add_output_args(p)
    p = scan.add_parser("frontier")
    _add_source_args(p)
    p.add_argument("--rays", type=int, default=64)
    p.add_argument("-o", "--output")
    _add_output_args(p)

    p = sub.add_parser("domain", help="membership in the certified convergence region")
    _add_source_args(p)
    p.add_argument("-x", type=parse_vector, required=True)
    _add_output_args(p)

    p = sub.add_parser("validate", help="closed-form, scaling and reciprocal checks")
    _add_source_args(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--row", default=None, help="closed-form row id")
    _add_output_args(p)

    kp = sub.add_parser("kp", help="Kotecky-Preiss certification").add_subparsers(dest="action", required=True)
    p = kp.add_parser("check")
    _add_source_args(p, mode_default="sat")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--kpT", type=float, required=True)
    p.add_argument("-L", type=int, default=8)
    p.add_argument("-o", "--output", help="write the certificate here")
    _add_output_args(p)
    p = kp.add_parser("epsilon0")
    _add_source_args(p, mode_default="sat")
    p.add_argument("--f", type=parse_vector, required=True,
                   help="polynomial coefficients of f, constant term first")
    p.add_argument("--kpT", type=float, required=True)
    p.add_argument("-L", type=int, default=8)
    p.add_argument("--iterations", type=int, default=30)
    p.add_argument("-o", "--output")
    _add_output_args(p)
    return parser


# -- helpers ---------------------------------------------------------------

def _check_mn(args) -> None:
    if getattr(args, "matrix", None):
        return
    if not 0 <= args.m < args.n:
        raise UsageError(f"need 0 <= m < n, got m={args.m}, n={args.n}")


def _lattice(args):
    try:
        return builtin_lattice(args.lattice, args.scheme)
    except LatticeError as exc:
        raise UsageError(str(exc))


def _matrix(args) -> GMatrix:
    if args.matrix:
        return load_gmatrix(args.matrix)
    return build_gmatrix(
        _lattice(args), args.m, args.n, args.mode,
        max_extensions=args.max_extensions, workers=args.threads,
    )


def _weights(g: GMatrix, z: Sequence[float]) -> tuple[float, ...]:
    if len(z) != g.d:
        raise UsageError(f"expected {g.d} weights ({','.join(g.labels)}), got {len(z)}")
    return tuple(z)


def _emit(text: str, path: str | None, stdout: TextIO) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _bracket(b) -> dict:
    return {"value": b.value, "lower": b.lower, "upper": b.upper, "iterations": b.iterations}


# -- commands --------------------------------------------------------------

def cmd_lattices(args, out: TextIO) -> int:
    rows = []
    for name, scheme in builtin_names():
        lat = builtin_lattice(name, scheme)
        rows.append({
            "name": name,
            "scheme": scheme,
            "dim": lat.dim,
            "vertex_classes": lat.n_vertex_classes,
            "labels": list(lat.edge_class_labels),
            "symmetries": len(lat.symmetries),
        })
    if args.json:
        out.write(_json(rows))
    else:
        out.write("name,scheme,dim,vertex_classes,labels,symmetries\n")
        for r in rows:
            out.write(f"{r['name']},{r['scheme']},{r['dim']},{r['vertex_classes']},"
                      f"{' '.join(r['labels'])},{r['symmetries']}\n")
    return 0


def cmd_walks(args, out: TextIO) -> int:
    if args.n < 0:
        raise UsageError("n must be nonnegative")
    lat = _lattice(args)
    classes = range(lat.n_vertex_classes) if args.start_class is None else [args.start_class]
    for k in classes:
        if not 0 <= k < lat.n_vertex_classes:
            raise UsageError(f"class must be in 0..{lat.n_vertex_classes - 1}")
    if args.action == "dump":
        walks = enumerate_walks(lat, args.n, args.mode, start_classes=list(classes))
        _emit(dump_walks(walks), args.output, out)
        return 0
    if args.z is not None and len(args.z) != lat.n_edge_classes:
        raise UsageError(f"expected {lat.n_edge_classes} weights")
    rows = []
    for k in classes:
        per_len = count_by_weight(lat, args.n, k, args.mode)
        for length in range(1, args.n + 1):
            row = {"class": k, "n": length, "count": sum(per_len[length].values())}
            if args.z is not None:
                row["weighted"] = weighted_count(lat, length, k, args.mode, args.z)
            rows.append(row)
    if args.json:
        out.write(_json(rows))
    else:
        cols = ["class", "n", "count"] + (["weighted"] if args.z is not None else [])
        out.write(",".join(cols) + "\n")
        for r in rows:
            out.write(",".join(repr(r[c]) for c in cols) + "\n")
    return 0


def cmd_matrix(args, out: TextIO) -> int:
    if args.action == "build":
        _check_mn(args)
        g = build_gmatrix(_lattice(args), args.m, args.n, args.mode,
                          max_extensions=args.max_extensions, workers=args.threads)
        save_gmatrix(g, args.output)
        print(f"wrote {args.output}: t={g.t}", file=sys.stderr)
        return 0
    info = matrix_info(load_gmatrix(args.path))
    if args.json:
        out.write(_json(info))
    else:
        for key, value in info.items():
            if isinstance(value, list):
                value = " ".join(map(str, value))
            out.write(f"{key}={value}\n")
    return 0


def cmd_bound(args, out: TextIO) -> int:
    _check_mn(args)
    g = _matrix(args)
    z = _weights(g, args.z)
    b = mu_upper_bound(g, z, args.tol)
    if args.json:
        out.write(_json({"z": list(z), **_bracket(b)}))
    else:
        out.write("bound,bracket_low,bracket_high\n")
        out.write(f"{b.value!r},{b.lower!r},{b.upper!r}\n")
    return 0


def cmd_scan(args, out: TextIO) -> int:
    _check_mn(args)
    g = _matrix(args)
    if args.action == "grid":
        rows = grid_scan(g, GridSpec.uniform(g.d, args.min, args.max, args.samples), args.tol)
        if args.json:
            text = _json([
                {"z": list(r.z), **(_bracket(r.bound) if r.bound else {"error": r.error})}
                for r in rows
            ])
        else:
            buf = io.StringIO()
            write_grid_csv(rows, g.labels, buf)
            text = buf.getvalue()
    else:
        points = ray_frontier(g, default_directions(g.d, args.rays), args.tol)
        if args.json:
            text = _json([
                {"direction": list(p.direction), "z": list(p.z),
                 "residual_low": p.residual_low, "residual_high": p.residual_high}
                for p in points
            ])
        else:
            buf = io.StringIO()
            write_frontier_csv(points, g.labels, buf)
            text = buf.getvalue()
    _emit(text, args.output, out)
    return 0


def cmd_domain(args, out: TextIO) -> int:
    _check_mn(args)
    g = _matrix(args)
    x = _weights(g, args.x)
    verdict = domain_contains(g, x, args.tol)
    z = [max(abs(v), np.finfo(float).eps) for v in x]
    lam = lambda_at(g, z, args.tol)
    label = {True: "inside", False: "outside", None: "undecided"}[verdict]
    if args.json:
        out.write(_json({"x": list(x), "verdict": label, "lambda": _bracket(lam)}))
    else:
        out.write("verdict,lambda,lambda_low,lambda_high\n")
        out.write(f"{label},{lam.value!r},{lam.lower!r},{lam.upper!r}\n")
    return 0


def cmd_validate(args, out: TextIO) -> int:
    _check_mn(args)
    g = _matrix(args)
    report = validate(g, args.trials, args.seed, args.row)
    if args.json:
        out.write(_json(report.as_dict()))
    else:
        out.write("check,passed,detail\n")
        for c in report.checks:
            out.write(f"{c.name},{'yes' if c.passed else 'no'},{c.detail}\n")
    return 0 if report.ok else 1


def cmd_kp(args, out: TextIO) -> int:
    _check_mn(args)
    g = _matrix(args)
    if args.action == "check":
        res = kp_check(KPInstance(args.epsilon, args.alpha, args.kpT), g, args.L)
        cert = res.certificate
    else:
        res = find_epsilon0(args.f, args.kpT, g, args.L, iterations=args.iterations)
        cert = dict(res.certificate, epsilon0=res.epsilon0)
    if args.output:
        save_certificate(cert, args.output)
    if args.json:
        out.write(_json({k: list(v) if isinstance(v, tuple) else v for k, v in cert.items()}))
    else:
        if "epsilon0" in cert:
            out.write(f"epsilon0: {cert['epsilon0']!r}\n")
        out.write(format_certificate(cert))
    if args.action == "check":
        return 0 if res.verdict else 1
    return 0


COMMANDS = {
    "lattices": cmd_lattices,
    "walks": cmd_walks,
    "matrix": cmd_matrix,
    "bound": cmd_bound,
    "scan": cmd_scan,
    "domain": cmd_domain,
    "validate": cmd_validate,
    "kp": cmd_kp,
}


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.threads is None:
            args.threads = default_threads()
        return COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sawbound: error: {exc}", file=sys.stderr)
        return 2
    except (SawboundError, ValueError, ArithmeticError, OSError) as exc:
        print(f"sawbound: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
