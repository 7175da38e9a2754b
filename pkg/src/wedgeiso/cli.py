"""Command-line interface.

Exit codes: 0 success or verified, 1 verification failure or a computation
that did not converge, 2 invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import DomainError, NonConvergence
from .quadrature import DEFAULT_TOL
from .sigma_map import build_sigma, certify_derivative_bound
from .symmetrization3d import SliceSet3D, check_step2, symmetrize
from .verification import DEFAULT_J, ShapeFamily, optimize_shape, profile_scan, random_sweep, report_csv, scan_csv
from .wedge_geometry import (
    DEFAULT_TOL_REL,
    RadialShape,
    WedgeWeight,
    check_contraction,
    check_measure_preservation,
    curve_perimeter,
    load_geometry,
    measure2d,
    perimeter2d,
    transport,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _float_csv(text: str) -> list:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def _weight(args, default_N: int = 2) -> WedgeWeight:
    N = args.N if args.N is not None else default_N
    k = args.k if args.k is not None else [0.0] * N
    if any(v < 0 for v in k):
        raise InputError("k must be ≥ 0")
    return WedgeWeight(N, args.c, tuple(k))


def _read(path: str) -> str:
    try:
        return Path(path).read_bytes().decode("utf-8")
    except UnicodeDecodeError:
        raise InputError(f"{path}: not UTF-8 text") from None


def _write(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2)


def _load_radial(path: str) -> RadialShape:
    geom = load_geometry(_read(path))
    if not isinstance(geom, RadialShape):
        raise InputError("expected a radial shape")
    return geom


def cmd_sigma(args) -> int:
    if args.k < 0:
        raise InputError("k must be ≥ 0")
    if args.l < 0:
        raise InputError("l must be ≥ 0")
    smap = build_sigma(args.k, args.l, args.n_nodes, args.tol)
    cert = certify_derivative_bound(smap, args.grid_size)
    _write(args.out, _dumps({"sigma_map": smap.to_dict(), "certificate": cert}))
    return EXIT_OK if cert["success"] else EXIT_FAIL


def cmd_profile(args) -> int:
    w = _weight(args)
    table = profile_scan(w, args.m, args.tol)
    _write(args.out, scan_csv(table) if args.format == "csv" else _dumps(table))
    return EXIT_OK


def cmd_measure(args) -> int:
    w = _weight(args)
    value = measure2d(_load_radial(args.shape), w, args.tol)
    _write(args.out, _dumps({"measure": value}))
    return EXIT_OK


def cmd_perimeter(args) -> int:
    w = _weight(args)
    geom = load_geometry(_read(args.shape))
    value = perimeter2d(geom, w, args.tol) if isinstance(geom, RadialShape) else curve_perimeter(geom, w, args.tol)
    _write(args.out, _dumps({"perimeter": value}))
    return EXIT_OK


def cmd_transport(args) -> int:
    w = _weight(args)
    w._need_planar()
    shape = _load_radial(args.shape)
    smap = build_sigma(w.k[1], w.k[0], tol=args.tol)
    image = transport(shape.boundary_curve(), smap)
    contraction = check_contraction(shape, w, smap, args.tol, args.tol_rel)
    preservation = check_measure_preservation(shape, w, smap, args.tol, args.tol_rel)
    _write(args.out, _dumps({
        "c1": smap.c1,
        "image": image.to_dict(),
        "contraction": contraction,
        "measure_preservation": preservation,
    }))
    return EXIT_OK if contraction["ok"] and preservation["ok"] else EXIT_FAIL


def cmd_verify(args) -> int:
    w = _weight(args)
    report = random_sweep(w, args.n, args.seed, args.amplitude, args.tol, args.tol_abs)
    data = report.to_dict()
    if args.csv:
        Path(args.csv).write_text(report_csv(report))
    bad = [r for r in report.records if not r["slack"] >= -report.tol_abs]
    if bad:
        archive = Path(args.archive)
        archive.mkdir(parents=True, exist_ok=True)
        family = ShapeFamily(bound=max(10.0, args.amplitude))
        for r in bad:
            shape = family.shape(np.array(r["coeffs"]))
            (archive / f"violation_{r['idx']}.json").write_text(json.dumps(shape.to_dict()))
        data["archive"] = str(archive)
    _write(args.out, _dumps(data))
    return EXIT_FAIL if bad else EXIT_OK


def cmd_optimize(args) -> int:
    w = _weight(args)
    if not args.m > 0:
        raise InputError("m must be > 0")
    result = optimize_shape(w, args.m, args.J, args.seed, amplitude=args.amplitude, tol=args.tol)
    out = {key: result[key] for key in ("coeffs", "measure", "perimeter", "bound", "gap", "radius", "sup_distance")}
    out["shape"] = result["shape"].to_dict()
    out["gap_threshold"] = args.gap_threshold
    _write(args.out, _dumps(out))
    return EXIT_OK if result["gap"] <= args.gap_threshold else EXIT_FAIL


def cmd_symmetrize(args) -> int:
    w = _weight(args, default_N=3)
    data = json.loads(_read(args.sliceset))
    M = SliceSet3D.from_dict(data, w)
    Q, K = symmetrize(M, args.tol)
    report = check_step2(M, args.tol, args.tol_rel)
    out = {"Q": Q.to_dict(), "K": K.to_dict(), "report": report}
    _write(args.out, _dumps(out))
    return EXIT_OK if report["all_ok"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="wedge-iso", description="Weighted isoperimetry in orthants.", formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, weight=True, default_N=2):
        p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="quadrature / solver tolerance")
        p.add_argument("--tol-rel", type=float, default=DEFAULT_TOL_REL, help="relative tolerance of identity checks")
        p.add_argument("--out", default="-", help="output path ('-' for stdout)")
        if weight:
            p.add_argument("--N", type=int, default=None, help=f"dimension (default {default_N})")
            p.add_argument("--c", type=float, default=0.0, help="Gaussian exponent c >= 0")
            p.add_argument("--k", type=_float_csv, default=None, help="comma-separated exponents (default zeros)")

    p = sub.add_parser("sigma", help="build and certify the angular rearrangement map", formatter_class=fmt)
    p.add_argument("--k", type=float, required=True, help="exponent of sin")
    p.add_argument("--l", type=float, required=True, help="exponent of cos")
    p.add_argument("--n-nodes", type=int, default=257)
    p.add_argument("--grid-size", type=int, default=10**4)
    common(p, weight=False)
    p.set_defaults(func=cmd_sigma)

    p = sub.add_parser("profile", help="isoperimetric profile table", formatter_class=fmt)
    p.add_argument("--m", type=_float_csv, required=True, help="increasing comma-separated masses")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    common(p)
    p.set_defaults(func=cmd_profile)

    for name, func, what in (("measure", cmd_measure, "weighted area"), ("perimeter", cmd_perimeter, "relative perimeter")):
        p = sub.add_parser(name, help=f"{what} of a shape JSON file", formatter_class=fmt)
        p.add_argument("--shape", required=True)
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("transport", help="map a shape to the half plane and check both identities", formatter_class=fmt)
    p.add_argument("--shape", required=True)
    common(p)
    p.set_defaults(func=cmd_transport)

    p = sub.add_parser("verify", help="random sweep of perimeter minus profile", formatter_class=fmt)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=0.3)
    p.add_argument("--tol-abs", type=float, default=1e-7, help="slack below -tol_abs counts as a violation")
    p.add_argument("--csv", default=None, help="also write idx,m,P,I,slack CSV here")
    p.add_argument("--archive", default="wedge_iso_violations", help="directory for offending shapes")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("optimize", help="minimize perimeter at fixed measure", formatter_class=fmt)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--J", type=int, default=DEFAULT_J)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=0.2, help="range of random starting coefficients")
    p.add_argument("--gap-threshold", type=float, default=5e-3)
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("symmetrize", help="slice symmetrization of a 3D slice set", formatter_class=fmt)
    p.add_argument("--sliceset", required=True)
    common(p, default_N=3)
    p.set_defaults(func=cmd_symmetrize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT
    try:
        with np.errstate(all="ignore"):
            return args.func(args)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InputError, DomainError, ValueError, TypeError, KeyError, OSError, RecursionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # last line of defence: bad input must never crash the CLI
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
