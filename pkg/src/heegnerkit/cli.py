"""Command line interface.

Subcommands: ``check-star``, ``verify-congruence``, ``enumerate-twists``,
``goldfeld-count``, ``heegner-compute``, ``table``.  Reports go to stdout
as JSON (p-adic values as valuation, unit digits, and precision) or CSV;
progress notes go to stderr.  The exit code is 0 only when every verdict
the subcommand computes passes; plumbing failures exit 2.  The results
cache directory is taken from the HEEGNERKIT_CACHE_DIR environment
variable when set.
"""

from __future__ import annotations

import argparse
import json
import sys

from .ellcurve import WeierstrassCurve, quadratic_twist
from .harness import (
    MissingCurve,
    ResultsCache,
    dataset_index,
    goldfeld_count,
    goldfeld_csv,
    goldfeld_payload,
    load_dataset,
    reproduce_table,
    table_report_csv,
    table_report_payload,
)
from .heegner import heegner_point
from .starcong import (
    congruence_report_payload,
    star_check,
    star_report_payload,
    verify_main_congruence,
)
from .twotors import enumerate_twists, rank_side


def _resolve_curve(spec: str, dataset_path) -> WeierstrassCurve:
    """A curve from a dataset label, or from literal a-invariants a1,...,a6."""
    if "," in spec:
        return WeierstrassCurve.from_ainvs(tuple(int(t) for t in spec.split(",")))
    index = dataset_index(load_dataset(dataset_path))
    if spec not in index:
        raise MissingCurve([spec])
    return index[spec].curve


def _known_point(spec: str, dataset_path, d_k: int):
    if "," in spec:
        return None
    index = dataset_index(load_dataset(dataset_path))
    record = index.get(spec)
    return record.known_point(d_k) if record else None


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _cmd_check_star(args) -> int:
    e = _resolve_curve(args.curve, args.dataset)
    known = _known_point(args.curve, args.dataset, args.dk) if args.use_known else None
    report = star_check(e, args.dk, prec=args.prec, digits=args.digits, known=known)
    payload = star_report_payload(report)
    payload["curve"] = args.curve
    _emit(payload)
    return 0 if report.star_holds else 1


def _cmd_verify_congruence(args) -> int:
    e = _resolve_curve(args.curve, args.dataset)
    ep = quadratic_twist(e, args.twist)
    report = verify_main_congruence(e, ep, args.dk, p=args.p, m=args.m, digits=args.digits)
    payload = congruence_report_payload(report)
    payload["curve"] = args.curve
    payload["twist"] = args.twist
    _emit(payload)
    return 0 if report.verdict else 1


def _cmd_enumerate_twists(args) -> int:
    e = _resolve_curve(args.curve, args.dataset)
    twists = enumerate_twists(e, args.dk, args.xmax, args.max_factors)
    out = ["d,factorization,rank_side"]
    prime_by_abs = {abs(p): p for p in twists.signed_primes}
    for d in twists.discs:
        fact = "*".join(str(prime_by_abs[q]) for q in _abs_factors(d))
        out.append(f"{d},{fact},{rank_side(e, d)}")
    sys.stdout.write("\n".join(out) + "\n")
    return 0


def _abs_factors(d: int) -> list[int]:
    from .arith import factorize

    return sorted(factorize(abs(d)))


def _cmd_goldfeld_count(args) -> int:
    e = _resolve_curve(args.curve, args.dataset)
    gc = goldfeld_count(
        e,
        args.dk,
        args.xmax,
        grid_steps=args.grid_steps,
        max_factors=args.max_factors,
        star_verified=args.star_verified,
    )
    if args.csv:
        sys.stdout.write(goldfeld_csv(gc))
    else:
        _emit(goldfeld_payload(gc))
    return 0


def _cmd_heegner_compute(args) -> int:
    e = _resolve_curve(args.curve, args.dataset)
    known = _known_point(args.curve, args.dataset, args.dk) if args.use_known else None
    result = heegner_point(
        e, args.dk, digits=args.digits, height_bound=args.height_bound, known=known
    )
    pt = result.point
    if pt.infinity:
        payload = {"curve": args.curve, "d_K": args.dk, "point": "infinity"}
    else:
        x, y = pt.x, pt.y
        u = lambda z: str(getattr(z, "u", z))  # noqa: E731
        v = lambda z: str(getattr(z, "v", 0))  # noqa: E731
        payload = {
            "curve": args.curve,
            "d_K": args.dk,
            "x": {"u": u(x), "v": v(x)},
            "y": {"u": u(y), "v": v(y)},
        }
    payload["certified"] = result.certified
    payload["provenance"] = result.provenance
    _emit(payload)
    return 0 if result.certified else 1


def _cmd_table(args) -> int:
    report = reproduce_table(
        args.which,
        args.dataset,
        max_conductor=args.max_conductor,
        prec=args.prec,
        digits=args.digits,
        parallelism=args.parallelism,
        cache=ResultsCache(),
    )
    for row in report.rows:
        mark = "ok" if row.agree else "DIFF"
        sys.stderr.write(
            f"{row.label:8s} d_K={row.d_k:4d} c2={row.c2_computed} "
            f"star={'yes' if row.star_computed else 'no':3s} [{mark}]\n"
        )
    if args.csv:
        sys.stdout.write(table_report_csv(report))
    else:
        _emit(table_report_payload(report))
    return 0 if report.all_agree else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heegnerkit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, dk_required=True):
        p.add_argument("--curve", required=True, help="dataset label or a1,a2,a3,a4,a6")
        p.add_argument("--dk", type=int, required=dk_required, help="field discriminant d_K")
        p.add_argument("--dataset", default=None, help="dataset path (default: bundled)")
        p.add_argument("--digits", type=int, default=64)

    p = sub.add_parser("check-star", help="2-adic unit test for the Heegner logarithm")
    common(p)
    p.add_argument("--prec", type=int, default=12, help="2-adic digits to certify")
    p.add_argument("--no-known", dest="use_known", action="store_false",
                   help="ignore any dataset point and recompute")
    p.set_defaults(func=_cmd_check_star)

    p = sub.add_parser("verify-congruence", help="logarithm congruence for a twist pair")
    common(p)
    p.add_argument("--twist", type=int, required=True, help="twist discriminant d")
    p.add_argument("-m", type=int, default=1, help="congruence exponent (mod p^m)")
    p.add_argument("--p", type=int, default=2, help="congruence prime")
    p.set_defaults(func=_cmd_verify_congruence)

    p = sub.add_parser("enumerate-twists", help="CSV of certified twist discriminants")
    common(p)
    p.add_argument("--xmax", type=int, required=True)
    p.add_argument("--max-factors", type=int, default=None)
    p.set_defaults(func=_cmd_enumerate_twists)

    p = sub.add_parser("goldfeld-count", help="twist counts on an X grid with growth fit")
    common(p)
    p.add_argument("--xmax", type=int, required=True)
    p.add_argument("--grid-steps", type=int, default=12)
    p.add_argument("--max-factors", type=int, default=None)
    p.add_argument("--star-verified", action="store_const", const=True, default=None,
                   help="assert the unit test is already verified")
    p.add_argument("--csv", action="store_true", help="emit the grid as CSV")
    p.set_defaults(func=_cmd_goldfeld_count)

    p = sub.add_parser("heegner-compute", help="certified Heegner point, exact coordinates")
    common(p)
    p.add_argument("--height-bound", type=int, default=10**80)
    p.add_argument("--no-known", dest="use_known", action="store_false",
                   help="ignore any dataset point and recompute")
    p.set_defaults(func=_cmd_heegner_compute)

    p = sub.add_parser("table", help="reproduce a reference star table")
    p.add_argument("--which", type=int, choices=(1, 2), required=True)
    p.add_argument("--dataset", default=None)
    p.add_argument("--max-conductor", type=int, default=None)
    p.add_argument("--prec", type=int, default=12)
    p.add_argument("--digits", type=int, default=64)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=_cmd_table)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ArithmeticError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
