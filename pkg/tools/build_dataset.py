#!/usr/bin/env python3
"""Rebuild the bundled curve dataset behind the reference star tables.

Each table row names one optimal curve by its classical label and records
the auxiliary field discriminant d_K, the local Tamagawa number c_2, and
the star verdict.  Only a few rows have models quoted in the narrative
examples, so this tool reconstructs the remaining models from scratch and
the dataset never depends on an external curve database:

1. sweep small integral Weierstrass models and keep those whose reduced
   minimal model has a target conductor (a discriminant-support filter
   makes the sweep cheap);
2. group the hits at each conductor into isogeny classes by Frobenius
   traces;
3. screen classes by the tables' selection rules: trivial rational
   2-torsion, even trace at 2, odd Tamagawa numbers away from 2, the
   Heegner hypothesis for the row's d_K, and the table's rank side,
   decided by a certified Heegner point: its trace to Q is nontorsion
   exactly on the rank-one side, while on the rank-zero side the point
   itself is nontorsion with torsion trace (classes failing both tests
   carry higher rank and are excluded);
4. match screened classes to rows; the printed c_2 pins the member when
   the sweep finds several isogenous models, and for table 1 the
   recomputed smallest admissible |d_K| must equal the printed one.

Star verdicts are deliberately never consulted, so reproduce_table keeps
recomputing them against an input that cannot leak the answer.

Usage: python3 tools/build_dataset.py [--conductor N] [--out PATH]
Writes src/heegnerkit/data/curves.txt and prints a resolution report.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from heegnerkit.arith import factorize, is_squarefree, primes_up_to  # noqa: E402
from heegnerkit.ellcurve import (  # noqa: E402
    CurvePoint,
    WeierstrassCurve,
    a_ell,
    tate_algorithm,
)
from heegnerkit.exactnum import QuadElem  # noqa: E402
from heegnerkit.heegner import RecognitionFailed, heegner_point  # noqa: E402
from heegnerkit.twotors import (  # noqa: E402
    HasRationalTwoTorsion,
    analyze_two_torsion,
    heegner_hypothesis,
)

DATA = REPO / "src" / "heegnerkit" / "data"

# Models quoted in the narrative examples.  Each is re-verified against
# the row data before use; a failed anchor falls back to the sweep.
ANCHORS: dict[str, tuple[int, int, int, int, int]] = {
    "37a1": (0, 0, 1, -1, 0),
    "43a1": (0, 1, 1, 0, 0),
    "88a1": (0, 0, 0, -4, 4),
    "91a1": (0, 0, 1, 1, 0),
    "92b1": (0, 0, 0, -1, 1),
    "101a1": (0, 1, 1, -1, -1),
    "124a1": (0, 1, 0, -2, 1),
    "163a1": (0, 0, 1, -2, 1),
    "197a1": (0, 0, 1, -5, 4),
    "243a1": (0, 0, 1, 0, -1),
    "11a1": (0, -1, 1, -10, -20),
    "37b1": (0, 1, 1, -23, -50),
    "44a1": (0, 1, 0, 3, -1),
    "67a1": (0, 1, 1, -12, -21),
    "92a1": (0, 1, 0, 2, 1),
    "179a1": (0, 0, 1, -1, -1),
    "196a1": (0, -1, 0, -2, 1),
}

# Points quoted in the narrative examples, as (d, x_u, x_v, y_u, y_v)
# against sqrt(d); frozen into the dataset so the ingestion override
# path stays exercised end to end.
ANCHOR_POINTS: dict[str, tuple[int, str, str, str, str]] = {
    "37a1": (-7, "0", "0", "0", "0"),
    "11a1": (-7, "1/2", "-1/2", "-2", "-2"),
}


@dataclass(frozen=True)
class Row:
    label: str
    table: int
    conductor: int
    d_k: int
    c2: int
    star: bool


def load_rows() -> list[Row]:
    rows = []
    for which in (1, 2):
        for line in (DATA / f"table{which}.txt").read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            label, d_k, c2, star = line.split()
            head = label[:-1]  # strip the in-class index (always 1 here)
            assert head[-1].isalpha(), label
            rows.append(Row(label, which, int(head[:-1]), int(d_k), int(c2), star == "1"))
    return rows


# ---------------------------------------------------------------------------
# Sweep


def sweep_models(targets: set[int], a4_bound: int, a6_bound: int) -> dict[int, set[tuple]]:
    """Reduced minimal models with conductor in targets, keyed by conductor.

    Iterates a1, a3 in {0,1} and a2 in {-1,0,1} (the ranges of a reduced
    model), vectorizing the discriminant over a6.  A model survives when
    |disc| factors entirely over the primes of the target conductors;
    survivors are reduced and their conductors computed exactly.
    """
    strip_primes = sorted({q for n in targets for q in factorize(n)})
    found: dict[int, set[tuple]] = {n: set() for n in targets}
    a6s = np.arange(-a6_bound, a6_bound + 1, dtype=np.int64)
    for a1 in (0, 1):
        for a2 in (-1, 0, 1):
            for a3 in (0, 1):
                b2 = a1 * a1 + 4 * a2
                for a4 in range(-a4_bound, a4_bound + 1):
                    b4 = 2 * a4 + a1 * a3
                    b6 = a3 * a3 + 4 * a6s
                    b8 = (a1 * a1 + 4 * a2) * a6s - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
                    disc = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
                    rem = np.abs(disc)
                    alive = rem != 0
                    for q in strip_primes:
                        mask = alive & (rem % q == 0)
                        while mask.any():
                            rem[mask] //= q
                            mask = alive & (rem % q == 0)
                    for idx in np.nonzero(alive & (rem == 1))[0]:
                        e = WeierstrassCurve.from_ainvs((a1, a2, a3, a4, int(a6s[idx])))
                        if e.conductor in targets:
                            found[e.conductor].add(e.ainvs)
    return found


# ---------------------------------------------------------------------------
# Screens


def trace_key(e: WeierstrassCurve, bound: int = 200) -> tuple:
    return tuple(a_ell(e, int(q)) for q in primes_up_to(bound) if e.conductor % int(q))


def passes_static_screens(e: WeierstrassCurve, d_k: int) -> bool:
    """Trivial 2-torsion, even trace at 2, odd c_p away from 2, Heegner d_K."""
    try:
        analyze_two_torsion(e)
    except HasRationalTwoTorsion:
        return False
    n = e.conductor
    if n % 2 == 0:
        if "multiplicative" in tate_algorithm(e, 2).kind:
            return False
    elif a_ell(e, 2) % 2:
        return False
    for q in factorize(n):
        if q != 2 and tate_algorithm(e, q).tamagawa % 2 == 0:
            return False
    return heegner_hypothesis(d_k, n)


def smallest_d_k(n: int, bound: int = 400) -> int | None:
    """Smallest |d| with d = 1 mod 8 squarefree and all primes of n split."""
    for m in range(7, bound, 8):
        if is_squarefree(m) and heegner_hypothesis(-m, n):
            return -m
    return None


def _is_torsion(pt: CurvePoint, limit: int = 18) -> bool:
    """Multiple scan; valid over Q and over the quadratic field."""
    if pt.infinity:
        return True
    q = pt
    for _ in range(limit):
        q = q + pt
        if q.infinity:
            return True
    return False


_RANK_CACHE: dict[tuple, str] = {}


def rank_side(e: WeierstrassCurve, d_k: int) -> str:
    """"one" / "zero" / "higher" from a certified Heegner point.

    Trace to Q nontorsion <=> rank one; point nontorsion with torsion
    trace <=> rank zero; point torsion <=> rank at least two over K.
    """
    key = (e.ainvs, d_k)
    if key not in _RANK_CACHE:
        try:
            result = heegner_point(e, d_k, digits=64, height_bound=10**80)
        except RecognitionFailed:
            _RANK_CACHE[key] = "unknown"
            return "unknown"
        pt = result.point
        if pt.infinity:
            _RANK_CACHE[key] = "higher"
        else:
            x, y = pt.x, pt.y
            if not isinstance(x, QuadElem):
                x = QuadElem.of(d_k, Fraction(x))
                y = QuadElem.of(d_k, Fraction(y))
                pt = CurvePoint(e, x, y)
            sigma = CurvePoint(e, QuadElem(x.D, x.u, -x.v), QuadElem(y.D, y.u, -y.v))
            if not _is_torsion(pt + sigma):
                _RANK_CACHE[key] = "one"
            elif not _is_torsion(pt):
                _RANK_CACHE[key] = "zero"
            else:
                _RANK_CACHE[key] = "higher"
    return _RANK_CACHE[key]


# ---------------------------------------------------------------------------
# Resolution


@dataclass
class Resolved:
    row: Row
    ainvs: tuple
    galois: str
    provenance: str


_ANCHOR_CACHE: dict[str, Resolved | None] = {}


def verify_anchor(row: Row) -> Resolved | None:
    if row.label in _ANCHOR_CACHE:
        return _ANCHOR_CACHE[row.label]
    out = None
    model = ANCHORS.get(row.label)
    if model is not None:
        e = WeierstrassCurve.from_ainvs(model)
        if (
            e.conductor == row.conductor
            and passes_static_screens(e, row.d_k)
            and tate_algorithm(e, 2).tamagawa == row.c2
        ):
            out = Resolved(row, e.ainvs, analyze_two_torsion(e).galois_type, "anchored")
        else:
            print(f"  !! anchor {row.label} fails verification, falling back to sweep")
    _ANCHOR_CACHE[row.label] = out
    return out


def resolve_conductor(
    n: int, rows: list[Row], models: set[tuple], report: list[str]
) -> list[Resolved]:
    """Match the rows at conductor n to screened isogeny classes."""
    resolved = [a for r in rows if (a := verify_anchor(r)) is not None]
    pending = [r for r in rows if verify_anchor(r) is None]
    if not pending:
        return resolved

    classes: dict[tuple, list[WeierstrassCurve]] = {}
    for m in models:
        e = WeierstrassCurve.from_ainvs(m)
        classes.setdefault(trace_key(e), []).append(e)

    for table, d_k in sorted({(r.table, r.d_k) for r in pending}):
        group = sorted(
            (r for r in pending if r.table == table and r.d_k == d_k),
            key=lambda r: (r.c2, r.label),
        )
        want = "one" if table == 1 else "zero"
        candidates = []
        for key, members in sorted(classes.items()):
            rep = min(members, key=lambda e: (abs(e.disc), e.ainvs))
            if not passes_static_screens(rep, d_k):
                continue
            if table == 1 and smallest_d_k(n) != d_k:
                report.append(f"  class {rep.ainvs}: smallest d_K != {d_k}, skip")
                continue
            t0 = time.time()
            side = rank_side(rep, d_k)
            report.append(
                f"  class {rep.ainvs} at {n}: rank side {side} ({time.time() - t0:.1f}s)"
            )
            if side == want:
                candidates.append(members)
        if len(candidates) != len(group):
            raise RuntimeError(
                f"conductor {n}, table {table}: {len(candidates)} classes "
                f"for rows {[r.label for r in group]}"
            )
        # Pin the member by the printed c2.  Rows tied on c2 are
        # interchangeable: their printed data coincide and the star
        # verdict is invariant under the odd-degree isogenies of a class
        # with trivial 2-torsion.
        used = [False] * len(candidates)
        for row in group:
            for i, members in enumerate(candidates):
                if used[i]:
                    continue
                fits = [e for e in members if tate_algorithm(e, 2).tamagawa == row.c2]
                if not fits:
                    continue
                used[i] = True
                e = min(fits, key=lambda e: (abs(e.disc), e.ainvs))
                resolved.append(
                    Resolved(row, e.ainvs, analyze_two_torsion(e).galois_type, "reconstructed")
                )
                break
            else:
                raise RuntimeError(f"no class member with c2={row.c2} for {row.label}")
    return resolved


def emit(resolved: list[Resolved], out: Path) -> None:
    lines = [
        "# Curve dataset for the reference star tables.",
        "# One record per line; fields are self-describing key=value pairs,",
        "# rationals as decimal strings.  Regenerate: python3 tools/build_dataset.py",
    ]
    for r in sorted(resolved, key=lambda r: (r.row.table, r.row.conductor, r.row.label)):
        row = r.row
        fields = [
            f"label={row.label}",
            "ainvs=" + ",".join(str(a) for a in r.ainvs),
            f"conductor={row.conductor}",
            f"table={row.table}",
            f"d_k={row.d_k}",
            f"c2={row.c2}",
            f"galois={r.galois}",
            "optimal=1",
            "manin_odd=1",
            f"provenance={r.provenance}",
        ]
        pt = ANCHOR_POINTS.get(row.label)
        if pt is not None:
            d, xu, xv, yu, yv = pt
            fields.append(f"hp{d}_x={xu},{xv}")
            fields.append(f"hp{d}_y={yu},{yv}")
        lines.append(" ".join(fields))
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(resolved)} records)")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--conductor", type=int, help="restrict to one conductor (debug)")
    ap.add_argument("--a4-bound", type=int, default=200)
    ap.add_argument("--a6-bound", type=int, default=2500)
    ap.add_argument("--out", type=Path, default=DATA / "curves.txt")
    args = ap.parse_args()

    rows = load_rows()
    if args.conductor:
        rows = [r for r in rows if r.conductor == args.conductor]
    by_conductor: dict[int, list[Row]] = {}
    for r in rows:
        by_conductor.setdefault(r.conductor, []).append(r)

    need_sweep = {
        n for n, group in by_conductor.items() if any(verify_anchor(r) is None for r in group)
    }
    print(f"{len(rows)} rows across {len(by_conductor)} conductors; sweeping {len(need_sweep)}")
    t0 = time.time()
    models = sweep_models(need_sweep, args.a4_bound, args.a6_bound) if need_sweep else {}
    print(
        f"sweep done in {time.time() - t0:.1f}s: "
        + ", ".join(f"{n}:{len(models[n])}" for n in sorted(models))
    )

    resolved: list[Resolved] = []
    report: list[str] = []
    failures = []
    for n in sorted(by_conductor):
        print(f"conductor {n} ({[r.label for r in by_conductor[n]]})")
        try:
            resolved.extend(resolve_conductor(n, by_conductor[n], models.get(n, set()), report))
        except RuntimeError as exc:
            print(f"  retrying {n} with wider sweeps: {exc}")
            for a4b, a6b in ((600, 20000), (3000, 120000)):
                wider = sweep_models({n}, a4b, a6b)
                try:
                    resolved.extend(resolve_conductor(n, by_conductor[n], wider[n], report))
                    break
                except RuntimeError as exc2:
                    last = exc2
            else:
                failures.append(f"{n}: {last}")
        for line in report:
            print(line)
        report.clear()

    missing = {r.label for r in rows} - {r.row.label for r in resolved}
    if failures or missing:
        print("FAILURES:\n  " + "\n  ".join(failures))
        print(f"UNRESOLVED: {sorted(missing)}")
        return 1
    emit(resolved, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
