"""Dataset ingestion, cache coherence, table reproduction, twist counts.

Derived values are checked against independent in-test oracles: the twist
count grid is recounted by direct integer filtering, and golden-table spot
rows are asserted from the bundled files rather than recomputed tables.
"""

import json
from fractions import Fraction
from pathlib import Path

import pytest

from heegnerkit.ellcurve import WeierstrassCurve, tate_algorithm
from heegnerkit.harness import (
    CurveRecord,
    GoldfeldCount,
    MissingCurve,
    ParseError,
    ResultsCache,
    TableReport,
    ValidationError,
    brute_force_twist_count,
    cached_anlist,
    dataset_index,
    goldfeld_count,
    goldfeld_csv,
    goldfeld_payload,
    golden_table,
    index_conductor,
    load_dataset,
    reproduce_table,
    table_report_csv,
    table_report_payload,
)

E37 = WeierstrassCurve.from_ainvs((0, 0, 1, -1, 0), label="37a1")
E11 = WeierstrassCurve.from_ainvs((0, -1, 1, -10, -20), label="11a1")


# ---------------------------------------------------------------------------
# Golden tables


def test_golden_tables_shape():
    t1, t2 = golden_table(1), golden_table(2)
    assert len(t1) == 38 and len(t2) == 39
    assert sum(star for *_, star in t1) == 31
    assert sum(star for *_, star in t2) == 28
    assert ("92b1", -7, 3, True) in t1
    assert ("197a1", -7, 1, False) in t1
    assert ("11a1", -7, 1, True) in t2
    assert ("464c1", -7, 2, False) in t2
    with pytest.raises(ValueError):
        golden_table(3)


def test_index_conductor():
    assert index_conductor("704c1") == 704
    assert index_conductor("37a1") == 37
    with pytest.raises(ValueError):
        index_conductor("x1")


# ---------------------------------------------------------------------------
# Dataset loading


def test_bundled_dataset_covers_tables():
    index = dataset_index(load_dataset())
    for which in (1, 2):
        for label, d_k, c2, _ in golden_table(which):
            record = index[label]
            assert record.curve.conductor == index_conductor(label)
            assert record.d_k == d_k
            assert record.c2 == c2  # loader already cross-checked vs Tate
            assert record.is_optimal and record.manin_odd
    assert index["37a1"].curve.ainvs == (0, 0, 1, -1, 0)
    assert index["11a1"].known_point(-7) == (
        (Fraction(1, 2), Fraction(-1, 2)),
        (Fraction(-2), Fraction(-2)),
    )


def _load_line(tmp_path, line):
    path = tmp_path / "one.txt"
    path.write_text(line + "\n")
    return load_dataset(path)


def test_load_dataset_validation(tmp_path):
    rec = _load_line(tmp_path, "label=37a1 ainvs=0,0,1,-1,0 conductor=37 c2=1 galois=S3")[0]
    assert rec.label == "37a1" and rec.curve == E37

    with pytest.raises(ValidationError, match="conductor"):
        _load_line(tmp_path, "label=x ainvs=0,0,1,-1,0 conductor=38")
    with pytest.raises(ValidationError, match="c2"):
        _load_line(tmp_path, "label=x ainvs=0,0,0,-4,4 conductor=88 c2=3")
    with pytest.raises(ValidationError, match="galois"):
        _load_line(tmp_path, "label=x ainvs=0,0,1,-1,0 galois=C3")
    with pytest.raises(ValidationError, match="singular"):
        _load_line(tmp_path, "label=x ainvs=0,0,0,0,0")
    with pytest.raises(ValidationError, match="minimal"):
        _load_line(tmp_path, "label=x ainvs=0,-4,8,-160,-1280")  # u=2 scaling of 11a1
    with pytest.raises(ValidationError, match="2-torsion"):
        _load_line(tmp_path, "label=x ainvs=0,0,0,-1,0 galois=S3")
    with pytest.raises(ValidationError, match="not on the curve"):
        _load_line(tmp_path, "label=x ainvs=0,0,1,-1,0 hp-7_x=1,0 hp-7_y=1,0")

    with pytest.raises(ParseError, match="key=value"):
        _load_line(tmp_path, "label=x ainvs=0,0,1,-1,0 junk")
    with pytest.raises(ParseError, match="duplicate key"):
        _load_line(tmp_path, "label=x label=y ainvs=0,0,1,-1,0")
    with pytest.raises(ParseError, match="missing required"):
        _load_line(tmp_path, "ainvs=0,0,1,-1,0")
    with pytest.raises(ParseError, match="5 entries"):
        _load_line(tmp_path, "label=x ainvs=0,0,1,-1")
    with pytest.raises(ParseError, match="duplicate label"):
        path = tmp_path / "dup.txt"
        path.write_text("label=x ainvs=0,0,1,-1,0\nlabel=x ainvs=0,-1,1,-10,-20\n")
        load_dataset(path)


def test_load_dataset_point_override(tmp_path):
    recs = _load_line(
        tmp_path,
        "label=11a1 ainvs=0,-1,1,-10,-20 conductor=11 hp-7_x=1/2,-1/2 hp-7_y=-2,-2",
    )
    pt = recs[0].known_point(-7)
    assert pt == ((Fraction(1, 2), Fraction(-1, 2)), (Fraction(-2), Fraction(-2)))
    assert recs[0].known_point(-23) is None


# ---------------------------------------------------------------------------
# Results cache


def test_results_cache_roundtrip_and_hash_guard(tmp_path):
    cache = ResultsCache(tmp_path)
    cache.put(E37, "37a1", -7, "star", 12, 0, {"star": True})
    assert cache.get(E37, "37a1", -7, "star", 12, 0) == {"star": True}
    # same key fields but a different curve model: hash mismatch
    assert cache.get(E11, "37a1", -7, "star", 12, 0) is None
    # parameter changes key the entry separately
    assert cache.get(E37, "37a1", -7, "star", 14, 0) is None


def test_results_cache_point_reverification(tmp_path):
    cache = ResultsCache(tmp_path)
    good = [["0", "0"], ["0", "0"]]
    cache.put(E37, "37a1", -7, "heegner", 64, 0, good)
    assert cache.get(E37, "37a1", -7, "heegner", 64, 0) == good
    bad = [["1", "0"], ["1", "0"]]
    cache.put(E37, "37a1", -7, "heegner", 64, 0, bad)
    assert cache.get(E37, "37a1", -7, "heegner", 64, 0) is None


def test_results_cache_anlist_reverification(tmp_path):
    cache = ResultsCache(tmp_path)
    an = cached_anlist(E37, 20, cache)
    assert an[1] == 1 and an[2] == -2 and an[3] == -3
    assert cached_anlist(E37, 20, cache) == an  # served from disk, verified
    cache.put(E37, str(E37.ainvs), 0, "anlist", 20, 0, [0, 1, 5])
    # label key for anlist entries is the label when present
    cache.put(E37, "37a1", 0, "anlist", 20, 0, [0, 1, 5])
    assert cache.get(E37, "37a1", 0, "anlist", 20, 0) is None


def test_results_cache_disabled_without_root(tmp_path, monkeypatch):
    monkeypatch.delenv("HEEGNERKIT_CACHE_DIR", raising=False)
    cache = ResultsCache()
    assert cache.root is None
    cache.put(E37, "37a1", -7, "star", 12, 0, {"star": True})
    assert cache.get(E37, "37a1", -7, "star", 12, 0) is None
    monkeypatch.setenv("HEEGNERKIT_CACHE_DIR", str(tmp_path))
    assert ResultsCache().root == tmp_path


# ---------------------------------------------------------------------------
# Table reproduction


def test_reproduce_table_small_subset():
    report = reproduce_table(2, max_conductor=44)
    assert isinstance(report, TableReport)
    assert [r.label for r in report.rows] == ["11a1", "37b1", "44a1"]
    assert report.all_agree and not report.diffs
    assert report.checkmarks_expected == report.checkmarks_computed == 3
    by_label = {r.label: r for r in report.rows}
    assert by_label["44a1"].c2_computed == 3
    assert by_label["11a1"].point_source == "dataset"  # bundled printed point
    payload = table_report_payload(report)
    assert payload["summary"]["all_agree"] is True
    assert json.dumps(payload, sort_keys=True) == json.dumps(
        table_report_payload(reproduce_table(2, max_conductor=44)), sort_keys=True
    )


def test_reproduce_table_parallel_and_cache(tmp_path):
    cache = ResultsCache(tmp_path)
    serial = reproduce_table(2, max_conductor=44, cache=cache)
    names = {p.name for p in (tmp_path / "heegner").iterdir()}
    assert any(n.startswith("37b1") for n in names)
    assert not any(n.startswith("11a1") for n in names)  # dataset point wins
    parallel = reproduce_table(2, max_conductor=44, parallelism=2, cache=cache)
    assert table_report_csv(serial) == table_report_csv(parallel)
    by_label = {r.label: r for r in parallel.rows}
    assert by_label["37b1"].point_source == "cache"


def test_reproduce_table_missing_curve(tmp_path):
    path = tmp_path / "tiny.txt"
    path.write_text("label=11a1 ainvs=0,-1,1,-10,-20\n")
    with pytest.raises(MissingCurve) as info:
        reproduce_table(2, path, max_conductor=44)
    assert set(info.value.labels) == {"37b1", "44a1"}


# ---------------------------------------------------------------------------
# Goldfeld counts


def test_goldfeld_count_basic():
    gc = goldfeld_count(E37, -7, 3000, grid_steps=6, star_verified=True)
    assert isinstance(gc, GoldfeldCount)
    assert gc.alpha == Fraction(1, 6)
    assert gc.mode == "certified"
    assert gc.grid[-1] == 3000
    assert all(a <= b for a, b in zip(gc.counts, gc.counts[1:]))  # monotone
    assert gc.counts[-1] == brute_force_twist_count(E37, -7, 3000)
    assert gc.exponent_target == pytest.approx(5 / 6)


def test_goldfeld_count_brute_force_grid_agreement():
    gc = goldfeld_count(E37, -7, 800, grid_steps=5, star_verified=True)
    for x, count in zip(gc.grid, gc.counts):
        assert count == brute_force_twist_count(E37, -7, x)


def test_goldfeld_count_below_smallest_twist():
    gc = goldfeld_count(E37, -7, 10, grid_steps=3, star_verified=True)
    assert set(gc.counts) == {0}
    assert gc.fitted_constant == 0.0 and gc.max_rel_deviation == 0.0
    assert gc.exponent_estimate is None


def test_goldfeld_count_unconditional_label():
    gc = goldfeld_count(E37, -7, 400, grid_steps=4, star_verified=False)
    assert gc.mode == "unconditional-count-only"


def test_goldfeld_count_self_verifies_star():
    gc = goldfeld_count(E11, -7, 400, grid_steps=4)
    assert gc.mode == "certified"  # bundled star verdict recomputed live


def test_goldfeld_count_c3_alpha():
    e196 = WeierstrassCurve.from_ainvs((0, -1, 0, -2, 1))
    assert e196.conductor == 196
    gc = goldfeld_count(e196, -31, 200, grid_steps=3, star_verified=True)
    assert gc.alpha == Fraction(1, 3)
    assert gc.exponent_target == pytest.approx(2 / 3)


def test_goldfeld_payload_and_csv_deterministic():
    gc = goldfeld_count(E37, -7, 1000, grid_steps=5, star_verified=True)
    p1 = json.dumps(goldfeld_payload(gc), sort_keys=True)
    gc2 = goldfeld_count(E37, -7, 1000, grid_steps=5, star_verified=True)
    assert p1 == json.dumps(goldfeld_payload(gc2), sort_keys=True)
    csv = goldfeld_csv(gc)
    assert csv.splitlines()[0] == "X,count,normalized"
    assert csv == goldfeld_csv(gc2)
    assert len(csv.splitlines()) == len(gc.grid) + 1


def test_goldfeld_count_rejects_bad_grid():
    with pytest.raises(ValueError):
        goldfeld_count(E37, -7, 1, grid_steps=3, star_verified=True)
    with pytest.raises(ValueError):
        goldfeld_count(E37, -7, 100, grid_steps=0, star_verified=True)
