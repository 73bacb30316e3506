import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from conceptrealm.report import (
    ProjectSummary,
    age_in_years,
    bracket,
    bracket_table,
    build_manifest,
    csv_bytes,
    fmt,
    sha256_file,
    summary_files,
    write_files,
    write_reports,
)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_cells_round_trip(x):
    assert float(fmt(x)) == x


def test_cells_and_line_endings():
    data = csv_bytes(["a", "b", "c", "d"], [[None, True, 0.1, "x,y"]])
    assert data == b'a,b,c,d\n,1,0.10000000000000001,"x,y"\n'


def test_age_in_whole_years():
    t = lambda *a: datetime(*a, tzinfo=timezone.utc)
    assert age_in_years(t(2010, 5, 1), t(2013, 4, 30)) == 2
    assert age_in_years(t(2010, 5, 1), t(2013, 5, 1)) == 3
    assert [bracket(a) for a in (0, 3, 7, 14)] == [3, 3, 7, 10]


def test_bracket_table():
    rows = bracket_table([ProjectSummary("A", 3, 10, 20, 4), ProjectSummary("B", 3, 5, 1, 7),
                          ProjectSummary("C", 5, 1, 1, 1)])
    assert (rows[0].age, rows[0].projects, rows[0].issues, rows[0].comments, rows[0].devs) == (3, 2, 15, 21, 11)
    assert rows[0].median_devs == 5.5
    assert rows[1].age == 5


def test_single_project_bracket_row():
    (row,) = bracket_table([ProjectSummary("A", 3, 10, 0, 2)])
    assert (row.age, row.projects, row.issues) == (3, 1, 10)


def test_manifest_covers_every_file(tmp_path):
    manifest = write_reports(tmp_path, {"x/a.csv": b"a\n", "b.csv": b"b\n"}, {"k": 1})
    on_disk = sorted(p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*") if p.is_file())
    assert on_disk == ["b.csv", "manifest.json", "x/a.csv"]
    assert [e["path"] for e in manifest["files"]] == ["b.csv", "x/a.csv"]
    assert manifest["files"][0]["sha256"] == sha256_file(tmp_path / "b.csv")
    assert json.loads((tmp_path / "manifest.json").read_text()) == manifest


def test_empty_analytics_gives_summary_only(tmp_path):
    manifest = write_reports(tmp_path, summary_files([]))
    assert [e["path"] for e in manifest["files"]] == ["brackets.csv", "summary.csv"]


def test_rerun_is_byte_identical(tmp_path):
    files = summary_files([ProjectSummary("A", 4, 3, 2, 1, chosen_k=2)])
    m1 = write_reports(tmp_path / "one", files)
    m2 = write_reports(tmp_path / "two", files)
    assert m1 == m2
    assert (tmp_path / "one/manifest.json").read_bytes() == (tmp_path / "two/manifest.json").read_bytes()


def test_failed_write_leaves_no_partial_files(tmp_path):
    (tmp_path / "blocker").write_text("not a directory")
    files = {"a.csv": b"1\n", "b.csv": b"2\n", "blocker/c.csv": b"3\n"}
    with pytest.raises(OSError):
        write_files(tmp_path, files)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["blocker"]


def test_failed_manifest_removes_created_files(tmp_path):
    (tmp_path / "manifest.json").mkdir()  # os.replace onto a directory fails
    with pytest.raises(OSError):
        write_reports(tmp_path, {"a.csv": b"1\n"})
    assert not (tmp_path / "a.csv").exists()
    assert not [p for p in tmp_path.iterdir() if p.name.endswith(".tmp")]


def test_manifest_skips_temp_files(tmp_path):
    (tmp_path / "a.csv").write_bytes(b"x")
    (tmp_path / ".a.csv.123.tmp").write_bytes(b"y")
    assert [e["path"] for e in build_manifest(tmp_path)["files"]] == ["a.csv"]
