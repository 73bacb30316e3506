"""Deterministic CSV/JSON emission, manifests and cross-project summaries."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, fields
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MANIFEST = "manifest.json"
MIN_BRACKET, MAX_BRACKET = 3, 10


def fmt(value) -> str:
    """CSV cell: floats with 17 significant digits, None as empty, bools as 0/1."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def csv_bytes(header: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue().encode("utf-8")


def json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def write_atomic(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_files(root: str | Path, files: dict[str, bytes], created: list[Path] | None = None) -> list[str]:
    """Write every ``relative path -> bytes`` entry atomically.

    On failure, files created by this call are removed before re-raising.
    Pre-existing files that were replaced are not restored.
    """
    root = Path(root)
    created = [] if created is None else created
    mark = len(created)
    written = []
    try:
        for rel in sorted(files):
            target = root / rel
            existed = target.exists()
            write_atomic(target, files[rel])
            if not existed:
                created.append(target)
            written.append(rel)
    except OSError:
        _remove(created[mark:])
        raise
    return written


def _remove(paths: Iterable[Path]) -> None:
    for p in paths:
        try:
            p.unlink()
        except OSError:
            pass


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def build_manifest(root: str | Path, meta: dict | None = None) -> dict:
    root = Path(root)
    entries = []
    for p in sorted(root.rglob("*")):
        if not p.is_file() or p.name == MANIFEST and p.parent == root or p.name.endswith(".tmp"):
            continue
        rel = p.relative_to(root).as_posix()
        entries.append({"path": rel, "sha256": sha256_file(p), "bytes": p.stat().st_size})
    return {"files": entries, "meta": meta or {}}


def write_manifest(root: str | Path, meta: dict | None = None) -> dict:
    manifest = build_manifest(root, meta)
    write_atomic(Path(root) / MANIFEST, json_bytes(manifest))
    return manifest


# --- summaries ---------------------------------------------------------------------


def age_in_years(first: datetime, last: datetime) -> int:
    """Whole calendar years from ``first`` to ``last``."""
    years = last.year - first.year
    if (last.month, last.day, last.time()) < (first.month, first.day, first.time()):
        years -= 1
    return max(0, years)


def bracket(age: int) -> int:
    return min(MAX_BRACKET, max(MIN_BRACKET, age))


@dataclass
class ProjectSummary:
    project_key: str
    age_years: int
    n_issues: int
    n_comments: int
    n_developers: int
    chosen_k: int | None = None
    analyzable: bool = True
    has_alignment: bool = False
    has_volatility: bool = False
    has_mse: bool = False
    has_keepers: bool = False
    has_leavers: bool = False
    has_entropy: bool = False
    has_mrr: bool = False
    note: str = ""

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]


@dataclass(frozen=True)
class BracketRow:
    age: int
    projects: int
    issues: int
    comments: int
    devs: int
    median_devs: float


def bracket_table(summaries: Sequence[ProjectSummary]) -> list[BracketRow]:
    groups: dict[int, list[ProjectSummary]] = {}
    for s in summaries:
        groups.setdefault(bracket(s.age_years), []).append(s)
    rows = []
    for age in sorted(groups):
        g = groups[age]
        rows.append(BracketRow(
            age=age,
            projects=len(g),
            issues=sum(s.n_issues for s in g),
            comments=sum(s.n_comments for s in g),
            devs=sum(s.n_developers for s in g),
            median_devs=float(np.median([s.n_developers for s in g])),
        ))
    return rows


def summarize(summaries: Sequence[ProjectSummary]) -> tuple[list[ProjectSummary], list[BracketRow]]:
    ordered = sorted(summaries, key=lambda s: s.project_key)
    return ordered, bracket_table(ordered)


def summary_files(summaries: Sequence[ProjectSummary]) -> dict[str, bytes]:
    ordered, brackets = summarize(summaries)
    return {
        "summary.csv": csv_bytes(ProjectSummary.header(), (s.row() for s in ordered)),
        "brackets.csv": csv_bytes(
            ["age", "projects", "issues", "comments", "devs", "median_devs"],
            ([b.age, b.projects, b.issues, b.comments, b.devs, b.median_devs] for b in brackets),
        ),
    }


def write_reports(output_dir: str | Path, artifacts: dict[str, bytes], meta: dict | None = None) -> dict:
    """Write ``artifacts`` (relative path -> bytes) and a manifest covering the whole directory."""
    created: list[Path] = []
    write_files(output_dir, artifacts, created)
    try:
        manifest = build_manifest(output_dir, meta)
        write_atomic(Path(output_dir) / MANIFEST, json_bytes(manifest))
    except OSError:
        _remove(created)
        raise
    return manifest


def xy_bytes(points: Iterable[tuple]) -> bytes:
    return csv_bytes(["x", "y"], points)
