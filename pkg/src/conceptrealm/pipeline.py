"""Pipeline stages. Each stage reads and writes the output tree, so running the
stages one by one and running ``run_pipeline`` give the same files."""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    EQUAL,
    UNEQUAL,
    AlignmentConfig,
    concept_volatility,
    count_keepers,
    distribution_stats,
    evaluate_alignment,
    issue_comment_mse,
    leavers_from_realm,
    project_assignments,
    reciprocal_ranks,
    split_projects,
    turnover_impact,
    yearly_issue_frequencies,
)
from .config import RunConfig
from .corpus import (
    ISSUE,
    NotAnalyzable,
    Preprocessor,
    ProcessedDoc,
    build_corpus,
    group_by_project,
    load_lemma_table,
    load_stopwords,
    parse_export,
    preprocess_project,
    processed_from_record,
    processed_to_record,
)
from .modelselect import select_k
from .realm import Window, build_realm, load_realm, realm_lines
from .report import (
    ProjectSummary,
    age_in_years,
    bracket,
    csv_bytes,
    json_bytes,
    summary_files,
    write_files,
    write_reports,
    xy_bytes,
)
from .rng import stream
from .topicmodel import LdaConfig, load_model, phi_to_bytes, train_lda

log = logging.getLogger(__name__)

PROJECTS = "projects.csv"
ANALYSES = ("alignment", "volatility", "mse", "keepers", "leavers", "impact", "entropy", "mrr")


class DataError(Exception):
    """Input or intermediate data that prevents a stage from running."""


def _lda_config(cfg: RunConfig, k: int = 1) -> LdaConfig:
    return LdaConfig(
        n_topics=k, alpha=cfg.alpha, beta=cfg.beta, iterations=cfg.iterations,
        burn_in=cfg.burn_in, lag=cfg.lag, tfidf_pseudocounts=cfg.tfidf_pseudocounts,
    )


def _read_csv(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _projects(out: Path, analyzable_only: bool = True) -> list[dict]:
    path = out / PROJECTS
    if not path.exists():
        raise DataError(f"{path} not found; run 'ingest' first")
    rows = _read_csv(path)
    return [r for r in rows if r["analyzable"] == "1" or not analyzable_only]


def _load_processed(out: Path, project: str) -> list[ProcessedDoc]:
    path = out / project / "documents.jsonl"
    with open(path, encoding="utf-8") as fh:
        return [processed_from_record(json.loads(line)) for line in fh if line.strip()]


def _training_corpus(cfg: RunConfig, out: Path, project: str):
    processed = _load_processed(out, project)
    corpus = build_corpus(project, processed, cfg.no_below, cfg.no_above, cfg.issues_only_filter)
    train_docs = [d for d in corpus.documents if d.kind == ISSUE or not cfg.issues_only_training]
    return processed, corpus, train_docs


# --- stages ------------------------------------------------------------------------


def run_ingest(cfg: RunConfig) -> list[str]:
    """Parse, preprocess and filter every project; returns analyzable project keys."""
    out = Path(cfg.output)
    for p in cfg.input:
        if not Path(p).is_file():
            raise DataError(f"input file not found: {p}")
    issues, comments, errors = [], [], []
    for p in cfg.input:
        i, c, e = parse_export(p)
        issues += i
        comments += c
        errors += [(p, err.line, err.message) for err in e]
    stop = load_stopwords(cfg.stopwords)
    lemmas = load_lemma_table(cfg.lemma_table) if cfg.lemma_table else {}
    pre = Preprocessor(stop, lemmas)

    files = {"ingest_errors.csv": csv_bytes(["file", "line", "message"], errors)}
    rows, ok = [], []
    for project, (p_issues, p_comments) in group_by_project(issues, comments).items():
        processed = preprocess_project(p_issues, p_comments, pre)
        devs = {d.developer for d in processed if d.developer} | {d.reporter for d in processed if d.reporter}
        stamps = [d.timestamp for d in processed]
        age = age_in_years(min(stamps), max(stamps)) if stamps else 0
        reason = ""
        try:
            vocab = build_corpus(project, processed, cfg.no_below, cfg.no_above, cfg.issues_only_filter).vocabulary
        except NotAnalyzable as exc:
            reason = str(exc)
            vocab = None
        rows.append([project, len(p_issues), len(p_comments), len(devs), age, reason == "", reason])
        files[f"{project}/documents.jsonl"] = "".join(
            json.dumps(processed_to_record(d), separators=(",", ":")) + "\n" for d in processed
        ).encode("utf-8")
        if vocab is not None:
            files[f"{project}/vocabulary.json"] = json_bytes(vocab.to_dict())
            ok.append(project)
        else:
            log.warning("project %s not analyzable: %s", project, reason)
    files[PROJECTS] = csv_bytes(
        ["project", "n_issues", "n_comments", "n_developers", "age_years", "analyzable", "reason"], rows)
    write_files(out, files)
    if errors:
        log.warning("%d malformed input lines recorded in ingest_errors.csv", len(errors))
    return ok


def run_select_k(cfg: RunConfig) -> dict[str, int]:
    out = Path(cfg.output)
    chosen = {}
    for row in _projects(out):
        project = row["project"]
        _, corpus, train_docs = _training_corpus(cfg, out, project)
        res = select_k(train_docs, corpus.vocabulary, cfg.k_min, cfg.k_max, cfg.seed, _lda_config(cfg),
                       cfg.window_size, cfg.coherence, cfg.jobs)
        chosen[project] = res.chosen_k
        rows = [[r.k, r.coherence, r.overlap, r.score, int(r.k == res.chosen_k)] for r in res.records]
        files = {
            f"{project}/select_k.csv": csv_bytes(["K", "coherence", "overlap", "score", "chosen"], rows),
            f"{project}/plots/k_selection_coherence.csv": xy_bytes((r.k, r.coherence) for r in res.records),
            f"{project}/plots/k_selection_overlap.csv": xy_bytes((r.k, r.overlap) for r in res.records),
        }
        if res.failures:
            files[f"{project}/select_k_failures.csv"] = csv_bytes(["K", "error"], sorted(res.failures.items()))
        write_files(out, files)
    return chosen


def _chosen_k(out: Path, project: str) -> int:
    path = out / project / "select_k.csv"
    if not path.exists():
        raise DataError(f"{path} not found; run 'select-k' first or pass --k")
    for r in _read_csv(path):
        if r["chosen"] == "1":
            return int(r["K"])
    raise DataError(f"{path} has no chosen K")


def run_train(cfg: RunConfig, k: int | None = None) -> None:
    out = Path(cfg.output)
    for row in _projects(out):
        project = row["project"]
        kk = k if k is not None else _chosen_k(out, project)
        _, corpus, train_docs = _training_corpus(cfg, out, project)
        # same seed as the sweep, so the trained model equals the sweep's model for this K
        model = train_lda(train_docs, corpus.vocabulary, _lda_config(cfg, kk), cfg.seed ^ kk)
        files = {f"{project}/model.json": model.to_json().encode("utf-8")}
        if cfg.binary_model:
            files[f"{project}/model.bin"] = phi_to_bytes(model.phi)
        write_files(out, files)


def run_realm(cfg: RunConfig) -> None:
    out = Path(cfg.output)
    # alias table shares the lemma table's surface<TAB>target layout
    aliases = load_lemma_table(cfg.aliases) if cfg.aliases else {}
    for row in _projects(out):
        project = row["project"]
        model_path = out / project / "model.json"
        if not model_path.exists():
            raise DataError(f"{model_path} not found; run 'train' first")
        model = load_model(model_path)
        processed = _load_processed(out, project)
        corpus = build_corpus(project, processed, cfg.no_below, cfg.no_above, cfg.issues_only_filter)
        if corpus.vocabulary.terms != model.terms:
            raise DataError(f"{project}: model vocabulary does not match the ingested corpus")
        realm = build_realm(corpus, model, cfg.seed, cfg.fold_in_iterations, cfg.jobs, aliases)
        files = {f"{project}/realm.jsonl": ("\n".join(realm_lines(realm)) + "\n").encode("utf-8")}
        if realm.rejected:
            files[f"{project}/realm_rejected.csv"] = csv_bytes(
                ["doc", "kind", "reason"], ((r.doc_id, r.kind, r.reason) for r in realm.rejected))
        write_files(out, files)


def _alignment_year(cfg: RunConfig, project: str, processed: list[ProcessedDoc]) -> int | None:
    if cfg.alignment_year is not None:
        return cfg.alignment_year
    halves: dict[tuple[int, int], int] = {}
    for d in processed:
        if d.kind == ISSUE:
            key = (d.timestamp.year, 0 if d.timestamp.month <= 6 else 1)
            halves[key] = halves.get(key, 0) + 1
    years = sorted({y for y, _ in halves})
    ok = [y for y in years if min(halves.get((y, 0), 0), halves.get((y, 1), 0)) >= cfg.alignment_min_issues]
    if not ok:
        return None
    return int(ok[int(stream(cfg.seed, "alignment-year", project).integers(len(ok)))])


def _window_list(realm, windowing: str) -> list[Window]:
    if windowing == "yearly":
        return [Window.year(y) for y in realm.years()]
    rng = realm.quarter_range()
    return [] if rng is None else [Window.quarter(q) for q in range(rng[0], rng[1] + 1)]


def _analyze_project(cfg: RunConfig, out: Path, project: str) -> dict:
    realm = load_realm(out / project / "realm.jsonl")
    model = load_model(out / project / "model.json")
    processed = _load_processed(out, project)
    K = realm.n_topics
    files: dict[str, bytes] = {}
    result: dict = {"project": project}

    # alignment
    year = _alignment_year(cfg, project, processed)
    header = ["project", "year", "K", "n_test_issues", "mean_assignee_score", "mean_active_score", "mean_diff",
              "accuracy", "t_statistic", "df", "p_value", "degenerate", "status"]
    if year is None:
        rows = [[project, None, None, None, None, None, None, None, None, None, None, None,
                 f"not analyzable: no year with {cfg.alignment_min_issues} issues per half"]]
    else:
        acfg = AlignmentConfig(
            n_topics=cfg.alignment_k or model.n_topics, k_min=cfg.k_min, k_max=cfg.k_max,
            lda=_lda_config(cfg), no_below=cfg.no_below, no_above=cfg.no_above,
            min_issues=cfg.alignment_min_issues, top_n=cfg.top_n, fold_in_iterations=cfg.fold_in_iterations,
        )
        try:
            a = evaluate_alignment(processed, project, year, cfg.seed, acfg)
            rows = [[project, a.year, a.n_topics, a.n_test_issues, a.mean_assignee_score, a.mean_active_score,
                     a.mean_diff, a.accuracy, a.t_statistic, a.degrees_of_freedom, a.p_value, a.degenerate, "ok"]]
        except (NotAnalyzable, ValueError) as exc:
            rows = [[project, year, None, None, None, None, None, None, None, None, None, None,
                     f"not analyzable: {exc}"]]
    files[f"{project}/alignment.csv"] = csv_bytes(header, rows)

    # volatility and per-concept yearly series
    years, freqs = yearly_issue_frequencies(realm)
    vol = concept_volatility(realm)
    result["volatility"] = vol
    files[f"{project}/volatility.csv"] = csv_bytes(
        ["project", "n_years", "volatility_p75", "percentile", "variance"],
        [[project, len(years), vol, "linear", "population"]] if vol is not None else [])
    for c in range(K):
        files[f"{project}/plots/concept_frequency_c{c}.csv"] = xy_bytes(
            (y, float(freqs[i, c])) for i, y in enumerate(years))
    result["series"] = (years, freqs)

    # MSE per window
    mse_rows = []
    for w in _window_list(realm, cfg.windowing):
        m = issue_comment_mse(realm, w)
        if m is not None:
            mse_rows.append([project, str(w), len(realm.developers(w)), m])
    files[f"{project}/mse.csv"] = csv_bytes(["project", "window", "n_developers", "mse"], mse_rows)
    result["mse"] = float(np.mean([r[3] for r in mse_rows])) if mse_rows else None

    # keepers
    first_year = realm.years()[0] if realm.years() else 0
    keeper_rows = []
    for y in realm.years():
        kc = count_keepers(realm, y, cfg.keeper_threshold)
        if kc is not None:
            keeper_rows.append([project, y, y - first_year + 1, kc.concept_id, kc.threshold, kc.count, kc.n_developers])
    files[f"{project}/keepers.csv"] = csv_bytes(
        ["project", "year", "project_year", "concept", "threshold", "count", "n_developers"], keeper_rows)
    result["keepers"] = [(r[2], r[5]) for r in keeper_rows]

    # leavers and impact
    leavers = leavers_from_realm(realm, cfg.leaver_threshold)
    files[f"{project}/leavers.csv"] = csv_bytes(
        ["project", "developer", "quarter", "quarter_label", "trailing_avg", "comment_rank"],
        ([project, e.developer, e.quarter, f"{e.quarter // 4}Q{e.quarter % 4 + 1}", e.trailing_avg, e.comment_rank]
         for e in leavers))
    impacts = []
    for e in leavers:
        try:
            impacts.append(turnover_impact(realm, e))
        except ValueError as exc:
            log.info("skipping impact for %s: %s", e.developer, exc)
    files[f"{project}/impact.csv"] = csv_bytes(
        ["project", "developer", "quarter", "comment_rank", "strongest_concept", "weakest_concept",
         "diff_strongest", "diff_weakest", "median_diff", "quadrant", "strongest_label", "weakest_label"],
        ([project, i.developer, i.quarter, i.comment_rank, i.strongest_concept, i.weakest_concept,
          i.diff_strongest, i.diff_weakest, i.median_diff, i.quadrant, i.strongest_label, i.weakest_label]
         for i in impacts))
    result["impacts"] = impacts

    # distribution
    ds = distribution_stats(realm, cfg.entropy_top)
    result["distribution"] = ds
    files[f"{project}/entropy.csv"] = csv_bytes(
        ["project", "concept", "top_k", "entropy", "gap"],
        [[project, ds.concept_id, cfg.entropy_top, ds.top5_entropy, ds.gap]] if ds is not None else [])

    # reciprocal ranks
    assignments = project_assignments(realm)
    rr = reciprocal_ranks(assignments, realm)
    result["rr"] = rr
    files[f"{project}/mrr.csv"] = csv_bytes(
        ["project", "n_assignments", "mrr"], [[project, len(rr), math.fsum(rr) / len(rr)]] if rr else [])

    write_files(out, files)
    return result


def run_analyze(cfg: RunConfig) -> None:
    out = Path(cfg.output)
    projects = _projects(out, analyzable_only=False)
    ages = {r["project"]: int(r["age_years"]) for r in projects}
    results = []
    for row in projects:
        if row["analyzable"] != "1":
            continue
        if not (out / row["project"] / "realm.jsonl").exists():
            raise DataError(f"{row['project']}: realm.jsonl not found; run 'realm' first")
        results.append(_analyze_project(cfg, out, row["project"]))

    files: dict[str, bytes] = {}
    # cross-project split on the concentration gap
    with_gap = [r for r in results if r["distribution"] is not None and r["distribution"].gap is not None]
    labels = split_projects([r["distribution"].gap for r in with_gap], cfg.split_margin)
    split_rows = []
    pooled = {EQUAL: [], UNEQUAL: []}
    n_in = {EQUAL: 0, UNEQUAL: 0}
    for r, label in zip(with_gap, labels):
        ds = r["distribution"]
        mrr = math.fsum(r["rr"]) / len(r["rr"]) if r["rr"] else None
        split_rows.append([r["project"], ds.concept_id, ds.gap, ds.top5_entropy, label, mrr])
        if label in pooled:
            pooled[label] += r["rr"]
            n_in[label] += 1
    files["split.csv"] = csv_bytes(["project", "concept", "gap", "entropy", "split", "mrr"], split_rows)
    files["mrr_split.csv"] = csv_bytes(
        ["type", "split", "n_projects", "n_assignments", "mrr"],
        ([t, "all", n_in[t], len(pooled[t]), math.fsum(pooled[t]) / len(pooled[t]) if pooled[t] else None]
         for t in (EQUAL, UNEQUAL)))

    # figure data across projects
    files["plots/volatility_by_age.csv"] = xy_bytes(
        (bracket(ages[r["project"]]), r["volatility"]) for r in results if r["volatility"] is not None)
    by_age: dict[int, list[float]] = {}
    for r in results:
        if r["mse"] is not None:
            by_age.setdefault(bracket(ages[r["project"]]), []).append(r["mse"])
    files["plots/mse_by_age.csv"] = xy_bytes((a, float(np.mean(v))) for a, v in sorted(by_age.items()))
    files["plots/keepers_by_project_year.csv"] = xy_bytes(pt for r in results for pt in r["keepers"])
    impacts = [i for r in results for i in r["impacts"]]
    files["plots/leaver_strongest_vs_median.csv"] = xy_bytes((i.median_diff, i.diff_strongest) for i in impacts)
    files["plots/leaver_weakest_vs_median.csv"] = xy_bytes((i.median_diff, i.diff_weakest) for i in impacts)
    entropy_of = {r["project"]: r["distribution"].top5_entropy for r in results if r["distribution"] is not None}
    for quadrant in ("negative", "positive"):
        files[f"plots/entropy_vs_strongest_gap_{quadrant}.csv"] = xy_bytes(
            (i.diff_strongest - i.median_diff, entropy_of[i.project_key])
            for i in impacts if i.quadrant == quadrant and entropy_of.get(i.project_key) is not None)
    # most and least volatile project per age bracket, one file per concept series
    per_age: dict[int, list[dict]] = {}
    for r in results:
        if r["volatility"] is not None:
            per_age.setdefault(bracket(ages[r["project"]]), []).append(r)
    for age, group in sorted(per_age.items()):
        group = sorted(group, key=lambda r: (r["volatility"], r["project"]))
        for tag, r in (("min", group[0]), ("max", group[-1])):
            years, freqs = r["series"]
            for c in range(freqs.shape[1]):
                files[f"plots/volatility_{tag}_age{age}_c{c}.csv"] = xy_bytes(
                    (y, float(freqs[i, c])) for i, y in enumerate(years))
    write_files(out, files)


def _has_rows(path: Path) -> bool:
    if not path.exists():
        return False
    rows = _read_csv(path)
    return bool(rows) and all(r.get("status", "ok") == "ok" for r in rows)


def run_report(cfg: RunConfig) -> dict:
    out = Path(cfg.output)
    summaries = []
    for row in _projects(out, analyzable_only=False):
        project = row["project"]
        s = ProjectSummary(project, int(row["age_years"]), int(row["n_issues"]), int(row["n_comments"]),
                           int(row["n_developers"]), analyzable=row["analyzable"] == "1", note=row["reason"])
        if s.analyzable:
            try:
                s.chosen_k = load_model(out / project / "model.json").n_topics
            except OSError:
                s.chosen_k = None
            base = out / project
            s.has_alignment = _has_rows(base / "alignment.csv")
            s.has_volatility = _has_rows(base / "volatility.csv")
            s.has_mse = _has_rows(base / "mse.csv")
            s.has_keepers = _has_rows(base / "keepers.csv")
            s.has_leavers = _has_rows(base / "leavers.csv")
            s.has_entropy = _has_rows(base / "entropy.csv")
            s.has_mrr = _has_rows(base / "mrr.csv")
        summaries.append(s)
    meta = {
        "artifact_version": __version__,
        "config": {k: v for k, v in cfg.to_dict().items() if k not in ("input", "output", "jobs")},
        "percentile": "linear",
        "variance": "population",
        "coherence_pair_normalization": "mean over pairs",
    }
    return write_reports(out, summary_files(summaries), meta)


def run_pipeline(cfg: RunConfig) -> dict:
    if not run_ingest(cfg):
        log.warning("no analyzable project in the input")
    run_select_k(cfg)
    run_train(cfg)
    run_realm(cfg)
    run_analyze(cfg)
    return run_report(cfg)
