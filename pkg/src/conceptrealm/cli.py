"""Command-line front end: one subcommand per pipeline stage plus ``synth``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import typing
from dataclasses import fields
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config, make_config
from .corpus import NotAnalyzable
from .realm import REALM_FORMAT_VERSION
from .topicmodel import MODEL_FORMAT_VERSION

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
LOG_ENV = "CONCEPT_REALM_LOG"
STAGES = ("ingest", "select-k", "train", "realm", "analyze", "report", "pipeline")

log = logging.getLogger("conceptrealm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _flag_type(f):
    hint = typing.get_type_hints(RunConfig)[f.name]
    args = [a for a in typing.get_args(hint) if a is not type(None)] or [hint]
    return args[0]


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML file with run settings; flags override it")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        kind = _flag_type(f)
        if f.name == "input":
            p.add_argument(flag, nargs="+", default=None, help="issue-tracker export(s), JSON lines")
        elif kind is bool:
            p.add_argument(flag, action="store_true", default=None)
        elif typing.get_origin(kind) is list:
            p.add_argument(flag, nargs="+", default=None)
        else:
            p.add_argument(flag, type=kind, default=None, metavar=f.name.upper())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conceptrealm", description=__doc__)
    parser.add_argument("--version", action="store_true", help="print artifact and format versions")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in STAGES:
        p = sub.add_parser(name, help=f"run the {name} stage" if name != "pipeline" else "run every stage")
        _add_run_flags(p)
        if name == "train":
            p.add_argument("--k", type=int, default=None, help="number of concepts; default: select-k's choice")
    s = sub.add_parser("synth", help="write a synthetic corpus with planted topics, keepers and a leaver")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--topics", type=int, default=3)
    s.add_argument("--docs", type=int, default=200)
    s.add_argument("--doc-length", type=int, default=50)
    s.add_argument("--terms-per-topic", type=int, default=10)
    s.add_argument("--developers", type=int, default=9)
    s.add_argument("--years", type=int, default=4)
    s.add_argument("--start-year", type=int, default=2010)
    s.add_argument("--project", default="SYN")
    s.add_argument("--no-leaver", action="store_true")
    s.add_argument("--output", "-o", required=True, help="corpus path; ground truth goes to <output>.truth.json")
    return parser


def _run_config(args) -> RunConfig:
    file_values = {}
    if args.config:
        if not Path(args.config).is_file():
            raise FileNotFoundError(f"config file not found: {args.config}")
        file_values = load_config(args.config)
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)}
    return make_config(file_values, overrides)


def _synth(args) -> None:
    from .synth import SynthConfig, generate, write_export

    cfg = SynthConfig(
        seed=args.seed, topics=args.topics, docs=args.docs, doc_length=args.doc_length,
        terms_per_topic=args.terms_per_topic, developers=args.developers, years=args.years,
        start_year=args.start_year, project=args.project, leaver=not args.no_leaver,
    )
    issues, comments, truth = generate(cfg)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_export(out, issues, comments)
    with open(str(out) + ".truth.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(truth.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dispatch(args) -> None:
    from . import pipeline as pl

    if args.command == "synth":
        _synth(args)
        return
    cfg = _run_config(args)
    if args.command in ("ingest", "pipeline") and not cfg.input:
        raise UsageError("no input given (--input or 'input' in the config file)")
    stage = {
        "ingest": pl.run_ingest,
        "select-k": pl.run_select_k,
        "train": lambda c: pl.run_train(c, args.k),
        "realm": pl.run_realm,
        "analyze": pl.run_analyze,
        "report": pl.run_report,
        "pipeline": pl.run_pipeline,
    }[args.command]
    stage(cfg)


def _setup_logging() -> None:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def run_subcommand(argv: list[str] | None = None) -> int:
    from .pipeline import DataError

    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.version:
            print(f"conceptrealm {__version__} (model format {MODEL_FORMAT_VERSION}, realm format {REALM_FORMAT_VERSION})")
            return EXIT_OK
        if args.command is None:
            parser.error("a subcommand is required")
        _dispatch(args)
    except (UsageError, ConfigError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DataError, NotAnalyzable, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run_subcommand())


if __name__ == "__main__":
    main()
