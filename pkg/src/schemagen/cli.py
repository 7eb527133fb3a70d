"""Command-line entry point: ``schemagen {generate,evaluate,normalize,emit-ddl}``.

Exit codes: 0 success, 1 domain failure (non-convergence, invalid input
content, failed verification), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

from . import fd as fdx
from .agents import PipelineResult, run_pipeline
from .corpus import CorpusError, CorpusSample, bundled_scripts_dir, load_corpus
from .ddl import ConfigurationError, emit_ddl, verify_executable
from .evaluation import CorpusReport, EvalReport, SampleResult, evaluate_pair
from .llm import Backend, BackendError, ConfigError, HttpBackend, RunConfig, ScriptedBackend, load_config
from .schema import SchemaFormatError, deserialize_schema, validate_schema

log = logging.getLogger("schemagen")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _map(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- generate -----------------------------------------------------------------


def _backend_factory(args: argparse.Namespace, cfg: RunConfig) -> Callable[[str], Backend]:
    """Backend per sample id; one shared client for http, one script per sample otherwise."""
    if cfg.backend == "http":
        shared = HttpBackend(cfg.http_settings())
        return lambda _sid: shared
    if args.script:
        script = Path(args.script)
        return lambda _sid: ScriptedBackend.from_file(script)
    script_dir = Path(args.script_dir) if args.script_dir else bundled_scripts_dir()

    def make(sid: str) -> Backend:
        path = script_dir / f"{sid}.json"
        if not path.exists():
            raise ConfigError(f"no replay script for sample {sid!r} in {script_dir}")
        return ScriptedBackend.from_file(path)

    return make


def _requirements(args: argparse.Namespace) -> list[tuple[str, str]]:
    if args.corpus:
        samples = load_corpus(None if args.corpus == "bundled" else args.corpus)
        if args.sample:
            samples = [s for s in samples if s.id in set(args.sample)]
            if not samples:
                raise UsageError("no corpus sample matches --sample")
        return [(s.id, s.requirement) for s in samples]
    text = args.requirement
    if args.requirement_file:
        text = _read(args.requirement_file)
    if not text or not text.strip():
        raise UsageError("requirement is empty")
    return [(args.id, text)]


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, backend=args.backend)
    jobs = _requirements(args)
    make_backend = _backend_factory(args, cfg)
    out = Path(args.out)

    def one(job: tuple[str, str]) -> tuple[str, PipelineResult | None, str, bool]:
        """(id, result, error text, error is a configuration problem)."""
        sid, text = job
        try:
            result = run_pipeline(text, make_backend(sid), cfg)
        except ConfigError as exc:
            return sid, None, str(exc), True
        except BackendError as exc:
            return sid, None, str(exc), False
        result.write(out, sid)
        return sid, result, "", False

    results = _map(one, jobs, args.workers)
    failures = feedback = 0
    for sid, result, error, _ in results:
        if result is None:
            failures += 1
            print(f"{sid}\terror\t{error}")
            continue
        feedback += result.received_feedback
        failures += not result.converged
        note = "; ".join(result.diagnostics)
        print(f"{sid}\t{result.status}\trounds={result.rounds}" + (f"\t{note}" if note else ""))
    done = [r[1] for r in results if r[1] is not None]
    if len(jobs) > 1 and done:
        print(f"samples with feedback: {feedback}/{len(done)} ({feedback / len(done):.1%})")
    if any(r[3] for r in results):
        return EXIT_USAGE
    return EXIT_OK if failures == 0 else EXIT_FAIL


# -- evaluate -----------------------------------------------------------------


def _score_sample(sample: CorpusSample, pred_dir: Path) -> SampleResult:
    path = pred_dir / f"{sample.id}.schema.json"
    if not path.exists():
        return SampleResult(sample.id, EvalReport(), "missing prediction")
    try:
        pred = deserialize_schema(path.read_text(encoding="utf-8"))
    except (SchemaFormatError, OSError, UnicodeDecodeError) as exc:
        return SampleResult(sample.id, EvalReport(), f"malformed prediction: {exc}")
    problems = validate_schema(pred).messages()
    if problems:
        return SampleResult(sample.id, EvalReport(), f"invalid prediction: {problems[0]}")
    return SampleResult(sample.id, evaluate_pair(sample.gold_schema, pred))


def cmd_evaluate(args: argparse.Namespace) -> int:
    samples = load_corpus(None if args.corpus == "bundled" else args.corpus)
    pred_dir = Path(args.predictions)
    if not pred_dir.is_dir():
        raise UsageError(f"predictions directory {pred_dir} does not exist")
    report = CorpusReport(_map(lambda s: _score_sample(s, pred_dir), samples, args.workers))
    sys.stdout.write(report.to_tsv())
    if args.out:
        tsv, js = report.write(args.out)
        log.info("wrote %s and %s", tsv, js)
    for s in report.flagged:
        log.warning("%s: %s", s.sample_id, s.flag)
    return EXIT_OK


# -- normalize ----------------------------------------------------------------


def cmd_normalize(args: argparse.Namespace) -> int:
    text = _read(args.file)
    try:
        f = fdx.parse_fd_problem(text)
    except fdx.FDParseError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    keys = fdx.candidate_keys(None, f)
    cover = fdx.minimal_cover(f)
    d = fdx.synthesize_3nf(None, f)
    lines = [
        "universe: " + fdx.fmt_set(f.universe),
        "candidate keys: " + ", ".join("{" + fdx.fmt_set(k) + "}" for k in keys),
        "minimal cover:",
        *("  " + str(x) for x in cover.fds),
        f"3NF fragments ({len(d.fragments)}):",
        *(f"  {i}. {fr}" for i, fr in enumerate(d.fragments, start=1)),
        f"lossless join: {'yes' if fdx.is_lossless(f.universe, f, d) else 'no'}",
        f"dependency preserving: {'yes' if fdx.is_dependency_preserving(f, d) else 'no'}",
    ]
    print("\n".join(lines))
    return EXIT_OK


# -- emit-ddl -----------------------------------------------------------------


def cmd_emit_ddl(args: argparse.Namespace) -> int:
    try:
        schema = deserialize_schema(_read(args.schema))
    except SchemaFormatError as exc:
        print(f"{args.schema}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    problems = validate_schema(schema).messages()
    if problems:
        for p in problems:
            print(f"{args.schema}: {p}", file=sys.stderr)
        return EXIT_FAIL
    script = emit_ddl(schema)
    if args.out:
        script.write(args.out)
    else:
        sys.stdout.write(script.text())
    if args.verify:
        report = verify_executable(script)
        for d in report.diagnostics:
            print(d, file=sys.stderr)
        print("executable: " + ("yes" if report.ok else "no"), file=sys.stderr)
        return EXIT_OK if report.ok else EXIT_FAIL
    return EXIT_OK


# -- wiring -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="schemagen", description="Requirement-to-schema toolkit.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="run the agent pipeline on requirements")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--requirement", help="requirement text")
    src.add_argument("--requirement-file", help="file holding the requirement text")
    src.add_argument("--corpus", help="corpus JSONL, or 'bundled' for the packaged corpus")
    g.add_argument("--sample", action="append", help="restrict --corpus to this id (repeatable)")
    g.add_argument("--id", default="requirement", help="output stem for a single requirement")
    g.add_argument("--backend", choices=("scripted", "http"), help="overrides the config file")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--script", help="replay script used for every sample (scripted backend)")
    g.add_argument("--script-dir", help="directory of <id>.json replay scripts (default: bundled)")
    g.add_argument("--out", default="out", help="output directory (default: out)")
    g.add_argument("--workers", type=int, default=1, help="parallel samples (default: 1)")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="score predicted schemas against a corpus")
    e.add_argument("corpus", help="corpus JSONL, or 'bundled'")
    e.add_argument("predictions", help="directory of <id>.schema.json files")
    e.add_argument("--out", help="directory for report.tsv and report.json")
    e.add_argument("--workers", type=int, default=1)
    e.set_defaults(func=cmd_evaluate)

    n = sub.add_parser("normalize", help="keys, minimal cover and 3NF synthesis for an FD file")
    n.add_argument("file")
    n.set_defaults(func=cmd_normalize)

    d = sub.add_parser("emit-ddl", help="write SQLite DDL for a schema file")
    d.add_argument("schema")
    d.add_argument("--out", help="output .sql path (default: stdout)")
    d.add_argument("--verify", action="store_true", help="execute the DDL in an in-memory SQLite")
    d.set_defaults(func=cmd_emit_ddl)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "workers", 1) < 1:
        print("schemagen: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError, ConfigurationError) as exc:
        print(f"schemagen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CorpusError as exc:
        print(f"schemagen: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
