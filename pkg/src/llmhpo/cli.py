"""Command-line entry point: ``llmhpo <subcommand> ...``.

Exit status is 0 on success, 1 on invalid input (including unknown flags),
2 on runtime failure. Errors are printed to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from .config import load_search_space
from .exceptions import LlmHpoError, RuntimeFailure, ValidationError
from .llm import DEFAULT_MODEL, HttpTransport, RecordTransport, ReplayTransport, SampleBatch, collect_samples
from .objectives import make_objective
from .optimizer import TpeParams, run_optimization, trials_to_csv
from .prompting import STRATEGIES, load_prompt_spec, messages_to_json, render_usecase_prompt
from .runner import emit_reports, load_plan, run_experiment
from .stats.reports import comparison_report, report_csv, report_json, variability_report
from .tables import SPACE_FILES, table_space

log = logging.getLogger("llmhpo")

HELP_WIDTH = 88


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=HELP_WIDTH)


def _write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _transport(kind: str | None, replay_dir: str | None):
    if kind is None:
        return None
    if kind == "http":
        t = HttpTransport.from_env()
        t.check()
        return t
    if not replay_dir:
        raise UsageError(f"--transport {kind} requires --replay-dir")
    if kind == "replay":
        return ReplayTransport(replay_dir)
    inner = HttpTransport.from_env()
    inner.check()
    return RecordTransport(inner, replay_dir)


def _load_space(arg: str):
    if arg in SPACE_FILES and not Path(arg).exists():
        return table_space(arg)
    return load_search_space(arg)


# -- subcommands ---------------------------------------------------------------


def cmd_prompt_render(args) -> None:
    spec = load_prompt_spec(args.usecase)
    sys.stdout.write(messages_to_json(render_usecase_prompt(spec, args.strategy)) + "\n")


def cmd_suggest(args) -> None:
    spec = load_prompt_spec(args.usecase)
    transport = _transport(args.transport, args.replay_dir)
    batch = collect_samples(
        transport, spec, args.n,
        model_name=args.model, temperature=args.temperature, parallel=args.parallel,
    )
    _write_atomic(args.out, batch.to_jsonl())
    log.info("%d samples, %d failures", len(batch), len(batch.failures))


def _emit_report(report, args) -> None:
    _write_atomic(args.out, report_json(report) + "\n")
    if args.csv:
        _write_atomic(args.csv, report_csv(report))


def cmd_analyze_variability(args) -> None:
    _emit_report(variability_report(SampleBatch.read(args.samples)), args)


def cmd_analyze_compare(args) -> None:
    a, b = SampleBatch.read(args.samples_a), SampleBatch.read(args.samples_b)
    _emit_report(comparison_report(a, b, args.test), args)


def cmd_optimize(args) -> None:
    space = _load_space(args.space)
    if args.objective == "external":
        if not args.cmd:
            raise UsageError("--objective external requires --cmd")
        objective = make_objective("external", command=args.cmd)
    else:
        objective = make_objective(
            "surrogate", noise_amplitude=args.noise_amplitude, seed=args.objective_seed
        )
    params = TpeParams(args.n_startup, args.good_quantile, args.n_candidates)
    run = run_optimization(space, objective, args.algo, args.seed, params)
    _write_atomic(args.out, trials_to_csv(run.trials, args.arm or args.algo))
    best = run.best_trial
    log.info("best trial %d: loss %r", best.index, best.loss)


def cmd_experiment_run(args) -> None:
    plan = load_plan(args.config)
    if args.parallel is not None:
        plan.parallel = args.parallel
    transport = _transport(args.transport, args.replay_dir) if plan.needs_llm else None
    if plan.needs_llm and transport is None:
        raise UsageError("plan has LLM-driven arms; pass --transport (and --replay-dir)")
    out_dir = args.out_dir or plan.output_dir
    if out_dir is None:
        raise UsageError("no output directory: pass --out-dir or set output_dir in the plan")
    summaries = run_experiment(plan, transport)
    emit_reports(summaries, out_dir)
    failed = [s for s in summaries if s.failure]
    for s in failed:
        log.error("arm %s failed: %s", s.name, s.failure)
    if failed and len(failed) == len(summaries):
        raise RuntimeFailure("every arm failed")


# -- parser --------------------------------------------------------------------


def _add_transport_flags(p, required: bool) -> None:
    p.add_argument(
        "--transport", choices=("http", "replay", "record"), required=required,
        help="http: live endpoint from LLMHPO_API_URL/LLMHPO_API_KEY; replay: serve fixtures; "
        "record: live endpoint, saving fixtures",
    )
    p.add_argument("--replay-dir", metavar="D", help="fixture directory (replay and record)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="llmhpo",
        description="LLM-assisted hyperparameter search: prompts, sampling, statistics, optimization.",
        formatter_class=_formatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True, parser_class=_Parser)

    p = sub.add_parser("prompt-render", help="print the rendered chat messages as JSON",
                       formatter_class=_formatter)
    p.add_argument("--usecase", required=True, metavar="F", help="use-case JSON file")
    p.add_argument("--strategy", choices=STRATEGIES, default=STRATEGIES[0], help="prompting strategy")
    p.set_defaults(func=cmd_prompt_render)

    p = sub.add_parser("suggest", help="sample N configurations from the LLM",
                       formatter_class=_formatter)
    p.add_argument("--usecase", required=True, metavar="F", help="use-case JSON file")
    p.add_argument("-n", type=int, required=True, metavar="N", help="number of iterations")
    _add_transport_flags(p, required=True)
    p.add_argument("--out", required=True, metavar="F", help="output JSONL sample batch")
    p.add_argument("--model", default=DEFAULT_MODEL, help="model name (default: %(default)s)")
    p.add_argument("--temperature", type=float, default=0.0, help="sampling temperature (default: 0)")
    p.add_argument("--parallel", type=int, default=1, metavar="P", help="concurrent requests (default: 1)")
    p.set_defaults(func=cmd_suggest)

    p = sub.add_parser("analyze-variability", help="dispersion report for one sample batch",
                       formatter_class=_formatter)
    p.add_argument("--samples", required=True, metavar="F", help="JSONL sample batch")
    p.add_argument("--out", required=True, metavar="R", help="output JSON report")
    p.add_argument("--csv", metavar="C", help="also write a flat attribute,statistic,value CSV")
    p.set_defaults(func=cmd_analyze_variability)

    p = sub.add_parser("analyze-compare", help="compare two sample batches",
                       formatter_class=_formatter)
    p.add_argument("--samples-a", required=True, metavar="A", help="JSONL sample batch A")
    p.add_argument("--samples-b", required=True, metavar="B", help="JSONL sample batch B")
    p.add_argument("--test", choices=("anova", "kruskal", "both"), default="anova",
                   help="per-attribute test (default: anova)")
    p.add_argument("--out", required=True, metavar="R", help="output JSON report")
    p.add_argument("--csv", metavar="C", help="also write a flat attribute,statistic,value CSV")
    p.set_defaults(func=cmd_analyze_compare)

    p = sub.add_parser("optimize", help="run one optimization and write its trial log",
                       formatter_class=_formatter)
    p.add_argument("--space", required=True, metavar="S",
                   help=f"search-space JSON file, or one of {', '.join(SPACE_FILES)}")
    p.add_argument("--objective", choices=("surrogate", "external"), required=True, help="objective")
    p.add_argument("--cmd", metavar="C", help="trainer command for --objective external")
    p.add_argument("--algo", choices=("tpe", "random"), required=True, help="sampler")
    p.add_argument("--seed", type=int, required=True, metavar="K", help="unsigned 64-bit seed")
    p.add_argument("--out", required=True, metavar="T", help="output trial CSV")
    p.add_argument("--arm", help="value of the CSV arm column (default: the algo)")
    p.add_argument("--noise-amplitude", type=float, default=0.05, help="surrogate noise (default: 0.05)")
    p.add_argument("--objective-seed", type=int, default=0, help="surrogate noise seed (default: 0)")
    p.add_argument("--n-startup", type=int, default=3, help="TPE random startup trials (default: 3)")
    p.add_argument("--good-quantile", type=float, default=0.25, help="TPE good fraction (default: 0.25)")
    p.add_argument("--n-candidates", type=int, default=24, help="TPE candidates per trial (default: 24)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("experiment-run", help="run an experiment plan",
                       formatter_class=_formatter)
    p.add_argument("--config", required=True, metavar="P", help="experiment plan JSON")
    p.add_argument("--out-dir", metavar="D", help="output directory (overrides the plan)")
    _add_transport_flags(p, required=False)
    p.add_argument("--parallel", type=int, metavar="P", help="seeds run concurrently per arm")
    p.set_defaults(func=cmd_experiment_run)
    return parser


def _report_error(exc: LlmHpoError) -> int:
    sys.stderr.write(json.dumps({"error": exc.to_dict()}) + "\n")
    return exc.exit_status


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except LlmHpoError as exc:
        return _report_error(exc)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except LlmHpoError as exc:
        return _report_error(exc)
    except FileNotFoundError as exc:
        sys.stderr.write(json.dumps({"error": {"code": "MissingInput", "message": str(exc)}}) + "\n")
        return 1
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": {"code": "IoFailure", "message": str(exc)}}) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
