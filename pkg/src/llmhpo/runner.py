"""Experiment orchestration.

``run_rq1``/``run_rq2`` sample an LLM and summarize the variability of its
suggestions. ``run_experiment`` executes a plan of optimization arms (inline
space, LLM-suggested space, LLM-refined space, fixed configuration) over a
seed sweep, and ``emit_reports`` writes the trial logs and summaries.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .config import HyperparameterConfig, SearchSpace, fixed_space, parse_config, parse_search_space
from .exceptions import ArmFailure, InsufficientSamples, IoFailure, LlmHpoError, PlanError
from .llm import DEFAULT_MODEL, Transport, ask_for_json, collect_samples
from .objectives import make_objective
from .optimizer import OptimizationRun, TpeParams, run_optimization, trials_to_csv
from .prompting import (
    DEFAULT_SYSTEM_PROMPT,
    SPACE_OUTPUT_FORMAT,
    PromptSpec,
    render_refinement_prompt,
    render_usecase_prompt,
)
from .stats.reports import ComparisonReport, VariabilityReport, comparison_report, variability_report
from .tables import SPACE_FILES, table_space
from .validation import check_algo, check_search_space, check_seed

log = logging.getLogger(__name__)

SPACE_SOURCES = ("inline_space", "llm_suggested", "llm_refined", "fixed_config")
DEFAULT_SEEDS = tuple(range(20))


# -- RQ1 / RQ2 -----------------------------------------------------------------


def run_rq1(spec: PromptSpec, n: int, transport: Transport, **sample_kw) -> VariabilityReport:
    if n < 2:
        raise InsufficientSamples(f"variability needs n >= 2 samples, got {n}")
    return variability_report(collect_samples(transport, spec, n, **sample_kw))


def run_rq2(
    spec_a: PromptSpec,
    spec_b: PromptSpec,
    n: int,
    transport: Transport,
    test: str = "anova",
    transport_b: Transport | None = None,
    **sample_kw,
) -> ComparisonReport:
    """Compare two use cases. With one transport, use case A is sampled first."""
    if n < 2:
        raise InsufficientSamples(f"comparison needs n >= 2 samples per use case, got {n}")
    batch_a = collect_samples(transport, spec_a, n, **sample_kw)
    batch_b = collect_samples(transport_b or transport, spec_b, n, **sample_kw)
    return comparison_report(batch_a, batch_b, test)


# -- plans ---------------------------------------------------------------------


@dataclass
class ArmSpec:
    name: str
    space_source: str
    algo: str = "tpe"
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    objective: dict = field(default_factory=lambda: {"kind": "surrogate"})
    space: SearchSpace | None = None
    config: HyperparameterConfig | None = None
    usecase: PromptSpec | None = None
    from_arm: str | None = None
    from_seed_index: int = 0
    target_trials: int | None = None

    @property
    def needs_llm(self) -> bool:
        return self.space_source in ("llm_suggested", "llm_refined") or (
            self.space_source == "fixed_config" and self.config is None
        )


@dataclass
class ExperimentPlan:
    arms: list[ArmSpec]
    output_dir: Path | None = None
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.0
    tpe: TpeParams = field(default_factory=TpeParams)
    parallel: int = 1

    @property
    def needs_llm(self) -> bool:
        return any(a.needs_llm for a in self.arms)


def _space_from(arm: Mapping, base_dir: Path) -> SearchSpace:
    if "table" in arm:
        if arm["table"] not in SPACE_FILES:
            raise PlanError(f"arm {arm['name']!r}: unknown table {arm['table']!r}")
        return table_space(arm["table"])
    if "space_file" in arm:
        return check_search_space(base_dir / arm["space_file"])
    if "space_or_config" in arm:
        return parse_search_space(arm["space_or_config"])
    raise PlanError(f"arm {arm['name']!r}: inline_space needs 'space_or_config', 'table' or 'space_file'")


def parse_plan(data: Mapping[str, Any], base_dir: str | Path = ".") -> ExperimentPlan:
    """Validate a plan document; nothing is executed."""
    base_dir = Path(base_dir)
    if not isinstance(data, Mapping) or not isinstance(data.get("arms"), list) or not data["arms"]:
        raise PlanError("plan must be an object with a nonempty 'arms' list")
    default_seeds = data.get("seeds", list(DEFAULT_SEEDS))
    default_objective = data.get("objective", {"kind": "surrogate"})
    default_algo = data.get("algo", "tpe")
    arms: list[ArmSpec] = []
    seen: set[str] = set()
    for raw in data["arms"]:
        if not isinstance(raw, Mapping) or not isinstance(raw.get("name"), str) or not raw["name"]:
            raise PlanError("every arm needs a nonempty string 'name'")
        name = raw["name"]
        if name in seen:
            raise PlanError(f"duplicate arm name {name!r}")
        if "/" in name or name in (".", "..", "summary.json", "curves.csv", "manifest.json"):
            raise PlanError(f"arm name {name!r} cannot be used as a directory name")
        source = raw.get("space_source")
        if source not in SPACE_SOURCES:
            raise PlanError(f"arm {name!r}: space_source must be one of {SPACE_SOURCES}")
        seeds = raw.get("seeds", default_seeds)
        if not isinstance(seeds, list) or not seeds:
            raise PlanError(f"arm {name!r}: seeds must be a nonempty list")
        objective = dict(raw.get("objective", default_objective))
        if objective.get("kind") not in ("surrogate", "external"):
            raise PlanError(f"arm {name!r}: objective kind must be 'surrogate' or 'external'")
        try:
            make_objective(**objective)
        except TypeError as exc:
            raise PlanError(f"arm {name!r}: bad objective settings: {exc}") from None
        arm = ArmSpec(
            name,
            source,
            algo=check_algo(raw.get("algo", default_algo)),
            seeds=tuple(check_seed(s) for s in seeds),
            objective=objective,
        )
        if "usecase" in raw:
            arm.usecase = PromptSpec.from_dict(raw["usecase"])
        if source == "inline_space":
            arm.space = _space_from(raw, base_dir)
        elif source == "fixed_config":
            if "space_or_config" in raw:
                arm.config = parse_config(raw["space_or_config"])
            elif arm.usecase is None:
                raise PlanError(f"arm {name!r}: fixed_config needs 'space_or_config' or 'usecase'")
        elif source == "llm_suggested":
            if arm.usecase is None:
                raise PlanError(f"arm {name!r}: llm_suggested needs a 'usecase'")
        else:
            ref = raw.get("from_arm")
            if ref not in seen:
                raise PlanError(f"arm {name!r}: from_arm {ref!r} must name an earlier arm")
            arm.from_arm = ref
            arm.from_seed_index = int(raw.get("from_seed_index", 0))
            if "target_trials" in raw:
                arm.target_trials = int(raw["target_trials"])
        seen.add(name)
        arms.append(arm)
    for arm in arms:
        if arm.from_arm is not None:
            parent = next(a for a in arms if a.name == arm.from_arm)
            if parent.space_source == "fixed_config":
                raise PlanError(f"arm {arm.name!r}: cannot refine the fixed configuration arm {parent.name!r}")
            if not 0 <= arm.from_seed_index < len(parent.seeds):
                raise PlanError(f"arm {arm.name!r}: from_seed_index out of range for {parent.name!r}")
    tpe = TpeParams(**data.get("tpe", {}))
    out = data.get("output_dir")
    return ExperimentPlan(
        arms,
        Path(out) if out else None,
        data.get("model_name", DEFAULT_MODEL),
        float(data.get("temperature", 0.0)),
        tpe,
        int(data.get("parallel", 1)),
    )


def load_plan(path: str | Path) -> ExperimentPlan:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PlanError(f"{path}: not valid JSON: {exc}") from None
    return parse_plan(data, path.parent)


# -- execution -----------------------------------------------------------------


@dataclass
class ArmSummary:
    name: str
    space_source: str
    algo: str
    seeds: tuple[int, ...]
    runs: list[OptimizationRun] = field(default_factory=list)
    space: SearchSpace | None = None
    failure: str | None = None

    @property
    def per_seed_best(self) -> list[float]:
        return [r.best_trial.loss for r in self.runs]

    @property
    def median_best(self) -> float | None:
        return statistics.median(self.per_seed_best) if self.runs else None

    @property
    def curve(self) -> list[float]:
        """Median over seeds of the best-so-far loss at each trial index."""
        if not self.runs:
            return []
        per_seed = [r.best_so_far() for r in self.runs]
        return [statistics.median(vals) for vals in zip(*per_seed)]

    def to_dict(self) -> dict:
        return {
            "space_source": self.space_source,
            "algo": self.algo,
            "seeds": list(self.seeds),
            "per_seed_best": self.per_seed_best,
            "median_best_loss": self.median_best,
            "failure": self.failure,
        }


def _sweep(space, objective, algo, seeds, tpe, parallel) -> list[OptimizationRun]:
    def one(seed):
        return run_optimization(space, objective, algo, seed, tpe)

    if parallel <= 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(one, seeds))


def _ask_space(transport, messages, plan: ExperimentPlan) -> SearchSpace:
    text = ask_for_json(transport, messages, model_name=plan.model_name, temperature=plan.temperature)
    return parse_search_space(text)


def _run_arm(arm: ArmSpec, plan: ExperimentPlan, done: dict[str, ArmSummary], transport) -> ArmSummary:
    objective = make_objective(**arm.objective)
    summary = ArmSummary(arm.name, arm.space_source, arm.algo, arm.seeds)
    if arm.space_source == "inline_space":
        space = arm.space
    elif arm.space_source == "llm_suggested":
        spec = replace(arm.usecase, output_format=SPACE_OUTPUT_FORMAT)
        space = _ask_space(transport, render_usecase_prompt(spec), plan)
    elif arm.space_source == "llm_refined":
        parent = done[arm.from_arm]
        if parent.failure is not None:
            raise ArmFailure(arm.name, f"depends on failed arm {parent.name!r}")
        prior = parent.runs[arm.from_seed_index]
        target = arm.target_trials or prior.space.trials
        system = arm.usecase.system_prompt if arm.usecase else DEFAULT_SYSTEM_PROMPT
        messages = render_refinement_prompt(prior.space, prior.trials, target, system)
        space = _ask_space(transport, messages, plan)
    else:
        config = arm.config
        if config is None:
            text = ask_for_json(
                transport, render_usecase_prompt(arm.usecase),
                model_name=plan.model_name, temperature=plan.temperature,
            )
            config = parse_config(text, unknown=[])
        space = fixed_space(config, trials=1)
    summary.space = space
    summary.runs = _sweep(space, objective, arm.algo, arm.seeds, plan.tpe, plan.parallel)
    return summary


def run_experiment(plan: ExperimentPlan, transport: Transport | None = None) -> list[ArmSummary]:
    """Run every arm in declaration order.

    A failing arm is kept with its ``failure`` message set; arms that refine
    it fail too, all other arms still run.
    """
    if plan.needs_llm and transport is None:
        raise PlanError("plan has LLM-driven arms but no transport was given")
    done: dict[str, ArmSummary] = {}
    for arm in plan.arms:
        try:
            summary = _run_arm(arm, plan, done, transport)
        except LlmHpoError as exc:
            log.error("arm %s failed: %s", arm.name, exc)
            summary = ArmSummary(arm.name, arm.space_source, arm.algo, arm.seeds)
            summary.failure = f"{exc.code}: {exc}"
        done[arm.name] = summary
    return list(done.values())


# -- reports -------------------------------------------------------------------


def _curves_csv(summaries: Sequence[ArmSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["arm", "trial_index", "median_best_so_far"])
    for s in summaries:
        for t, v in enumerate(s.curve):
            w.writerow([s.name, t, repr(float(v))])
    return buf.getvalue()


def render_reports(summaries: Sequence[ArmSummary]) -> dict[str, str]:
    """Relative path -> file content for the whole output tree."""
    files: dict[str, str] = {}
    for s in summaries:
        if s.space is not None:
            files[f"{s.name}/space.json"] = s.space.to_json() + "\n"
        for run in s.runs:
            files[f"{s.name}/seed_{run.seed}.csv"] = trials_to_csv(run.trials, s.name)
    summary = {"arms": {s.name: s.to_dict() for s in summaries}}
    files["summary.json"] = json.dumps(summary, indent=2) + "\n"
    files["curves.csv"] = _curves_csv(summaries)
    return files


def emit_reports(summaries: Sequence[ArmSummary], output_dir: str | Path) -> dict:
    """Write the output tree; returns the manifest (also written as manifest.json)."""
    if not summaries:
        raise PlanError("no arm summaries to report")
    output_dir = Path(output_dir)
    files = render_reports(summaries)
    manifest = {
        "files": [
            {"path": rel, "sha256": hashlib.sha256(text.encode("utf-8")).hexdigest()}
            for rel, text in sorted(files.items())
        ]
    }
    files["manifest.json"] = json.dumps(manifest, indent=2) + "\n"
    for rel, text in files.items():
        path = output_dir / rel
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoFailure(path, exc) from exc
    return manifest
