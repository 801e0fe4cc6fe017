"""Variability (single batch) and comparison (two batches) reports."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

from ..config import ATTRIBUTES, HyperparameterConfig
from ..exceptions import AllTied, DegenerateGroups, InsufficientSamples, TooFewValues, ValidationError
from ..llm import SampleBatch
from .descriptive import dispersion, jaccard
from .inference import AnovaResult, KruskalResult, anova_one_way, kruskal_wallis

TESTS = ("anova", "kruskal", "both")


def attribute_column(configs: Iterable[HyperparameterConfig], name: str) -> list[float]:
    """Scalar column for ``name``; step-size schedules contribute their mean."""
    if name == "step_size":
        return [math.fsum(c.step_size) / len(c.step_size) for c in configs]
    return [float(getattr(c, name)) for c in configs]


def prompt_tokens(batch: SampleBatch) -> set[str] | None:
    if not batch.messages:
        return None
    return {tok for m in batch.messages for tok in m.content.lower().split()}


@dataclass(frozen=True)
class AttributeDispersion:
    n: int
    std: float
    variance: float
    iqr: float

    def to_dict(self) -> dict:
        return {"n": self.n, "std": self.std, "variance": self.variance, "iqr": self.iqr}


@dataclass
class VariabilityReport:
    attributes: dict[str, AttributeDispersion]
    n_samples: int
    failures: int
    distinct_configs: int

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "parsed": self.n_samples - self.failures,
            "failures": self.failures,
            "distinct_configs": self.distinct_configs,
            "attributes": {k: v.to_dict() for k, v in self.attributes.items()},
        }

    def csv_rows(self) -> list[tuple[str, str, float]]:
        rows = [("all", "n_samples", self.n_samples), ("all", "failures", self.failures),
                ("all", "distinct_configs", self.distinct_configs)]
        for name, d in self.attributes.items():
            rows += [(name, stat, getattr(d, stat)) for stat in ("n", "std", "variance", "iqr")]
        return rows


@dataclass
class AttributeComparison:
    anova: AnovaResult | None = None
    kruskal: KruskalResult | None = None
    # all observations identical in every group; reported as F = H = 0, p = 1
    degenerate: bool = False

    def to_dict(self) -> dict:
        d: dict = {"degenerate": self.degenerate}
        if self.anova is not None:
            d["anova"] = self.anova.to_dict()
        if self.kruskal is not None:
            d["kruskal"] = self.kruskal.to_dict()
        return d


@dataclass
class ComparisonReport:
    test: str
    attributes: dict[str, AttributeComparison]
    config_jaccard: float
    prompt_jaccard: float | None
    variability_a: VariabilityReport
    variability_b: VariabilityReport
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "jaccard": {"config_tuples": self.config_jaccard, "prompt_tokens": self.prompt_jaccard},
            "attributes": {k: v.to_dict() for k, v in self.attributes.items()},
            "variability": {"a": self.variability_a.to_dict(), "b": self.variability_b.to_dict()},
            "notes": self.notes,
        }

    def csv_rows(self) -> list[tuple[str, str, float]]:
        rows: list[tuple[str, str, float]] = [("all", "config_jaccard", self.config_jaccard)]
        if self.prompt_jaccard is not None:
            rows.append(("all", "prompt_jaccard", self.prompt_jaccard))
        for name, cmp in self.attributes.items():
            if cmp.anova is not None:
                rows += [(name, "anova_f", cmp.anova.f_stat), (name, "anova_p", cmp.anova.p_value)]
            if cmp.kruskal is not None:
                rows += [(name, "kruskal_h", cmp.kruskal.h_stat), (name, "kruskal_p", cmp.kruskal.p_value)]
        return rows


def _parsed(batch: SampleBatch) -> list[HyperparameterConfig]:
    configs = batch.configs
    if len(configs) < 2:
        raise InsufficientSamples(f"need at least 2 parsed configs, got {len(configs)}")
    return configs


def variability_report(batch: SampleBatch) -> VariabilityReport:
    configs = _parsed(batch)
    attrs = {}
    for name in ATTRIBUTES:
        d = dispersion(attribute_column(configs, name))
        attrs[name] = AttributeDispersion(len(configs), d.std, d.variance, d.iqr)
    return VariabilityReport(
        attrs, len(batch), len(batch.failures), len({c.as_tuple() for c in configs})
    )


def comparison_report(batch_a: SampleBatch, batch_b: SampleBatch, test: str = "anova") -> ComparisonReport:
    if test not in TESTS:
        raise ValidationError(f"test must be one of {TESTS}, got {test!r}")
    configs_a, configs_b = _parsed(batch_a), _parsed(batch_b)
    attrs = {}
    notes = []
    for name in ATTRIBUTES:
        groups = [attribute_column(configs_a, name), attribute_column(configs_b, name)]
        cmp = AttributeComparison()
        if test in ("anova", "both"):
            try:
                cmp.anova = anova_one_way(groups)
            except DegenerateGroups:
                cmp.anova = AnovaResult(0.0, 1.0, 1, len(groups[0]) + len(groups[1]) - 2)
                cmp.degenerate = True
        if test in ("kruskal", "both"):
            try:
                cmp.kruskal = kruskal_wallis(groups)
            except AllTied:
                cmp.kruskal = KruskalResult(0.0, 1.0, 1)
                cmp.degenerate = True
            except TooFewValues as exc:
                notes.append(f"{name}: Kruskal-Wallis skipped: {exc}")
        attrs[name] = cmp
    tokens_a, tokens_b = prompt_tokens(batch_a), prompt_tokens(batch_b)
    prompt_j = jaccard(tokens_a, tokens_b) if tokens_a is not None and tokens_b is not None else None
    if prompt_j is None:
        notes.append("prompt Jaccard unavailable: a batch carries no prompt header")
    return ComparisonReport(
        test,
        attrs,
        jaccard({c.as_tuple() for c in configs_a}, {c.as_tuple() for c in configs_b}),
        prompt_j,
        variability_report(batch_a),
        variability_report(batch_b),
        notes,
    )


def build_reports(batch_a: SampleBatch, batch_b: SampleBatch | None = None, test: str = "anova"):
    """Variability report for one batch, or a comparison report for two."""
    if batch_b is None:
        return variability_report(batch_a)
    return comparison_report(batch_a, batch_b, test)


def report_json(report) -> str:
    return json.dumps(report.to_dict(), indent=2)


def report_csv(report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["attribute", "statistic", "value"])
    for attr, stat, value in report.csv_rows():
        writer.writerow([attr, stat, repr(value) if isinstance(value, float) else value])
    return buf.getvalue()
