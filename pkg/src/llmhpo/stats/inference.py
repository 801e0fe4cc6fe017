"""One-way ANOVA and the Kruskal-Wallis H test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..exceptions import AllTied, DegenerateGroups, NonFiniteInput, TooFewGroups, TooFewValues
from .special import chi2_sf, f_sf


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    p_value: float
    df_between: int
    df_within: int

    @property
    def f_infinite(self) -> bool:
        return math.isinf(self.f_stat)

    def to_dict(self) -> dict:
        return {
            "f_stat": None if self.f_infinite else self.f_stat,
            "f_infinite": self.f_infinite,
            "p_value": self.p_value,
            "df_between": self.df_between,
            "df_within": self.df_within,
        }


@dataclass(frozen=True)
class KruskalResult:
    h_stat: float
    p_value: float
    df: int

    def to_dict(self) -> dict:
        return {"h_stat": self.h_stat, "p_value": self.p_value, "df": self.df}


def _clean(groups: Sequence[Sequence[float]], min_size: int) -> list[list[float]]:
    if len(groups) < 2:
        raise TooFewGroups(f"need at least 2 groups, got {len(groups)}")
    out = []
    for g in groups:
        xs = [float(v) for v in g]
        if len(xs) < min_size:
            raise TooFewValues(f"every group needs at least {min_size} values")
        if not all(math.isfinite(v) for v in xs):
            raise NonFiniteInput("all observations must be finite")
        out.append(xs)
    return out


def anova_one_way(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """F test for equal group means.

    When every group is internally constant but the means differ, F is
    reported as ``inf`` with p = 0.
    """
    gs = _clean(groups, 2)
    k = len(gs)
    n_total = sum(len(g) for g in gs)
    # Shift by one observation; F is translation invariant and the shift
    # keeps the sums of squares exact for near-constant data.
    ref = gs[0][0]
    gs = [[v - ref for v in g] for g in gs]
    means = [math.fsum(g) / len(g) for g in gs]
    grand = math.fsum(len(g) * m for g, m in zip(gs, means)) / n_total
    ss_between = math.fsum(len(g) * (m - grand) ** 2 for g, m in zip(gs, means))
    ss_within = math.fsum((v - m) ** 2 for g, m in zip(gs, means) for v in g)
    df_b, df_w = k - 1, n_total - k
    if ss_within == 0.0:
        if ss_between == 0.0:
            raise DegenerateGroups("all observations are identical across all groups")
        return AnovaResult(math.inf, 0.0, df_b, df_w)
    f = (ss_between / df_b) / (ss_within / df_w)
    return AnovaResult(f, f_sf(f, df_b, df_w), df_b, df_w)


def rankdata(values: Sequence[float]) -> list[float]:
    """Average ranks (1-based), ties sharing the mean of their positions."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = r
        i = j + 1
    return ranks


def _tie_sum(values: Sequence[float]) -> float:
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return float(sum(t**3 - t for t in counts.values()))


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> KruskalResult:
    gs = _clean(groups, 1)
    pooled = [v for g in gs for v in g]
    n = len(pooled)
    if n < 5:
        raise TooFewValues(f"Kruskal-Wallis needs at least 5 observations, got {n}")
    correction = 1.0 - _tie_sum(pooled) / (n**3 - n)
    if correction <= 0.0:
        raise AllTied("all observations are tied")
    ranks = rankdata(pooled)
    # 12/(N(N+1)) * sum n_i R_i^2 - 3(N+1), written around the mean rank so
    # that equal mean ranks give exactly 0.
    mid = (n + 1) / 2.0
    spread = 0.0
    pos = 0
    for g in gs:
        r_mean = math.fsum(ranks[pos : pos + len(g)]) / len(g)
        pos += len(g)
        spread += len(g) * (r_mean - mid) ** 2
    h = 12.0 / (n * (n + 1)) * spread / correction
    df = len(gs) - 1
    return KruskalResult(h, chi2_sf(h, df), df)
