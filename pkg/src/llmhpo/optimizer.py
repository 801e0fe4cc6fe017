"""Sequential model-based search: a tree-structured Parzen estimator (TPE)
and a uniform random-search baseline over :class:`SearchSpace` domains.

All randomness flows through one ``numpy.random.Generator`` per run, so a run
is reproducible from ``(space, objective, algo, seed, params)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .config import (
    ATTRIBUTES,
    Choice,
    Fixed,
    HyperparameterConfig,
    LogUniform,
    SearchSpace,
    Uniform,
    UniformInt,
)
from .exceptions import ObjectiveFailure, ValidationError
from .objectives import Objective
from .validation import check_algo, check_seed

BAD_DENSITY_FLOOR = 1e-12
_TINY = 1e-300
_STD_NORMAL = NormalDist()

CSV_HEADER = (
    "trial", "arm", "learning_rate", "momentum", "batch_size",
    "num_epochs", "gamma", "step_size", "loss", "accuracy",
)


@dataclass(frozen=True)
class TpeParams:
    n_startup: int = 3
    good_quantile: float = 0.25
    n_candidates: int = 24
    bandwidth_floor_fraction: float = 1e-3

    def __post_init__(self):
        if self.n_startup < 1 or self.n_candidates < 1:
            raise ValidationError("n_startup and n_candidates must be positive")
        if not 0.0 < self.good_quantile < 1.0:
            raise ValidationError(f"good_quantile must lie in (0, 1), got {self.good_quantile}")
        if self.bandwidth_floor_fraction <= 0:
            raise ValidationError("bandwidth_floor_fraction must be positive")


@dataclass(frozen=True)
class TrialResult:
    index: int
    config: HyperparameterConfig
    loss: float
    accuracy: float | None = None


@dataclass
class OptimizationRun:
    space: SearchSpace
    algo: str
    seed: int
    trials: list[TrialResult]
    params: TpeParams = field(default_factory=TpeParams)

    @property
    def best(self) -> int:
        """Index of the lowest loss; the earliest trial wins ties."""
        best = 0
        for t in self.trials[1:]:
            if t.loss < self.trials[best].loss:
                best = t.index
        return best

    @property
    def best_trial(self) -> TrialResult:
        return self.trials[self.best]

    def best_so_far(self) -> list[float]:
        out, cur = [], math.inf
        for t in self.trials:
            cur = min(cur, t.loss)
            out.append(cur)
        return out


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(check_seed(seed))


# -- random search -------------------------------------------------------------


def _as_steps(v) -> tuple[int, ...]:
    return v if isinstance(v, tuple) else (int(v),)


def _draw(dom, rng: np.random.Generator):
    if isinstance(dom, Fixed):
        return dom.value
    if isinstance(dom, Uniform):
        return float(rng.uniform(dom.lo, dom.hi))
    if isinstance(dom, LogUniform):
        return float(10.0 ** rng.uniform(dom.lo_exp, dom.hi_exp))
    if isinstance(dom, UniformInt):
        return int(rng.integers(dom.lo, dom.hi + 1))
    return dom.values[int(rng.integers(len(dom.values)))]


def random_sample(space: SearchSpace, rng: np.random.Generator) -> HyperparameterConfig:
    """Draw every attribute independently, in :data:`ATTRIBUTES` order."""
    values = {name: _draw(space.domains[name], rng) for name in ATTRIBUTES}
    values["step_size"] = _as_steps(values["step_size"])
    return HyperparameterConfig(**values)


# -- TPE -----------------------------------------------------------------------


class _Parzen:
    """Equal-weight mixture of Gaussians truncated to [lo, hi]."""

    def __init__(self, obs: Sequence[float], lo: float, hi: float, floor_fraction: float):
        self.lo, self.hi = lo, hi
        width = hi - lo
        self.mus = list(obs)
        n = len(self.mus)
        if n == 0:
            self.bw = 0.0
            return
        sigma = float(np.std(self.mus, ddof=1)) if n >= 2 else width
        self.bw = max(sigma * n ** -0.2, width * floor_fraction)
        self.cdf_lo = [_STD_NORMAL.cdf((lo - m) / self.bw) for m in self.mus]
        self.cdf_hi = [_STD_NORMAL.cdf((hi - m) / self.bw) for m in self.mus]

    def pdf(self, x: float) -> float:
        if not self.mus:
            return 1.0 / (self.hi - self.lo)
        total = 0.0
        for m, a, b in zip(self.mus, self.cdf_lo, self.cdf_hi):
            z = (x - m) / self.bw
            total += math.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * self.bw * (b - a))
        return total / len(self.mus)

    def sample(self, rng: np.random.Generator) -> float:
        if not self.mus:
            return float(rng.uniform(self.lo, self.hi))
        j = int(rng.integers(len(self.mus)))
        u = float(rng.uniform(self.cdf_lo[j], self.cdf_hi[j]))
        u = min(max(u, _TINY), 1.0 - 1e-16)
        x = self.mus[j] + self.bw * _STD_NORMAL.inv_cdf(u)
        return min(max(x, self.lo), self.hi)


class _Categorical:
    """Laplace-smoothed category frequencies."""

    def __init__(self, obs: Sequence[int], k: int):
        counts = np.bincount(np.asarray(obs, dtype=int), minlength=k) if obs else np.zeros(k)
        self.probs = (counts + 1.0) / (len(obs) + k)

    def pdf(self, i: int) -> float:
        return float(self.probs[i])

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(len(self.probs), p=self.probs))


def _coordinate(name: str, dom, value) -> float:
    """Position of an observed value in the dimension's modelling space."""
    if name == "step_size":
        value = math.fsum(value) / len(value)
    if isinstance(dom, LogUniform):
        return min(max(math.log10(value), dom.lo_exp), dom.hi_exp)
    return min(max(float(value), dom.lo), dom.hi)


def _bounds(dom) -> tuple[float, float]:
    if isinstance(dom, LogUniform):
        return dom.lo_exp, dom.hi_exp
    if isinstance(dom, UniformInt):
        return dom.lo - 0.5, dom.hi + 0.5
    return dom.lo, dom.hi


def _choice_index(name: str, dom: Choice, value) -> int:
    for i, v in enumerate(dom.values):
        if v == value or (name == "step_size" and _as_steps(v) == value):
            return i
    raise ValidationError(f"history value {value!r} for {name} is not one of the choices")


class _Dimension:
    def __init__(self, name, dom, good_vals, bad_vals, params: TpeParams):
        self.name, self.dom = name, dom
        if isinstance(dom, Choice):
            k = len(dom.values)
            self.good = _Categorical([_choice_index(name, dom, v) for v in good_vals], k)
            self.bad = _Categorical([_choice_index(name, dom, v) for v in bad_vals], k)
        else:
            lo, hi = _bounds(dom)
            frac = params.bandwidth_floor_fraction
            self.good = _Parzen([_coordinate(name, dom, v) for v in good_vals], lo, hi, frac)
            self.bad = _Parzen([_coordinate(name, dom, v) for v in bad_vals], lo, hi, frac)

    def draw(self, rng):
        """Returns (point in model space, attribute value)."""
        x = self.good.sample(rng)
        dom = self.dom
        if isinstance(dom, Choice):
            return x, dom.values[x]
        if isinstance(dom, LogUniform):
            return x, 10.0**x
        if isinstance(dom, UniformInt):
            k = int(min(max(round(x), dom.lo), dom.hi))
            return float(k), k
        return x, x

    def log_ratio(self, x) -> float:
        g = max(self.good.pdf(x), _TINY)
        b = max(self.bad.pdf(x), BAD_DENSITY_FLOOR)
        return math.log(g) - math.log(b)


def split_history(history: Sequence[TrialResult], good_quantile: float):
    """Indices of the ``ceil(q * n)`` lowest-loss trials, and of the rest."""
    n = len(history)
    order = sorted(range(n), key=lambda i: (history[i].loss, i))
    n_good = max(1, math.ceil(good_quantile * n))
    if n >= 2:
        n_good = min(n_good, n - 1)
    return order[:n_good], order[n_good:]


def tpe_suggest(
    space: SearchSpace,
    history: Sequence[TrialResult],
    params: TpeParams,
    rng: np.random.Generator,
) -> HyperparameterConfig:
    if len(history) < params.n_startup or space.is_fixed:
        return random_sample(space, rng)
    good_idx, bad_idx = split_history(history, params.good_quantile)
    dims = []
    for name in ATTRIBUTES:
        dom = space.domains[name]
        if isinstance(dom, Fixed):
            continue
        good_vals = [getattr(history[i].config, name) for i in good_idx]
        bad_vals = [getattr(history[i].config, name) for i in bad_idx]
        dims.append(_Dimension(name, dom, good_vals, bad_vals, params))

    best_score, best_values = -math.inf, None
    for _ in range(params.n_candidates):
        score, values = 0.0, {}
        for dim in dims:
            x, v = dim.draw(rng)
            values[dim.name] = v
            score += dim.log_ratio(x)
        if score > best_score:
            best_score, best_values = score, values
    out = {name: space.domains[name].value for name in ATTRIBUTES if isinstance(space.domains[name], Fixed)}
    out.update(best_values)
    out["step_size"] = _as_steps(out["step_size"])
    return HyperparameterConfig(**out)


def suggest(algo: str, space, history, params, rng) -> HyperparameterConfig:
    if algo == "random":
        return random_sample(space, rng)
    return tpe_suggest(space, history, params, rng)


def run_optimization(
    space: SearchSpace,
    objective: Objective,
    algo: str = "tpe",
    seed: int = 0,
    params: TpeParams | None = None,
) -> OptimizationRun:
    """Evaluate ``space.trials`` configurations, one after another.

    Raises :class:`ObjectiveFailure` (carrying the completed trials) if the
    objective raises or returns a non-finite loss.
    """
    algo = check_algo(algo)
    params = params or TpeParams()
    rng = make_rng(seed)
    trials: list[TrialResult] = []
    forward_epochs = isinstance(space.domains["num_epochs"], Fixed)
    for t in range(space.trials):
        config = suggest(algo, space, trials, params, rng)
        if forward_epochs:
            config = config.replace(num_epochs=space.epochs_per_trial)
        try:
            ev = objective(config)
        except Exception as exc:
            raise ObjectiveFailure(t, exc, trials) from exc
        loss = float(ev.loss)
        if not math.isfinite(loss):
            raise ObjectiveFailure(t, f"non-finite loss {loss!r}", trials)
        trials.append(TrialResult(t, config, loss, ev.accuracy))
    return OptimizationRun(space, algo, seed, trials, params)


# -- trial logs ----------------------------------------------------------------


def _num(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def trials_to_csv(trials: Sequence[TrialResult], arm: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for t in trials:
        c = t.config
        w.writerow([
            t.index, arm, _num(c.learning_rate), _num(c.momentum), c.batch_size, c.num_epochs,
            _num(c.gamma), "|".join(str(s) for s in c.step_size), _num(t.loss),
            "" if t.accuracy is None else _num(float(t.accuracy)),
        ])
    return buf.getvalue()


def trials_from_csv(text: str) -> list[TrialResult]:
    rows = csv.DictReader(io.StringIO(text))
    if tuple(rows.fieldnames or ()) != CSV_HEADER:
        raise ValidationError(f"unexpected trial log header {rows.fieldnames}")
    out = []
    for row in rows:
        config = HyperparameterConfig(
            float(row["learning_rate"]), float(row["momentum"]), int(row["batch_size"]),
            int(row["num_epochs"]), float(row["gamma"]),
            tuple(int(s) for s in row["step_size"].split("|")),
        )
        acc = float(row["accuracy"]) if row["accuracy"] else None
        out.append(TrialResult(int(row["trial"]), config, float(row["loss"]), acc))
    return out
