from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from ..exceptions import BothEmpty, NonFiniteInput, TooFewValues


@dataclass(frozen=True)
class Dispersion:
    std: float
    variance: float
    iqr: float

    def to_dict(self) -> dict[str, float]:
        return {"std": self.std, "variance": self.variance, "iqr": self.iqr}


def _finite(values: Iterable[float]) -> list[float]:
    xs = [float(v) for v in values]
    if not all(math.isfinite(v) for v in xs):
        raise NonFiniteInput("all values must be finite")
    return xs


def quantile(sorted_values: Sequence[float], q: float) -> float:
    """Type-7 (linear interpolation) quantile of already sorted data."""
    n = len(sorted_values)
    h = (n - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, n - 1)
    a, b = sorted_values[lo], sorted_values[hi]
    if a == b:
        return a
    return a + (h - lo) * (b - a)


def sample_variance(values: Sequence[float]) -> float:
    # Deviations are taken from the first value so that a constant column
    # yields exactly zero.
    ref = values[0]
    d = [v - ref for v in values]
    mean = math.fsum(d) / len(d)
    return math.fsum((x - mean) ** 2 for x in d) / (len(d) - 1)


def dispersion(values: Iterable[float]) -> Dispersion:
    """Sample variance (n-1 divisor), its square root, and the type-7 IQR."""
    xs = _finite(values)
    if len(xs) < 2:
        raise TooFewValues(f"dispersion needs at least 2 values, got {len(xs)}")
    var = sample_variance(xs)
    s = sorted(xs)
    return Dispersion(math.sqrt(var), var, quantile(s, 0.75) - quantile(s, 0.25))


def jaccard(a: Iterable[Hashable], b: Iterable[Hashable]) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        raise BothEmpty("Jaccard index is undefined for two empty sets")
    return len(a & b) / len(union)
