"""scikit-learn style front-end for the search loop.

``HyperparameterSearch`` keeps its constructor arguments as plain attributes
(so ``get_params``/``set_params``/``clone`` work) and stores everything it
learns in trailing-underscore attributes set by :meth:`fit`::

    search = HyperparameterSearch(algo="tpe", seed=42).fit(space, SurrogateObjective())
    search.best_config_, search.best_loss_
"""
from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .objectives import Objective
from .optimizer import TpeParams, run_optimization, trials_to_csv
from .validation import check_algo, check_objective, check_search_space, check_seed


class HyperparameterSearch(BaseEstimator):
    """Sequential TPE or random search over a :class:`~llmhpo.config.SearchSpace`.

    Parameters
    ----------
    algo : {"tpe", "random"}
    seed : int
        Unsigned 64-bit seed; equal seeds give identical runs.
    n_startup, good_quantile, n_candidates, bandwidth_floor_fraction
        TPE settings, see :class:`~llmhpo.optimizer.TpeParams`. Ignored by
        random search.

    Attributes
    ----------
    run_ : OptimizationRun
    trials_ : list of TrialResult
    best_index_, best_config_, best_loss_
    """

    def __init__(
        self,
        algo: str = "tpe",
        seed: int = 0,
        n_startup: int = 3,
        good_quantile: float = 0.25,
        n_candidates: int = 24,
        bandwidth_floor_fraction: float = 1e-3,
    ):
        self.algo = algo
        self.seed = seed
        self.n_startup = n_startup
        self.good_quantile = good_quantile
        self.n_candidates = n_candidates
        self.bandwidth_floor_fraction = bandwidth_floor_fraction

    def tpe_params(self) -> TpeParams:
        return TpeParams(
            self.n_startup, self.good_quantile, self.n_candidates, self.bandwidth_floor_fraction
        )

    def fit(self, space, objective: Objective):
        space = check_search_space(space)
        objective = check_objective(objective)
        algo = check_algo(self.algo)
        seed = check_seed(self.seed)
        self.run_ = run_optimization(space, objective, algo, seed, self.tpe_params())
        self.trials_ = self.run_.trials
        self.best_index_ = self.run_.best
        self.best_config_ = self.trials_[self.best_index_].config
        self.best_loss_ = self.trials_[self.best_index_].loss
        return self

    def best_so_far(self) -> list[float]:
        check_is_fitted(self, "run_")
        return self.run_.best_so_far()

    def to_csv(self, arm: str | None = None) -> str:
        check_is_fitted(self, "run_")
        return trials_to_csv(self.trials_, arm or self.algo)
