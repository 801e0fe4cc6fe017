import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from llmhpo.estimator import HyperparameterSearch
from llmhpo.exceptions import ValidationError
from llmhpo.objectives import SurrogateObjective
from llmhpo.optimizer import run_optimization


def test_params_round_trip():
    est = HyperparameterSearch(algo="random", seed=9, n_candidates=48)
    params = est.get_params()
    assert params["algo"] == "random" and params["n_candidates"] == 48
    twin = clone(est)
    assert twin.get_params() == params
    assert twin.set_params(seed=10).seed == 10


def test_fit_matches_functional_api(table3):
    obj = SurrogateObjective()
    est = HyperparameterSearch(seed=42).fit(table3, obj)
    run = run_optimization(table3, obj, "tpe", 42)
    assert est.trials_ == run.trials
    assert est.best_index_ == run.best
    assert est.best_loss_ == run.best_trial.loss
    assert est.best_config_ == run.best_trial.config
    assert len(est.best_so_far()) == table3.trials
    assert est.to_csv().splitlines()[1].split(",")[1] == "tpe"


def test_fit_accepts_json_and_path(table3, tmp_path):
    path = tmp_path / "space.json"
    path.write_text(table3.to_json())
    obj = SurrogateObjective()
    a = HyperparameterSearch(seed=1).fit(table3.to_json(), obj)
    b = HyperparameterSearch(seed=1).fit(str(path), obj)
    assert a.trials_ == b.trials_


def test_unfitted_and_invalid(table3):
    with pytest.raises(NotFittedError):
        HyperparameterSearch().best_so_far()
    with pytest.raises(ValidationError):
        HyperparameterSearch(algo="grid").fit(table3, SurrogateObjective())
    with pytest.raises(ValidationError):
        HyperparameterSearch(seed=-1).fit(table3, SurrogateObjective())
    with pytest.raises(ValidationError):
        HyperparameterSearch().fit(table3, "not callable")
