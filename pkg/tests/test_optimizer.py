import math
import statistics

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import toy_space
from llmhpo.config import HyperparameterConfig, fixed_space, space_contains
from llmhpo.exceptions import ObjectiveFailure, ValidationError
from llmhpo.objectives import Evaluation, SurrogateObjective
from llmhpo.optimizer import (
    OptimizationRun,
    TpeParams,
    TrialResult,
    _Parzen,
    make_rng,
    random_sample,
    run_optimization,
    split_history,
    tpe_suggest,
    trials_from_csv,
    trials_to_csv,
)
from llmhpo.tables import table_space
from test_config import spaces


def _history(space, losses_at):
    base = space.fixed_config() if space.is_fixed else None
    out = []
    for i, (m, loss) in enumerate(losses_at):
        cfg = HyperparameterConfig(0.02, m, 32, 3, 3e-4, (20,)) if base is None else base
        out.append(TrialResult(i, cfg, loss))
    return out


def test_defaults():
    p = TpeParams()
    assert (p.n_startup, p.good_quantile, p.n_candidates, p.bandwidth_floor_fraction) == (3, 0.25, 24, 1e-3)
    with pytest.raises(ValidationError):
        TpeParams(good_quantile=1.0)


def test_fixed_space_returns_fixed_config(literature):
    space = fixed_space(literature)
    for seed in range(3):
        assert random_sample(space, make_rng(seed)) == literature
    hist = _history(space, [(0.0, 1.0)] * 5)
    assert tpe_suggest(space, hist, TpeParams(), make_rng(0)) == literature


def test_table3_log_mean(table3):
    rng = make_rng(7)
    logs = [math.log10(random_sample(table3, rng).learning_rate) for _ in range(10_000)]
    assert statistics.fmean(logs) == pytest.approx(-3.0, abs=0.02)


def test_same_seed_same_draw(table3):
    assert random_sample(table3, make_rng(5)) == random_sample(table3, make_rng(5))


def test_startup_passthrough_matches_random_stream(table3):
    hist = [TrialResult(i, random_sample(table3, make_rng(100 + i)), float(i)) for i in range(2)]
    a = tpe_suggest(table3, hist, TpeParams(n_startup=3), make_rng(11))
    b = random_sample(table3, make_rng(11))
    assert a == b


def test_split_history():
    hist = [TrialResult(i, None, loss) for i, loss in enumerate([5.0, 1.0, 3.0, 1.0, 9.0])]
    good, bad = split_history(hist, 0.25)
    assert good == [1, 3] and bad == [2, 0, 4]
    assert split_history(hist[:1], 0.25) == ([0], [])


def _toy_history():
    xs = [(0.18, 0.0), (0.19, 0.0), (0.2, 0.0), (0.21, 0.0), (0.22, 0.0),
          (0.78, 1.0), (0.79, 1.0), (0.8, 1.0), (0.81, 1.0), (0.82, 1.0)]
    return _history(toy_space(), xs)


def test_toy_suggestions_favour_good_region():
    space, hist = toy_space(), _toy_history()
    below = sum(
        tpe_suggest(space, hist, TpeParams(), make_rng(seed)).momentum < 0.5 for seed in range(100)
    )
    assert below >= 95


def _oracle_mixture(points, lo, hi, floor):
    pts = np.asarray(points)
    sigma = pts.std(ddof=1) if len(pts) > 1 else hi - lo
    bw = max(sigma * len(pts) ** -0.2, (hi - lo) * floor)
    comps = [scipy.stats.truncnorm((lo - m) / bw, (hi - m) / bw, loc=m, scale=bw) for m in pts]
    return lambda x: np.mean([c.pdf(x) for c in comps], axis=0)


def test_toy_density_ratio_against_grid_oracle():
    hist = _toy_history()
    good_idx, bad_idx = split_history(hist, 0.25)
    good = [hist[i].config.momentum for i in good_idx]
    bad = [hist[i].config.momentum for i in bad_idx]
    grid = np.linspace(0.0, 1.0, 201)
    g_ref, b_ref = _oracle_mixture(good, 0, 1, 1e-3), _oracle_mixture(bad, 0, 1, 1e-3)
    g_ours, b_ours = _Parzen(good, 0, 1, 1e-3), _Parzen(bad, 0, 1, 1e-3)
    for x in grid[::10]:
        assert g_ours.pdf(x) == pytest.approx(g_ref(x), rel=1e-9)
        assert b_ours.pdf(x) == pytest.approx(b_ref(x), rel=1e-9)
    ratio = g_ref(grid) / np.maximum(b_ref(grid), 1e-12)
    assert grid[int(np.argmax(ratio))] < 0.5


def test_n_startup_at_least_trials_equals_random(table3):
    obj = SurrogateObjective()
    for seed in range(5):
        tpe = run_optimization(table3, obj, "tpe", seed, TpeParams(n_startup=table3.trials))
        rnd = run_optimization(table3, obj, "random", seed)
        assert tpe.trials == rnd.trials


def test_run_is_deterministic(table3):
    obj = SurrogateObjective()
    a = trials_to_csv(run_optimization(table3, obj, "tpe", 42).trials, "tpe")
    b = trials_to_csv(run_optimization(table3, obj, "tpe", 42).trials, "tpe")
    assert a == b


def test_single_trial_run():
    space = fixed_space(HyperparameterConfig(0.02, 0.005, 32, 3, 3e-4, (20,)), trials=1)
    run = run_optimization(space, SurrogateObjective(), "random", 0)
    assert len(run.trials) == 1 and run.best == 0


def test_best_ties_go_to_lowest_index():
    cfg = HyperparameterConfig(0.02, 0.005, 32, 3, 3e-4, (20,))
    run = OptimizationRun(fixed_space(cfg), "random", 0,
                          [TrialResult(i, cfg, loss) for i, loss in enumerate([2.0, 1.0, 1.0, 3.0])])
    assert run.best == 1
    assert run.best_so_far() == [2.0, 1.0, 1.0, 1.0]


@settings(max_examples=25, deadline=None)
@given(spaces(), st.integers(0, 2**64 - 1), st.sampled_from(["tpe", "random"]))
def test_every_trial_lies_in_space(space, seed, algo):
    run = run_optimization(space, SurrogateObjective(), algo, seed)
    assert [t.index for t in run.trials] == list(range(space.trials))
    for t in run.trials:
        assert space_contains(space, t.config)
        assert math.isfinite(t.loss)
    best = run.best_so_far()
    assert all(b <= a for a, b in zip(best, best[1:]))


def test_tpe_not_worse_than_random_on_quadratic():
    space = table_space("table1")
    obj = SurrogateObjective(noise_amplitude=0.0)

    def median_best(algo):
        return statistics.median(run_optimization(space, obj, algo, s).best_trial.loss for s in range(20))

    assert median_best("tpe") <= median_best("random")


def test_objective_failure_keeps_completed_trials(table3):
    calls = []

    def flaky(cfg):
        calls.append(cfg)
        if len(calls) == 3:
            raise RuntimeError("GPU fell over")
        return Evaluation(1.0)

    with pytest.raises(ObjectiveFailure) as err:
        run_optimization(table3, flaky, "random", 0)
    assert err.value.index == 2
    assert len(err.value.trials) == 2


def test_non_finite_loss_is_a_failure(table3):
    with pytest.raises(ObjectiveFailure):
        run_optimization(table3, lambda c: Evaluation(float("nan")), "random", 0)


def test_epochs_forwarded_into_config(table3):
    seen = []
    run_optimization(table3, lambda c: seen.append(c.num_epochs) or Evaluation(0.0), "tpe", 0)
    assert set(seen) == {table3.epochs_per_trial}


def test_csv_round_trip(table3):
    run = run_optimization(table3, SurrogateObjective(), "tpe", 3)
    text = trials_to_csv(run.trials, "llm")
    assert text.splitlines()[0] == "trial,arm,learning_rate,momentum,batch_size,num_epochs,gamma,step_size,loss,accuracy"
    assert trials_from_csv(text) == run.trials
