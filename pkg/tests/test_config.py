import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from llmhpo.config import (
    ALIASES,
    ATTRIBUTES,
    Choice,
    Fixed,
    HyperparameterConfig,
    LogUniform,
    SearchSpace,
    Uniform,
    UniformInt,
    parse_config,
    parse_search_space,
    space_contains,
)
from llmhpo.exceptions import (
    InvalidDomain,
    InvalidValue,
    MissingField,
    RangeOrderError,
    UnknownFieldWarning,
    ValidationError,
)
from llmhpo.tables import LITERATURE_CONFIG_FILE, SPACE_FILES, data_text, table_space

TABLE2_JSON = '{"learning_rate":0.9,"momentum":0.015,"batch_size":32,"num_epochs":3,"gamma":0.1,"step_size":[8,12]}'


def test_parse_literature_config():
    c = parse_config(TABLE2_JSON)
    assert c == HyperparameterConfig(0.9, 0.015, 32, 3, 0.1, (8, 12))


def test_alias_and_scalar_step_promotion():
    c = parse_config('{"lr":0.01,"momentum":0,"batch_size":1,"num_epochs":1,"gamma":1,"step_size":1}')
    assert c.learning_rate == 0.01
    assert c.step_size == (1,)
    assert c.momentum == 0.0 and c.gamma == 1.0


def test_negative_learning_rate_rejected():
    doc = json.loads(TABLE2_JSON)
    doc["learning_rate"] = -0.1
    with pytest.raises(InvalidValue) as err:
        parse_config(json.dumps(doc))
    assert err.value.name == "learning_rate"


@pytest.mark.parametrize("alias,canonical", sorted(ALIASES.items()))
def test_every_alias_maps_to_one_key(alias, canonical):
    doc = json.loads(TABLE2_JSON)
    doc[alias] = doc.pop(canonical)
    assert parse_config(doc) == parse_config(TABLE2_JSON)


def test_alias_clash_is_an_error():
    doc = json.loads(TABLE2_JSON)
    doc["lr"] = 0.5
    with pytest.raises(InvalidValue):
        parse_config(doc)


@pytest.mark.parametrize("name", ATTRIBUTES)
def test_missing_field(name):
    doc = json.loads(TABLE2_JSON)
    del doc[name]
    with pytest.raises(MissingField) as err:
        parse_config(doc)
    assert err.value.name == name


@pytest.mark.parametrize(
    "name,value",
    [
        ("momentum", 1.5),
        ("momentum", -0.01),
        ("gamma", 0),
        ("batch_size", 0),
        ("batch_size", 32.5),
        ("num_epochs", "3"),
        ("step_size", [12, 8]),
        ("step_size", [8, 8]),
        ("step_size", [0, 4]),
        ("step_size", []),
        ("learning_rate", True),
    ],
)
def test_invalid_values(name, value):
    doc = json.loads(TABLE2_JSON)
    doc[name] = value
    with pytest.raises(InvalidValue):
        parse_config(doc)


def test_unknown_fields_warn_not_abort():
    doc = json.loads(TABLE2_JSON)
    doc["optimizer"] = "sgd"
    notes = []
    assert parse_config(doc, unknown=notes).batch_size == 32
    assert len(notes) == 1 and "optimizer" in notes[0]
    with pytest.warns(UnknownFieldWarning):
        parse_config(doc)


def test_non_object_rejected():
    with pytest.raises(ValidationError):
        parse_config("[1, 2]")
    with pytest.raises(ValidationError):
        parse_config("{not json")


@pytest.mark.parametrize("name", sorted(SPACE_FILES))
def test_table_files_round_trip_byte_identical(name):
    text = data_text(SPACE_FILES[name])
    space = parse_search_space(text)
    assert space.to_json() + "\n" == text
    assert parse_search_space(space.to_json()) == space


def test_literature_config_file_round_trips():
    text = data_text(LITERATURE_CONFIG_FILE)
    assert parse_config(text).to_json(indent=2) + "\n" == text


def test_table3_encoding():
    s = table_space("table3")
    assert s["learning_rate"] == LogUniform(-4, -2)
    assert s["momentum"] == Uniform(0.001, 0.01)
    assert s["batch_size"] == Fixed(32)
    assert s["num_epochs"] == Fixed(3)
    assert s["gamma"] == LogUniform(-8, -3)
    assert s["step_size"] == Choice((10, 20, 30))
    assert (s.trials, s.epochs_per_trial) == (10, 3)


def test_table1_encoding_clamps_step_lower_bound():
    s = table_space("table1")
    assert s["learning_rate"] == LogUniform(-5, 5)
    assert s["momentum"] == Uniform(0.0, 1.0)
    assert s["gamma"] == LogUniform(-5, 5)
    assert s["step_size"] == UniformInt(1, 20)


def test_table2_space_is_fixed_literature_config(literature):
    s = table_space("table2")
    assert s.is_fixed
    assert s.fixed_config() == literature


def test_inverted_range_rejected():
    doc = json.loads(table_space("table3").to_json())
    doc["momentum"] = {"type": "uniform", "lo": 0.9, "hi": 0.1}
    with pytest.raises(RangeOrderError):
        parse_search_space(doc)


@pytest.mark.parametrize(
    "name,domain",
    [
        ("momentum", {"type": "uniform", "lo": 0.5, "hi": 1.5}),
        ("momentum", {"type": "loguniform", "lo_exp": -3, "hi_exp": 1}),
        ("learning_rate", {"type": "uniform", "lo": 0.0, "hi": 0.1}),
        ("learning_rate", {"type": "uniformint", "lo": 1, "hi": 3}),
        ("batch_size", {"type": "uniform", "lo": 16, "hi": 64}),
        ("step_size", {"type": "uniformint", "lo": 0, "hi": 20}),
        ("step_size", {"type": "choice", "values": [10, 10]}),
        ("gamma", {"type": "gaussian", "mu": 0.1}),
        ("gamma", {"type": "uniform", "lo": 0.1}),
        ("gamma", {"lo": 0.1, "hi": 0.2}),
        ("num_epochs", {"type": "fixed", "value": 5}),
    ],
)
def test_invalid_domains(name, domain):
    doc = json.loads(table_space("table3").to_json())
    doc[name] = domain
    with pytest.raises(InvalidDomain):
        parse_search_space(doc)


def test_missing_space_keys():
    doc = json.loads(table_space("table3").to_json())
    del doc["trials"]
    with pytest.raises(MissingField):
        parse_search_space(doc)
    doc = json.loads(table_space("table3").to_json())
    del doc["gamma"]
    with pytest.raises(MissingField):
        parse_search_space(doc)


def test_uniformint_equal_bounds_collapse_to_fixed():
    doc = json.loads(table_space("table4").to_json())
    doc["step_size"] = {"type": "uniformint", "lo": 20, "hi": 20}
    assert parse_search_space(doc)["step_size"] == Fixed(20)


def test_contains_midpoint(table3):
    c = HyperparameterConfig(0.001, 0.005, 32, 3, 1e-5, (20,))
    assert space_contains(table3, c)


def test_contains_rejects_learning_rate_outside_exponent_range(table3):
    # log10(0.9) = -0.0458, far above the -2 upper exponent
    assert math.log10(0.9) == pytest.approx(-0.04576, abs=1e-5)
    c = HyperparameterConfig(0.9, 0.005, 32, 3, 1e-5, (20,))
    assert not space_contains(table3, c)


def test_contains_fixed_mismatch(table3):
    c = HyperparameterConfig(0.001, 0.005, 64, 3, 1e-5, (20,))
    assert not space_contains(table3, c)


def test_contains_step_schedules(literature):
    assert space_contains(table_space("table2"), literature)
    assert not space_contains(table_space("table2"), literature.replace(step_size=(8,)))
    t1 = table_space("table1")
    base = HyperparameterConfig(0.01, 0.5, 32, 3, 0.1, (5, 20))
    assert space_contains(t1, base)
    assert not space_contains(t1, base.replace(step_size=(5, 21)))


reals = st.floats(min_value=1e-6, max_value=1.0, allow_nan=False)


@st.composite
def spaces(draw):
    def real_domain():
        kind = draw(st.sampled_from(["fixed", "uniform", "loguniform", "choice"]))
        if kind == "fixed":
            return Fixed(draw(reals))
        if kind == "uniform":
            lo = draw(reals)
            return Uniform(lo, lo + draw(st.floats(1e-3, 1.0)))
        if kind == "loguniform":
            lo = draw(st.integers(-8, -2))
            return LogUniform(lo, lo + draw(st.integers(1, 2)))
        return Choice(tuple(draw(st.lists(reals, min_size=1, max_size=4, unique=True))))

    def int_domain():
        kind = draw(st.sampled_from(["fixed", "uniformint", "choice"]))
        if kind == "fixed":
            return Fixed(draw(st.integers(1, 64)))
        if kind == "uniformint":
            lo = draw(st.integers(1, 30))
            return UniformInt(lo, lo + draw(st.integers(1, 30)))
        return Choice(tuple(draw(st.lists(st.integers(1, 64), min_size=1, max_size=4, unique=True))))

    momentum = draw(st.sampled_from(["fixed", "uniform", "loguniform"]))
    if momentum == "fixed":
        mdom = Fixed(draw(st.floats(0.0, 1.0)))
    elif momentum == "uniform":
        lo = draw(st.floats(0.0, 0.5))
        mdom = Uniform(lo, lo + draw(st.floats(0.01, 0.5)))
    else:
        mdom = LogUniform(-4, draw(st.integers(-3, 0)))
    epochs = draw(st.integers(1, 5))
    domains = {
        "learning_rate": real_domain(),
        "momentum": mdom,
        "batch_size": int_domain(),
        "num_epochs": Fixed(epochs),
        "gamma": real_domain(),
        "step_size": int_domain(),
    }
    return SearchSpace(domains, trials=draw(st.integers(1, 12)), epochs_per_trial=epochs)


@given(spaces())
def test_serialization_round_trip_property(space):
    assert parse_search_space(space.to_json()) == space
    assert parse_search_space(space.to_json(indent=None)) == space
