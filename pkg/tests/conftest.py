import json

import pytest

from llmhpo.config import HyperparameterConfig
from llmhpo.llm import write_fixtures
from llmhpo.prompting import PromptSpec
from llmhpo.tables import literature_config, table_space

CONFIG_KEYS = ("learning_rate", "momentum", "batch_size", "num_epochs", "gamma", "step_size")


@pytest.fixture
def table3():
    return table_space("table3")


@pytest.fixture
def literature():
    return literature_config()


@pytest.fixture
def optimum_config():
    return HyperparameterConfig(0.02, 0.005, 32, 3, 3e-4, (20,))


@pytest.fixture
def security_usecase():
    return PromptSpec(
        task="Fine-tune a pretrained RegNet image classifier for real-time security camera footage.",
        objective="Suggest hyperparameters that reach low validation loss within 3 epochs.",
        dataset_description="ObjectNet images filtered to the 113 classes shared with ImageNet.",
        model_description="RegNet pretrained on ImageNet-1k; all layers frozen except the last.",
    )


@pytest.fixture
def finance_usecase():
    return PromptSpec(
        task="Fine-tune FinancialBERT to classify the sentiment of financial news sentences.",
        objective="Suggest hyperparameters that maximise validation accuracy.",
        dataset_description="financial-phrasebank: 4840 English sentences labelled by sentiment.",
        model_description="FinancialBERT, a BERT model pretrained on financial text.",
    )


def config_response(**overrides):
    base = {
        "learning_rate": 0.001, "momentum": 0.9, "batch_size": 32,
        "num_epochs": 3, "gamma": 0.1, "step_size": [7],
    }
    base.update(overrides)
    return "Here is the configuration:\n```json\n" + json.dumps(base) + "\n```\n"


@pytest.fixture
def make_fixtures(tmp_path):
    counter = iter(range(1000))

    def make(responses):
        return write_fixtures(tmp_path / f"fixtures_{next(counter)}", responses)[0].parent

    return make


def toy_space(trials=10):
    """One free dimension: momentum ~ Uniform(0, 1); the rest fixed at the surrogate optimum."""
    from llmhpo.config import Fixed, SearchSpace, Uniform

    domains = {
        "learning_rate": Fixed(0.02),
        "momentum": Uniform(0.0, 1.0),
        "batch_size": Fixed(32),
        "num_epochs": Fixed(3),
        "gamma": Fixed(3e-4),
        "step_size": Fixed(20),
    }
    return SearchSpace(domains, trials=trials, epochs_per_trial=3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
