import numpy as np
import pytest

from cycledesign.config import default_config
from cycledesign.design_space import center_design, default_schema
from cycledesign.evaluation import Evaluators


@pytest.fixture(scope="session")
def schema():
    return default_schema()


@pytest.fixture(scope="session")
def config():
    return default_config()


@pytest.fixture(scope="session")
def evaluators(schema, config):
    return Evaluators(schema, config)


@pytest.fixture
def center(schema):
    return center_design(schema)


@pytest.fixture(scope="session")
def desk_context(config, evaluators):
    from cycledesign.harness import build_context

    return build_context(config, "desk", evaluators)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# a scaled-down desk protocol so harness and CLI tests stay fast
TINY = {
    "protocol": {
        "desk": {
            "dataset_size": 300,
            "n_conditions": 3,
            "samples_per_condition": 150,
            "conditional_cases": 120,
            "mc_samples": 20000,
        }
    },
    "optimizers": {
        "nsga2": {"pop_size": 20, "generations": 5},
        "grad": {"starts": 6, "steps": 3, "polish_steps": 2},
    },
}


@pytest.fixture(scope="session")
def tiny_config():
    from cycledesign.config import load_config

    return load_config(overrides=TINY)


@pytest.fixture(scope="session")
def tiny_context(tiny_config):
    from cycledesign.harness import build_context

    return build_context(tiny_config, "desk", Evaluators(config=tiny_config))


@pytest.fixture(scope="session")
def tiny_config_file(tmp_path_factory, tiny_config):
    import json

    path = tmp_path_factory.mktemp("cfg") / "tiny.json"
    path.write_text(json.dumps(TINY))
    return path
