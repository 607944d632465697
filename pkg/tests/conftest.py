import copy
import sys

import pytest

from pcbafpm import data_path, load_spec
from pcbafpm.model import spec_to_tree


def pytest_terminal_summary(terminalreporter):
    """Echo acceptance verdict lines after the run, outside capture."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "VERDICTS", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def prototype_path():
    return str(data_path("prototype_19mm.spec"))


@pytest.fixture(scope="session")
def prototype(prototype_path):
    return load_spec(prototype_path)


@pytest.fixture(scope="session")
def prototype_tree(prototype):
    """Mutable copy of the reference spec as a plain tree, for perturbation tests."""
    return spec_to_tree(prototype)


@pytest.fixture
def make_spec(prototype_tree):
    """Factory: load a spec from the prototype tree with dotted-path overrides."""

    def factory(**overrides):
        tree = copy.deepcopy(prototype_tree)
        for dotted, value in overrides.items():
            node = tree
            parts = dotted.split("__")
            for key in parts[:-1]:
                node = node[key]
            node[parts[-1]] = value
        return load_spec(tree)

    return factory


@pytest.fixture(scope="session")
def dyno_csv_path():
    return str(data_path("prototype_dyno.csv"))


@pytest.fixture(scope="session")
def emf_csv_path():
    return str(data_path("prototype_emf_3000rpm.csv"))
