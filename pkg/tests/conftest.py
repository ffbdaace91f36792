import numpy as np
import pytest

from ebrl.model import FieldSpec, Hyperparams, Schema, intern_dataset


def tiny_dataset():
    """Two lists of two records; one string field (3 values), one categorical (1 value)."""
    schema = Schema((FieldSpec("name", "string"), FieldSpec("sex", "categorical")), list_column="list")
    rows = [
        {"name": "ann", "sex": "f", "list": "A"},
        {"name": "anna", "sex": "f", "list": "A"},
        {"name": "ann", "sex": "f", "list": "B"},
        {"name": "bob", "sex": "f", "list": "B"},
    ]
    return intern_dataset(rows, schema), Hyperparams(a=1, b=3, c=1, n_pop=4)


def mixed_dataset():
    """Two lists of two records; string and categorical fields with two values each."""
    schema = Schema((FieldSpec("name", "string"), FieldSpec("sex", "categorical")), list_column="list")
    rows = [
        {"name": "ann", "sex": "f", "list": "A"},
        {"name": "ann", "sex": "m", "list": "A"},
        {"name": "bob", "sex": "f", "list": "B"},
        {"name": "ann", "sex": "f", "list": "B"},
    ]
    return intern_dataset(rows, schema), Hyperparams(a=2, b=5, c=1.5, n_pop=3)


def categorical_pair():
    """k=1, two records, one categorical field with two values, n_pop=2."""
    schema = Schema((FieldSpec("g", "categorical"),))
    return intern_dataset([{"g": "x"}, {"g": "y"}], schema), Hyperparams(a=1, b=2, n_pop=2)


# one line per acceptance criterion, echoed at the end of the run
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda t: int(t.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
