import numpy as np
import pytest

from fraudadv import harness, ingest
from fraudadv.datasets import german_data_path, german_schema_path
from fraudadv.model import GbdtModel, Tree
from fraudadv.schema import FeatureType, RawFeature, build_schema, load_schema

T = FeatureType


@pytest.fixture(scope="session")
def german_schema():
    return load_schema(german_schema_path())


@pytest.fixture(scope="session")
def german_records(german_schema):
    return ingest.read_records(german_data_path(), german_schema, space_separated=True)


@pytest.fixture(scope="session")
def german_setup(german_records, german_schema):
    return harness.build_setup(german_records, german_schema, split_seed=0)


@pytest.fixture(scope="session")
def mixed_schema():
    """One column of every kind plus a three-level categorical."""
    return build_schema([
        RawFeature("flag", T.BOOLEAN, True, False),
        RawFeature("count", T.INTEGER, True, True),
        RawFeature("items", T.POSITIVE_INTEGER, False, False),
        RawFeature("ratio", T.FLOAT, True, False),
        RawFeature("amount", T.POSITIVE_FLOAT, True, True),
        RawFeature("colour", T.ONE_HOT, True, True, ("red", "green", "blue")),
    ], label_column="y")


def stump_model(threshold=1.0, left=-3.0, right=3.0, n_features=2, feature=0):
    """Single split on ``feature``: x < threshold -> left leaf value."""
    tree = Tree(np.array([feature, -1, -1]), np.array([threshold, 0.0, 0.0]),
                np.array([1, -1, -1]), np.array([2, -1, -1]),
                np.array([0.0, left, right]), np.array([1.0, 0.0, 0.0]))
    return GbdtModel((tree,), learning_rate=1.0, base_score=0.0, n_features=n_features)


def float_schema(m=2, checked=(), editable=None):
    editable = editable if editable is not None else [True] * m
    return build_schema([RawFeature(f"f{i}", T.FLOAT, editable[i], i in checked) for i in range(m)],
                        label_column="y")


# acceptance lines are collected here and printed after the run
ACCEPTANCE: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(ACCEPTANCE, key=lambda t: t[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
