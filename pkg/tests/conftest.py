from pathlib import Path

import pytest

from flowsched.instance import make_instance
from flowsched.uncertainty import UncertaintyModel, derive_triples

DATA = Path(__file__).parent / "data"

# the 8-task single-resource example used throughout: indices are
# source=0, A=1, B=2, C=3, D=4, E=5, F=6, sink=7
TOY_DURATIONS = [0, 4, 2, 5, 6, 4, 4, 0]
TOY_CONSUMPTION = [[0], [2], [1], [3], [1], [1], [1], [0]]
TOY_ARCS = [(0, 1), (0, 2), (1, 6), (2, 3), (2, 4), (2, 5), (3, 6), (4, 7), (5, 7), (6, 7)]
TOY_NAMES = ["source", "A", "B", "C", "D", "E", "F", "sink"]

SRC, A, B, C, D, E, F, SINK = range(8)


@pytest.fixture(scope="session")
def toy():
    return make_instance(
        durations=TOY_DURATIONS,
        consumptions=TOY_CONSUMPTION,
        arcs=TOY_ARCS,
        capacities=[4],
        name="toy",
        task_names=TOY_NAMES,
    )


@pytest.fixture(scope="session")
def toy_sm_text():
    return (DATA / "toy.sm").read_text()


@pytest.fixture(scope="session")
def degenerate_model():
    # triples collapse to the deterministic durations
    return UncertaintyModel(low_factor=1, high_factor=1)


@pytest.fixture(scope="session")
def toy_triples(toy, degenerate_model):
    return derive_triples(toy, degenerate_model)
