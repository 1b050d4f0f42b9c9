import pytest

import _oracles


@pytest.fixture(scope="session")
def sliding3_distances():
    """Exact distance table over the full reachable 3x3 graph (181,440
    states), built once by breadth-first search."""
    table = _oracles.sliding_distance_table(3)
    assert len(table) == 181_440
    assert max(table.values()) == 31
    return table
