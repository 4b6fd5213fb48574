"""Tests for metric quotients."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freelip.metric_core import PointedMetricSpace, PseudoMetric, from_graph, random_graph, random_space
from freelip.quotient import (
    Partition,
    class_min_distances,
    collapse_subset,
    metric_identification,
    quotient_pseudometric,
    quotient_via_lip,
    segments_collapse_fixture,
)


def test_partition_is_canonical() -> None:
    first = Partition.from_classes([[3, 1], [0], [2]])
    second = Partition.from_labels(["x", "y", "z", "y"])

    assert first == second
    assert first.classes == ((0,), (1, 3), (2,))
    assert first.class_of == (0, 1, 2, 1)
    assert len(first) == 3


@pytest.mark.parametrize(
    ["classes", "n", "message"],
    [
        ([[0, 1], [1, 2]], 3, "disjoint"),
        ([[0], [2]], 3, "cover"),
        ([[0, 1], []], 2, "nonempty"),
        ([[0, 5]], 3, "out of range"),
    ],
)
def test_partition_rejects_invalid_classes(classes: list[list[int]], n: int, message: str) -> None:
    with pytest.raises(ValueError) as cm:
        Partition.from_classes(classes, n)

    assert message in str(cm.value)


def test_collapsing_partition() -> None:
    partition = Partition.collapsing(4, [0, 2])

    assert partition.classes == ((0, 2), (1,), (3,))


def test_class_min_distances(chain: PointedMetricSpace) -> None:
    weights = class_min_distances(chain, Partition.from_classes([[0], [1, 2]]))

    assert weights.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_collapse_of_base_is_isometric(triangle: PointedMetricSpace) -> None:
    quotient = collapse_subset(triangle, [0])

    assert quotient.projection == (0, 1, 2)
    assert np.array_equal(quotient.space.dist, triangle.dist)


def test_collapse_subset_distance_formula(fork: PointedMetricSpace) -> None:
    quotient = collapse_subset(fork, [0, 1])

    assert quotient.projection == (0, 0, 1)
    assert quotient.space.n == 2
    assert quotient.space.dist[0, 1] == 1.0
    assert quotient.space.ids == ("[0|a]", "b")


def test_collapse_subset_never_increases_distances() -> None:
    space = from_graph(6, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 4, 0.5), (4, 5, 3.0), (5, 0, 1.5)])
    quotient = collapse_subset(space, [0, 3])
    projection = np.asarray(quotient.projection)

    assert np.all(quotient.space.dist[np.ix_(projection, projection)] <= space.dist)


def test_collapse_subset_requires_base(chain: PointedMetricSpace) -> None:
    with pytest.raises(ValueError) as cm:
        collapse_subset(chain, [1, 2])

    assert "base point" in str(cm.value)


def test_quotient_by_singletons_is_the_metric(triangle: PointedMetricSpace) -> None:
    quotient = quotient_pseudometric(triangle, Partition.singletons(3))

    assert np.allclose(quotient.dist, triangle.dist, rtol=0.0, atol=1e-15)


def test_quotient_by_one_class_is_zero(triangle: PointedMetricSpace) -> None:
    quotient = quotient_pseudometric(triangle, Partition.from_classes([[0, 1, 2]]))

    assert quotient.n == 1
    assert quotient.dist.tolist() == [[0.0]]


def test_quotient_teleports_through_classes(chain: PointedMetricSpace) -> None:
    # 0 and b identified: a is within 1 of the merged class from both sides
    quotient = quotient_pseudometric(chain, Partition.from_classes([[0, 2], [1]]))

    assert quotient.dist.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_metric_identification_merges_zero_distances() -> None:
    pseudo = PseudoMetric(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]]))
    identified = metric_identification(pseudo)

    assert identified.projection == (0, 0, 1)
    assert identified.space.ids == ("[0|1]", "2")
    assert identified.space.dist.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_metric_identification_of_metric_is_identity(triangle: PointedMetricSpace) -> None:
    identified = metric_identification(triangle)

    assert identified.projection == (0, 1, 2)
    assert np.array_equal(identified.space.dist, triangle.dist)


def test_quotient_via_lip_trivial_partitions(triangle: PointedMetricSpace) -> None:
    assert quotient_via_lip(triangle, Partition.singletons(3), 1, 2) == pytest.approx(triangle.dist[1, 2], abs=1e-9)
    assert quotient_via_lip(triangle, Partition.from_classes([[0, 1, 2]]), 1, 2) == 0.0


@pytest.mark.parametrize("J", [1, 2, 3, 4, 7, 10])
def test_segments_collapse_distance(J: int) -> None:
    space, partition = segments_collapse_fixture(J)
    quotient = quotient_pseudometric(space, partition)
    endpoints = partition.class_of[space.index_of("e1:1.0")]

    assert quotient.dist[quotient.base, endpoints] == pytest.approx(0.5 + 2.0 ** -(1 + J), abs=1e-12)


@pytest.mark.parametrize("J", [1, 3])
def test_segments_with_only_endpoints_identified(J: int) -> None:
    space, partition = segments_collapse_fixture(J, collapse_segments=False)
    quotient = quotient_pseudometric(space, partition)
    endpoints = partition.class_of[space.index_of("e1:1.0")]

    assert len(partition) == space.n - J + 1
    assert quotient.dist[quotient.base, endpoints] == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), n=st.integers(min_value=3, max_value=8))
def test_quotient_duality(seed: int, n: int) -> None:
    rng = np.random.Generator(np.random.Philox(key=seed))
    space = random_space(rng, n)
    partition = Partition.from_labels(rng.integers(0, int(rng.integers(1, n + 1)), size=n).tolist())
    quotient = quotient_pseudometric(space, partition)
    representatives = [members[0] for members in partition.classes]

    for a, x in enumerate(representatives):
        for b, y in enumerate(representatives):
            assert quotient_via_lip(space, partition, x, y) == pytest.approx(quotient.dist[a, b], abs=1e-9)


def _chain_infimum(space: PseudoMetric, partition: Partition, start: int, end: int) -> float:
    """Shortest chain from class `start` to class `end`, trying every order of intermediate classes."""
    classes = partition.classes
    gaps = [[min(float(space.dist[x, y]) for x in first for y in second) for second in classes] for first in classes]
    if start == end:
        return 0.0
    others = [c for c in range(len(classes)) if c not in (start, end)]
    best = math.inf
    for k in range(len(others) + 1):
        for middle in itertools.permutations(others, k):
            route = (start, *middle, end)
            best = min(best, math.fsum(gaps[s][t] for s, t in zip(route, route[1:])))
    return best


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), n=st.integers(min_value=2, max_value=8))
def test_quotient_matches_chain_enumeration_on_graphs(seed: int, n: int) -> None:
    rng = np.random.Generator(np.random.Philox(key=seed))
    space = random_graph(rng, n)
    partition = Partition.from_labels(rng.integers(0, int(rng.integers(1, n + 1)), size=n).tolist())
    quotient = quotient_pseudometric(space, partition)

    for a in range(len(partition)):
        for b in range(len(partition)):
            assert quotient.dist[a, b] == pytest.approx(_chain_infimum(space, partition, a, b), abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), n=st.integers(min_value=2, max_value=10))
def test_collapse_matches_general_quotient(seed: int, n: int) -> None:
    rng = np.random.Generator(np.random.Philox(key=seed))
    space = random_space(rng, n)
    subset = {space.base, *rng.choice(n, size=int(rng.integers(0, n)), replace=False).tolist()}

    collapsed = collapse_subset(space, subset)
    general = metric_identification(quotient_pseudometric(space, Partition.collapsing(n, subset)))
    first, second = np.asarray(collapsed.projection), np.asarray(general.projection)

    assert np.allclose(
        collapsed.space.dist[np.ix_(first, first)], general.space.dist[np.ix_(second, second)], rtol=0.0, atol=1e-12
    )
