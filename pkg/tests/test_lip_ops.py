"""Tests for extension operators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freelip.banach_lab import RadialNet
from freelip.free_norm import FreeVector, LipFunction, lip_norm, random_lip_function
from freelip.lip_ops import (
    LinearExtensionOperator,
    apply,
    extension_operator_norm,
    extension_operator_norm_oracle,
    infconv_extend,
    nearest_point_extension,
    preadjoint_projection,
    radial_linear_extension,
    rebase_extension,
    shepard_extension,
)
from freelip.metric_core import PointedMetricSpace, from_point_cloud, random_space, restrict
from freelip.schema import NormMethod


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _random_subset(rng: np.random.Generator, space: PointedMetricSpace, largest: int) -> list[int]:
    others = [x for x in range(space.n) if x != space.base]
    size = int(rng.integers(1, min(largest, len(others)) + 1))
    return sorted([space.base, *rng.choice(others, size=size, replace=False).tolist()])


@pytest.fixture(name="equilateral")
def equilateral_fixture() -> PointedMetricSpace:
    return PointedMetricSpace(np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]), ids=("0", "a", "x"))


def test_infconv_extend_example(equilateral: PointedMetricSpace) -> None:
    extended = infconv_extend(LipFunction(np.array([0.0, 1.0])), equilateral, [0, 1])

    assert extended.values.tolist() == [0.0, 1.0, 1.0]


def test_infconv_extend_of_zero(equilateral: PointedMetricSpace) -> None:
    assert infconv_extend(LipFunction.zero(2), equilateral, [0, 1]).values.tolist() == [0.0, 0.0, 0.0]


def test_infconv_extend_is_not_additive() -> None:
    space = from_point_cloud([[0.0], [1.0], [3.0]])
    f = LipFunction(np.array([0.0, 1.0]))
    g = LipFunction(np.array([0.0, -1.0]))

    separately = infconv_extend(f, space, [0, 1]) + infconv_extend(g, space, [0, 1])
    together = infconv_extend(f + g, space, [0, 1])

    assert separately.values.tolist() == [0.0, 0.0, 4.0]
    assert together.values.tolist() == [0.0, 0.0, 0.0]


def test_infconv_extend_requires_function_on_subset(chain: PointedMetricSpace) -> None:
    with pytest.raises(ValueError):
        infconv_extend(LipFunction.zero(3), chain, [0, 1])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), n=st.integers(min_value=2, max_value=12))
def test_infconv_extend_is_isometric(seed: int, n: int) -> None:
    rng = _rng(seed)
    space = random_space(rng, n)
    subset = _random_subset(rng, space, n)
    sub = restrict(space, subset)
    f = random_lip_function(rng, sub) * float(rng.uniform(0.1, 3.0))

    extended = infconv_extend(f, space, subset)

    assert extended.values[subset].tolist() == f.values.tolist()
    assert lip_norm(extended, space) == pytest.approx(lip_norm(f, sub), abs=1e-12)


def test_nearest_point_extension_rows() -> None:
    space = from_point_cloud([[0.0], [1.0], [-1.0], [0.5]])
    operator = nearest_point_extension(space, [0, 1])

    assert operator.weights.tolist() == [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.0]]


def test_nearest_point_extension_of_whole_space(triangle: PointedMetricSpace) -> None:
    assert np.array_equal(nearest_point_extension(triangle, range(3)).weights, np.eye(3))


def test_shepard_extension_weights() -> None:
    space = from_point_cloud([(0.0, 0.0), (1.0, 0.0), (0.5, 1.0), (2.0, 0.0)])
    operator = shepard_extension(space, [0, 1])

    assert operator.weights[2] == pytest.approx([0.5, 0.5], abs=1e-15)
    assert operator.weights[3] == pytest.approx([0.2, 0.8], abs=1e-15)
    assert np.allclose(operator.weights.sum(axis=1), 1.0, rtol=0.0, atol=1e-12)


def test_shepard_extension_rejects_non_positive_exponent(chain: PointedMetricSpace) -> None:
    with pytest.raises(ValueError):
        shepard_extension(chain, [0, 1], exponent=0.0)


@pytest.mark.parametrize(
    ["weights", "message"],
    [
        ([[1.0, 0.0], [0.5, 0.5], [1.0, 0.0]], "indicator rows"),
        ([[1.0, 0.0], [0.0, 1.0], [0.7, 0.7]], "sum to 1"),
        ([[1.0, 0.0], [0.0, 1.0]], "shape"),
    ],
)
def test_operator_validation(chain: PointedMetricSpace, weights: list[list[float]], message: str) -> None:
    with pytest.raises(ValueError) as cm:
        LinearExtensionOperator(chain, (0, 1), np.array(weights))

    assert message in str(cm.value)


def test_operator_subset_must_contain_base(chain: PointedMetricSpace) -> None:
    with pytest.raises(ValueError) as cm:
        LinearExtensionOperator(chain, (1, 2), np.array([[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]]))

    assert "base point" in str(cm.value)


def test_apply(chain: PointedMetricSpace) -> None:
    operator = nearest_point_extension(chain, [0, 1])
    f = LipFunction(np.array([0.0, -2.0]))

    assert apply(operator, f).values.tolist() == [0.0, -2.0, -2.0]
    assert apply(operator, LipFunction.zero(2)).values.tolist() == [0.0, 0.0, 0.0]
    assert apply(nearest_point_extension(chain, range(3)), LipFunction(np.array([0.0, 1.0, 3.0]))).values.tolist() == [
        0.0,
        1.0,
        3.0,
    ]


@pytest.mark.parametrize("method", list(NormMethod))
def test_extension_operator_norm_of_identity(triangle: PointedMetricSpace, method: NormMethod) -> None:
    assert extension_operator_norm(nearest_point_extension(triangle, range(3)), method) == pytest.approx(1.0, abs=1e-9)


def test_extension_operator_norm_of_nearest_projection() -> None:
    space = PointedMetricSpace(np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.1], [1.0, 0.1, 0.0]]))
    operator = nearest_point_extension(space, [0, 1])

    assert operator.weights[2].tolist() == [0.0, 1.0]
    assert extension_operator_norm(operator) == pytest.approx(1.0, abs=1e-9)
    assert extension_operator_norm_oracle(operator) == pytest.approx(1.0, abs=1e-9)


def test_extension_operator_norm_can_exceed_one() -> None:
    # x sits next to the base but copies the value of the far point a
    space = from_point_cloud([[0.0], [2.0], [-0.5]])
    weights = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    operator = LinearExtensionOperator(space, (0, 1), weights)

    assert extension_operator_norm(operator) == pytest.approx(4.0, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), n=st.integers(min_value=3, max_value=8))
def test_extension_operator_norm_matches_oracle(seed: int, n: int) -> None:
    rng = _rng(seed)
    space = random_space(rng, n)
    subset = _random_subset(rng, space, 3)
    operator = shepard_extension(space, subset, exponent=float(rng.uniform(0.5, 3.0)))

    norm = extension_operator_norm(operator)
    assert norm >= 1.0 - 1e-9
    assert norm == pytest.approx(extension_operator_norm_oracle(operator), abs=1e-9)
    assert norm == pytest.approx(extension_operator_norm(operator, NormMethod.FLOW), abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), n=st.integers(min_value=2, max_value=9))
def test_extensions_reproduce_and_stay_bounded(seed: int, n: int) -> None:
    rng = _rng(seed)
    space = random_space(rng, n)
    subset = _random_subset(rng, space, n)
    sub = restrict(space, subset)
    f = random_lip_function(rng, sub)

    for operator in (nearest_point_extension(space, subset), shepard_extension(space, subset)):
        extended = apply(operator, f)
        assert extended.values[subset].tolist() == f.values.tolist()
        assert lip_norm(extended, space) <= extension_operator_norm(operator) * lip_norm(f, sub) + 1e-9


def test_preadjoint_projection(chain: PointedMetricSpace) -> None:
    operator = nearest_point_extension(chain, [0, 1])

    assert preadjoint_projection(operator, FreeVector.delta(1)) == FreeVector.delta(1)
    assert preadjoint_projection(operator, FreeVector.delta(2, 3.0)) == FreeVector.delta(1, 3.0)
    assert preadjoint_projection(operator, FreeVector.molecule(1, 2)) == FreeVector()


def test_rebase_extension_keeps_norm() -> None:
    space = from_point_cloud([(0.0, 0.0), (1.0, 0.0), (0.0, 2.0), (1.5, 1.0)])
    operator = shepard_extension(space, [0, 1])
    rebased = rebase_extension(operator, 1)

    assert rebased.space.base == 1
    assert rebased.subset_base == 1
    assert extension_operator_norm(rebased) == pytest.approx(extension_operator_norm(operator), abs=1e-9)

    with pytest.raises(ValueError):
        rebase_extension(operator, 2)


@pytest.fixture(name="line_net")
def line_net_fixture() -> RadialNet:
    return RadialNet.build([[1.0]], (0.5, 1.0, 1.5, 2.0, 3.0))


def test_radial_linear_extension_rows(line_net: RadialNet) -> None:
    operator = radial_linear_extension(line_net, [1.0, 2.0])

    assert operator.subset == (0, 2, 4)
    assert operator.weights[line_net.index(0, 1)].tolist() == [0.0, 1.0, 0.0]
    assert operator.weights[line_net.index(0, 2)].tolist() == [0.0, 0.5, 0.5]
    assert operator.weights[line_net.index(0, 0)].tolist() == [0.5, 0.5, 0.0]
    assert operator.weights[line_net.index(0, 4)].tolist() == [0.0, 0.0, 1.0]


def test_radial_linear_extension_reproduces_distance(line_net: RadialNet) -> None:
    operator = radial_linear_extension(line_net, [1.0, 2.0])
    f = LipFunction(line_net.space.radii[list(operator.subset)], operator.subset_base)

    assert apply(operator, f).values.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0, 2.0]
    assert extension_operator_norm(operator) == pytest.approx(1.0, abs=1e-9)


def test_radial_linear_extension_requires_net_radii(line_net: RadialNet) -> None:
    with pytest.raises(ValueError) as cm:
        radial_linear_extension(line_net, [1.25])

    assert "not radii of the net" in str(cm.value)
