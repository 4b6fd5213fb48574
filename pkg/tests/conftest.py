"""Common fixtures."""

import numpy as np
import pytest

from freelip.banach_lab import RadialNet, build_net, dyadic_radii
from freelip.metric_core import PointedMetricSpace, from_graph, from_point_cloud
from freelip.schema import ExperimentConfig, SuiteSizes


@pytest.fixture(name="chain")
def chain_fixture() -> PointedMetricSpace:
    """0, a, b on a line with unit steps: d(0,a) = d(a,b) = 1, d(0,b) = 2."""
    return from_point_cloud([[0.0], [1.0], [2.0]], ids=["0", "a", "b"], name="chain")


@pytest.fixture(name="fork")
def fork_fixture() -> PointedMetricSpace:
    """a and b on opposite sides of the base: d(0,a) = d(0,b) = 1, d(a,b) = 2."""
    return from_point_cloud([[0.0], [1.0], [-1.0]], ids=["0", "a", "b"], name="fork")


@pytest.fixture(name="triangle")
def triangle_fixture() -> PointedMetricSpace:
    return from_point_cloud([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])


@pytest.fixture(name="star")
def star_fixture() -> PointedMetricSpace:
    return from_graph(5, [(0, leg, 1.0) for leg in range(1, 5)])


@pytest.fixture(name="ray")
def ray_fixture() -> RadialNet:
    return RadialNet.build([[1.0]], dyadic_radii(-1.0, 2.0, 0.5))


@pytest.fixture(name="small_net")
def small_net_fixture() -> RadialNet:
    return build_net(directions=6, radius_min_exp=-1.0, radius_max_exp=1.0, radius_step_exp=0.5)


@pytest.fixture(name="rng")
def rng_fixture() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=2024))


@pytest.fixture(name="config")
def config_fixture() -> ExperimentConfig:
    return ExperimentConfig(
        seed=11,
        sizes=SuiteSizes(
            duality=4,
            quotient_oracle=3,
            kalton=3,
            kalton_separated=3,
            extfm=3,
            union=3,
            godard=3,
            union2=2,
            bm4=2,
        ),
        duality_max_points=8,
        small_max_points=6,
        union2_max_points=8,
        kalton_max_support=12,
    )
