"""
Randomised acceptance suites.

Every instance draws from its own Philox stream keyed by (instance << 64) | seed, so rows never depend on
scheduling or on FREELIP_THREADS; rows come back ordered by instance id.
"""

import csv
import dataclasses
import logging
import math
import os
import sys
import time
import warnings
from collections.abc import Callable, Iterable, Sequence
from typing import IO, Optional

import numpy as np
from joblib import Parallel, delayed

from ._utils import format_float
from .banach_lab import RadialNet, build_net, sum_decomposition_lp
from .decomposition import (
    KALTON_CONSTANT,
    extFM_distortion,
    kalton_split,
    orthogonal_union_check,
    partition_of_unity_error,
    separated_lower_bound_check,
    separated_union_decompose,
    union2_check,
)
from .exceptions import InfeasibleProblemException
from .free_norm import (
    FreeVector,
    free_norm,
    free_norm_dual,
    free_norm_flow,
    free_norm_vertex_oracle,
    random_free_vector,
    random_lip_function,
)
from .lip_ops import nearest_point_extension
from .metric_core import PointedMetricSpace, from_point_cloud, random_space
from .quotient import Partition, quotient_pseudometric, quotient_via_lip, segments_collapse_fixture
from .schema import ExperimentConfig, ReportRow, Suite

logger = logging.getLogger(__name__)

THREADS_ENV = "FREELIP_THREADS"
REPORT_COLUMNS = ("suite", "instance", "measured", "bound", "slack", "wall_time")
VERTEX_ORACLE_MAX_POINTS = 5
SEGMENT_FIXTURES = 10

Check = tuple[str, float, float]
InstanceRunner = Callable[[ExperimentConfig, int, np.random.Generator], list[Check]]


@dataclasses.dataclass(frozen=True)
class SuiteResult:
    suite: Suite
    rows: tuple[ReportRow, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(row.passed(self.tolerance) for row in self.rows)

    @property
    def failures(self) -> tuple[ReportRow, ...]:
        return tuple(row for row in self.rows if not row.passed(self.tolerance))


def instance_rng(seed: int, instance: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(instance << 64) | seed))


def thread_count() -> int:
    value = os.environ.get(THREADS_ENV, "1")
    try:
        threads = int(value)
    except ValueError:
        threads = 0
    if threads < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    return threads


def _random_cloud(rng: np.random.Generator, radii: Sequence[float], dim: int) -> PointedMetricSpace:
    """The origin followed by one point per radius in a uniformly random direction."""
    directions = rng.standard_normal((len(radii), dim))
    directions /= np.linalg.norm(directions, axis=1)[:, np.newaxis]
    coords = np.vstack([np.zeros(dim), directions * np.asarray(radii)[:, np.newaxis]])
    return from_point_cloud(coords)


def _duality(config: ExperimentConfig, _: int, rng: np.random.Generator) -> list[Check]:
    n = int(rng.integers(2, config.duality_max_points + 1))
    space = random_space(rng, n)
    mu = random_free_vector(rng, space, int(rng.integers(1, n)))
    dual, _witness = free_norm_dual(mu, space)
    flow, _plan = free_norm_flow(mu, space)
    checks = [("gap", abs(dual - flow), 0.0)]

    isometry = max(
        abs(free_norm_flow(FreeVector.molecule(x, y), space)[0] - float(space.dist[x, y]))
        for x in range(n)
        for y in range(x + 1, n)
    )
    checks.append(("delta", isometry, 0.0))
    if n <= VERTEX_ORACLE_MAX_POINTS:
        checks.append(("oracle", abs(free_norm_vertex_oracle(mu, space) - dual), 0.0))
    return checks


def _quotient_oracle(config: ExperimentConfig, instance: int, rng: np.random.Generator) -> list[Check]:
    n = int(rng.integers(3, config.small_max_points + 1))
    space = random_space(rng, n)
    labels = rng.integers(0, int(rng.integers(1, n + 1)), size=n)
    partition = Partition.from_labels(labels.tolist())
    quotient = quotient_pseudometric(space, partition)
    representatives = [members[0] for members in partition.classes]
    gap = 0.0
    for a, x in enumerate(representatives):
        for b in range(a + 1, len(representatives)):
            value = quotient_via_lip(space, partition, x, representatives[b])
            gap = max(gap, abs(value - float(quotient.dist[a, b])))
    checks = [("gap", gap, 0.0)]

    if instance < SEGMENT_FIXTURES:
        J = instance + 1
        segments, classes = segments_collapse_fixture(J)
        collapsed = quotient_pseudometric(segments, classes)
        endpoint_class = classes.class_of[segments.index_of(f"e1:{1.0!r}")]
        expected = 0.5 + 2.0 ** -(1 + J)
        checks.append(("segments", abs(float(collapsed.dist[collapsed.base, endpoint_class]) - expected), 0.0))
    return checks


def _kalton(config: ExperimentConfig, _: int, rng: np.random.Generator) -> list[Check]:
    size = int(rng.integers(1, config.kalton_max_support + 1))
    spread = config.kalton_radius_exp
    space = _random_cloud(rng, np.exp2(rng.uniform(-spread, spread, size=size)).tolist(), dim=3)
    mu = FreeVector({x: float(rng.uniform(-1.0, 1.0)) for x in range(1, space.n)})

    split = kalton_split(mu, space)
    rebuilt = split.reconstruct().to_dense(space.n)
    mismatch = float(np.max(np.abs(rebuilt - mu.to_dense(space.n))))
    norm = free_norm(mu, space)
    ratio = math.fsum(split.norms().values()) / norm if norm > 0 else 0.0

    unity = partition_of_unity_error(np.exp2(rng.uniform(-20.0, 20.0, size=config.unity_samples)))
    return [("reconstruction", mismatch, 0.0), ("ratio", ratio, KALTON_CONSTANT), ("unity", unity, 1e-12)]


def _kalton_separated(_config: ExperimentConfig, _: int, rng: np.random.Generator) -> list[Check]:
    count = int(rng.integers(2, 5))
    theta = int(rng.integers(1, 4))
    annuli = []
    inner = int(rng.integers(-4, 1))
    for _part in range(count):
        outer = inner + int(rng.integers(1, 3))
        annuli.append((inner, outer))
        inner = outer + theta + int(rng.integers(0, 2))

    radii: list[float] = []
    owners: list[int] = []
    for index, (low, high) in enumerate(annuli):
        for _point in range(int(rng.integers(1, 4))):
            radii.append(float(np.exp2(rng.uniform(low, high))))
            owners.append(index)
    space = _random_cloud(rng, radii, dim=2)
    parts: list[dict[int, float]] = [{} for _ in annuli]
    for x, owner in enumerate(owners, start=1):
        parts[owner][x] = float(rng.uniform(-1.0, 1.0))

    report = separated_lower_bound_check([FreeVector(p) for p in parts], annuli, space)
    return [("separation", report.lower_bound, report.norm_of_sum)]


def _extfm(config: ExperimentConfig, _: int, rng: np.random.Generator) -> list[Check]:
    n = int(rng.integers(3, config.small_max_points + 1))
    space = random_space(rng, n)
    others = [x for x in range(n) if x != space.base]
    chosen = rng.choice(others, size=int(rng.integers(1, n)), replace=False).tolist()
    report = extFM_distortion(nearest_point_extension(space, [space.base, *chosen]))
    return [
        ("forward", report.forward, report.forward_bound),
        ("inverse", report.inverse, report.inverse_bound),
        ("distortion", report.distortion, report.distortion_bound),
    ]


def _planar(angle: float, radius: float) -> tuple[float, float]:
    return radius * math.cos(angle), radius * math.sin(angle)


def _union(config: ExperimentConfig, _: int, rng: np.random.Generator) -> list[Check]:
    count = int(rng.integers(2, 5))
    coords = [(0.0, 0.0)]
    pieces: list[list[int]] = []
    for _piece in range(count):
        angle = float(rng.uniform(0.0, 2.0 * math.pi))
        members = [0]
        for _point in range(int(rng.integers(1, max(2, config.small_max_points // count)))):
            members.append(len(coords))
            coords.append(_planar(angle + float(rng.uniform(-0.2, 0.2)), float(rng.uniform(0.1, 2.0))))
        pieces.append(members)
    report = orthogonal_union_check(from_point_cloud(coords), pieces, rng=rng, samples=10)
    return [
        ("lower", 1.0, report.lowest_ratio),
        ("upper", report.highest_ratio, report.forward_bound),
    ]


def _godard(config: ExperimentConfig, _: int, rng: np.random.Generator) -> list[Check]:
    count = int(rng.integers(2, 5))
    spread = 0.1
    factor = float(np.exp2(rng.uniform(-2.0, 2.0)))
    coords: list[np.ndarray] = []
    pieces: list[list[int]] = []
    for index in range(count):
        center = np.zeros(count)
        center[index] = math.sqrt(0.5)
        members = []
        size = int(rng.integers(1, max(2, config.small_max_points // count)))
        for point in range(size):
            offset = np.zeros(count)
            if index > 0 or point > 0:
                offset = rng.standard_normal(count)
                offset *= spread * float(rng.uniform(0.1, 1.0)) / np.linalg.norm(offset)
            members.append(len(coords))
            coords.append(factor * (center + offset))
        pieces.append(members)
    report = separated_union_decompose(from_point_cloud(coords), pieces)
    return [
        ("forward", report.forward, report.forward_bound),
        ("inverse", report.inverse, report.inverse_bound),
        ("distortion", report.distortion, report.distortion_bound),
    ]


def _union2(config: ExperimentConfig, _: int, rng: np.random.Generator) -> list[Check]:
    coords = [(0.0, 0.0)]
    for _core in range(int(rng.integers(0, 3))):
        coords.append(_planar(float(rng.uniform(0.0, 2.0 * math.pi)), float(rng.uniform(0.05, 0.2))))
    core = list(range(len(coords)))
    budget = config.union2_max_points - len(coords)
    first_angle = float(rng.uniform(0.0, 2.0 * math.pi))
    second_angle = first_angle + float(rng.uniform(0.5 * math.pi, 1.5 * math.pi))
    pieces = []
    for angle in (first_angle, second_angle):
        members = list(core)
        for _point in range(int(rng.integers(1, budget // 2 + 1))):
            members.append(len(coords))
            coords.append(_planar(angle + float(rng.uniform(-0.2, 0.2)), float(rng.uniform(0.3, 1.5))))
        pieces.append(members)
    report = union2_check(from_point_cloud(coords), pieces[0], pieces[1])
    return [
        ("forward", report.forward, report.forward_bound),
        ("inverse", report.inverse, report.inverse_bound),
        ("distortion", report.distortion, report.distortion_bound),
    ]


def reference_net(config: ExperimentConfig) -> RadialNet:
    net = config.net
    return build_net(
        dim=net.dim,
        p=net.norm_p,
        directions=net.directions,
        radius_min_exp=net.radius_min_exp,
        radius_max_exp=net.radius_max_exp,
        radius_step_exp=net.radius_step_exp,
        rng=instance_rng(config.seed, 0),
    )


def _bm4(net: RadialNet) -> InstanceRunner:
    def run(config: ExperimentConfig, instance: int, rng: np.random.Generator) -> list[Check]:
        h = random_lip_function(rng, net.space)
        try:
            value = sum_decomposition_lp(net, h).value
        except InfeasibleProblemException:
            logger.warning("sum decomposition is infeasible for instance %d", instance)
            value = math.inf
        return [("s_star", 2.0 * value, 4.0 + config.epsilon)]

    return run


RUNNERS: dict[Suite, InstanceRunner] = {
    Suite.DUALITY: _duality,
    Suite.QUOTIENT_ORACLE: _quotient_oracle,
    Suite.KALTON: _kalton,
    Suite.KALTON_SEPARATED: _kalton_separated,
    Suite.EXTFM: _extfm,
    Suite.UNION: _union,
    Suite.GODARD: _godard,
    Suite.UNION2: _union2,
}


def _run_instance(suite: Suite, runner: InstanceRunner, config: ExperimentConfig, instance: int) -> list[ReportRow]:
    started = time.perf_counter()
    checks = runner(config, instance, instance_rng(config.seed, instance))
    elapsed = time.perf_counter() - started
    single = len(checks) == 1
    return [
        ReportRow.build(suite, str(instance) if single else f"{instance}/{name}", measured, bound, elapsed)
        for name, measured, bound in checks
    ]


def run_suite(config: ExperimentConfig, suite: Suite, threads: Optional[int] = None) -> SuiteResult:
    count = config.sizes.count(suite)
    if count == 0:
        warnings.warn(f"suite {suite.value} has no instances")
        return SuiteResult(suite=suite, rows=(), tolerance=config.tolerance)

    runner = _bm4(reference_net(config)) if suite == Suite.BM4 else RUNNERS[suite]
    jobs = thread_count() if threads is None else threads
    logger.info("running suite %s: %d instances on %d threads", suite.value, count, jobs)
    batches = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(_run_instance)(suite, runner, config, instance) for instance in range(count)
    )
    rows = tuple(row for batch in batches for row in batch)
    result = SuiteResult(suite=suite, rows=rows, tolerance=config.tolerance)
    logger.info("suite %s finished: %d rows, %d failures", suite.value, len(rows), len(result.failures))
    return result


def write_report(rows: Iterable[ReportRow], stream: Optional[IO[str]] = None, timing: bool = True) -> None:
    """CSV with shortest round-trip floats; without timing the output is reproducible byte for byte."""
    columns = REPORT_COLUMNS if timing else REPORT_COLUMNS[:-1]
    writer = csv.writer(stream if stream is not None else sys.stdout, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values = row.model_dump()
        writer.writerow(
            [values[column] if isinstance(values[column], str) else format_float(values[column]) for column in columns]
        )

