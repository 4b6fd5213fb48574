"""
Squeezing maps between a normed space and its radial quotients, sampled on finite radial nets.

On every dyadic crown [2^m, 2^(m+1)] the radius splits as t = α(t) + β(t): α grows on the inner half and is
flat on the outer half, β the other way round. ~L collapses the ray segments where α is flat, ~R those
where β is flat. R squeezes each crown onto the outer half (where β grows), L onto the inner half.
"""

import dataclasses
import logging
import math
from collections.abc import Sequence
from typing import Optional

import numpy as np
from scipy import sparse

from . import _lp
from ._utils import ceil_exponent, floor_exponent
from .free_norm import LipFunction
from .metric_core import FloatArray, PointedMetricSpace, from_point_cloud
from .quotient import Partition, class_min_distances, quotient_pseudometric
from .schema import Side

logger = logging.getLogger(__name__)

LIPSCHITZ_BOUNDS = {
    Side.R: (1.5, 1.0),
    Side.L: (1.0, 4.0 / 3.0),
}
REPORTED_VIOLATIONS = 20
VALIDATE_MAX_POINTS = 300


@dataclasses.dataclass(frozen=True, eq=False)
class RadialNet:
    """
    Points r·u for every direction u and radius r, plus the origin as base (index 0).

    Point 1 + i·len(radii) + j sits on direction i at radius radii[j].
    """

    directions: FloatArray
    radii: tuple[float, ...]
    p: float
    space: PointedMetricSpace

    @classmethod
    def build(cls, directions: Sequence[Sequence[float]], radii: Sequence[float], p: float = 2.0) -> "RadialNet":
        units = np.asarray(directions, dtype=np.float64)
        if units.ndim != 2 or units.shape[0] == 0:
            raise ValueError("expected a nonempty list of direction vectors")
        ordered = tuple(float(r) for r in radii)
        if not ordered or ordered[0] <= 0 or any(b <= a for a, b in zip(ordered, ordered[1:])):
            raise ValueError("radii must be positive and strictly increasing")
        units = units / np.linalg.norm(units, ord=p, axis=1)[:, np.newaxis]

        coords = [np.zeros(units.shape[1])]
        ids = ["0"]
        for i, u in enumerate(units):
            for j, r in enumerate(ordered):
                coords.append(r * u)
                ids.append(f"u{i}:r{j}")
        space = from_point_cloud(
            coords, p=p, ids=ids, name=f"net({units.shape[0]}x{len(ordered)},p={p!r})",
            validate=len(coords) <= VALIDATE_MAX_POINTS,
        )
        units.setflags(write=False)
        return cls(directions=units, radii=ordered, p=p, space=space)

    @property
    def size(self) -> int:
        """Number of directions."""
        return int(self.directions.shape[0])

    def index(self, direction: int, radius_index: int) -> int:
        return 1 + direction * len(self.radii) + radius_index

    def direction_of(self, x: int) -> int:
        if x == self.space.base:
            raise ValueError("the base point has no direction")
        return (x - 1) // len(self.radii)

    def radius_of(self, x: int) -> float:
        if x == self.space.base:
            return 0.0
        return self.radii[(x - 1) % len(self.radii)]


def planar_directions(count: int, p: float = 2.0) -> FloatArray:
    angles = 2.0 * math.pi * np.arange(count) / count
    units = np.column_stack((np.cos(angles), np.sin(angles)))
    return units / np.linalg.norm(units, ord=p, axis=1)[:, np.newaxis]


def random_directions(rng: np.random.Generator, count: int, dim: int, p: float = 2.0) -> FloatArray:
    units = rng.standard_normal((count, dim))
    return units / np.linalg.norm(units, ord=p, axis=1)[:, np.newaxis]


def dyadic_radii(min_exp: float, max_exp: float, step_exp: float) -> tuple[float, ...]:
    """Geometric grid 2^(min + i·step) merged with every crown boundary 2^m and crown midpoint 3·2^(m-1)."""
    steps = int(math.floor((max_exp - min_exp) / step_exp + 1e-9))
    radii = {2.0 ** (min_exp + i * step_exp) for i in range(steps + 1)}
    low, high = 2.0**min_exp, 2.0**max_exp
    for m in range(math.floor(min_exp) - 1, math.ceil(max_exp) + 1):
        for r in (math.ldexp(1.0, m), 1.5 * math.ldexp(1.0, m)):
            if low <= r <= high:
                radii.add(r)
    return tuple(sorted(radii))


def build_net(
    dim: int = 2,
    p: float = 2.0,
    directions: int = 64,
    radius_min_exp: float = -2.0,
    radius_max_exp: float = 2.0,
    radius_step_exp: float = 0.125,
    rng: Optional[np.random.Generator] = None,
) -> RadialNet:
    """Evenly spread planar directions for dim = 2, random directions (rng required) otherwise."""
    if dim == 2:
        units = planar_directions(directions, p)
    elif rng is None:
        raise ValueError("directions in dimension other than 2 are random and need a generator")
    else:
        units = random_directions(rng, directions, dim, p)
    return RadialNet.build(units, dyadic_radii(radius_min_exp, radius_max_exp, radius_step_exp), p)


def alpha_beta(t: float) -> tuple[float, float]:
    if not t > 0:
        raise ValueError(f"alpha and beta are evaluated at positive radii, got {t!r}")
    m = floor_exponent(t)
    half = math.ldexp(1.0, m - 1)
    if t <= 3 * half:
        return t - half, half
    return 2 * half, t - 2 * half


def crown_index(t: float) -> int:
    """m with t in (2^m, 2^(m+1)]."""
    return ceil_exponent(t) - 1


def class_representative(side: Side, t: float) -> float:
    """Lower end of the flat interval of α (side L) or β (side R) containing t, or t itself."""
    if side == Side.L:
        m = crown_index(t)
        start = 1.5 * math.ldexp(1.0, m)
    else:
        m = floor_exponent(t)
        start = math.ldexp(1.0, m)
        if t > 1.5 * start:
            return t
    return start if t >= start else t


def squeeze_radius(side: Side, t: float) -> float:
    m = crown_index(t)
    return t / 2 + math.ldexp(1.0, m if side == Side.R else m - 1)


def _radial_partition(side: Side, directions: Sequence[int], radii: Sequence[float], base: int) -> Partition:
    labels: list[tuple[int, float]] = []
    for x, (direction, radius) in enumerate(zip(directions, radii)):
        labels.append((-1, 0.0) if x == base else (direction, class_representative(side, radius)))
    return Partition.from_labels(labels)


def lr_classes(net: RadialNet, side: Side) -> Partition:
    """Same ray and α (side L) or β (side R) constant between the two radii; the base is alone."""
    directions = [-1] + [net.direction_of(x) for x in range(1, net.space.n)]
    radii = [net.radius_of(x) for x in range(net.space.n)]
    return _radial_partition(side, directions, radii, net.space.base)


@dataclasses.dataclass(frozen=True)
class SqueezeImage:
    direction: int
    radius: float
    class_key: tuple[int, float]


def squeeze_map(net: RadialNet, side: Side, x: int) -> SqueezeImage:
    if x == net.space.base:
        raise ValueError("the squeezing maps are defined away from the base point")
    direction = net.direction_of(x)
    radius = squeeze_radius(side, net.radius_of(x))
    return SqueezeImage(direction, radius, (direction, class_representative(side, radius)))


@dataclasses.dataclass(frozen=True)
class PairViolation:
    x: int
    y: int
    kind: str
    ratio: float


@dataclasses.dataclass(frozen=True)
class BiLipEstimate:
    side: Side
    forward: float
    inverse: float
    forward_bound: float
    inverse_bound: float
    epsilon: float
    violation_count: int
    violations: tuple[PairViolation, ...]


def _flat_intervals(side: Side, low: float, high: float) -> list[tuple[float, float]]:
    intervals = []
    for m in range(crown_index(low) - 1, crown_index(high) + 2):
        start = math.ldexp(1.0, m)
        interval = (1.5 * start, 2 * start) if side == Side.L else (start, 1.5 * start)
        if interval[1] >= low and interval[0] <= high:
            intervals.append(interval)
    return intervals


def image_net(net: RadialNet, side: Side, refinement: int = 2) -> tuple[PointedMetricSpace, Partition, list[int]]:
    """
    Sampled image of the squeezing map: the images of all net points plus, on every ray, the endpoints and
    `refinement` interior points of each collapsed interval. Returns the sample space, its ~ classes and
    the position of the image of every net point.
    """
    keys: dict[tuple[int, float], int] = {(-1, 0.0): 0}
    image_of = [0]
    for x in range(1, net.space.n):
        image = squeeze_map(net, side, x)
        image_of.append(keys.setdefault((image.direction, image.radius), len(keys)))

    images = [squeeze_radius(side, r) for r in net.radii]
    for low, high in _flat_intervals(side, min(images), max(images)):
        extra = [low + (high - low) * (i + 1) / (refinement + 1) for i in range(refinement)]
        for direction in range(net.size):
            for radius in [low, high, *extra]:
                keys.setdefault((direction, radius), len(keys))

    ordered = sorted(keys.items(), key=lambda item: item[1])
    coords = [np.zeros(net.directions.shape[1]) if d < 0 else r * net.directions[d] for (d, r), _ in ordered]
    space = from_point_cloud(coords, p=net.p, name=f"{net.space.name}/{side.value}", validate=False)
    partition = _radial_partition(side, [d for (d, _), _ in ordered], [r for (_, r), _ in ordered], 0)
    return space, partition, image_of


def estimate_bilip(net: RadialNet, side: Side, refinement: int = 2, epsilon: float = 0.05) -> BiLipEstimate:
    """
    Largest distortion ratios of the squeezing map over all pairs of net points.

    Quotient distances on the sampled image only see finitely many teleports, so they bound the true
    quotient distance from above; forward ratios are flagged only beyond `epsilon`.
    """
    space, partition, image_of = image_net(net, side, refinement)
    quotient = quotient_pseudometric(space, partition)
    classes = np.asarray(partition.class_of)[image_of]
    logger.debug("image net for side %s: %d points, %d classes", side.value, space.n, len(partition))

    us, vs = np.triu_indices(net.space.n, k=1)
    source = net.space.dist[us, vs]
    target = quotient.dist[classes[us], classes[vs]]
    forward = target / source
    with np.errstate(divide="ignore"):
        inverse = np.where(target > 0, source / np.where(target > 0, target, 1.0), np.inf)

    forward_bound, inverse_bound = LIPSCHITZ_BOUNDS[side]
    found: list[PairViolation] = []
    count = 0
    for kind, ratios, bound in (("forward", forward, forward_bound), ("inverse", inverse, inverse_bound)):
        offending = np.flatnonzero(ratios > bound + epsilon)
        count += int(offending.size)
        worst = offending[np.argsort(-ratios[offending], kind="stable")[:REPORTED_VIOLATIONS]]
        found.extend(PairViolation(int(us[k]), int(vs[k]), kind, float(ratios[k])) for k in worst)

    return BiLipEstimate(
        side=side,
        forward=float(forward.max()) if forward.size else 0.0,
        inverse=float(inverse.max()) if inverse.size else 0.0,
        forward_bound=forward_bound,
        inverse_bound=inverse_bound,
        epsilon=epsilon,
        violation_count=count,
        violations=tuple(found),
    )


@dataclasses.dataclass(frozen=True, eq=False)
class SumDecomposition:
    f: LipFunction
    g: LipFunction
    value: float


def _class_lipschitz_rows(
    weights: FloatArray, offset: int, columns: int, s_column: int
) -> tuple[sparse.csr_matrix, FloatArray]:
    """Rows a_c - a_c' - s·W[c, c'] <= 0 in both orientations for every pair of classes."""
    count = weights.shape[0]
    first, second = np.triu_indices(count, k=1)
    pairs = first.size
    r = np.arange(pairs)
    rows = np.concatenate([2 * r, 2 * r, 2 * r, 2 * r + 1, 2 * r + 1, 2 * r + 1])
    cols = np.concatenate(
        [offset + first, offset + second, np.full(pairs, s_column)] * 2,
    )
    vals = np.concatenate(
        [
            np.ones(pairs),
            -np.ones(pairs),
            -weights[first, second],
            -np.ones(pairs),
            np.ones(pairs),
            -weights[first, second],
        ]
    )
    matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(2 * pairs, columns))
    return matrix, np.zeros(2 * pairs)


def sum_decomposition_lp(net: RadialNet, h: LipFunction) -> SumDecomposition:
    """
    Split h = f + g with f constant on ~L classes and g constant on ~R classes, minimising the larger of
    the two Lipschitz constants. Infeasible class structures raise InfeasibleProblemException.
    """
    space = net.space
    if h.n != space.n or h.base != space.base:
        raise ValueError("function is not defined on the net")
    left, right = lr_classes(net, Side.L), lr_classes(net, Side.R)
    n_left, n_right = len(left), len(right)
    s_column = n_left + n_right
    columns = s_column + 1

    points = np.arange(space.n)
    eq_columns = np.concatenate([np.asarray(left.class_of), n_left + np.asarray(right.class_of)])
    A_eq = sparse.csr_matrix(
        (np.ones(2 * space.n), (np.concatenate([points, points]), eq_columns)), shape=(space.n, columns)
    )
    left_rows, left_rhs = _class_lipschitz_rows(class_min_distances(space, left), 0, columns, s_column)
    right_rows, right_rhs = _class_lipschitz_rows(class_min_distances(space, right), n_left, columns, s_column)

    bounds: list[tuple[Optional[float], Optional[float]]] = [(None, None)] * columns
    bounds[left.class_of[space.base]] = (0.0, 0.0)
    bounds[n_left + right.class_of[space.base]] = (0.0, 0.0)
    bounds[s_column] = (0.0, None)

    objective = np.zeros(columns)
    objective[s_column] = 1.0
    value, solution = _lp.minimize(
        objective,
        A_ub=sparse.vstack([left_rows, right_rows]).tocsr(),
        b_ub=np.concatenate([left_rhs, right_rhs]),
        A_eq=A_eq,
        b_eq=np.asarray(h.values),
        bounds=bounds,
    )
    f_values = solution[:n_left][np.asarray(left.class_of)]
    g_values = solution[n_left:s_column][np.asarray(right.class_of)]
    f_values[space.base] = 0.0
    g_values[space.base] = 0.0
    return SumDecomposition(f=LipFunction(f_values, space.base), g=LipFunction(g_values, space.base), value=value)
