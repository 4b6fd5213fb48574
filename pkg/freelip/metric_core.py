"""
Finite pointed metric spaces: validation, construction and the generators used by the experiments.

Distances are the only data that matters once a space is built; point ids and coordinates are metadata.
The Lipschitz norm used throughout is the supremum of |f(x) - f(y)| / d(x, y) over pairs.
"""

import dataclasses
import math
from collections.abc import Iterable, Sequence
from typing import ClassVar, Optional, TypeVar

import numpy as np
import numpy.typing as npt
from scipy.sparse import csgraph
from scipy.spatial.distance import cdist

from .exceptions import MetricValidationException
from .schema import BasePolicy

FloatArray = npt.NDArray[np.float64]

FLOYD_WARSHALL_MAX_POINTS = 512
VALIDATION_RELATIVE_SLACK = 1e-12

SpaceT = TypeVar("SpaceT", bound="PseudoMetric")


@dataclasses.dataclass(frozen=True)
class Violation:
    axiom: str
    indices: tuple[int, ...]
    message: str


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def is_valid(self) -> bool:
        return not self.violations

    @property
    def axioms(self) -> frozenset[str]:
        return frozenset(v.axiom for v in self.violations)

    def __str__(self) -> str:
        if self.is_valid:
            return "valid"
        return "; ".join(v.message for v in self.violations)


def validate_metric(
    matrix: npt.ArrayLike,
    strict: bool = True,
    slack: Optional[float] = None,
    check_triangle: bool = True,
) -> ValidationReport:
    """
    Check every metric axiom and report each violation with its witnessing indices.

    Triangle violations are reported once per pair (i, k) as the triple (i, k, j) with the worst intermediate j.
    `strict` additionally rejects distinct points at distance zero.
    """
    dist = np.asarray(matrix, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {dist.shape}")
    n = dist.shape[0]
    violations: list[Violation] = []

    for i, j in np.argwhere(~np.isfinite(dist)).tolist():
        violations.append(Violation("finite", (i, j), f"d({i},{j}) is not finite"))
    if violations:
        return ValidationReport(tuple(violations))

    scale = float(dist.max()) if n else 0.0
    tol = VALIDATION_RELATIVE_SLACK * max(scale, 0.0) if slack is None else slack

    for i in np.flatnonzero(np.abs(np.diag(dist)) > tol).tolist():
        violations.append(Violation("diagonal", (i,), f"d({i},{i})={dist[i, i]:g} is not 0"))
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    for i, j in np.argwhere((dist < 0) & upper).tolist():
        violations.append(Violation("negative", (i, j), f"d({i},{j})={dist[i, j]:g} is negative"))
    for i, j in np.argwhere((np.abs(dist - dist.T) > tol) & upper).tolist():
        violations.append(Violation("symmetry", (i, j), f"d({i},{j})={dist[i, j]:g} but d({j},{i})={dist[j, i]:g}"))
    if strict:
        for i, j in np.argwhere((dist == 0) & upper).tolist():
            violations.append(Violation("identity", (i, j), f"pseudometric: d({i},{j})=0"))

    if check_triangle and n > 2:
        worst = np.zeros((n, n))
        witness = np.full((n, n), -1, dtype=np.int64)
        for j in range(n):
            excess = dist - (dist[:, j][:, np.newaxis] + dist[j, :][np.newaxis, :])
            better = excess > worst
            worst = np.where(better, excess, worst)
            witness = np.where(better, j, witness)
        for i, k in np.argwhere((worst > tol) & upper).tolist():
            j = int(witness[i, k])
            violations.append(
                Violation(
                    "triangle",
                    (i, k, j),
                    f"triangle violation at ({i},{k},{j}): {dist[i, k]:g} > {dist[i, j]:g}+{dist[j, k]:g}",
                )
            )
    return ValidationReport(tuple(violations))


@dataclasses.dataclass(frozen=True)
class MetricOrigin:
    """How the distances were produced, kept so that a space file is written back in its own form."""

    kind: str
    p: float = 2.0
    edges: tuple[tuple[int, int, float], ...] = ()


@dataclasses.dataclass(frozen=True, eq=False)
class PseudoMetric:
    """
    Finite pseudometric space with a distinguished base point.

    `dist` is copied and made read-only. Pass `validate=False` only for matrices that are metrics by
    construction (ℓ_p clouds, shortest-path closures); the cheap axioms are always checked.
    `origin` is None for spaces given by their matrix and for every derived space.
    """

    dist: FloatArray
    base: int = 0
    ids: tuple[str, ...] = ()
    coords: Optional[FloatArray] = None
    name: str = ""
    origin: Optional[MetricOrigin] = None
    validate: dataclasses.InitVar[bool] = True

    strict: ClassVar[bool] = False

    def __post_init__(self, validate: bool) -> None:
        dist = np.array(self.dist, dtype=np.float64)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1] or dist.shape[0] == 0:
            raise ValueError(f"expected a nonempty square distance matrix, got shape {dist.shape}")
        n = dist.shape[0]
        if not 0 <= self.base < n:
            raise ValueError(f"base {self.base} out of range for {n} points")

        ids = tuple(self.ids) if self.ids else tuple(str(i) for i in range(n))
        if len(ids) != n or len(set(ids)) != n:
            raise ValueError("point ids must be unique and one per point")

        coords = None
        if self.coords is not None:
            coords = np.array(self.coords, dtype=np.float64)
            if coords.ndim != 2 or coords.shape[0] != n:
                raise ValueError("coords must hold one vector per point")
            coords.setflags(write=False)

        report = validate_metric(dist, strict=self.strict, check_triangle=validate)
        if not report.is_valid:
            raise MetricValidationException(f"invalid distance matrix: {report}", report=report)

        dist.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return int(self.dist.shape[0])

    @property
    def radii(self) -> FloatArray:
        """Distances to the base point."""
        return self.dist[self.base]

    def index_of(self, point_id: str) -> int:
        try:
            return self.ids.index(point_id)
        except ValueError:
            raise ValueError(f"unknown point id {point_id!r}") from None

    def distance_to_set(self, subset: Iterable[int]) -> FloatArray:
        members = sorted(set(subset))
        if not members:
            raise ValueError("distance to an empty set is undefined")
        return self.dist[:, members].min(axis=1)

    def with_base(self: SpaceT, base: int) -> SpaceT:
        """The same space pointed at another base; free spaces over both are isometric."""
        return dataclasses.replace(self, base=base, validate=False)


class PointedMetricSpace(PseudoMetric):
    """Finite pointed metric space: distinct points are at positive distance."""

    strict: ClassVar[bool] = True


def shortest_path_lengths(weights: npt.ArrayLike) -> FloatArray:
    """
    All-pairs shortest paths of a dense symmetric weight matrix with `inf` marking missing edges.

    Floyd-Warshall on up to FLOYD_WARSHALL_MAX_POINTS vertices, Dijkstra from every source above.
    """
    lengths = np.array(weights, dtype=np.float64)
    np.fill_diagonal(lengths, 0.0)
    n = lengths.shape[0]
    if n <= FLOYD_WARSHALL_MAX_POINTS:
        for k in range(n):
            lengths = np.minimum(lengths, lengths[:, k][:, np.newaxis] + lengths[k, :][np.newaxis, :])
        return lengths
    graph = csgraph.csgraph_from_dense(lengths, null_value=np.inf)
    return np.asarray(csgraph.dijkstra(graph, directed=False), dtype=np.float64)


def from_point_cloud(
    coords: npt.ArrayLike,
    p: float = 2.0,
    base: int = 0,
    ids: Sequence[str] = (),
    name: str = "",
    validate: bool = True,
) -> PointedMetricSpace:
    points = np.asarray(coords, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, np.newaxis]
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("expected a nonempty list of coordinate vectors")
    if not p >= 1:
        raise ValueError(f"norm exponent must be at least 1, got {p!r}")

    if math.isinf(p):
        dist = cdist(points, points, metric="chebyshev")
    elif p == 1:
        dist = cdist(points, points, metric="cityblock")
    elif p == 2:
        dist = cdist(points, points, metric="euclidean")
    else:
        dist = cdist(points, points, metric="minkowski", p=p)

    duplicates = np.argwhere(np.triu(dist == 0, k=1))
    if duplicates.size:
        i, j = duplicates[0].tolist()
        raise ValueError(f"duplicate points {i} and {j}")
    origin = MetricOrigin("lp", p=float(p))
    return PointedMetricSpace(
        dist, base=base, ids=tuple(ids), coords=points, name=name, origin=origin, validate=validate
    )


def from_graph(
    n: int,
    edges: Iterable[tuple[int, int, float]],
    base: int = 0,
    ids: Sequence[str] = (),
    name: str = "",
    coords: Optional[npt.ArrayLike] = None,
) -> PointedMetricSpace:
    """Shortest-path metric of a connected graph with positive edge weights; parallel edges keep the lightest."""
    if n < 1:
        raise ValueError("a graph needs at least one vertex")
    weights = np.full((n, n), np.inf)
    edge_list = tuple((int(i), int(j), float(w)) for i, j, w in edges)
    for i, j, w in edge_list:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ValueError(f"invalid edge ({i}, {j})")
        if not w > 0:
            raise ValueError(f"edge ({i}, {j}) has non-positive weight {w!r}")
        weights[i, j] = weights[j, i] = min(weights[i, j], float(w))
    dist = shortest_path_lengths(weights)
    if not np.all(np.isfinite(dist)):
        raise ValueError("graph is disconnected")
    points = None if coords is None else np.asarray(coords, dtype=np.float64)
    origin = MetricOrigin("graph", edges=edge_list)
    return PointedMetricSpace(dist, base=base, ids=tuple(ids), coords=points, name=name, origin=origin, validate=False)


def scale(space: SpaceT, factor: float) -> SpaceT:
    if not (factor > 0 and math.isfinite(factor)):
        raise ValueError(f"scale factor must be positive, got {factor!r}")
    return dataclasses.replace(space, dist=space.dist * factor, origin=None, validate=False)


def restrict(
    space: SpaceT,
    subset: Iterable[int],
    base_policy: BasePolicy = BasePolicy.KEEP,
    base_index: Optional[int] = None,
) -> SpaceT:
    """
    Induced subspace on `subset` (kept in increasing index order).

    KEEP requires the base inside the subset, NEAREST falls back to the subset point closest to the old base
    (lowest index on ties), EXPLICIT makes `base_index` (an index of the original space) the new base.
    """
    members = sorted(set(subset))
    if not members:
        raise ValueError("cannot restrict to an empty subset")
    if members[0] < 0 or members[-1] >= space.n:
        raise ValueError("subset indices out of range")

    if base_policy == BasePolicy.EXPLICIT:
        if base_index is None or base_index not in members:
            raise ValueError(f"explicit base {base_index} is not in the subset")
        new_base = base_index
    elif space.base in members:
        new_base = space.base
    elif base_policy == BasePolicy.NEAREST:
        new_base = members[int(np.argmin(space.dist[space.base, members]))]
    else:
        raise ValueError("base point is not in the subset; use the nearest or explicit base policy")

    coords = None if space.coords is None else space.coords[members]
    return dataclasses.replace(
        space,
        dist=space.dist[np.ix_(members, members)],
        base=members.index(new_base),
        ids=tuple(space.ids[i] for i in members),
        coords=coords,
        origin=None,
        validate=False,
    )


def annulus(space: PseudoMetric, k: int, inner_exp: int = 1) -> frozenset[int]:
    """Points with 2^(k - inner_exp) < d(x, 0) <= 2^(k+1); balls are closed, so the inner radius is excluded."""
    if inner_exp < -1:
        raise ValueError(f"inner radius 2^(k - {inner_exp}) lies outside the outer radius 2^(k+1)")
    inner = math.ldexp(1.0, k - inner_exp)
    outer = math.ldexp(1.0, k + 1)
    radii = space.radii
    return frozenset(np.flatnonzero((radii > inner) & (radii <= outer)).tolist())


def cusp_space(n: int, xmax: float) -> PointedMetricSpace:
    """Samples of {(x, 0)} ∪ {(x, x²)} for x in [0, xmax], sharing the base (0, 0)."""
    if n < 2:
        raise ValueError("cusp needs at least two samples per branch")
    if not xmax > 0:
        raise ValueError(f"xmax must be positive, got {xmax!r}")
    xs = [xmax * i / (n - 1) for i in range(1, n)]
    coords = [(0.0, 0.0)] + [(x, 0.0) for x in xs] + [(x, x * x) for x in xs]
    ids = ["0"] + [f"lower:{i}" for i in range(1, n)] + [f"upper:{i}" for i in range(1, n)]
    return from_point_cloud(coords, p=2.0, base=0, ids=ids, name=f"cusp({n},{xmax!r})")


def segments_space(J: int, m: int, branch_params: Optional[Sequence[Sequence[float]]] = None) -> PointedMetricSpace:
    """
    J segments [0, 1]e_j of ℓ_1 glued at 0, each sampled at i/(m-1) for i = 1..m-1.

    `branch_params[j-1]` adds extra parameters in (0, 1] to branch j.
    """
    if J < 1 or m < 2:
        raise ValueError("segments need J >= 1 and m >= 2")
    if branch_params is not None and len(branch_params) != J:
        raise ValueError("branch_params needs one entry per branch")

    branch = [0]
    params = [0.0]
    for j in range(1, J + 1):
        ts = {i / (m - 1) for i in range(1, m)}
        if branch_params is not None:
            extra = set(float(t) for t in branch_params[j - 1])
            if any(not 0 < t <= 1 for t in extra):
                raise ValueError("branch parameters must lie in (0, 1]")
            ts |= extra
        for t in sorted(ts):
            branch.append(j)
            params.append(t)

    b = np.asarray(branch)
    t = np.asarray(params)
    same = b[:, np.newaxis] == b[np.newaxis, :]
    dist = np.where(same, np.abs(t[:, np.newaxis] - t[np.newaxis, :]), t[:, np.newaxis] + t[np.newaxis, :])
    coords = np.zeros((len(b), J))
    coords[np.arange(1, len(b)), b[1:] - 1] = t[1:]
    ids = ["0"] + [f"e{j}:{s!r}" for j, s in zip(branch[1:], params[1:])]
    return PointedMetricSpace(dist, base=0, ids=tuple(ids), coords=coords, name=f"segments({J},{m})")


def random_point_cloud(
    rng: np.random.Generator, n: int, dim: int = 2, p: float = 2.0, spread: float = 1.0
) -> PointedMetricSpace:
    """Uniform cloud in [-spread, spread]^dim with the base at the origin."""
    coords = rng.uniform(-spread, spread, size=(n, dim))
    coords[0] = 0.0
    return from_point_cloud(coords, p=p, name=f"cloud(n={n},dim={dim},p={p!r})")


def random_graph(rng: np.random.Generator, n: int, extra_edges: Optional[int] = None) -> PointedMetricSpace:
    """Random spanning tree plus extra chords; weights are dyadic multiples of 1/4."""
    edges = [(i, int(rng.integers(0, i)), int(rng.integers(1, 9)) / 4) for i in range(1, n)]
    for _ in range(n // 2 if extra_edges is None else extra_edges):
        i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
        edges.append((i, j, int(rng.integers(1, 9)) / 4))
    return from_graph(n, edges, name=f"graph(n={n})")


def random_space(rng: np.random.Generator, n: int) -> PointedMetricSpace:
    kind = int(rng.integers(0, 4))
    if kind == 3 and n > 1:
        return random_graph(rng, n)
    p = (1.0, 2.0, math.inf)[kind % 3]
    return random_point_cloud(rng, n, dim=int(rng.integers(1, 4)), p=p)
