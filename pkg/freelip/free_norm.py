"""
Lipschitz norms, free-space norms and the pushforward of point maps.

The free norm of μ is computed two independent ways:

  * `free_norm_dual` maximises Σ μ(x) f(x) over 1-Lipschitz f vanishing at the base (HiGHS dual simplex);
  * `free_norm_flow` moves the base-balanced measure at minimal cost (exact network simplex from POT).

Both only look at the support of μ plus the base: a 1-Lipschitz function on a subset extends to the whole
space with the same constant, so the value is the same as over all points.
"""

import dataclasses
import math
import types
from collections.abc import Mapping, Sequence
from typing import Union

import numpy as np
import numpy.typing as npt
import ot

from . import _lp
from .metric_core import FloatArray, PseudoMetric
from .schema import NormMethod

Scalar = Union[int, float]


@dataclasses.dataclass(frozen=True, eq=False)
class LipFunction:
    """Real values on the points of a space; the value at the base is exactly 0."""

    values: FloatArray
    base: int = 0

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or not 0 <= self.base < values.size:
            raise ValueError("values must be a vector containing the base point")
        if values[self.base] != 0.0:
            raise ValueError(f"value at the base must be 0, got {values[self.base]!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def normalized(cls, values: npt.ArrayLike, base: int = 0) -> "LipFunction":
        """Shift so that the base value is 0 (the Lip₀ representative of f)."""
        array = np.asarray(values, dtype=np.float64)
        shifted = array - array[base]
        shifted[base] = 0.0
        return cls(shifted, base)

    @classmethod
    def zero(cls, n: int, base: int = 0) -> "LipFunction":
        return cls(np.zeros(n), base)

    @classmethod
    def distance_to_base(cls, space: PseudoMetric) -> "LipFunction":
        return cls(space.radii.copy(), space.base)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __add__(self, other: "LipFunction") -> "LipFunction":
        return LipFunction(self.values + other.values, self.base)

    def __sub__(self, other: "LipFunction") -> "LipFunction":
        return LipFunction(self.values - other.values, self.base)

    def __mul__(self, factor: Scalar) -> "LipFunction":
        return LipFunction(self.values * float(factor), self.base)

    __rmul__ = __mul__

    def __neg__(self) -> "LipFunction":
        return self * -1.0


@dataclasses.dataclass(frozen=True)
class FreeVector:
    """
    Finitely supported combination Σ μ(x) δ_x.

    Zero coefficients are dropped; a coefficient at the base may be present but `canonical` removes it,
    since δ_0 = 0 in the free space.
    """

    coeffs: Mapping[int, float] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned = {int(x): float(c) for x, c in sorted(self.coeffs.items()) if float(c) != 0.0}
        object.__setattr__(self, "coeffs", types.MappingProxyType(cleaned))

    def __hash__(self) -> int:
        return hash(tuple(self.coeffs.items()))

    @classmethod
    def delta(cls, x: int, weight: float = 1.0) -> "FreeVector":
        return cls({x: weight})

    @classmethod
    def molecule(cls, x: int, y: int) -> "FreeVector":
        """δ_x - δ_y."""
        return cls.delta(x) - cls.delta(y)

    @classmethod
    def from_dense(cls, coefficients: npt.ArrayLike) -> "FreeVector":
        array = np.asarray(coefficients, dtype=np.float64)
        return cls({int(x): float(array[x]) for x in np.flatnonzero(array)})

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.coeffs)

    def to_dense(self, n: int) -> FloatArray:
        array = np.zeros(n)
        for x, c in self.coeffs.items():
            array[x] = c
        return array

    def canonical(self, base: int) -> "FreeVector":
        return FreeVector({x: c for x, c in self.coeffs.items() if x != base})

    def restricted(self, points: Sequence[int]) -> "FreeVector":
        keep = set(points)
        return FreeVector({x: c for x, c in self.coeffs.items() if x in keep})

    def __add__(self, other: "FreeVector") -> "FreeVector":
        merged = dict(self.coeffs)
        for x, c in other.coeffs.items():
            merged[x] = merged.get(x, 0.0) + c
        return FreeVector(merged)

    def __sub__(self, other: "FreeVector") -> "FreeVector":
        return self + (-other)

    def __neg__(self) -> "FreeVector":
        return self * -1.0

    def __mul__(self, factor: Scalar) -> "FreeVector":
        return FreeVector({x: c * float(factor) for x, c in self.coeffs.items()})

    __rmul__ = __mul__


@dataclasses.dataclass(frozen=True)
class TransportPlan:
    flows: tuple[tuple[int, int, float], ...]
    cost: float

    def net_flow(self, n: int) -> FloatArray:
        """Outflow minus inflow per point; equals the base-balanced coefficients."""
        net = np.zeros(n)
        for source, sink, mass in self.flows:
            net[source] += mass
            net[sink] -= mass
        return net


def lip_norm(f: LipFunction, space: PseudoMetric) -> float:
    """Pairs at distance zero are skipped when f agrees on them; a function separating them has norm inf."""
    if f.n != space.n:
        raise ValueError("function and space sizes differ")
    if space.n < 2:
        return 0.0
    us, vs = np.triu_indices(space.n, k=1)
    gaps = np.abs(f.values[us] - f.values[vs])
    dist = space.dist[us, vs]
    apart = dist > 0
    if np.any(gaps[~apart] > 0):
        return math.inf
    if not np.any(apart):
        return 0.0
    return float(np.max(gaps[apart] / dist[apart]))


def _check_support(mu: FreeVector, space: PseudoMetric) -> FreeVector:
    canonical = mu.canonical(space.base)
    if canonical.coeffs and (min(canonical.coeffs) < 0 or max(canonical.coeffs) >= space.n):
        raise ValueError("free vector support lies outside the space")
    return canonical


def _mcshane(values: Mapping[int, float], space: PseudoMetric) -> FloatArray:
    """Largest 1-Lipschitz extension of values given on a subset; exact on that subset."""
    points = sorted(values)
    known = np.array([values[p] for p in points])
    extended = np.min(known[np.newaxis, :] + space.dist[:, points], axis=1)
    extended[points] = known
    extended[space.base] = 0.0
    return extended


def free_norm_dual(mu: FreeVector, space: PseudoMetric) -> tuple[float, LipFunction]:
    """Kantorovich-Rubinstein side: optimum of the pairing over the Lipschitz unit ball, and a maximiser."""
    canonical = _check_support(mu, space)
    if not canonical.coeffs:
        return 0.0, LipFunction.zero(space.n, space.base)

    ball = _lp.lip_ball(space.dist, space.base, sorted(canonical.coeffs))
    objective = np.array([canonical.coeffs.get(p, 0.0) for p in ball.variables])
    value, solution = _lp.maximize(objective, ball.A_ub, ball.b_ub)

    on_support = dict(zip(ball.variables, solution.tolist()))
    on_support[space.base] = 0.0
    return value, LipFunction(_mcshane(on_support, space), space.base)


def free_norm_flow(mu: FreeVector, space: PseudoMetric) -> tuple[float, TransportPlan]:
    """Transport side: cheapest plan moving the positive part of the base-balanced μ onto its negative part."""
    canonical = _check_support(mu, space)
    if not canonical.coeffs:
        return 0.0, TransportPlan(flows=(), cost=0.0)

    balanced = dict(canonical.coeffs)
    balanced[space.base] = -math.fsum(canonical.coeffs.values())
    sources = [x for x, c in balanced.items() if c > 0]
    sinks = [x for x, c in balanced.items() if c < 0]
    if not sources or not sinks:
        return 0.0, TransportPlan(flows=(), cost=0.0)

    supply = np.array([balanced[x] for x in sources])
    demand = np.array([-balanced[x] for x in sinks])
    demand *= supply.sum() / demand.sum()
    costs = np.ascontiguousarray(space.dist[np.ix_(sources, sinks)])
    plan = ot.emd(supply, demand, costs)

    flows = tuple(
        (sources[i], sinks[j], float(plan[i, j])) for i, j in zip(*np.nonzero(plan > 0)) if plan[i, j] > 0
    )
    cost = math.fsum(mass * float(space.dist[s, t]) for s, t, mass in flows)
    return cost, TransportPlan(flows=flows, cost=cost)


def free_norm(mu: FreeVector, space: PseudoMetric, method: NormMethod = NormMethod.FLOW) -> float:
    if method == NormMethod.LP:
        return free_norm_dual(mu, space)[0]
    return free_norm_flow(mu, space)[0]


def free_norm_vertex_oracle(mu: FreeVector, space: PseudoMetric) -> float:
    """Brute force over the vertices of the Lipschitz unit ball; spaces of at most five points."""
    if space.n > 5:
        raise ValueError("the vertex oracle is limited to five points")
    ball = _lp.lip_ball(space.dist, space.base)
    canonical = _check_support(mu, space)
    objective = np.array([canonical.coeffs.get(p, 0.0) for p in ball.variables])
    return _lp.vertex_enumeration_max(objective, ball.A_ub.toarray(), ball.b_ub)


def pairing(f: LipFunction, mu: FreeVector) -> float:
    if mu.coeffs and max(mu.coeffs) >= f.n:
        raise ValueError("free vector support lies outside the function's domain")
    return math.fsum(c * float(f.values[x]) for x, c in mu.coeffs.items())


def _check_map(lmap: Sequence[int], source: PseudoMetric, target: PseudoMetric) -> None:
    if len(lmap) != source.n:
        raise ValueError("the point map must be defined on every source point")
    if any(not 0 <= y < target.n for y in lmap):
        raise ValueError("the point map leaves the target space")
    if lmap[source.base] != target.base:
        raise ValueError("the point map must send the base to the base")


def pushforward(lmap: Sequence[int], mu: FreeVector, source: PseudoMetric, target: PseudoMetric) -> FreeVector:
    """(L̂μ)(y) = Σ_{L(x)=y} μ(x), summed in increasing x."""
    _check_map(lmap, source, target)
    image: dict[int, float] = {}
    for x, c in mu.coeffs.items():
        image[lmap[x]] = image.get(lmap[x], 0.0) + c
    return FreeVector(image).canonical(target.base)


def map_lip_norm(lmap: Sequence[int], source: PseudoMetric, target: PseudoMetric) -> float:
    """‖L‖_Lip, which is also the norm of the linearised map L̂ between free spaces."""
    _check_map(lmap, source, target)
    if source.n < 2:
        return 0.0
    images = np.asarray(lmap)
    us, vs = np.triu_indices(source.n, k=1)
    return float(np.max(target.dist[images[us], images[vs]] / source.dist[us, vs]))


def restriction_projection(mu: FreeVector, space: PseudoMetric, subset: Sequence[int]) -> FreeVector:
    """μ|_F re-indexed on the induced subspace (points of F in increasing order)."""
    members = sorted(set(subset))
    if space.base not in members:
        raise ValueError("the subset must contain the base point")
    canonical = mu.canonical(space.base)
    outside = canonical.support - set(members)
    if outside:
        raise ValueError(f"support {sorted(outside)} is not contained in the subset")
    position = {x: i for i, x in enumerate(members)}
    return FreeVector({position[x]: c for x, c in canonical.coeffs.items()})


def random_free_vector(rng: np.random.Generator, space: PseudoMetric, support_size: int) -> FreeVector:
    """Coefficients uniform in [-1, 1] on a random support avoiding the base."""
    candidates = [x for x in range(space.n) if x != space.base]
    size = min(support_size, len(candidates))
    if size == 0:
        return FreeVector()
    chosen = sorted(int(x) for x in rng.choice(candidates, size=size, replace=False))
    return FreeVector({x: float(rng.uniform(-1.0, 1.0)) for x in chosen})


def random_lip_function(rng: np.random.Generator, space: PseudoMetric, anchors: int = 4) -> LipFunction:
    """A random Lipschitz function of norm 1 (or 0 on one-point spaces): min_j (c_j + d(·, z_j)), rescaled."""
    if space.n < 2:
        return LipFunction.zero(space.n, space.base)
    chosen = rng.choice(space.n, size=min(anchors, space.n), replace=False)
    offsets = rng.uniform(0.0, float(space.dist.max()), size=chosen.size)
    values = np.min(offsets[np.newaxis, :] + space.dist[:, chosen], axis=1)
    f = LipFunction.normalized(values, space.base)
    norm = lip_norm(f, space)
    return f * (1.0 / norm) if norm > 0 else f
