"""
Extension operators from Lip₀(F) to Lip₀(M).

Linear operators are |M|×|F| matrices whose rows sum to 1 and whose F-rows are indicators. Their norm is
computed through the predual projection P(δ_x) = Σ_y E[x, y] δ_y:

    ‖E‖ = ‖P‖ = max over pairs x ≠ y of ‖P(δ_x - δ_y)‖_F(F) / d(x, y)

where each free norm is the optimum of the inner problem max (Ef)(x) - (Ef)(y) over 1-Lipschitz f on F.
"""

import dataclasses
import functools
from collections.abc import Iterable

import numpy as np
import numpy.typing as npt

from .banach_lab import RadialNet
from .free_norm import FreeVector, LipFunction, free_norm, free_norm_vertex_oracle, lip_norm
from .metric_core import FloatArray, PointedMetricSpace, restrict
from .schema import NormMethod

ROW_SUM_TOLERANCE = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class LinearExtensionOperator:
    space: PointedMetricSpace
    subset: tuple[int, ...]
    weights: FloatArray

    def __post_init__(self) -> None:
        subset = tuple(sorted(set(self.subset)))
        if len(subset) != len(self.subset):
            raise ValueError("subset must list distinct points")
        if not subset or subset[0] < 0 or subset[-1] >= self.space.n:
            raise ValueError("subset indices out of range")
        if self.space.base not in subset:
            raise ValueError("subset must contain the base point")
        weights = np.array(self.weights, dtype=np.float64)
        if weights.shape != (self.space.n, len(subset)):
            raise ValueError(f"weights must have shape {(self.space.n, len(subset))}, got {weights.shape}")
        identity = np.eye(len(subset))
        if not np.array_equal(weights[list(subset)], identity):
            raise ValueError("rows of subset points must be indicator rows (E is not an extension operator)")
        if np.any(np.abs(weights.sum(axis=1) - 1.0) > ROW_SUM_TOLERANCE):
            raise ValueError("every row must sum to 1")
        weights.setflags(write=False)
        object.__setattr__(self, "subset", subset)
        object.__setattr__(self, "weights", weights)

    @functools.cached_property
    def subset_space(self) -> PointedMetricSpace:
        return restrict(self.space, self.subset)

    @property
    def subset_base(self) -> int:
        return self.subset.index(self.space.base)


def _subset_space(space: PointedMetricSpace, subset: Iterable[int]) -> tuple[tuple[int, ...], PointedMetricSpace]:
    members = tuple(sorted(set(subset)))
    return members, restrict(space, members)


def infconv_extend(f: LipFunction, space: PointedMetricSpace, subset: Iterable[int]) -> LipFunction:
    """Non-linear isometric extension (Ef)(x) = min_y f(y) + ‖f‖_Lip d(x, y); values on F are kept as given."""
    members, sub = _subset_space(space, subset)
    if f.n != len(members) or f.base != sub.base:
        raise ValueError("function is not defined on the subset")
    constant = lip_norm(f, sub)
    values = np.min(f.values[np.newaxis, :] + constant * space.dist[:, list(members)], axis=1)
    values[list(members)] = f.values
    values[space.base] = 0.0
    return LipFunction(values, space.base)


def nearest_point_extension(space: PointedMetricSpace, subset: Iterable[int]) -> LinearExtensionOperator:
    """Each point copies the value of its nearest subset point, ties going to the lowest index."""
    members, _ = _subset_space(space, subset)
    nearest = np.argmin(space.dist[:, list(members)], axis=1)
    weights = np.zeros((space.n, len(members)))
    weights[np.arange(space.n), nearest] = 1.0
    return LinearExtensionOperator(space, members, weights)


def shepard_extension(
    space: PointedMetricSpace, subset: Iterable[int], exponent: float = 2.0
) -> LinearExtensionOperator:
    """Inverse-distance weights d(x, y)^-s off the subset."""
    if not exponent > 0:
        raise ValueError(f"exponent must be positive, got {exponent!r}")
    members, _ = _subset_space(space, subset)
    dist = space.dist[:, list(members)]
    weights = np.zeros_like(dist)
    for x in range(space.n):
        if x in members:
            weights[x, members.index(x)] = 1.0
            continue
        row = (dist[x].min() / dist[x]) ** exponent
        weights[x] = row / row.sum()
    return LinearExtensionOperator(space, members, weights)


def radial_linear_extension(net: RadialNet, band_radii: Iterable[float]) -> LinearExtensionOperator:
    """
    Linear interpolation along rays between full radius bands.

    Below the innermost band the value is interpolated towards the base (value 0); beyond the outermost
    band it is continued as a constant.
    """
    bands = sorted(set(float(r) for r in band_radii))
    radius_index = {r: j for j, r in enumerate(net.radii)}
    missing = [r for r in bands if r not in radius_index]
    if missing:
        raise ValueError(f"band radii {missing} are not radii of the net")

    space = net.space
    members = sorted([space.base] + [net.index(i, radius_index[r]) for i in range(net.size) for r in bands])
    column = {x: j for j, x in enumerate(members)}
    weights = np.zeros((space.n, len(members)))
    weights[space.base, column[space.base]] = 1.0

    for x in range(space.n):
        if x == space.base:
            continue
        direction, t = net.direction_of(x), net.radius_of(x)
        if not bands:
            weights[x, column[space.base]] = 1.0
            continue
        position = int(np.searchsorted(bands, t))
        if position < len(bands) and bands[position] == t:
            weights[x, column[x]] = 1.0
        elif position == len(bands):
            weights[x, column[net.index(direction, radius_index[bands[-1]])]] = 1.0
        else:
            upper = bands[position]
            lower = bands[position - 1] if position > 0 else 0.0
            share = (t - lower) / (upper - lower)
            weights[x, column[net.index(direction, radius_index[upper])]] = share
            lower_point = space.base if position == 0 else net.index(direction, radius_index[lower])
            weights[x, column[lower_point]] += 1.0 - share
    return LinearExtensionOperator(space, tuple(members), weights)


def apply(operator: LinearExtensionOperator, f: LipFunction) -> LipFunction:
    if f.n != len(operator.subset) or f.base != operator.subset_base:
        raise ValueError("function is not defined on the operator's subset")
    values = operator.weights @ f.values
    values[operator.space.base] = 0.0
    return LipFunction(values, operator.space.base)


def preadjoint_projection(operator: LinearExtensionOperator, mu: FreeVector) -> FreeVector:
    """P: F(M) → F(F) with P* = E; on vectors supported in F it is the restriction."""
    coefficients = operator.weights.T @ mu.canonical(operator.space.base).to_dense(operator.space.n)
    return FreeVector.from_dense(coefficients).canonical(operator.subset_base)


def rebase_extension(operator: LinearExtensionOperator, new_base: int) -> LinearExtensionOperator:
    """
    E'(f) = E(f - f(0')) + f(0') for a new base 0' in F.

    Rows summing to 1 make E' the same matrix over the re-pointed space, hence ‖E'‖ = ‖E‖.
    """
    if new_base not in operator.subset:
        raise ValueError("the new base must belong to the subset")
    return LinearExtensionOperator(operator.space.with_base(new_base), operator.subset, operator.weights)


def pairwise_extension_norms(
    operator: LinearExtensionOperator, method: NormMethod = NormMethod.LP
) -> npt.NDArray[np.float64]:
    """N[x, y] = ‖P(δ_x - δ_y)‖_F(F) = max (Ef)(x) - (Ef)(y) over 1-Lipschitz f on F."""
    n = operator.space.n
    norms = np.zeros((n, n))
    sub = operator.subset_space
    for x in range(n):
        for y in range(x + 1, n):
            difference = FreeVector.from_dense(operator.weights[x] - operator.weights[y])
            if difference.coeffs:
                norms[x, y] = norms[y, x] = free_norm(difference, sub, method)
    return norms


def max_pair_ratio(norms: FloatArray, space: PointedMetricSpace) -> float:
    if space.n < 2:
        return 0.0
    us, vs = np.triu_indices(space.n, k=1)
    return float(np.max(norms[us, vs] / space.dist[us, vs]))


def extension_operator_norm(operator: LinearExtensionOperator, method: NormMethod = NormMethod.LP) -> float:
    return max_pair_ratio(pairwise_extension_norms(operator, method), operator.space)


def extension_operator_norm_oracle(operator: LinearExtensionOperator) -> float:
    """Same quantity with every inner problem solved by polytope-vertex enumeration; |F| <= 4."""
    if len(operator.subset) > 4:
        raise ValueError("the vertex oracle is limited to subsets of at most four points")
    n = operator.space.n
    norms = np.zeros((n, n))
    for x in range(n):
        for y in range(x + 1, n):
            difference = FreeVector.from_dense(operator.weights[x] - operator.weights[y])
            norms[x, y] = free_norm_vertex_oracle(difference, operator.subset_space)
    return max_pair_ratio(norms, operator.space)
