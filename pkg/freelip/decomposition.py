"""
Decompositions of free spaces with measured distortion.

Kalton's annular operators T_k cut a free-space element into dyadic annuli with logarithmic radial weights.
The union results glue free spaces of pieces into ℓ_1 sums; every isomorphism is a concrete linear map
between finite-dimensional spaces and its norm and inverse norm are computed exactly, pair by pair.
"""

import dataclasses
import math
import warnings
from collections.abc import Mapping, Sequence
from typing import Optional

import numpy as np
import numpy.typing as npt

from .banach_lab import crown_index
from .free_norm import FreeVector, free_norm, random_free_vector, restriction_projection
from .lip_ops import LinearExtensionOperator, max_pair_ratio, nearest_point_extension, pairwise_extension_norms
from .metric_core import FloatArray, PointedMetricSpace, restrict, scale
from .quotient import collapse_subset
from .schema import NormMethod

KALTON_CONSTANT = 72.0


def kalton_weight(r: float, k: int) -> float:
    """Weight of T_k at radius r: a tent in log₂ r peaking at r = 2^k, vanishing outside (2^(k-1), 2^(k+1))."""
    if not r > 0:
        raise ValueError(f"kalton weights are defined for positive radii, got {r!r}")
    if r <= math.ldexp(1.0, k - 1) or r > math.ldexp(1.0, k + 1):
        return 0.0
    if r <= math.ldexp(1.0, k):
        return math.log2(r) - k + 1
    return k + 1 - math.log2(r)


def kalton_weights(radii: npt.ArrayLike, k: npt.ArrayLike) -> FloatArray:
    """Vectorised kalton_weight; `radii` and `k` broadcast against each other."""
    r = np.asarray(radii, dtype=np.float64)
    ks = np.asarray(k, dtype=np.int64)
    if not np.all(r > 0):
        raise ValueError("kalton weights are defined for positive radii")
    logs = np.log2(r)
    inside = (r > np.ldexp(1.0, ks - 1)) & (r <= np.ldexp(1.0, ks + 1))
    tent = np.where(r <= np.ldexp(1.0, ks), logs - ks + 1, ks + 1 - logs)
    return np.where(inside, tent, 0.0)


def partition_of_unity_error(radii: npt.ArrayLike) -> float:
    """
    Largest |Σ_k kalton_weight(r, k) - 1| over the radii.

    For 2^j <= r < 2^(j+1) only k = j-1..j+2 can carry weight.
    """
    r = np.asarray(radii, dtype=np.float64).ravel()
    if r.size == 0:
        return 0.0
    _, exponents = np.frexp(r)
    ks = (exponents - 1)[:, np.newaxis] + np.arange(-1, 3)
    return float(np.max(np.abs(kalton_weights(r[:, np.newaxis], ks).sum(axis=1) - 1.0)))


def _split_coefficient(r: float, c: float) -> dict[int, float]:
    """Share of c = μ(x) per annulus index; the shares add up to c exactly."""
    j = crown_index(r)
    if r == math.ldexp(1.0, j + 1):
        return {j + 1: c}
    upper = kalton_weight(r, j + 1)
    if upper >= 0.5:
        major, minor = j + 1, j
        share = upper * c
    else:
        major, minor = j, j + 1
        share = kalton_weight(r, j) * c
    return {major: share, minor: c - share}


@dataclasses.dataclass(frozen=True, eq=False)
class AnnularSplit:
    space: PointedMetricSpace
    parts: Mapping[int, FreeVector]

    def reconstruct(self) -> FreeVector:
        total = FreeVector()
        for k in sorted(self.parts):
            total = total + self.parts[k]
        return total

    def norms(self, method: NormMethod = NormMethod.FLOW) -> dict[int, float]:
        return {k: free_norm(part, self.space, method) for k, part in sorted(self.parts.items())}


def kalton_split(mu: FreeVector, space: PointedMetricSpace) -> AnnularSplit:
    """parts[k] = Σ_x w_k(d(x, 0)) μ(x) δ_x over the indices k whose annulus meets the support."""
    canonical = mu.canonical(space.base)
    parts: dict[int, dict[int, float]] = {}
    for x, c in canonical.coeffs.items():
        r = float(space.dist[x, space.base])
        if r == 0:
            raise ValueError(f"point {x} is at distance zero from the base")
        for k, share in _split_coefficient(r, c).items():
            if share != 0.0:
                parts.setdefault(k, {})[x] = share
    return AnnularSplit(space, {k: FreeVector(coeffs) for k, coeffs in sorted(parts.items())})


@dataclasses.dataclass(frozen=True)
class KaltonReport:
    parts: int
    total: float
    norm: float

    @property
    def ratio(self) -> float:
        return self.total / self.norm if self.norm > 0 else 0.0


def kalton_ratio(mu: FreeVector, space: PointedMetricSpace, method: NormMethod = NormMethod.FLOW) -> KaltonReport:
    """Σ_k ‖T_k μ‖ against ‖μ‖; the ratio never exceeds KALTON_CONSTANT."""
    split = kalton_split(mu, space)
    total = math.fsum(split.norms(method).values())
    return KaltonReport(parts=len(split.parts), total=total, norm=free_norm(mu, space, method))


@dataclasses.dataclass(frozen=True)
class SeparationReport:
    theta: float
    constant: float
    norm_of_sum: float
    sum_of_norms: float

    @property
    def lower_bound(self) -> float:
        return self.constant * self.sum_of_norms

    @property
    def slack(self) -> float:
        return self.norm_of_sum - self.lower_bound


def _in_annulus(radius: float, inner_exp: int, outer_exp: int) -> bool:
    return math.ldexp(1.0, inner_exp) < radius <= math.ldexp(1.0, outer_exp)


def separated_lower_bound_check(
    parts: Sequence[FreeVector],
    annuli: Sequence[tuple[int, int]],
    space: PointedMetricSpace,
    method: NormMethod = NormMethod.FLOW,
) -> SeparationReport:
    """
    ‖γ_1 + … + γ_n‖ ≥ (2^θ - 1)/(2^θ + 1) Σ ‖γ_k‖ for γ_k supported in 2^r_k < d(x, 0) <= 2^s_k and
    θ = min (r_(k+1) - s_k). With a single part θ is infinite and the constant is 1.
    """
    if len(parts) != len(annuli):
        raise ValueError("every part needs its annulus")
    if not parts:
        raise ValueError("at least one part is required")
    exponents = [e for pair in annuli for e in pair]
    if any(b <= a for a, b in zip(exponents, exponents[1:])):
        raise ValueError(f"annulus exponents must be strictly increasing, got {exponents}")

    radii = space.radii
    canonical = [part.canonical(space.base) for part in parts]
    for index, (part, (inner, outer)) in enumerate(zip(canonical, annuli)):
        outside = [x for x in part.support if not _in_annulus(float(radii[x]), inner, outer)]
        if outside:
            raise ValueError(f"part {index} has support {sorted(outside)} outside its annulus ({inner}, {outer}]")

    if len(parts) == 1:
        warnings.warn("separation check with a single part is trivial")
        theta = math.inf
        constant = 1.0
    else:
        theta = float(min(annuli[k + 1][0] - annuli[k][1] for k in range(len(annuli) - 1)))
        constant = (2.0**theta - 1.0) / (2.0**theta + 1.0)

    total = FreeVector()
    for part in canonical:
        total = total + part
    return SeparationReport(
        theta=theta,
        constant=constant,
        norm_of_sum=free_norm(total, space, method),
        sum_of_norms=math.fsum(free_norm(part, space, method) for part in canonical),
    )


def even_band_check(
    mu: FreeVector,
    space: PointedMetricSpace,
    bands: Sequence[tuple[int, int]],
    method: NormMethod = NormMethod.FLOW,
) -> SeparationReport:
    """Splits μ along separated dyadic bands and checks that the free norm is ℓ_1-additive up to the constant."""
    radii = space.radii
    pieces: list[dict[int, float]] = [{} for _ in bands]
    for x, c in mu.canonical(space.base).coeffs.items():
        index = next((i for i, (a, b) in enumerate(bands) if _in_annulus(float(radii[x]), a, b)), None)
        if index is None:
            raise ValueError(f"point {x} at radius {float(radii[x])!r} lies in no band")
        pieces[index][x] = c
    return separated_lower_bound_check([FreeVector(p) for p in pieces], bands, space, method)


def _residual_norms(
    operator: LinearExtensionOperator, pairs: Sequence[tuple[int, int]], method: NormMethod
) -> dict[tuple[int, int], float]:
    """‖δ_x - δ_y - ι(w_x - w_y)‖ in F(M), the pair norms of h ↦ h - E(h|_F)."""
    space = operator.space
    columns = list(operator.subset)
    norms = {}
    for x, y in pairs:
        vector = np.zeros(space.n)
        vector[x] += 1.0
        vector[y] -= 1.0
        vector[columns] -= operator.weights[x] - operator.weights[y]
        norms[(x, y)] = free_norm(FreeVector.from_dense(vector), space, method)
    return norms


@dataclasses.dataclass(frozen=True)
class DistortionReport:
    """‖Φ‖ and ‖Φ⁻¹‖ of a concrete isomorphism with the bounds they are checked against."""

    forward: float
    inverse: float
    forward_bound: float
    inverse_bound: float
    distortion_bound: float

    @property
    def distortion(self) -> float:
        return self.forward * self.inverse


@dataclasses.dataclass(frozen=True)
class ExtFMReport(DistortionReport):
    extension_norm: float = 0.0


def extFM_distortion(  # pylint: disable=invalid-name
    operator: LinearExtensionOperator, method: NormMethod = NormMethod.LP
) -> ExtFMReport:
    """
    Φ(f, g) = E(f) + g∘π from Lip₀(F) ⊕_∞ Lip₀(M/F) onto Lip₀(M), inverse h ↦ (h|_F, h - E(h|_F)).

    ‖Φ‖ = max over pairs of (N_E(x, y) + d̃(πx, πy)) / d(x, y), ‖Φ⁻¹‖ is the larger of the
    restriction norm and the pair norms of h ↦ h - E(h|_F).
    """
    space = operator.space
    pair_norms = pairwise_extension_norms(operator, method)
    extension_norm = max_pair_ratio(pair_norms, space)

    quotient = collapse_subset(space, operator.subset)
    projection = np.asarray(quotient.projection)
    collapsed = quotient.space.dist[np.ix_(projection, projection)]
    forward = max_pair_ratio(pair_norms + collapsed, space)

    pairs = [(x, y) for x in range(space.n) for y in range(x + 1, space.n)]
    residuals = _residual_norms(operator, pairs, method)
    inverse = max(
        [1.0 if len(operator.subset) >= 2 else 0.0]
        + [norm / float(space.dist[x, y]) for (x, y), norm in residuals.items()]
    )
    bound = extension_norm + 1.0
    return ExtFMReport(
        forward=forward,
        inverse=inverse,
        forward_bound=bound,
        inverse_bound=bound,
        distortion_bound=bound * bound,
        extension_norm=extension_norm,
    )


def _check_pieces(space: PointedMetricSpace, pieces: Sequence[Sequence[int]], shared: frozenset[int]) -> None:
    seen: set[int] = set()
    for piece in pieces:
        members = set(piece)
        if not members or min(members) < 0 or max(members) >= space.n:
            raise ValueError("piece indices out of range")
        overlap = (seen & members) - shared
        if overlap:
            raise ValueError(f"pieces overlap at {sorted(overlap)}")
        seen |= members
    if seen != set(range(space.n)):
        raise ValueError(f"pieces do not cover points {sorted(set(range(space.n)) - seen)}")


def orthogonality_constant(
    space: PointedMetricSpace, pieces: Sequence[Sequence[int]], distance_to_core: Optional[FloatArray] = None
) -> float:
    """max(1, max over cross pairs of (ρ(x) + ρ(y)) / d(x, y)) with ρ the distance to the base by default."""
    rho = space.radii if distance_to_core is None else distance_to_core
    core = {x for x in range(space.n) if rho[x] == 0}
    constant = 1.0
    for i, first in enumerate(pieces):
        left = [x for x in first if x not in core]
        for second in pieces[i + 1 :]:
            right = [y for y in second if y not in core]
            if left and right:
                block = (rho[left][:, np.newaxis] + rho[right][np.newaxis, :]) / space.dist[np.ix_(left, right)]
                constant = max(constant, float(block.max()))
    return constant


@dataclasses.dataclass(frozen=True)
class OrthogonalUnionReport(DistortionReport):
    constant: float = 1.0
    samples: int = 0
    lowest_ratio: float = 1.0
    highest_ratio: float = 1.0


def orthogonal_union_check(
    space: PointedMetricSpace,
    pieces: Sequence[Sequence[int]],
    rng: np.random.Generator,
    samples: int = 20,
    method: NormMethod = NormMethod.FLOW,
) -> OrthogonalUnionReport:
    """
    Concatenation (f_γ) ↦ h with h|M_γ = f_γ for pieces meeting only at the base.

    Its norm is max(1, C), its inverse norm 1. `samples` random μ drawn from `rng` check the sandwich
    ‖μ‖ <= Σ_γ ‖μ|M_γ‖ <= max(1, C)‖μ‖; the ratios Σ/‖μ‖ are reported.
    """
    if samples < 1:
        raise ValueError(f"at least one sample is needed, got {samples}")
    members = [sorted(set(piece) | {space.base}) for piece in pieces]
    _check_pieces(space, members, frozenset({space.base}))
    constant = orthogonality_constant(space, members)

    ratios = []
    if space.n > 1:
        subspaces = [restrict(space, piece) for piece in members]
        for _ in range(samples):
            mu = random_free_vector(rng, space, int(rng.integers(1, space.n)))
            norm = free_norm(mu, space, method)
            if norm == 0:
                continue
            split = math.fsum(
                free_norm(restriction_projection(mu.restricted(piece), space, piece), sub, method)
                for piece, sub in zip(members, subspaces)
            )
            ratios.append(split / norm)

    return OrthogonalUnionReport(
        forward=max(1.0, constant),
        inverse=1.0,
        forward_bound=max(1.0, constant),
        inverse_bound=1.0,
        distortion_bound=max(1.0, constant),
        constant=constant,
        samples=len(ratios),
        lowest_ratio=min(ratios, default=1.0),
        highest_ratio=max(ratios, default=1.0),
    )


@dataclasses.dataclass(frozen=True)
class GodardBlock:
    piece: int
    origin: int
    forward: float
    inverse: float
    diameter: float


@dataclasses.dataclass(frozen=True)
class GodardReport(DistortionReport):
    scale: float = 1.0
    lower: float = 1.0
    upper: float = 1.0
    certified_inverse_bound: float = 0.0
    blocks: tuple[GodardBlock, ...] = ()

    @property
    def certified_distortion_bound(self) -> float:
        return self.upper * self.certified_inverse_bound


def separation_bounds(space: PointedMetricSpace, pieces: Sequence[Sequence[int]]) -> tuple[float, float]:
    """Smallest and largest distance between points of different pieces."""
    lowest, highest = math.inf, 0.0
    for i, first in enumerate(pieces):
        for second in pieces[i + 1 :]:
            block = space.dist[np.ix_(list(first), list(second))]
            lowest, highest = min(lowest, float(block.min())), max(highest, float(block.max()))
    return lowest, highest


def separated_union_decompose(
    space: PointedMetricSpace,
    pieces: Sequence[Sequence[int]],
    lower: Optional[float] = None,
    upper: Optional[float] = None,
) -> GodardReport:
    """
    F(M) ≃ (Σ F(M_γ))_ℓ1 ⊕ ℓ_1(Γ*) for disjoint pieces at mutual distances in [A, B].
    pieces[0] holds the base.

    The space is rescaled so that A <= 1 <= B. Each Φ_γ: f ↦ (f - f(0_γ), f(0_γ)) on M_γ ∪ {0}, where 0_γ
    is the point of M_γ nearest to the base, has exact norm max(1, d(0_γ, 0)) and exact inverse norm
    max(1, max_x (d(x, 0_γ) + 1) / d(x, 0)). The stated inverse bound (B + 1)/A needs diam M_γ <= B; the
    certified bound uses max(B, diam M_γ) instead.
    """
    if len(pieces) < 2:
        raise ValueError("a separated union needs at least two pieces")
    members = [sorted(set(piece)) for piece in pieces]
    _check_pieces(space, members, frozenset())
    if space.base not in members[0]:
        raise ValueError("the first piece must contain the base point")

    measured_lower, measured_upper = separation_bounds(space, members)
    lower = measured_lower if lower is None else lower
    upper = measured_upper if upper is None else upper
    if not 0 < lower <= measured_lower or measured_upper > upper:
        raise ValueError(
            f"separation violated: cross distances span [{measured_lower!r}, {measured_upper!r}], "
            f"declared [{lower!r}, {upper!r}]"
        )

    factor = 1.0 / lower if lower > 1 else (1.0 / upper if upper < 1 else 1.0)
    scaled = scale(space, factor) if factor != 1.0 else space
    lower, upper = lower * factor, upper * factor

    base = scaled.base
    blocks = []
    largest_diameter = 0.0
    for index, piece in enumerate(members[1:], start=1):
        origin = piece[int(np.argmin(scaled.dist[base, piece]))]
        diameter = float(scaled.dist[np.ix_(piece, piece)].max())
        largest_diameter = max(largest_diameter, diameter)
        restriction = 1.0 if len(piece) >= 2 else 0.0
        forward = max(restriction, float(scaled.dist[origin, base]))
        reach = max((float(scaled.dist[x, origin]) + 1.0) / float(scaled.dist[x, base]) for x in piece)
        inverse = max(restriction, reach)
        blocks.append(GodardBlock(piece=index, origin=origin, forward=forward, inverse=inverse, diameter=diameter))

    identity = 1.0 if len(members[0]) >= 2 else 0.0
    if largest_diameter > upper:
        warnings.warn(f"a piece has diameter {largest_diameter!r} beyond the separation bound {upper!r}")
    return GodardReport(
        forward=max([identity] + [block.forward for block in blocks]),
        inverse=max([identity] + [block.inverse for block in blocks]),
        forward_bound=upper,
        inverse_bound=(upper + 1.0) / lower,
        distortion_bound=upper * (upper + 1.0) / lower,
        scale=factor,
        lower=lower,
        upper=upper,
        certified_inverse_bound=(max(upper, largest_diameter) + 1.0) / lower,
        blocks=tuple(blocks),
    )


@dataclasses.dataclass(frozen=True)
class Union2Report(DistortionReport):
    constant: float = 1.0
    extension_norm: float = 0.0
    split: Optional[ExtFMReport] = None


def union2_check(
    space: PointedMetricSpace,
    first: Sequence[int],
    second: Sequence[int],
    operator: Optional[LinearExtensionOperator] = None,
    method: NormMethod = NormMethod.LP,
) -> Union2Report:
    """
    F(M ∪ N) ≃ F(M/F) ⊕_1 F(N/F) ⊕_1 F(F) for F = M ∩ N containing the base.

    Θ(g_M, g_N, f) = E(f) + (g_M ⊔ g_N)∘π, with E the nearest-point extension unless given. Both ‖Θ‖ and
    ‖Θ⁻¹‖ are exact; their product is checked against C(‖E‖ + 1)², with C the measured
    orthogonality constant.
    """
    left, right = sorted(set(first)), sorted(set(second))
    core = sorted(set(left) & set(right))
    if not core:
        raise ValueError("the two pieces must intersect")
    if space.base not in core:
        raise ValueError("the base point must lie in the intersection")
    _check_pieces(space, [left, right], frozenset(core))

    if operator is None:
        operator = nearest_point_extension(space, core)
    elif operator.space.n != space.n or list(operator.subset) != core:
        raise ValueError("the extension operator must extend from the intersection to the whole space")

    to_core = space.distance_to_set(core)
    constant = orthogonality_constant(space, [left, right], to_core)

    pair_norms = pairwise_extension_norms(operator, method)
    extension_norm = max_pair_ratio(pair_norms, space)

    # sup of g(πx) - g(πy) over the unit ball of Lip₀(M/F) ⊕_∞ Lip₀(N/F)
    glued = to_core[:, np.newaxis] + to_core[np.newaxis, :]
    for piece in (left, right):
        quotient = collapse_subset(restrict(space, piece), [piece.index(x) for x in core])
        projection = np.asarray(quotient.projection)
        glued[np.ix_(piece, piece)] = quotient.space.dist[np.ix_(projection, projection)]
    forward = max_pair_ratio(pair_norms + glued, space)

    within = [(x, y) for piece in (left, right) for i, x in enumerate(piece) for y in piece[i + 1 :]]
    residuals = _residual_norms(operator, sorted(set(within)), method)
    inverse = max(
        [1.0 if len(core) >= 2 else 0.0] + [norm / float(space.dist[x, y]) for (x, y), norm in residuals.items()]
    )
    bound = extension_norm + 1.0
    return Union2Report(
        forward=forward,
        inverse=inverse,
        forward_bound=constant * bound,
        inverse_bound=bound,
        distortion_bound=constant * bound * bound,
        constant=constant,
        extension_norm=extension_norm,
        split=extFM_distortion(operator, method),
    )
