"""Metric quotients: collapsing a subset, general partitions with teleports, and the dual LP characterisation."""

import dataclasses
from collections.abc import Hashable, Iterable, Sequence
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from . import _lp
from .metric_core import FloatArray, PointedMetricSpace, PseudoMetric, segments_space, shortest_path_lengths


@dataclasses.dataclass(frozen=True)
class Partition:
    """
    Equivalence relation on the points 0..n-1.

    Classes are stored sorted and ordered by their smallest member, so equal relations compare equal.
    """

    classes: tuple[tuple[int, ...], ...]
    class_of: tuple[int, ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for members in self.classes:
            if not members:
                raise ValueError("partition classes must be nonempty")
            if seen.intersection(members):
                raise ValueError("partition classes must be disjoint")
            seen.update(members)
        if seen != set(range(len(self.class_of))):
            raise ValueError("partition classes must cover every point exactly once")
        for index, members in enumerate(self.classes):
            if any(self.class_of[x] != index for x in members):
                raise ValueError("class_of is inconsistent with classes")

    @classmethod
    def from_classes(cls, classes: Iterable[Iterable[int]], n: Optional[int] = None) -> "Partition":
        canonical = sorted((tuple(sorted(set(members))) for members in classes), key=lambda c: c[0] if c else -1)
        size = n if n is not None else 1 + max((c[-1] for c in canonical if c), default=-1)
        class_of = [-1] * size
        for index, members in enumerate(canonical):
            for x in members:
                if not 0 <= x < size:
                    raise ValueError(f"point {x} out of range for {size} points")
                class_of[x] = index
        return cls(classes=tuple(canonical), class_of=tuple(class_of))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls.from_classes(([x] for x in range(n)), n)

    @classmethod
    def from_labels(cls, labels: Sequence[Hashable]) -> "Partition":
        groups: dict[Hashable, list[int]] = {}
        for x, label in enumerate(labels):
            groups.setdefault(label, []).append(x)
        return cls.from_classes(groups.values(), len(labels))

    @classmethod
    def collapsing(cls, n: int, subset: Iterable[int]) -> "Partition":
        """One class for `subset`, singletons elsewhere."""
        members = set(subset)
        return cls.from_classes([members] + [[x] for x in range(n) if x not in members], n)

    @property
    def n(self) -> int:
        return len(self.class_of)

    def __len__(self) -> int:
        return len(self.classes)


@dataclasses.dataclass(frozen=True)
class QuotientMap:
    """Quotient space plus the projection: point x of the original space lands on point projection[x]."""

    space: PointedMetricSpace
    projection: tuple[int, ...]


def _class_id(space: PseudoMetric, members: Sequence[int]) -> str:
    if len(members) == 1:
        return space.ids[members[0]]
    return "[" + "|".join(space.ids[x] for x in members) + "]"


def class_min_distances(space: PseudoMetric, partition: Partition) -> FloatArray:
    """W[a, b] = min d(x, y) over x in class a, y in class b; zero on the diagonal."""
    if partition.n != space.n:
        raise ValueError("partition size does not match the space")
    rows = np.array([space.dist[list(members)].min(axis=0) for members in partition.classes])
    weights = np.array([rows[:, list(members)].min(axis=1) for members in partition.classes]).T
    np.fill_diagonal(weights, 0.0)
    return weights


def quotient_pseudometric(space: PseudoMetric, partition: Partition) -> PseudoMetric:
    """
    Chain-infimum pseudometric on the classes: shortest paths where moves inside a class are free.

    Contracting every class to a vertex joined by its minimal cross distances gives the same lengths as the
    point graph with zero-weight edges inside classes.
    """
    dist = shortest_path_lengths(class_min_distances(space, partition))
    return PseudoMetric(
        dist,
        base=partition.class_of[space.base],
        ids=tuple(_class_id(space, members) for members in partition.classes),
        name=f"{space.name}/~" if space.name else "quotient",
        validate=False,
    )


def metric_identification(pseudo: PseudoMetric) -> QuotientMap:
    """Merge points at distance zero; the result is a metric space and the projection records the merges."""
    zero = sparse.csr_matrix(pseudo.dist == 0)
    _, labels = csgraph.connected_components(zero, directed=False)
    order: dict[int, int] = {}
    for label in labels.tolist():
        order.setdefault(label, len(order))
    projection = tuple(order[label] for label in labels.tolist())
    groups: list[list[int]] = [[] for _ in order]
    for x, target in enumerate(projection):
        groups[target].append(x)

    representatives = [members[0] for members in groups]
    space = PointedMetricSpace(
        pseudo.dist[np.ix_(representatives, representatives)],
        base=projection[pseudo.base],
        ids=tuple(_class_id(pseudo, members) for members in groups),
        name=pseudo.name,
        validate=False,
    )
    return QuotientMap(space=space, projection=projection)


def collapse_subset(space: PointedMetricSpace, subset: Iterable[int]) -> QuotientMap:
    """M/F: d̃([x], [y]) = min{d(x, y), d(x, F) + d(y, F)}, with [F] the new base."""
    members = set(subset)
    if space.base not in members:
        raise ValueError("the collapsed set must contain the base point")

    partition = Partition.collapsing(space.n, members)
    to_set = space.distance_to_set(members)
    reps = np.array([c[0] for c in partition.classes])
    through = to_set[reps][:, np.newaxis] + to_set[reps][np.newaxis, :]
    dist = np.minimum(space.dist[np.ix_(reps, reps)], through)
    collapsed = partition.class_of[space.base]
    dist[collapsed, :] = to_set[reps]
    dist[:, collapsed] = to_set[reps]
    dist[collapsed, collapsed] = 0.0

    pseudo = PseudoMetric(
        dist,
        base=collapsed,
        ids=tuple(_class_id(space, c) for c in partition.classes),
        name=f"{space.name}/F" if space.name else "collapse",
        validate=False,
    )
    identified = metric_identification(pseudo)
    projection = tuple(identified.projection[partition.class_of[x]] for x in range(space.n))
    return QuotientMap(space=identified.space, projection=projection)


def quotient_via_lip(space: PseudoMetric, partition: Partition, x: int, y: int) -> float:
    """max f(x) - f(y) over 1-Lipschitz f that are constant on every class."""
    if partition.n != space.n:
        raise ValueError("partition size does not match the space")
    cx, cy = partition.class_of[x], partition.class_of[y]
    if cx == cy:
        return 0.0

    base_class = partition.class_of[space.base]
    columns = [c for c in range(len(partition)) if c != base_class]
    col_of = np.full(len(partition), -1, dtype=np.int64)
    col_of[columns] = np.arange(len(columns))

    labels = np.asarray(partition.class_of)
    us, vs = np.triu_indices(space.n, k=1)
    cross = labels[us] != labels[vs]
    us, vs = us[cross], vs[cross]
    row_ids = np.arange(len(us))

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for ends, sign in ((us, 1.0), (vs, -1.0)):
        target = col_of[labels[ends]]
        keep = target >= 0
        r, c = row_ids[keep], target[keep]
        rows.extend((2 * r, 2 * r + 1))
        cols.extend((c, c))
        vals.extend((np.full(r.size, sign), np.full(r.size, -sign)))
    A_ub = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(2 * len(us), len(columns))
    )
    b_ub = np.repeat(space.dist[us, vs], 2)

    objective = np.zeros(len(columns))
    if col_of[cx] >= 0:
        objective[col_of[cx]] += 1.0
    if col_of[cy] >= 0:
        objective[col_of[cy]] -= 1.0
    value, _ = _lp.maximize(objective, A_ub, b_ub)
    return value


def segments_collapse_fixture(
    J: int, m: int = 5, collapse_segments: bool = True
) -> tuple[PointedMetricSpace, Partition]:
    """
    ℓ_1 segments with the endpoints e_1..e_J identified and, optionally, each middle piece
    F_j = [1/4 + 2^-(2+j), 3/4 - 2^-(2+j)]e_j collapsed to a point.

    Every F_j endpoint is a sample point. Returns the space and the partition; the quotient distance from
    the base to the endpoint class is 1 with only the endpoints identified and 1/2 + 2^-(1+J) with the
    segments collapsed too.
    """
    margins = [2.0 ** -(2 + j) for j in range(1, J + 1)]
    extra = [[0.25 + h, 0.75 - h] for h in margins]
    space = segments_space(J, m, branch_params=extra)

    endpoints: list[int] = []
    pieces: list[list[int]] = [[] for _ in range(J)]
    for x, point_id in enumerate(space.ids):
        if x == space.base:
            continue
        branch, param = point_id[1:].split(":")
        j, t = int(branch), float(param)
        if t == 1.0:
            endpoints.append(x)
        elif collapse_segments and extra[j - 1][0] <= t <= extra[j - 1][1]:
            pieces[j - 1].append(x)

    grouped = set(endpoints).union(*pieces)
    classes = [endpoints] + [p for p in pieces if p] + [[x] for x in range(space.n) if x not in grouped]
    return space, Partition.from_classes(classes, space.n)
