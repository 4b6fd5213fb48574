"""Reading and writing the JSON file formats: spaces, partitions, free vectors, functions, operators, pieces, config."""

import json
import math
from pathlib import Path
from typing import Any, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from .exceptions import ErrorDetails, SchemaException
from .free_norm import FreeVector
from .lip_ops import LinearExtensionOperator
from .metric_core import PointedMetricSpace, from_graph, from_point_cloud
from .quotient import Partition
from .schema import (
    ExperimentConfig,
    FreeVectorFile,
    FunctionFile,
    GraphMetric,
    LpMetric,
    MatrixMetric,
    OperatorFile,
    PartitionFile,
    PiecesFile,
    PointEntry,
    SpaceFile,
)

PathLike = Union[str, Path]
ModelT = TypeVar("ModelT", bound=BaseModel)


def _schema_error(path: PathLike, message: str, errors: Any = None) -> SchemaException:
    text = f"{path}: {message}"
    return SchemaException(text, ErrorDetails(code="invalid_file", message=text, context={"errors": errors}))


def _read(path: PathLike, model: type[ModelT]) -> ModelT:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise _schema_error(path, f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        problems = [
            f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}" for error in exc.errors()
        ]
        raise _schema_error(path, "; ".join(problems), exc.errors(include_url=False)) from exc


def _write(path: PathLike, document: BaseModel) -> None:
    text = json.dumps(document.model_dump(exclude_none=True), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _indices(path: PathLike, space: PointedMetricSpace, point_ids: list[str]) -> list[int]:
    try:
        return [space.index_of(point_id) for point_id in point_ids]
    except ValueError as exc:
        raise _schema_error(path, str(exc)) from exc


def load_space(path: PathLike) -> PointedMetricSpace:
    document = _read(path, SpaceFile)
    ids = [point.id for point in document.points]
    coords = None
    if document.points[0].coords is not None:
        coords = np.array([point.coords for point in document.points], dtype=np.float64)

    name = document.name or ""
    metric = document.metric
    try:
        if isinstance(metric, MatrixMetric):
            return PointedMetricSpace(metric.matrix, base=document.base, ids=tuple(ids), coords=coords, name=name)
        if isinstance(metric, LpMetric):
            cloud = [point.coords for point in document.points]
            return from_point_cloud(cloud, p=metric.exponent, base=document.base, ids=ids, name=name)
        return from_graph(len(ids), metric.edges, base=document.base, ids=ids, name=name, coords=coords)
    except ValueError as exc:
        raise _schema_error(path, str(exc)) from exc


def _metric_entry(space: PointedMetricSpace) -> Union[MatrixMetric, LpMetric, GraphMetric]:
    origin = space.origin
    if origin is None or (origin.kind == "lp" and space.coords is None):
        return MatrixMetric(kind="matrix", matrix=space.dist.tolist())
    if origin.kind == "lp" and math.isinf(origin.p):
        return LpMetric(kind="lp", p="inf")
    if origin.kind == "lp":
        return LpMetric(kind="lp", p=origin.p)
    return GraphMetric(kind="graph", edges=list(origin.edges))


def save_space(space: PointedMetricSpace, path: PathLike) -> None:
    """
    Written in the form the space was built from: ℓ_p coordinates, graph edges or an explicit matrix.

    Derived spaces (scaled, restricted, quotients) carry no origin and are written as matrices. Loading a
    file written here and saving it again reproduces the bytes.
    """
    coords = space.coords.tolist() if space.coords is not None else [None] * space.n
    document = SpaceFile(
        name=space.name or None,
        base=space.base,
        points=[PointEntry(id=point_id, coords=c) for point_id, c in zip(space.ids, coords)],
        metric=_metric_entry(space),
    )
    _write(path, document)


def load_partition(path: PathLike, space: PointedMetricSpace) -> Partition:
    document = _read(path, PartitionFile)
    try:
        return Partition.from_classes(document.classes, space.n)
    except ValueError as exc:
        raise _schema_error(path, str(exc)) from exc


def load_freevector(path: PathLike, space: PointedMetricSpace) -> FreeVector:
    document = _read(path, FreeVectorFile)
    points = _indices(path, space, list(document.coeffs))
    return FreeVector(dict(zip(points, document.coeffs.values())))


def load_function(path: PathLike, space: PointedMetricSpace) -> dict[int, float]:
    """Values keyed by point index; the keys are the points the function is given on."""
    document = _read(path, FunctionFile)
    points = _indices(path, space, list(document.values))
    return dict(zip(points, document.values.values()))


def load_operator(path: PathLike, space: PointedMetricSpace) -> LinearExtensionOperator:
    document = _read(path, OperatorFile)
    subset = _indices(path, space, document.F)
    weights = np.asarray(document.weights, dtype=np.float64)
    if weights.shape != (space.n, len(subset)):
        raise _schema_error(path, f"weights must have shape {(space.n, len(subset))}, got {weights.shape}")
    order = np.argsort(subset, kind="stable")
    try:
        return LinearExtensionOperator(space, tuple(subset[i] for i in order), weights[:, order])
    except ValueError as exc:
        raise _schema_error(path, str(exc)) from exc


def save_operator(operator: LinearExtensionOperator, path: PathLike) -> None:
    ids = operator.space.ids
    _write(path, OperatorFile(F=[ids[x] for x in operator.subset], weights=operator.weights.tolist()))


def load_pieces(path: PathLike, space: PointedMetricSpace) -> list[list[int]]:
    document = _read(path, PiecesFile)
    for piece in document.pieces:
        if any(not 0 <= x < space.n for x in piece):
            raise _schema_error(path, f"piece {piece} has points outside the space")
    return document.pieces


def load_config(path: PathLike) -> ExperimentConfig:
    return _read(path, ExperimentConfig)
