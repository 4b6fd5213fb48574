"""Schemas and enums for freelip files, configuration and reports."""

# pylint: disable=too-few-public-methods
import math
from enum import Enum
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class NormMethod(str, Enum):
    """Holds possible values of the free-norm solver parameter."""

    LP = "lp"
    FLOW = "flow"


class BasePolicy(str, Enum):
    """Holds possible values of the base policy used when restricting a space."""

    KEEP = "keep"
    NEAREST = "nearest"
    EXPLICIT = "explicit"


class Side(str, Enum):
    """Holds possible values of the squeezing side."""

    L = "L"
    R = "R"


class ExtensionKind(str, Enum):
    """Holds possible values of the extension kind parameter."""

    INFCONV = "infconv"
    NEAREST = "nearest"
    SHEPARD = "shepard"


class Suite(str, Enum):
    """Holds possible values of the acceptance suite parameter."""

    DUALITY = "duality"
    QUOTIENT_ORACLE = "quotient-oracle"
    KALTON = "kalton"
    KALTON_SEPARATED = "kalton-separated"
    EXTFM = "extfm"
    UNION = "union"
    GODARD = "godard"
    UNION2 = "union2"
    BM4 = "bm4"


class FileModel(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


class PointEntry(FileModel):
    id: str
    coords: Optional[list[float]] = None


class MatrixMetric(FileModel):
    kind: Literal["matrix"]
    matrix: list[list[float]]


class LpMetric(FileModel):
    kind: Literal["lp"]
    p: Union[float, Literal["inf"]]

    @field_validator("p")
    @classmethod
    def _check_exponent(cls, value: Union[float, str]) -> Union[float, str]:
        if isinstance(value, float) and value < 1:
            raise ValueError("p must be at least 1")
        return value

    @property
    def exponent(self) -> float:
        return math.inf if self.p == "inf" else float(self.p)


class GraphMetric(FileModel):
    kind: Literal["graph"]
    edges: list[tuple[int, int, float]]


class SpaceFile(FileModel):
    name: Optional[str] = None
    base: int = Field(ge=0)
    points: list[PointEntry] = Field(min_length=1)
    metric: Union[MatrixMetric, LpMetric, GraphMetric] = Field(discriminator="kind")

    @model_validator(mode="after")
    def _check_consistency(self) -> "SpaceFile":
        count = len(self.points)
        if self.base >= count:
            raise ValueError(f"base {self.base} out of range for {count} points")
        ids = [point.id for point in self.points]
        if len(set(ids)) != count:
            raise ValueError("point ids must be unique")
        with_coords = [point.coords is not None for point in self.points]
        if any(with_coords) and not all(with_coords):
            raise ValueError("coords must be given for all points or for none")
        if isinstance(self.metric, MatrixMetric):
            if len(self.metric.matrix) != count or any(len(row) != count for row in self.metric.matrix):
                raise ValueError(f"matrix must be {count}x{count}")
        elif isinstance(self.metric, LpMetric) and not all(with_coords):
            raise ValueError("metric kind 'lp' requires coords")
        return self


class PartitionFile(FileModel):
    classes: list[list[int]]


class FreeVectorFile(FileModel):
    coeffs: dict[str, float]


class FunctionFile(FileModel):
    values: dict[str, float]


class OperatorFile(FileModel):
    F: list[str] = Field(min_length=1)
    weights: list[list[float]]


class PiecesFile(FileModel):
    pieces: list[list[int]] = Field(min_length=1)


class SuiteSizes(FileModel):
    duality: int = Field(default=500, ge=0)
    quotient_oracle: int = Field(default=200, ge=0)
    kalton: int = Field(default=200, ge=0)
    kalton_separated: int = Field(default=100, ge=0)
    extfm: int = Field(default=100, ge=0)
    union: int = Field(default=100, ge=0)
    godard: int = Field(default=100, ge=0)
    union2: int = Field(default=50, ge=0)
    bm4: int = Field(default=100, ge=0)

    def count(self, suite: Suite) -> int:
        return int(getattr(self, suite.value.replace("-", "_")))


class NetConfig(FileModel):
    """Defaults describe the reference net: 64 planar ℓ_2 directions, radii 2^-2..2^2 in steps of 2^(1/8)."""

    dim: int = Field(default=2, ge=1)
    norm_p: float = Field(default=2.0, ge=1)
    directions: int = Field(default=64, ge=1)
    radius_min_exp: float = -2.0
    radius_max_exp: float = 2.0
    radius_step_exp: float = Field(default=0.125, gt=0)
    refinement: int = Field(default=2, ge=0)

    @model_validator(mode="after")
    def _check_range(self) -> "NetConfig":
        if self.radius_max_exp < self.radius_min_exp:
            raise ValueError("radius_max_exp must not be below radius_min_exp")
        return self


class ExperimentConfig(FileModel):
    seed: int = Field(ge=0, lt=2**64)
    sizes: SuiteSizes = Field(default_factory=SuiteSizes)
    duality_max_points: int = Field(default=30, ge=2)
    small_max_points: int = Field(default=10, ge=3)
    union2_max_points: int = Field(default=12, ge=4)
    kalton_max_support: int = Field(default=100, ge=1)
    kalton_radius_exp: int = Field(default=8, ge=1)
    unity_samples: int = Field(default=1_000_000, ge=1)
    tolerance: float = Field(default=1e-9, gt=0)
    epsilon: float = Field(default=0.05, gt=0)
    net: NetConfig = Field(default_factory=NetConfig)
    output: Optional[str] = None


class ReportRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    suite: str
    instance: str
    measured: float
    bound: float
    slack: float
    wall_time: float = 0.0

    @classmethod
    def build(cls, suite: Suite, instance: str, measured: float, bound: float, wall_time: float = 0.0) -> "ReportRow":
        return cls(
            suite=suite.value,
            instance=instance,
            measured=measured,
            bound=bound,
            slack=bound - measured,
            wall_time=wall_time,
        )

    def passed(self, tolerance: float) -> bool:
        return self.slack >= -tolerance
