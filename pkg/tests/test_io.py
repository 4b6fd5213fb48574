"""Tests for reading and writing files."""

import json
import math
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from freelip.exceptions import MetricValidationException, SchemaException
from freelip.free_norm import FreeVector
from freelip.io import (
    load_config,
    load_freevector,
    load_function,
    load_operator,
    load_partition,
    load_pieces,
    load_space,
    save_operator,
    save_space,
)
from freelip.lip_ops import nearest_point_extension
from freelip.metric_core import PointedMetricSpace, scale
from freelip.quotient import Partition


def _dump(path: Path, document: Any) -> Path:
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


def test_space_round_trip_is_byte_stable(tmp_path: Path, chain: PointedMetricSpace) -> None:
    first, second = tmp_path / "first.json", tmp_path / "second.json"

    save_space(chain, first)
    loaded = load_space(first)
    save_space(loaded, second)

    assert first.read_bytes() == second.read_bytes()
    assert first.read_text(encoding="utf-8").endswith("}\n")
    assert np.array_equal(loaded.dist, chain.dist)
    assert loaded.ids == chain.ids
    assert loaded.name == "chain"
    assert loaded.coords is not None
    assert json.loads(first.read_text(encoding="utf-8"))["metric"] == {"kind": "lp", "p": 2.0}


@pytest.mark.parametrize(
    "document",
    [
        {
            "base": 0,
            "name": "square",
            "points": [{"id": "o"}, {"id": "p"}],
            "metric": {"kind": "matrix", "matrix": [[0.0, 1.5], [1.5, 0.0]]},
        },
        {
            "base": 1,
            "points": [{"coords": [0.0, 0.0], "id": "o"}, {"coords": [1.0, -2.0], "id": "p"}],
            "metric": {"kind": "lp", "p": 1.0},
        },
        {
            "base": 0,
            "points": [{"coords": [0.0], "id": "o"}, {"coords": [3.0], "id": "p"}],
            "metric": {"kind": "lp", "p": "inf"},
        },
        {
            "base": 2,
            "name": "path",
            "points": [{"id": "a"}, {"id": "b"}, {"id": "c"}],
            "metric": {"edges": [[0, 1, 1.0], [1, 2, 2.0], [0, 2, 5.0]], "kind": "graph"},
        },
    ],
)
def test_space_file_round_trip_keeps_metric_kind(tmp_path: Path, document: Any) -> None:
    source, saved = tmp_path / "source.json", tmp_path / "saved.json"
    source.write_text(json.dumps(document, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    save_space(load_space(source), saved)

    assert saved.read_bytes() == source.read_bytes()


def test_derived_spaces_are_saved_as_matrices(tmp_path: Path, chain: PointedMetricSpace) -> None:
    path = tmp_path / "scaled.json"

    save_space(scale(chain, 2.0), path)
    document = json.loads(path.read_text(encoding="utf-8"))

    assert document["metric"] == {"kind": "matrix", "matrix": [[0.0, 2.0, 4.0], [2.0, 0.0, 2.0], [4.0, 2.0, 0.0]]}
    assert np.array_equal(load_space(path).dist, 2.0 * chain.dist)


def test_save_space_without_coords(tmp_path: Path) -> None:
    space = PointedMetricSpace(np.array([[0.0, 1.0], [1.0, 0.0]]), base=1, ids=("x", "y"))
    path = tmp_path / "space.json"

    save_space(space, path)
    document = json.loads(path.read_text(encoding="utf-8"))

    assert document["points"] == [{"id": "x"}, {"id": "y"}]
    assert document["base"] == 1
    assert load_space(path).base == 1


def test_load_space_lp_metric(tmp_path: Path) -> None:
    path = _dump(
        tmp_path / "space.json",
        {
            "base": 0,
            "points": [{"id": "o", "coords": [0, 0]}, {"id": "p", "coords": [1, 2]}],
            "metric": {"kind": "lp", "p": "inf"},
        },
    )

    space = load_space(path)

    assert space.dist[0, 1] == 2.0
    assert space.ids == ("o", "p")


def test_load_space_graph_metric(tmp_path: Path) -> None:
    path = _dump(
        tmp_path / "space.json",
        {
            "name": "path",
            "base": 1,
            "points": [{"id": "a"}, {"id": "b"}, {"id": "c"}],
            "metric": {"kind": "graph", "edges": [[0, 1, 1.0], [1, 2, 2.0]]},
        },
    )

    space = load_space(path)

    assert space.dist[0, 2] == 3.0
    assert space.radii.tolist() == [1.0, 0.0, 2.0]


@pytest.mark.parametrize(
    ["document", "message"],
    [
        ({"points": [{"id": "0"}], "metric": {"kind": "matrix", "matrix": [[0]]}}, "base"),
        ({"base": 3, "points": [{"id": "0"}], "metric": {"kind": "matrix", "matrix": [[0]]}}, "out of range"),
        (
            {"base": 0, "points": [{"id": "0"}, {"id": "0"}], "metric": {"kind": "matrix", "matrix": [[0, 1], [1, 0]]}},
            "unique",
        ),
        ({"base": 0, "points": [{"id": "0"}, {"id": "1"}], "metric": {"kind": "matrix", "matrix": [[0]]}}, "2x2"),
        ({"base": 0, "points": [{"id": "0"}], "metric": {"kind": "lp", "p": 2}}, "requires coords"),
        ({"base": 0, "points": [{"id": "0", "coords": [0]}], "metric": {"kind": "lp", "p": 0.5}}, "at least 1"),
        ({"base": 0, "points": [{"id": "0"}], "metric": {"kind": "tree"}}, "metric"),
        (
            {
                "base": 0,
                "points": [{"id": "0"}, {"id": "1"}, {"id": "2"}],
                "metric": {"kind": "graph", "edges": [[0, 1, 1.0]]},
            },
            "disconnected",
        ),
    ],
)
def test_load_space_rejects_invalid_documents(tmp_path: Path, document: Any, message: str) -> None:
    with pytest.raises(SchemaException) as cm:
        load_space(_dump(tmp_path / "space.json", document))

    assert message in str(cm.value)
    assert str(cm.value).startswith(str(tmp_path / "space.json"))


def test_load_space_rejects_nan(tmp_path: Path) -> None:
    path = tmp_path / "space.json"
    path.write_text('{"base": 0, "points": [{"id": "0"}], "metric": {"kind": "matrix", "matrix": [[NaN]]}}')

    with pytest.raises(SchemaException):
        load_space(path)


def test_load_space_rejects_invalid_json(tmp_path: Path) -> None:
    path = tmp_path / "space.json"
    path.write_text('{"base": 0,\n  "points": [')

    with pytest.raises(SchemaException) as cm:
        load_space(path)

    assert "invalid JSON at line 2" in str(cm.value)
    assert cm.value.error_details is not None
    assert cm.value.error_details.code == "invalid_file"


def test_load_space_reports_metric_violations(tmp_path: Path) -> None:
    path = _dump(
        tmp_path / "space.json",
        {
            "base": 0,
            "points": [{"id": "0"}, {"id": "a"}, {"id": "b"}],
            "metric": {"kind": "matrix", "matrix": [[0, 1, 3], [1, 0, 1], [3, 1, 0]]},
        },
    )

    with pytest.raises(MetricValidationException) as cm:
        load_space(path)

    assert cm.value.report.axioms == {"triangle"}


def test_load_freevector(tmp_path: Path, chain: PointedMetricSpace) -> None:
    path = _dump(tmp_path / "mu.json", {"coeffs": {"a": 1.0, "b": -2.0}})

    assert load_freevector(path, chain) == FreeVector({1: 1.0, 2: -2.0})


def test_load_freevector_rejects_unknown_points(tmp_path: Path, chain: PointedMetricSpace) -> None:
    path = _dump(tmp_path / "mu.json", {"coeffs": {"zz": 1.0}})

    with pytest.raises(SchemaException) as cm:
        load_freevector(path, chain)

    assert "zz" in str(cm.value)


def test_load_function(tmp_path: Path, chain: PointedMetricSpace) -> None:
    path = _dump(tmp_path / "f.json", {"values": {"0": 0.0, "a": 1.5}})

    assert load_function(path, chain) == {0: 0.0, 1: 1.5}


def test_load_partition(tmp_path: Path, chain: PointedMetricSpace) -> None:
    assert load_partition(_dump(tmp_path / "p.json", {"classes": [[0, 2], [1]]}), chain) == Partition.from_classes(
        [[0, 2], [1]]
    )

    with pytest.raises(SchemaException) as cm:
        load_partition(_dump(tmp_path / "bad.json", {"classes": [[0], [1]]}), chain)
    assert "cover" in str(cm.value)


def test_operator_round_trip(tmp_path: Path, chain: PointedMetricSpace) -> None:
    path = tmp_path / "operator.json"
    operator = nearest_point_extension(chain, [0, 1])

    save_operator(operator, path)
    loaded = load_operator(path, chain)

    assert loaded.subset == (0, 1)
    assert np.array_equal(loaded.weights, operator.weights)


def test_load_operator_sorts_subset(tmp_path: Path, chain: PointedMetricSpace) -> None:
    path = _dump(tmp_path / "operator.json", {"F": ["a", "0"], "weights": [[0, 1], [1, 0], [1, 0]]})

    operator = load_operator(path, chain)

    assert operator.subset == (0, 1)
    assert operator.weights.tolist() == [[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]


@pytest.mark.parametrize(
    ["document", "message"],
    [
        ({"F": ["0", "a"], "weights": [[1, 0], [0, 1]]}, "weights must have shape"),
        ({"F": ["0", "a"], "weights": [[1, 0], [0, 1], [0.5, 0.25]]}, "sum to 1"),
        ({"F": ["a"], "weights": [[1], [1], [1]]}, "base point"),
        ({"F": [], "weights": []}, "F"),
    ],
)
def test_load_operator_rejects_invalid_documents(
    tmp_path: Path, chain: PointedMetricSpace, document: Any, message: str
) -> None:
    with pytest.raises(SchemaException) as cm:
        load_operator(_dump(tmp_path / "operator.json", document), chain)

    assert message in str(cm.value)


def test_load_pieces(tmp_path: Path, chain: PointedMetricSpace) -> None:
    assert load_pieces(_dump(tmp_path / "pieces.json", {"pieces": [[0, 1], [2]]}), chain) == [[0, 1], [2]]

    with pytest.raises(SchemaException) as cm:
        load_pieces(_dump(tmp_path / "bad.json", {"pieces": [[0, 1], [0, 7]]}), chain)
    assert "outside the space" in str(cm.value)


def test_load_config(tmp_path: Path) -> None:
    config = load_config(_dump(tmp_path / "config.json", {"seed": 5, "sizes": {"kalton": 2}, "epsilon": 0.1}))

    assert config.seed == 5
    assert config.sizes.kalton == 2
    assert config.sizes.duality == 500
    assert math.isclose(config.epsilon, 0.1)


def test_load_config_rejects_unknown_keys(tmp_path: Path) -> None:
    with pytest.raises(SchemaException) as cm:
        load_config(_dump(tmp_path / "config.json", {"seed": 5, "colour": "red"}))

    assert "colour" in str(cm.value)
