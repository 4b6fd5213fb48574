"""Tests for acceptance suites and CSV reports."""

import io

import pytest

from freelip.schema import ExperimentConfig, ReportRow, Suite, SuiteSizes
from freelip.suites import THREADS_ENV, SuiteResult, instance_rng, run_suite, thread_count, write_report


@pytest.mark.parametrize(
    "suite",
    [
        Suite.DUALITY,
        Suite.QUOTIENT_ORACLE,
        Suite.KALTON,
        Suite.KALTON_SEPARATED,
        Suite.EXTFM,
        Suite.UNION,
        Suite.GODARD,
        Suite.UNION2,
    ],
)
def test_suite_passes(config: ExperimentConfig, suite: Suite) -> None:
    result = run_suite(config, suite, threads=1)

    assert result.rows
    assert result.passed, result.failures
    assert {row.suite for row in result.rows} == {suite.value}


def test_row_instance_ids(config: ExperimentConfig) -> None:
    separated = run_suite(config, Suite.KALTON_SEPARATED, threads=1)
    kalton = run_suite(config, Suite.KALTON, threads=1)

    assert [row.instance for row in separated.rows] == ["0", "1", "2"]
    assert [row.instance for row in kalton.rows][:3] == ["0/reconstruction", "0/ratio", "0/unity"]


def test_suites_are_reproducible_across_threads(config: ExperimentConfig) -> None:
    def key(result: SuiteResult) -> list[tuple[str, float, float]]:
        return [(row.instance, row.measured, row.bound) for row in result.rows]

    single = run_suite(config, Suite.DUALITY, threads=1)
    again = run_suite(config, Suite.DUALITY, threads=1)
    parallel = run_suite(config, Suite.DUALITY, threads=2)

    assert key(single) == key(again) == key(parallel)


def test_seed_changes_instances(config: ExperimentConfig) -> None:
    other = config.model_copy(update={"seed": 12})

    first = [row.measured for row in run_suite(config, Suite.KALTON, threads=1).rows]
    second = [row.measured for row in run_suite(other, Suite.KALTON, threads=1).rows]

    assert first != second


def test_empty_suite_warns() -> None:
    config = ExperimentConfig(seed=1, sizes=SuiteSizes(kalton=0))

    with pytest.warns(UserWarning):
        result = run_suite(config, Suite.KALTON)

    assert result.rows == ()
    assert result.passed


def test_bm4_rows(config: ExperimentConfig) -> None:
    small = config.model_copy(
        update={
            "net": config.net.model_copy(
                update={"directions": 4, "radius_min_exp": 0.0, "radius_max_exp": 1.0, "radius_step_exp": 0.5}
            )
        }
    )
    result = run_suite(small, Suite.BM4, threads=1)

    assert [row.instance for row in result.rows] == ["0", "1"]
    for row in result.rows:
        assert row.measured >= 1.0 - 1e-7
        assert row.bound == pytest.approx(4.05)


def test_suite_result_failures() -> None:
    rows = (
        ReportRow.build(Suite.KALTON, "0", 1.0, 72.0),
        ReportRow.build(Suite.KALTON, "1", 1.0 + 1e-12, 1.0),
        ReportRow.build(Suite.KALTON, "2", 2.0, 1.0),
    )
    result = SuiteResult(suite=Suite.KALTON, rows=rows, tolerance=1e-9)

    assert not result.passed
    assert result.failures == (rows[2],)


def test_instance_rng_streams() -> None:
    assert instance_rng(7, 3).random() == instance_rng(7, 3).random()
    assert instance_rng(7, 3).random() != instance_rng(7, 4).random()
    assert instance_rng(7, 3).random() != instance_rng(8, 3).random()


def test_thread_count(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert thread_count() == 1

    monkeypatch.setenv(THREADS_ENV, "3")
    assert thread_count() == 3


@pytest.mark.parametrize("value", ["0", "-2", "many"])
def test_thread_count_rejects_invalid_values(monkeypatch: pytest.MonkeyPatch, value: str) -> None:
    monkeypatch.setenv(THREADS_ENV, value)

    with pytest.raises(ValueError) as cm:
        thread_count()

    assert THREADS_ENV in str(cm.value)


def test_write_report() -> None:
    stream = io.StringIO()

    write_report([ReportRow.build(Suite.KALTON, "0", 1.0, 72.0)], stream, timing=False)

    assert stream.getvalue() == "suite,instance,measured,bound,slack\nkalton,0,1.0,72.0,71.0\n"


def test_write_report_with_timing() -> None:
    stream = io.StringIO()

    write_report([ReportRow.build(Suite.UNION, "4/upper", 0.1, 0.3, wall_time=0.5)], stream)

    assert stream.getvalue() == (
        "suite,instance,measured,bound,slack,wall_time\n" f"union,4/upper,0.1,0.3,{0.3 - 0.1!r},0.5\n"
    )
