"""Command-line entry point: `freelip <subcommand> [flags]`."""

import argparse
import csv
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Optional

from . import __version__
from ._utils import format_float
from .banach_lab import estimate_bilip
from .decomposition import (
    KALTON_CONSTANT,
    kalton_ratio,
    orthogonal_union_check,
    separated_union_decompose,
    union2_check,
)
from .exceptions import FreeLipException, MetricValidationException
from .free_norm import LipFunction, free_norm_dual, free_norm_flow
from .io import (
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
from .lip_ops import (
    LinearExtensionOperator,
    apply,
    extension_operator_norm,
    infconv_extend,
    nearest_point_extension,
    shepard_extension,
)
from .metric_core import PointedMetricSpace, restrict
from .quotient import metric_identification, quotient_pseudometric
from .schema import ExperimentConfig, ExtensionKind, NormMethod, ReportRow, Side, Suite
from .suites import instance_rng, reference_net, run_suite, write_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 3


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else None
    seed = getattr(args, "seed", None)
    if config is None:
        if seed is None:
            raise FreeLipException("a seed is required: pass --seed or a --config file")
        return ExperimentConfig(seed=seed)
    return config if seed is None else ExperimentConfig.model_validate({**config.model_dump(), "seed": seed})


def _emit(rows: Sequence[ReportRow], tolerance: float) -> int:
    write_report(rows, timing=False)
    return EXIT_OK if all(row.passed(tolerance) for row in rows) else EXIT_FAILED


def _validate(args: argparse.Namespace) -> int:
    try:
        space = load_space(args.space)
    except MetricValidationException as exc:
        for violation in exc.report.violations:
            print(f"{violation.axiom}: {violation.message}")
        return EXIT_FAILED
    print(f"valid: {space.n} points, base {space.ids[space.base]!r}")
    return EXIT_OK


def _norm(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    mu = load_freevector(args.vector, space)
    dual, witness = free_norm_dual(mu, space)
    flow, plan = free_norm_flow(mu, space)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerows(
        [("lp", format_float(dual)), ("flow", format_float(flow)), ("gap", format_float(abs(dual - flow)))]
    )

    if args.witness_csv:
        with open(args.witness_csv, "w", encoding="utf-8", newline="") as stream:
            out = csv.writer(stream, lineterminator="\n")
            out.writerow(("point", "value"))
            out.writerows((point_id, format_float(v)) for point_id, v in zip(space.ids, witness.values.tolist()))
    if args.plan_csv:
        with open(args.plan_csv, "w", encoding="utf-8", newline="") as stream:
            out = csv.writer(stream, lineterminator="\n")
            out.writerow(("source", "target", "mass"))
            out.writerows((space.ids[s], space.ids[t], format_float(m)) for s, t, m in plan.flows)
    return EXIT_OK


def _quotient(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    partition = load_partition(args.partition, space)
    identified = metric_identification(quotient_pseudometric(space, partition))
    save_space(identified.space, args.output)
    return EXIT_OK


def _operator(args: argparse.Namespace, space: PointedMetricSpace, subset: Sequence[int]) -> LinearExtensionOperator:
    if args.operator:
        return load_operator(args.operator, space)
    if args.kind == ExtensionKind.SHEPARD:
        return shepard_extension(space, subset, args.exponent)
    return nearest_point_extension(space, subset)


def _subset(space: PointedMetricSpace, ids: Optional[str]) -> list[int]:
    if not ids:
        return [space.base]
    return sorted({space.base, *(space.index_of(point_id.strip()) for point_id in ids.split(","))})


def _extend(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    values = load_function(args.function, space)
    if values.get(space.base, 0.0) != 0.0:
        raise FreeLipException(f"the function must vanish at the base point {space.ids[space.base]!r}")
    values[space.base] = 0.0
    members = sorted(values)
    sub = restrict(space, members)
    f = LipFunction([values[x] for x in members], sub.base)

    if args.kind == ExtensionKind.INFCONV and not args.operator:
        extended = infconv_extend(f, space, members)
    else:
        extended = apply(_operator(args, space, members), f)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(("point", "value"))
    writer.writerows((point_id, format_float(v)) for point_id, v in zip(space.ids, extended.values.tolist()))
    return EXIT_OK


def _opnorm(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    if args.kind == ExtensionKind.INFCONV and not args.operator:
        raise FreeLipException("the infimum-convolution extension is not linear; pick --kind nearest or shepard")
    operator = _operator(args, space, _subset(space, args.subset))
    if args.save_operator:
        save_operator(operator, args.save_operator)
    print(format_float(extension_operator_norm(operator, args.method)))
    return EXIT_OK


def _kalton(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    report = kalton_ratio(load_freevector(args.vector, space), space, args.method)
    row = ReportRow.build(Suite.KALTON, Path(args.vector).stem, report.ratio, KALTON_CONSTANT)
    return _emit([row], args.tolerance)


def _union_check(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    report = orthogonal_union_check(
        space, load_pieces(args.pieces, space), rng=instance_rng(args.seed, 0), samples=args.samples
    )
    logger.info("orthogonality constant %s over %d samples", format_float(report.constant), report.samples)
    rows = [
        ReportRow.build(Suite.UNION, "lower", 1.0, report.lowest_ratio),
        ReportRow.build(Suite.UNION, "upper", report.highest_ratio, report.forward_bound),
    ]
    return _emit(rows, args.tolerance)


def _godard(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    report = separated_union_decompose(space, load_pieces(args.pieces, space), args.lower, args.upper)
    rows = [
        ReportRow.build(Suite.GODARD, "forward", report.forward, report.forward_bound),
        ReportRow.build(Suite.GODARD, "inverse", report.inverse, report.inverse_bound),
        ReportRow.build(Suite.GODARD, "inverse-certified", report.inverse, report.certified_inverse_bound),
        ReportRow.build(Suite.GODARD, "distortion", report.distortion, report.distortion_bound),
    ]
    return _emit(rows, args.tolerance)


def _union2(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    pieces = load_pieces(args.pieces, space)
    if len(pieces) != 2:
        raise FreeLipException(f"union2 needs exactly two pieces, got {len(pieces)}")
    operator = load_operator(args.operator, space) if args.operator else None
    report = union2_check(space, pieces[0], pieces[1], operator, args.method)
    rows = [
        ReportRow.build(Suite.UNION2, "forward", report.forward, report.forward_bound),
        ReportRow.build(Suite.UNION2, "inverse", report.inverse, report.inverse_bound),
        ReportRow.build(Suite.UNION2, "distortion", report.distortion, report.distortion_bound),
    ]
    return _emit(rows, args.tolerance)


def _bm4(args: argparse.Namespace) -> int:
    base = _experiment_config(args)
    flags = {
        "dim": args.dim,
        "norm_p": args.norm_p,
        "directions": args.directions,
        "radius_min_exp": args.radius_min_exp,
        "radius_max_exp": args.radius_max_exp,
        "radius_step_exp": args.radius_step_exp,
        "refinement": args.refinement,
    }
    document = base.model_dump()
    document["net"].update({key: value for key, value in flags.items() if value is not None})
    if args.samples is not None:
        document["sizes"]["bm4"] = args.samples
    if args.epsilon is not None:
        document["epsilon"] = args.epsilon
    config = ExperimentConfig.model_validate(document)
    epsilon = config.epsilon

    result = run_suite(config, Suite.BM4)
    write_report(result.rows, timing=False)
    worst = max((row.measured / 2 for row in result.rows), default=0.0)
    print(f"bm4: {len(result.rows)} samples, max s_star {format_float(worst)}, passed {result.passed}", file=sys.stderr)

    if args.bilip:
        lattice = reference_net(config)
        for side in Side:
            estimate = estimate_bilip(lattice, side, config.net.refinement, epsilon)
            forward, inverse = format_float(estimate.forward), format_float(estimate.inverse)
            print(
                f"{side.value}: forward {forward} (bound {format_float(estimate.forward_bound)}), "
                f"inverse {inverse} (bound {format_float(estimate.inverse_bound)}), "
                f"{estimate.violation_count} violations",
                file=sys.stderr,
            )
    return EXIT_OK if result.passed else EXIT_FAILED


def _run_suite(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    result = run_suite(config, Suite(args.suite))
    output = args.output or config.output
    if output:
        with open(output, "w", encoding="utf-8", newline="") as stream:
            write_report(result.rows, stream, timing=not args.no_timing)
    else:
        write_report(result.rows, timing=not args.no_timing)
    for row in result.failures:
        logger.error("bound violated: %s %s measured %s bound %s", row.suite, row.instance, row.measured, row.bound)
    return EXIT_OK if result.passed else EXIT_FAILED


def _add_tolerance(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tolerance", type=float, default=1e-9, help="allowed negative slack")


def _add_method(parser: argparse.ArgumentParser, default: NormMethod) -> None:
    parser.add_argument("--method", type=NormMethod, choices=list(NormMethod), default=default)


def _add_extension_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kind", type=ExtensionKind, choices=list(ExtensionKind), default=ExtensionKind.NEAREST)
    parser.add_argument("--operator", help="operator file to use instead of --kind")
    parser.add_argument("--exponent", type=float, default=2.0, help="inverse-distance exponent of shepard weights")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freelip", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="experiment configuration (JSON)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    command = commands.add_parser("validate", help="check the metric axioms of a space file")
    command.add_argument("space")
    command.set_defaults(handler=_validate)

    command = commands.add_parser("norm", help="free norm of a vector by both solvers")
    command.add_argument("space")
    command.add_argument("vector")
    command.add_argument("--witness-csv", help="write the optimal 1-Lipschitz function here")
    command.add_argument("--plan-csv", help="write the optimal transport plan here")
    command.set_defaults(handler=_norm)

    command = commands.add_parser("quotient", help="quotient of a space by a partition")
    command.add_argument("space")
    command.add_argument("partition")
    command.add_argument("-o", "--output", required=True)
    command.set_defaults(handler=_quotient)

    command = commands.add_parser("extend", help="extend a function given on a subset")
    command.add_argument("space")
    command.add_argument("function")
    _add_extension_source(command)
    command.set_defaults(handler=_extend)

    command = commands.add_parser("opnorm", help="norm of a linear extension operator")
    command.add_argument("space")
    command.add_argument("--subset", help="comma-separated point ids; the base is always included")
    command.add_argument("--save-operator", help="write the operator file")
    _add_extension_source(command)
    _add_method(command, NormMethod.LP)
    command.set_defaults(handler=_opnorm)

    command = commands.add_parser("kalton", help="annular decomposition of a vector")
    command.add_argument("space")
    command.add_argument("vector")
    _add_method(command, NormMethod.FLOW)
    _add_tolerance(command)
    command.set_defaults(handler=_kalton)

    command = commands.add_parser("union-check", help="pieces glued at the base point")
    command.add_argument("space")
    command.add_argument("pieces")
    command.add_argument("--samples", type=int, default=20)
    command.add_argument("--seed", type=int, default=0)
    _add_tolerance(command)
    command.set_defaults(handler=_union_check)

    command = commands.add_parser("godard", help="pieces at separated mutual distances")
    command.add_argument("space")
    command.add_argument("pieces")
    command.add_argument("--lower", type=float, help="declared lower separation A")
    command.add_argument("--upper", type=float, help="declared upper separation B")
    _add_tolerance(command)
    command.set_defaults(handler=_godard)

    command = commands.add_parser("union2", help="two pieces glued along their intersection")
    command.add_argument("space")
    command.add_argument("pieces")
    command.add_argument("--operator", help="extension operator from the intersection")
    _add_method(command, NormMethod.LP)
    _add_tolerance(command)
    command.set_defaults(handler=_union2)

    command = commands.add_parser("bm4", help="sum decompositions on a radial net")
    command.add_argument("--dim", type=int)
    command.add_argument("--norm-p", type=float)
    command.add_argument("--directions", type=int)
    command.add_argument("--radius-min-exp", type=float)
    command.add_argument("--radius-max-exp", type=float)
    command.add_argument("--radius-step-exp", type=float)
    command.add_argument("--refinement", type=int)
    command.add_argument("--samples", type=int)
    command.add_argument("--seed", type=int)
    command.add_argument("--epsilon", type=float)
    command.add_argument("--bilip", action="store_true", help="also estimate the squeezing maps' constants")
    command.set_defaults(handler=_bm4)

    command = commands.add_parser("run-suite", help="run an acceptance suite")
    command.add_argument("suite", choices=[suite.value for suite in Suite])
    command.add_argument("--seed", type=int)
    command.add_argument("-o", "--output", help="CSV path; stdout by default")
    command.add_argument("--no-timing", action="store_true", help="omit the wall_time column")
    command.set_defaults(handler=_run_suite)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return int(args.handler(args))
    except (FreeLipException, ValueError, OSError) as exc:
        print(f"freelip {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
