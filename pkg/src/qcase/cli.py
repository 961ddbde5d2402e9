"""Command-line front end.

Subcommands: check (evaluate a case file against its target), derive
(invert the bound for the acceptable test evidence), sensitivity
(parameter sweeps), simulate (Monte Carlo coverage of the bound
machinery), render (argument-tree export). Reports go to stdout;
diagnostics and warnings go to stderr. Exit codes: 0 target satisfied,
1 target not satisfied or infeasible, 2 usage/parse/semantic error,
3 internal error. Given identical inputs and flags (and a seed for
simulate), stdout is byte-identical across invocations.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .argument import build_tree, export_dot, export_json, propagate_status
from .budget import (
    BoundReport,
    CaseBase,
    CaseId,
    DenominatorError,
    DerivationResult,
    Infeasible,
    SweepDomainError,
    Verdict,
    applicable_case,
    derive_required_test_bound,
    evaluate_bound,
    sensitivity_sweep,
    SWEEP_PARAMS,
)
from .dsl import CaseSyntaxError, parse
from .evidence import (
    BundleInvalidError,
    CaseBundle,
    ConfidenceMode,
    IntervalMethod,
    ResolvedEstimates,
    resolve_estimates,
    validate_bundle,
)
from .simulate import (
    CampaignDesign,
    GroundTruth,
    coverage_experiment,
    coverage_report_to_json,
)

EXIT_SATISFIED = 0
EXIT_NOT_SATISFIED = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

# `paper` is accepted as a compatibility alias for the shared-budget mode.
_MODES = {
    "shared": ConfidenceMode.SHARED,
    "paper": ConfidenceMode.SHARED,
    "bonferroni": ConfidenceMode.BONFERRONI,
}

_INTERVALS = {m.value: m for m in IntervalMethod}


def _mode(value: str) -> ConfidenceMode:
    try:
        return _MODES[value]
    except KeyError:
        raise argparse.ArgumentTypeError(
            f"invalid mode {value!r} (choose from shared, bonferroni)"
        )


def _interval(value: str) -> IntervalMethod:
    try:
        return _INTERVALS[value]
    except KeyError:
        raise argparse.ArgumentTypeError(
            f"invalid interval method {value!r} (choose from {', '.join(_INTERVALS)})"
        )


def _read_case(path: str) -> CaseBundle | None:
    """Parse a case file, printing diagnostics to stderr on failure."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None
    try:
        return parse(text, validate=False)
    except CaseSyntaxError as exc:
        for err in exc.errors:
            print(f"{path}: {err}", file=sys.stderr)
        return None


def _prepare(bundle: CaseBundle, at_time: float | None) -> tuple[CaseBundle, float | None]:
    """Apply the --at-time override / profile default before validation."""
    if (
        bundle.scope is not None
        and bundle.scope.profile is not None
        and at_time is None
        and bundle.mission_time is None
    ):
        at_time = bundle.scope.profile[0][0]
        print(
            f"warning: no mission time given; evaluating the scope profile at its "
            f"first point (t = {at_time!r})",
            file=sys.stderr,
        )
        bundle = bundle.with_mission_time(at_time)
    return bundle, at_time


def _validated(bundle: CaseBundle, path: str) -> bool:
    problems = validate_bundle(bundle)
    for problem in problems:
        print(f"{path}: {problem}", file=sys.stderr)
    return not problems


def _fnum(value: float) -> str:
    return repr(float(value))


def _report_lines(
    bundle: CaseBundle,
    case: CaseId,
    mode: ConfidenceMode,
    method: IntervalMethod,
    resolved: ResolvedEstimates,
    report: BoundReport,
    warning_count: int,
) -> list[str]:
    t = report.terms
    lines = [
        f"case: {bundle.id}",
        f"applicable case: {case}",
        f"mode: {mode.value}    interval: {method.value}",
        "",
        "estimates",
        f"  u_test       = {_fnum(resolved.u_test)}  "
        f"(from {bundle.test.failures} of {bundle.test.samples} at CL "
        f"{_fnum(resolved.cl_effective.test)})",
        f"  l_detect_srf = {_fnum(resolved.l_detect_srf)}",
        f"  p_oos        = {_fnum(resolved.p_oos)}",
        f"  p_detect_oos = {_fnum(resolved.p_detect_oos)}",
        f"  p_lf         = {_fnum(resolved.p_lf)}",
        "",
        "terms",
        f"  test_term         = {_fnum(t.test_term)}",
        f"  label_penalty     = {_fnum(t.label_penalty)}",
        f"  srf_detect_credit = {_fnum(t.srf_detect_credit)}",
        f"  scope_term        = {_fnum(t.scope_term)}",
        f"  oos_detect_credit = {_fnum(t.oos_detect_credit)}",
        "",
        f"p_safe_upper = {_fnum(report.p_safe_upper)}",
        f"p_target     = {_fnum(report.p_target)}",
        f"margin       = {_fnum(report.margin)}",
        f"verdict: {report.verdict.value}",
        f"warnings: {warning_count}",
    ]
    for note in report.notes:
        lines.append(f"note: {note}")
    return lines


def _estimates_dict(resolved: ResolvedEstimates) -> dict:
    return {
        "u_test": resolved.u_test,
        "l_detect_srf": resolved.l_detect_srf,
        "p_oos": resolved.p_oos,
        "p_detect_oos": resolved.p_detect_oos,
        "p_lf": resolved.p_lf,
        "cl_effective": {
            "test": resolved.cl_effective.test,
            "detect_srf": resolved.cl_effective.detect_srf,
            "labels": resolved.cl_effective.labels,
        },
        "notes": list(resolved.notes),
    }


def cmd_check(args: argparse.Namespace) -> int:
    bundle = _read_case(args.file)
    if bundle is None:
        return EXIT_USAGE
    bundle, at_time = _prepare(bundle, args.at_time)
    if not _validated(bundle, args.file):
        return EXIT_USAGE
    resolved = resolve_estimates(bundle, mode=args.mode, method=args.interval, at_time=at_time)
    case = applicable_case(bundle)
    try:
        report = evaluate_bound(resolved, case, bundle.target)
    except DenominatorError as exc:
        print(f"cannot evaluate: {exc}", file=sys.stderr)
        return EXIT_NOT_SATISFIED
    tree = propagate_status(build_tree(bundle, report))

    if args.format == "json":
        payload = {
            "schema": "qcase-check-report/1",
            "case_id": bundle.id,
            "applicable_case": str(case),
            "mode": args.mode.value,
            "interval_method": args.interval.value,
            "estimates": _estimates_dict(resolved),
            "report": {
                "verdict": report.verdict.value,
                "p_safe_upper": report.p_safe_upper,
                "p_safe_upper_raw": report.p_safe_upper_raw,
                "p_target": report.p_target,
                "margin": report.margin,
                "terms": {
                    "test_term": report.terms.test_term,
                    "label_penalty": report.terms.label_penalty,
                    "srf_detect_credit": report.terms.srf_detect_credit,
                    "scope_term": report.terms.scope_term,
                    "oos_detect_credit": report.terms.oos_detect_credit,
                },
                "preposition_status": [
                    {"code": v.code, "message": v.message} for v in report.preposition_status
                ],
                "notes": list(report.notes),
            },
            "tree": json.loads(export_json(tree)),
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
    elif args.format == "md":
        t = report.terms
        rows = [
            ("test_term", t.test_term),
            ("label_penalty", t.label_penalty),
            ("srf_detect_credit", t.srf_detect_credit),
            ("scope_term", t.scope_term),
            ("oos_detect_credit", t.oos_detect_credit),
        ]
        print(f"# Case `{bundle.id}`")
        print()
        print(f"- applicable case: **{case}**")
        print(f"- mode: `{args.mode.value}`, interval: `{args.interval.value}`")
        print(f"- verdict: **{report.verdict.value}** "
              f"(p_safe_upper = {_fnum(report.p_safe_upper)}, "
              f"p_target = {_fnum(report.p_target)})")
        print()
        print("| term | value |")
        print("| --- | --- |")
        for name, value in rows:
            print(f"| {name} | {_fnum(value)} |")
        print()
        print(f"warnings: {tree.warning_count}")
    else:
        for line in _report_lines(
            bundle, case, args.mode, args.interval, resolved, report, tree.warning_count
        ):
            print(line)
    return EXIT_SATISFIED if report.verdict is Verdict.SATISFIED else EXIT_NOT_SATISFIED


def _render_derivation(result: DerivationResult, bundle: CaseBundle, case: CaseId) -> int:
    required = result.required_u_test
    print(f"applicable case: {case}")
    if isinstance(required, Infeasible):
        print(str(required))
        return EXIT_NOT_SATISFIED
    print(f"required_u_test = {_fnum(required)}")
    exit_code = EXIT_SATISFIED
    if result.max_failures is not None:
        if isinstance(result.max_failures, Infeasible):
            print(f"max_failures    = {result.max_failures}")
            exit_code = EXIT_NOT_SATISFIED
        else:
            print(
                f"max_failures    = {result.max_failures}  "
                f"(at samples = {bundle.test.samples})"
            )
    if result.min_samples is not None:
        if isinstance(result.min_samples, Infeasible):
            print(f"min_samples     = {result.min_samples}")
            exit_code = EXIT_NOT_SATISFIED
        else:
            print(f"min_samples     = {result.min_samples}")
    return exit_code


def cmd_derive(args: argparse.Namespace) -> int:
    bundle = _read_case(args.file)
    if bundle is None:
        return EXIT_USAGE
    bundle, at_time = _prepare(bundle, args.at_time)
    if not _validated(bundle, args.file):
        return EXIT_USAGE
    if args.solve_for == "samples" and args.expected_rate is None:
        print("error: --solve-for samples requires --expected-rate", file=sys.stderr)
        return EXIT_USAGE
    resolved = resolve_estimates(bundle, mode=args.mode, method=args.interval, at_time=at_time)
    case = applicable_case(bundle)
    try:
        result = derive_required_test_bound(
            resolved,
            case,
            bundle.target,
            samples=bundle.test.samples if args.solve_for == "failures" else None,
            expected_rate=args.expected_rate if args.solve_for == "samples" else None,
        )
    except DenominatorError as exc:
        print(f"cannot derive: {exc}", file=sys.stderr)
        return EXIT_NOT_SATISFIED
    return _render_derivation(result, bundle, case)


def cmd_sensitivity(args: argparse.Namespace) -> int:
    bundle = _read_case(args.file)
    if bundle is None:
        return EXIT_USAGE
    bundle, at_time = _prepare(bundle, args.at_time)
    if not _validated(bundle, args.file):
        return EXIT_USAGE
    try:
        rows = sensitivity_sweep(
            bundle,
            args.mode,
            args.vary,
            args.from_,
            args.to,
            args.steps,
            at_time=at_time,
        )
    except SweepDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BundleInvalidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    def cell(value) -> str:
        return "" if value is None else (repr(value) if isinstance(value, float) else str(value))

    if args.out == "json":
        payload = {
            "schema": "qcase-sensitivity/1",
            "param": args.vary,
            "rows": [
                {
                    "value": row.value,
                    "p_safe_upper": row.p_safe_upper,
                    "required_u_test": row.required_u_test,
                    "max_failures": row.max_failures,
                    "verdict": row.verdict.value,
                    "codes": list(row.codes),
                }
                for row in rows
            ],
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print("param,value,p_safe_upper,required_u_test,max_failures,verdict")
        for row in rows:
            verdict = row.verdict.value
            if row.codes:
                verdict += ":" + "+".join(row.codes)
            print(
                ",".join(
                    [
                        row.param,
                        repr(row.value),
                        cell(row.p_safe_upper),
                        cell(row.required_u_test),
                        cell(row.max_failures),
                        verdict,
                    ]
                )
            )
    return EXIT_SATISFIED


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.runs < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        truth = GroundTruth(
            p_srf=args.true_srf,
            p_oos=args.true_oos,
            p_detect_srf=args.true_detect_srf,
            p_detect_oos=args.true_detect_oos,
            p_lf=args.true_lf,
        )
        design = CampaignDesign(
            n_test=args.n,
            cl=args.cl,
            case=CaseId(base=CaseBase(args.case), label_adjusted=args.true_lf > 0.0),
            mode=args.mode,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = coverage_experiment(truth, design, args.runs, args.seed)
    sys.stdout.write(coverage_report_to_json(report))
    return EXIT_SATISFIED


def cmd_render(args: argparse.Namespace) -> int:
    bundle = _read_case(args.file)
    if bundle is None:
        return EXIT_USAGE
    bundle, at_time = _prepare(bundle, args.at_time)
    if not _validated(bundle, args.file):
        return EXIT_USAGE
    resolved = resolve_estimates(bundle, mode=args.mode, at_time=at_time)
    case = applicable_case(bundle)
    try:
        report = evaluate_bound(resolved, case, bundle.target)
    except DenominatorError as exc:
        print(f"cannot evaluate: {exc}", file=sys.stderr)
        return EXIT_NOT_SATISFIED
    tree = propagate_status(build_tree(bundle, report))
    if args.format == "json":
        sys.stdout.write(export_json(tree, report))
    else:
        sys.stdout.write(export_dot(tree))
    return EXIT_SATISFIED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcase",
        description="Quantitative safety-bound calculus over declared assurance evidence.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--mode",
            type=_mode,
            default=ConfidenceMode.SHARED,
            help="confidence budgeting: shared (default) or bonferroni",
        )
        p.add_argument(
            "--at-time",
            type=float,
            default=None,
            help="mission time (hours) at which a scope profile is evaluated",
        )

    p_check = sub.add_parser("check", help="evaluate a case file against its target")
    p_check.add_argument("file")
    common(p_check)
    p_check.add_argument("--format", choices=("text", "json", "md"), default="text")
    p_check.add_argument(
        "--interval",
        type=_interval,
        default=IntervalMethod.CLOPPER_PEARSON,
        help="bound machinery: clopper-pearson (default, conservative), wilson, wald",
    )
    p_check.set_defaults(func=cmd_check)

    p_derive = sub.add_parser(
        "derive", help="derive the acceptable test bound and failure count"
    )
    p_derive.add_argument("file")
    common(p_derive)
    p_derive.add_argument("--solve-for", choices=("failures", "samples"), default="failures")
    p_derive.add_argument(
        "--expected-rate",
        type=float,
        default=None,
        help="assumed failure rate when solving for the campaign size; the assumed "
        "observed count at size n is round(rate * n)",
    )
    p_derive.add_argument(
        "--interval", type=_interval, default=IntervalMethod.CLOPPER_PEARSON
    )
    p_derive.set_defaults(func=cmd_derive)

    p_sens = sub.add_parser("sensitivity", help="sweep one parameter and re-evaluate")
    p_sens.add_argument("file")
    common(p_sens)
    p_sens.add_argument("--vary", choices=SWEEP_PARAMS, required=True)
    p_sens.add_argument("--from", dest="from_", type=float, required=True)
    p_sens.add_argument("--to", type=float, required=True)
    p_sens.add_argument("--steps", type=int, required=True)
    p_sens.add_argument("--out", choices=("csv", "json"), default="csv")
    p_sens.set_defaults(func=cmd_sensitivity)

    p_sim = sub.add_parser("simulate", help="Monte Carlo coverage of the bound machinery")
    p_sim.add_argument("--true-srf", type=float, required=True)
    p_sim.add_argument("--true-oos", type=float, default=0.0)
    p_sim.add_argument("--true-detect-srf", type=float, default=0.0)
    p_sim.add_argument("--true-detect-oos", type=float, default=0.0)
    p_sim.add_argument("--true-lf", type=float, default=0.0)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--cl", type=float, required=True)
    p_sim.add_argument("--case", choices=tuple(c.value for c in CaseBase), required=True)
    p_sim.add_argument("--mode", type=_mode, default=ConfidenceMode.SHARED)
    p_sim.add_argument("--runs", type=int, required=True)
    p_sim.add_argument(
        "--seed", type=int, required=True, help="mandatory; reports must be reproducible"
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_render = sub.add_parser("render", help="export the argument tree")
    p_render.add_argument("file")
    common(p_render)
    p_render.add_argument("--format", choices=("dot", "json"), default="dot")
    p_render.set_defaults(func=cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
