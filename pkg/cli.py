#!/usr/bin/env python3
"""
Nested Purification CLI
Sweeps of M(L) to CSV/JSON, segment planning, oracle verification and
Werner state diagnostics.

Usage:
    python cli.py sweep --model werner --p 0.99 --l 1..80 --output werner_p099.csv
    python cli.py plan --segments 8 --b1 0.9925
    python cli.py verify --trials 1000 --seed 42
    python cli.py diagnose --p 0.95
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, TextIO, Tuple

from bell_state import (
    BellDiagonal,
    DomainError,
    Robustness,
    WernerParam,
    bell_chsh_factor,
    entanglement_factor,
    is_entangled,
    is_nonlocal,
    is_purifiable,
    to_werner,
)
from oracle import run_equivalence_suite
from planner import (
    GrowthClass,
    Model,
    SweepCurve,
    SweepPoint,
    ClassificationUnavailable,
    classify_growth,
    fit_log_growth,
    plan_segment,
    sweep_m_of_l,
)
from repeater_config import (
    CONVENTIONS,
    CSV_FLOAT_FORMAT,
    DEFAULT_CONVENTION,
    DEFAULT_VERIFY_SEED,
    DEFAULT_VERIFY_TRIALS,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY_FAILED,
    LOG_FORMAT,
    LOG_LEVEL,
)
from swap import ChainConvention

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["L", "chain_b1", "m", "M", "converged", "growth_class", "M_bound", "log2_M_eff"]
UNAVAILABLE = "unavailable"
INPUT_NAMES = ("b1", "p", "r")


# ============================================================================
# SWEEP CONFIG
# ============================================================================

@dataclass(frozen=True)
class SweepConfig:
    """Parsed `sweep` flags. The state is given by exactly one of b1, p or r."""

    model: Model
    input_name: str
    input_value: float
    l_start: int
    l_end: int
    l_step: int = 1
    convention: ChainConvention = ChainConvention.PAPER_L
    output_format: str = "csv"
    output: Optional[str] = None

    def __post_init__(self):
        if self.input_name not in INPUT_NAMES:
            raise DomainError(f"State input must be one of {INPUT_NAMES}, got {self.input_name!r}")
        if self.l_step < 1:
            raise DomainError(f"L step must be >= 1, got {self.l_step}")
        if self.l_end < self.l_start:
            raise DomainError(f"L range {self.l_start}..{self.l_end} is empty")
        if self.output_format not in ("csv", "json"):
            raise DomainError(f"Output format must be csv or json, got {self.output_format!r}")

    @property
    def working_b1(self) -> float:
        return working_fidelity_from(self.input_name, self.input_value)

    @property
    def l_values(self) -> range:
        return range(self.l_start, self.l_end + 1, self.l_step)


def working_fidelity_from(input_name: str, value: float) -> float:
    """B1 from a fidelity, a Werner parameter p or a robustness R"""
    if input_name == "p":
        return WernerParam(value).fidelity
    if input_name == "r":
        return Robustness(value).fidelity
    return float(value)


# ============================================================================
# CSV / JSON
# ============================================================================

def _fmt_float(value: Optional[float]) -> str:
    return "" if value is None else format(value, CSV_FLOAT_FORMAT)


def _fmt_int(value: Optional[int]) -> str:
    return "" if value is None else str(value)


def _fmt_growth(value: Optional[GrowthClass]) -> str:
    return UNAVAILABLE if value is None else value.value


def _point_row(point: SweepPoint) -> Dict[str, str]:
    return {
        "L": str(point.L),
        "chain_b1": _fmt_float(point.chain_b1),
        "m": _fmt_int(point.m),
        "M": _fmt_int(point.M),
        "converged": "true" if point.converged else "false",
        "growth_class": _fmt_growth(point.growth_class),
        "M_bound": _fmt_int(point.pairs_bound),
        "log2_M_eff": _fmt_float(point.log2_pairs),
    }


def sweep_header(curve: SweepCurve) -> str:
    return (
        f"# model={curve.model.value} param={_fmt_float(curve.input_value)} "
        f"working_b1={_fmt_float(curve.working_fidelity)} "
        f"convention={curve.convention.value} input={curve.input_name}"
    )


def write_sweep_csv(curve: SweepCurve, stream: TextIO):
    stream.write(sweep_header(curve) + "\n")
    writer = csv.DictWriter(stream, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for point in curve.points:
        writer.writerow(_point_row(point))


def write_sweep_json(curve: SweepCurve, stream: TextIO):
    payload = {
        "model": curve.model.value,
        "param": curve.input_value,
        "input": curve.input_name,
        "working_b1": curve.working_fidelity,
        "convention": curve.convention.value,
        "points": [
            {
                "L": p.L,
                "chain_b1": p.chain_b1,
                "m": p.m,
                "M": p.M,
                "converged": p.converged,
                "growth_class": _fmt_growth(p.growth_class),
                "M_bound": p.pairs_bound,
                "log2_M_eff": p.log2_pairs,
            }
            for p in curve.points
        ],
    }
    stream.write(json.dumps(payload, indent=2) + "\n")


def _parse_optional(raw: str, cast):
    return None if raw == "" else cast(raw)


def _parse_header(line: str) -> Dict[str, str]:
    if not line.startswith("#"):
        raise DomainError(f"Sweep file must start with a '# model=...' header, got {line!r}")
    fields = {}
    for token in line.lstrip("#").split():
        key, sep, value = token.partition("=")
        if not sep:
            raise DomainError(f"Malformed header token {token!r}")
        fields[key] = value
    missing = {"model", "param", "working_b1", "convention", "input"} - fields.keys()
    if missing:
        raise DomainError(f"Sweep header is missing {sorted(missing)}")
    return fields


def read_sweep_csv(path: str) -> SweepCurve:
    """Rebuild the SweepCurve written by write_sweep_csv"""
    with open(path, "r", newline="", encoding="utf-8") as f:
        header = _parse_header(f.readline().rstrip("\n"))
        points = []
        for row in csv.DictReader(f):
            growth = row["growth_class"]
            points.append(
                SweepPoint(
                    L=int(row["L"]),
                    chain_b1=float(row["chain_b1"]),
                    m=_parse_optional(row["m"], int),
                    M=_parse_optional(row["M"], int),
                    converged=row["converged"] == "true",
                    growth_class=None if growth == UNAVAILABLE else GrowthClass(growth),
                    pairs_bound=_parse_optional(row["M_bound"], int),
                    log2_pairs=_parse_optional(row["log2_M_eff"], float),
                )
            )
    return SweepCurve(
        model=Model.parse(header["model"]),
        working_fidelity=float(header["working_b1"]),
        convention=ChainConvention.parse(header["convention"]),
        points=tuple(points),
        input_name=header["input"],
        input_value=float(header["param"]),
    )


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_sweep(config: SweepConfig, stdout: TextIO = None) -> int:
    stdout = stdout or sys.stdout
    curve = sweep_m_of_l(
        config.model,
        config.working_b1,
        config.l_values,
        config.convention,
        input_name=config.input_name,
        input_value=config.input_value,
    )

    buffer = io.StringIO()
    if config.output_format == "json":
        write_sweep_json(curve, buffer)
    else:
        write_sweep_csv(curve, buffer)

    if config.output:
        with open(config.output, "w", newline="", encoding="utf-8") as f:
            f.write(buffer.getvalue())
        logger.info(f"✅ Wrote {len(curve.points)} rows to {config.output}")
    else:
        stdout.write(buffer.getvalue())

    try:
        logger.info(
            f"📊 Growth: {classify_growth(curve).value}, "
            f"log2 M slope {fit_log_growth(curve):.4f} per switcher"
        )
    except ClassificationUnavailable as e:
        logger.info(f"📊 Growth: {UNAVAILABLE} ({e})")
    return EXIT_OK


def cmd_plan(
    segments: int,
    working_b1: float,
    model: Model,
    convention: ChainConvention,
    L: Optional[int] = None,
    stdout: TextIO = None,
) -> int:
    stdout = stdout or sys.stdout
    plan = plan_segment(segments, working_b1, model, convention, L=L)
    if not plan.within_validity:
        print(
            f"warning: working_b1={working_b1} is outside the B1 > 0.95 range of the switcher restriction",
            file=sys.stderr,
        )

    lines = [
        f"model: {plan.model.value}",
        f"working_b1: {working_b1:.12g}",
        f"segments: {plan.segments}",
        f"l_max: {plan.l_max:.12g}",
        f"floor_l_max: {math.floor(plan.l_max) if math.isfinite(plan.l_max) else 'inf'}",
        f"l_onpp: {plan.l_onpp:.12g}",
        f"onpp_valid: {'true' if plan.within_validity else 'false'}",
        f"L: {plan.L}{' (given)' if plan.l_overridden else ''}",
        f"M: {_fmt_int(plan.M) or 'n/a'}",
        f"elementary_pairs: {_fmt_int(plan.elementary_pairs) or 'n/a'}",
        f"growth_class: {_fmt_growth(plan.growth_class)}",
        f"total_resources: {'n/a' if plan.total is None else format(plan.total, '.12g')}",
    ]
    stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_verify(trials: int, seed: int, stdout: TextIO = None) -> int:
    stdout = stdout or sys.stdout
    report = run_equivalence_suite(trials, seed)
    lines = [
        f"trials: {report.trials}",
        f"seed: {report.seed}",
        f"tolerance: {report.tolerance:.3g}",
        f"max_swap_deviation: {report.max_swap_deviation:.6e}",
        f"max_purify_deviation: {report.max_purify_deviation:.6e}",
        f"max_prob_deviation: {report.max_prob_deviation:.6e}",
        f"max_deviation: {report.max_deviation:.6e}",
    ]
    for failure in report.failures:
        a = ", ".join(_fmt_float(v) for v in failure["a"])
        b = ", ".join(_fmt_float(v) for v in failure["b"])
        lines.append(f"offending: trial={failure['trial']} a=({a}) b=({b}) deviation={failure['deviation']:.6e}")
    lines.append(f"status: {'pass' if report.passed else 'fail'}")
    stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def _yes_no(flag: bool) -> str:
    return "yes" if flag else "no"


def cmd_diagnose(
    p: Optional[float] = None,
    state: Optional[Tuple[float, float, float, float]] = None,
    stdout: TextIO = None,
) -> int:
    """Entanglement and nonlocality of a Werner pair, or of the Werner twirl of a Bell-diagonal state"""
    stdout = stdout or sys.stdout
    if (p is None) == (state is None):
        raise DomainError("Give exactly one of p or a Bell-diagonal state")

    if state is not None:
        bell = BellDiagonal.from_sequence(list(state))
        werner = to_werner(bell) if bell.b1 >= 0.25 else None
    else:
        werner = WernerParam(p)
        bell = None

    lines = []
    if bell is not None:
        lines.append("state: " + " ".join(format(v, ".12g") for v in bell))
    b1 = bell.b1 if bell is not None else werner.fidelity
    if werner is None:
        lines += ["p: n/a", f"b1: {b1:.12g}", "lambda: n/a", "bell_factor: n/a", "entangled: no", "nonlocal: no"]
    else:
        lines += [
            f"p: {werner.p:.12g}",
            f"b1: {b1:.12g}",
            f"lambda: {entanglement_factor(werner):.12g}",
            f"bell_factor: {bell_chsh_factor(werner):.12g}",
            f"entangled: {_yes_no(is_entangled(werner))}",
            f"nonlocal: {_yes_no(is_nonlocal(werner))}",
        ]
    purifiable = is_purifiable(bell) if bell is not None else b1 > 0.5
    lines.append(f"purifiable: {_yes_no(purifiable)}")
    stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


# ============================================================================
# ARGUMENT PARSING
# ============================================================================

def positive_int(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {raw!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def l_range(raw: str) -> Tuple[int, int]:
    """'a..b' (inclusive) or a single switcher count"""
    start, sep, end = raw.partition("..")
    try:
        bounds = (int(start), int(end)) if sep else (int(start), int(start))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START..END, got {raw!r}")
    if bounds[0] < 0 or bounds[1] < bounds[0]:
        raise argparse.ArgumentTypeError(f"range {raw!r} is empty or negative")
    return bounds


def _add_state_inputs(parser: argparse.ArgumentParser):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--b1", type=float, help="Working fidelity B1")
    group.add_argument("--p", type=float, help="Werner parameter p (B1 = (3p+1)/4)")
    group.add_argument("--r", type=float, help="QND robustness R (B1 = (1+R)/2)")


def _state_input(args) -> Tuple[str, float]:
    for name in INPUT_NAMES:
        value = getattr(args, name)
        if value is not None:
            return name, value
    raise DomainError("One of --b1, --p, --r is required")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npp",
        description="Security cost of nested entanglement purification in one repeater segment.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Pairs M(L) per switcher count")
    sweep.add_argument("--model", choices=[m.value for m in Model], required=True)
    _add_state_inputs(sweep)
    sweep.add_argument("--l", type=l_range, default=(1, 60), help="Switcher range START..END (default 1..60)")
    sweep.add_argument("--l-step", type=positive_int, default=1)
    sweep.add_argument("--convention", choices=CONVENTIONS, default=DEFAULT_CONVENTION)
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--output", help="Output file (default stdout)")

    plan = sub.add_parser("plan", help="Switcher count, pairs and total resources for N segments")
    plan.add_argument("--segments", type=positive_int, required=True, help="Number of segments N (>= 2)")
    _add_state_inputs(plan)
    plan.add_argument("--model", choices=[m.value for m in Model], default=Model.WERNER.value)
    plan.add_argument("--convention", choices=CONVENTIONS, default=DEFAULT_CONVENTION)
    plan.add_argument("--l", type=positive_int, help="Use this switcher count instead of the restriction")

    verify = sub.add_parser("verify", help="Density-matrix oracle against the closed-form maps")
    verify.add_argument("--trials", type=positive_int, default=DEFAULT_VERIFY_TRIALS)
    verify.add_argument("--seed", type=int, default=DEFAULT_VERIFY_SEED)

    diagnose = sub.add_parser("diagnose", help="Entanglement / nonlocality verdicts")
    state = diagnose.add_mutually_exclusive_group(required=True)
    state.add_argument("--p", type=float, help="Werner parameter p")
    state.add_argument("--state", type=float, nargs=4, metavar=("B1", "B2", "B3", "B4"))

    return parser


def _dispatch(args) -> int:
    if args.command == "sweep":
        input_name, input_value = _state_input(args)
        config = SweepConfig(
            model=Model.parse(args.model),
            input_name=input_name,
            input_value=input_value,
            l_start=args.l[0],
            l_end=args.l[1],
            l_step=args.l_step,
            convention=ChainConvention.parse(args.convention),
            output_format=args.format,
            output=args.output,
        )
        return cmd_sweep(config)
    if args.command == "plan":
        if args.segments < 2:
            raise DomainError(f"--segments must be >= 2, got {args.segments}")
        input_name, input_value = _state_input(args)
        return cmd_plan(
            args.segments,
            working_fidelity_from(input_name, input_value),
            Model.parse(args.model),
            ChainConvention.parse(args.convention),
            L=args.l,
        )
    if args.command == "verify":
        return cmd_verify(args.trials, args.seed)
    return cmd_diagnose(p=args.p, state=tuple(args.state) if args.state else None)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else LOG_LEVEL,
        format=LOG_FORMAT,
        stream=sys.stderr,
    )

    try:
        return _dispatch(args)
    except ValueError as e:
        logger.error(f"❌ {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"❌ I/O error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
