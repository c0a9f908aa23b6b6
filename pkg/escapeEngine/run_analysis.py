#!/usr/bin/env python3
"""
escapeEngine 명령줄 도구
BrFS/RRW 기대값 계산, 크로스오버 분석, 그래프용 데이터 생성, 몬테카를로 검증을 실행합니다.

종료 코드:
    0  성공
    1  통계 검증 실패
    2  인자 오류 또는 시드 누락
    3  입력 전제 위반 (InvalidInput, InvalidSpec, NoExit, Unreachable, NotLeveled, 범위 초과)
    4  출력 파일 쓰기 실패
    5  DeadEnd, 워크/프런티어 예산 초과
  130  사용자 중단
"""

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from filelock import FileLock, Timeout

from .analytics import (
    Expectation,
    check_depth_error,
    dp_success_probability,
    expected_brfs_general,
    expected_brfs_tree,
    expected_rrw_general,
    expected_rrw_tree,
    parse_rational,
    render_decimal,
)
from .config import get_setting
from .crossover import NoCrossover, SweepSeries, crossover_report, sweep_crossover, sweep_density, sweep_expected_tests
from .errors import (
    DeadEnd,
    EscapeEngineError,
    InvalidInput,
    InvalidSpec,
    MemoryBudgetExceeded,
    NoExit,
    NotLeveled,
    OutputError,
    Unreachable,
    WalkBudgetExceeded,
)
from .logger import setup_logging
from .montecarlo import EstimateSummary, ValidationReport, estimate_brfs, estimate_rrw, validate
from .search import RrwConfig, TieBreaking, run_brfs, run_rrw
from .search.brfs import TIE_LEXICOGRAPHIC, TIE_MODES, TIE_RANDOM
from .search.hill_climb import escape_chain
from .seeding import check_seed, entropy_seed
from .task_model import goal_level_violations, is_leveled, level_counts, parse_graph_text, split_graph_text

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_OUTPUT = 4
EXIT_BUDGET = 5
EXIT_INTERRUPTED = 130

SERIES_HEADER = ("x", "series", "value_exact", "value_decimal")
DEFAULT_ERRORS = "1"
DEFAULT_SWEEP_ERRORS = "1,3/2,2"
LOCK_TIMEOUT = 10


class CommandResult:
    """명령 출력 데이터와 종료 코드"""

    def __init__(self, payload: Any, exit_code: int = EXIT_OK):
        self.payload = payload
        self.exit_code = exit_code


# --- 인자 변환 ---

def _seed_arg(text: str) -> int:
    try:
        return check_seed(int(text, 0))
    except (TypeError, ValueError) as e:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}: {e}")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _int_range(text: str) -> List[int]:
    """'5' 또는 '1..64' (양 끝 포함)"""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            if lo > hi:
                raise argparse.ArgumentTypeError(f"empty range {text!r}")
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer or range {text!r}")


def _error_list(text: str) -> List[Fraction]:
    return [parse_rational(part) for part in text.split(",") if part.strip()]


def _single(values: Optional[List[int]], name: str) -> int:
    if values is None:
        raise InvalidInput(f"--{name} is required")
    if len(values) != 1:
        raise InvalidInput(f"--{name} expects a single value here, got a range")
    return values[0]


# --- 출력 렌더링 ---

def _exact(value) -> str:
    return str(Fraction(value))


def _series_rows(series: Sequence[SweepSeries], precision: int) -> List[Dict[str, str]]:
    rows = []
    for s in series:
        for x, value in s.points:
            rows.append({
                "x": str(x),
                "series": s.name,
                "value_exact": _exact(value),
                "value_decimal": render_decimal(value, precision),
            })
    return rows


def _render_rows(rows: List[Dict[str, str]], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, ensure_ascii=False, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SERIES_HEADER)
        for row in rows:
            writer.writerow([row[k] for k in SERIES_HEADER])
        return buf.getvalue()
    width = max([len(r["series"]) for r in rows] + [len("series")])
    lines = [f"{'x':>6}  {'series':<{width}}  value"]
    for r in rows:
        lines.append(f"{r['x']:>6}  {r['series']:<{width}}  {r['value_exact']} ({r['value_decimal']})")
    return "\n".join(lines) + "\n"


def _render_mapping(data: Dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(data, ensure_ascii=False, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("key", "value"))
        for key, value in data.items():
            writer.writerow((key, _flat(value)))
        return buf.getvalue()
    return "".join(f"{key}={_flat(value)}\n" for key, value in data.items())


def _flat(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def write_atomic(path: Path, data: str) -> None:
    """원자적 파일 쓰기: 임시 파일에 작성 후 rename으로 안전하게 저장"""
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with open(tmp_path, "w", encoding="utf-8", newline="") as f:
        f.write(data)
    tmp_path.replace(path)


def emit(text: str, out: Optional[Path]) -> None:
    """stdout 또는 --out 경로로 출력 (파일 잠금 후 원자적 쓰기)"""
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    out = Path(out)
    if not out.parent.exists() or not out.parent.is_dir():
        raise OutputError(f"output directory does not exist: {out.parent}")
    try:
        with FileLock(str(out) + ".lock", timeout=LOCK_TIMEOUT):
            write_atomic(out, text)
    except Timeout:
        raise OutputError(f"could not lock {out} within {LOCK_TIMEOUT}s")
    except OSError as e:
        raise OutputError(f"cannot write {out}: {e}")
    logging.info("결과 저장: %s", out)


def _expectation_record(alg: str, exp: Expectation, precision: int) -> Dict[str, str]:
    return {
        "alg": alg,
        "formula": exp.formula,
        "value_exact": _exact(exp.value),
        "value_decimal": render_decimal(exp.value, precision),
    }


def _summary_record(summary: EstimateSummary, precision: int) -> Dict[str, Any]:
    return {
        "trials": summary.trials,
        "mean": _exact(summary.mean),
        "mean_decimal": render_decimal(summary.mean, precision),
        "variance": _exact(summary.variance),
        "variance_decimal": render_decimal(summary.variance, precision),
        "std_error": render_decimal(Fraction(summary.std_error), precision),
        "ci_low": render_decimal(Fraction(summary.ci_low), precision),
        "ci_high": render_decimal(Fraction(summary.ci_high), precision),
        "confidence": summary.confidence,
        "base_seed": summary.base_seed,
        "budget_failures": summary.budget_failures,
        "accounting_violations": summary.accounting_violations,
    }


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    if args.nondeterministic:
        seed = entropy_seed()
        logging.warning("시드 미지정: OS 엔트로피에서 시드 %d를 사용합니다", seed)
        return seed
    raise _MissingSeed()


class _MissingSeed(Exception):
    pass


# --- 서브커맨드 ---

def cmd_expect(args) -> CommandResult:
    """따름정리 1/2 (트리) 또는 정리 1/2 (--file 그래프) 기대값 출력"""
    algs = ("brfs", "rrw") if args.alg == "both" else (args.alg,)
    records = []
    if args.file:
        task = _load_task(args.file)
        _warn_deeper_goals(task)
        counts = level_counts(task)
        for alg in algs:
            if alg == "brfs":
                exp = expected_brfs_general(counts.shallow_count, counts.goal_level_count,
                                            counts.goal_count_at_level)
            else:
                e = _single_error(args)
                if not is_leveled(task):
                    raise NotLeveled("exact RRW expectation needs a leveled graph")
                t = int(check_depth_error(counts.goal_level, e) * counts.goal_level)
                exp = expected_rrw_general(counts.goal_level, e, dp_success_probability(task, t))
            records.append(_expectation_record(alg, exp, args.precision))
    else:
        b, d, g = args.b, _single(args.depth, "depth"), _single(args.goals, "goals")
        for alg in algs:
            if alg == "brfs":
                exp = expected_brfs_tree(b, d, g)
            else:
                exp = expected_rrw_tree(b, d, g, _single_error(args))
            records.append(_expectation_record(alg, exp, args.precision))

    if args.format == "json":
        return CommandResult(records)
    if args.format == "csv":
        x = "graph" if args.file else str(_single(args.goals, "goals"))
        rows = [{"x": x, "series": r["alg"], "value_exact": r["value_exact"],
                 "value_decimal": r["value_decimal"]} for r in records]
        return CommandResult(_render_rows(rows, "csv"))
    lines = [f"{r['value_exact']} ({r['value_decimal']})" for r in records]
    if len(records) > 1:
        lines = [f"{r['alg']}: {line}" for r, line in zip(records, lines)]
    return CommandResult("\n".join(lines) + "\n")


def _single_error(args) -> Fraction:
    errors = _error_list(args.error if args.error is not None else DEFAULT_ERRORS)
    if len(errors) != 1:
        raise InvalidInput("--error expects a single depth error here")
    return errors[0]


def cmd_crossover(args) -> CommandResult:
    d = _single(args.depth, "depth")
    report = crossover_report(args.b, d, _single_error(args), strict=args.strict)
    exact = "none" if isinstance(report.exact, NoCrossover) else report.exact
    data = {
        "b": report.branching,
        "depth": report.goal_level,
        "error": _exact(report.depth_error),
        "bound": report.bound,
        "exact": exact,
        "density": _exact(report.density_bound),
        "density_decimal": render_decimal(report.density_bound, args.precision),
        "density_exact": "none" if report.density_exact is None else _exact(report.density_exact),
        "bound_is_empirical": report.bound_is_empirical,
    }
    if report.note:
        data["note"] = report.note
    return CommandResult(data)


def cmd_sweep(args) -> CommandResult:
    explicit = args.errors or args.error
    errors = _error_list(explicit or DEFAULT_SWEEP_ERRORS)
    if args.kind == "tests":
        if args.goals is None:
            raise InvalidInput("--goals range is required for --kind tests")
        d = _single(args.depth, "depth")
        if not explicit:
            errors = [e for e in errors if (e * d).denominator == 1]
        series = sweep_expected_tests(args.b, d, errors, args.goals)
    else:
        depths = args.depths or args.depth
        if depths is None:
            raise InvalidInput("--depths range is required")
        if args.kind == "crossover":
            series = sweep_crossover(args.b, depths, errors)
        else:
            series = sweep_density(args.b, depths, errors)
    logging.info("시리즈 %d개 생성 (%s)", len(series), args.kind)
    return CommandResult(_series_rows(series, args.precision))


def cmd_simulate(args) -> CommandResult:
    seed = _resolve_seed(args)
    b, d, g = args.b, _single(args.depth, "depth"), _single(args.goals, "goals")
    if args.alg == "brfs":
        summary = estimate_brfs(b, d, g, args.trials, seed, _tie(args, seed))
    else:
        summary = estimate_rrw(b, d, g, _single_error(args), args.trials, seed,
                               max_walks=args.max_walks)
    data = {"alg": args.alg, "b": b, "depth": d, "goals": g}
    if args.alg == "rrw":
        data["error"] = _exact(_single_error(args))
    data.update(_summary_record(summary, args.precision))
    return CommandResult(data, _summary_exit(summary))


def cmd_validate(args) -> CommandResult:
    seed = _resolve_seed(args)
    b, d, g = args.b, _single(args.depth, "depth"), _single(args.goals, "goals")
    error = _single_error(args) if args.alg == "rrw" else None
    report: ValidationReport = validate(args.alg, b, d, g, args.trials, seed, error,
                                        args.z_threshold, _tie(args, seed),
                                        max_walks=args.max_walks)
    data = {"alg": args.alg, "b": b, "depth": d, "goals": g}
    if error is not None:
        data["error"] = _exact(error)
    data.update({
        "formula": report.analytic.formula,
        "analytic": _exact(report.analytic.value),
        "analytic_decimal": render_decimal(report.analytic.value, args.precision),
    })
    data.update(_summary_record(report.estimate, args.precision))
    z = report.z_score
    data["z_score"] = str(z) if not z.is_finite() else render_decimal(Fraction(z), args.precision)
    data["z_threshold"] = report.z_threshold
    data["pass"] = report.passed

    code = _summary_exit(report.estimate)
    if code == EXIT_OK and not report.passed:
        code = EXIT_FAILED
    return CommandResult(data, code)


def _summary_exit(summary: EstimateSummary) -> int:
    if summary.budget_failures:
        return EXIT_BUDGET
    if summary.accounting_violations:
        return EXIT_FAILED
    return EXIT_OK


def _tie(args, seed: int) -> TieBreaking:
    return TieBreaking(args.tie, seed if args.tie == TIE_RANDOM else 0)


def _load_task(path: Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidInput(f"cannot read graph file {path}: {e}")
    return parse_graph_text(text)


def _warn_deeper_goals(task) -> None:
    deeper = goal_level_violations(task)
    if deeper:
        logging.warning("목표 %s가 d*보다 깊은 레벨에 있어 해석 공식의 전제를 벗어납니다", deeper)


def cmd_graph_run(args) -> CommandResult:
    task = _load_task(args.file)
    _warn_deeper_goals(task)

    randomized = args.alg == "rrw" or args.tie == TIE_RANDOM
    seed = _resolve_seed(args) if randomized else 0
    if args.alg == "brfs":
        stats = run_brfs(task, _tie(args, seed))
    else:
        kwargs = {} if args.max_walks is None else {"max_walks": args.max_walks}
        stats = run_rrw(task, RrwConfig(_single_error(args), seed, **kwargs))

    data = {
        "alg": args.alg,
        "found": stats.found,
        "goal_tests": stats.goal_tests,
        "successor_generations": stats.successor_generations,
        "path": list(stats.path),
    }
    if args.alg == "rrw":
        data["walks"] = stats.walks
        data["seed"] = seed
    return CommandResult(data)


def cmd_escape(args) -> CommandResult:
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidInput(f"cannot read graph file {args.file}: {e}")
    adjacency, initial, _, heuristic = split_graph_text(text)
    if heuristic is None:
        raise InvalidSpec("escape needs a graph file with an 'h:' heuristic line")

    randomized = args.alg == "rrw" or args.tie == TIE_RANDOM
    seed = _resolve_seed(args) if randomized else 0
    result = escape_chain(
        adjacency, heuristic, initial,
        algorithm=args.alg,
        depth_error=_single_error(args),
        seed=seed,
        tie_mode=args.tie,
        max_escapes=args.max_escapes,
        max_walks=args.max_walks,
    )
    data = {
        "alg": args.alg,
        "start": result.start,
        "final": result.final,
        "reached_zero": result.reached_zero,
        "escapes": len(result.escapes),
        "goal_tests": result.total_goal_tests,
        "successor_generations": result.total_successor_generations,
        "trajectory": result.trajectory,
    }
    if randomized:
        data["seed"] = seed
    return CommandResult(data)


COMMANDS = {
    "expect": cmd_expect,
    "crossover": cmd_crossover,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "graph-run": cmd_graph_run,
    "escape": cmd_escape,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="escapeEngine.run_analysis",
        description="BrFS와 고정 깊이 재시작 랜덤 워크(RRW)의 목표 검사 횟수를 분석합니다.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
사용 예시:
  %(prog)s expect --alg brfs --b 4 --depth 6 --goals 1
  %(prog)s crossover --b 4 --depth 6 --error 1
  %(prog)s sweep --kind density --b 4 --depths 2..8 --errors 1,2 --format csv --out density.csv
  %(prog)s validate --alg rrw --b 2 --depth 2 --goals 3 --error 1 --trials 100000 --seed 7
  %(prog)s graph-run --file graph.txt --alg rrw --error 2 --seed 1
        """
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="실행할 분석")

    # 작업 파라미터
    parser.add_argument("--b", type=int, default=None, help="분기 계수 b (>= 2)")
    parser.add_argument("--depth", type=_int_range, default=None, help="목표 레벨 d*")
    parser.add_argument("--depths", type=_int_range, default=None, help="목표 레벨 범위 (예: 2..8)")
    parser.add_argument("--goals", type=_int_range, default=None, help="목표 수 g 또는 범위 (예: 1..64)")
    parser.add_argument("--error", default=None, help="깊이 오차 e (예: 1, 1.5, 3/2)")
    parser.add_argument("--errors", default=None, help=f"sweep 깊이 오차 목록 (기본: {DEFAULT_SWEEP_ERRORS})")
    parser.add_argument("--file", type=Path, default=None, help="명시적 그래프 텍스트 파일")
    parser.add_argument("--alg", choices=("brfs", "rrw", "both"), default="brfs",
                        help="알고리즘 (기본: brfs)")
    parser.add_argument("--kind", choices=("tests", "crossover", "density"), default="tests",
                        help="sweep 종류 (기본: tests)")
    parser.add_argument("--strict", action="store_true",
                        help="크로스오버 판정에 E[R] < E[B] 사용 (기본: <=)")
    parser.add_argument("--tie", choices=TIE_MODES, default=TIE_LEXICOGRAPHIC,
                        help="BrFS 레벨 내 순서 (기본: 사전식)")

    # 시뮬레이션 옵션
    parser.add_argument("--trials", type=_positive_int, default=None, help="몬테카를로 시행 수")
    parser.add_argument("--seed", type=_seed_arg, default=None, help="64비트 기본 시드")
    parser.add_argument("--nondeterministic", action="store_true",
                        help="시드 미지정 시 OS 엔트로피 사용")
    parser.add_argument("--z-threshold", type=float, default=None,
                        help=f"validate 통과 기준 |z| (기본: {get_setting('ESCAPE_Z_THRESHOLD')})")
    parser.add_argument("--max-walks", type=_positive_int, default=None, help="RRW 워크 상한")
    parser.add_argument("--max-escapes", type=_positive_int, default=None, help="escape 반복 상한")

    # 출력 옵션
    parser.add_argument("--format", choices=("csv", "json", "table"), default="table",
                        help="출력 형식 (기본: table)")
    parser.add_argument("--out", type=Path, default=None, help="출력 파일 경로 (미지정 시 stdout)")
    parser.add_argument("--precision", type=int, default=None,
                        help=f"소수 자릿수 (기본: {get_setting('ESCAPE_PRECISION')})")

    parser.add_argument("-v", "--verbose", action="store_true", help="상세 로그 출력")
    return parser


def _check_required(args, parser: argparse.ArgumentParser) -> None:
    needs_tree = {"expect", "crossover", "sweep", "simulate", "validate"}
    if args.command in needs_tree and not (args.command == "expect" and args.file):
        if args.b is None:
            parser.error(f"{args.command}: --b is required")
    if args.command in ("graph-run", "escape") and args.file is None:
        parser.error(f"{args.command}: --file is required")
    if args.command in ("simulate", "validate"):
        if args.trials is None:
            parser.error(f"{args.command}: --trials is required")
        if args.alg == "both":
            parser.error(f"{args.command}: --alg must be brfs or rrw")
    if args.command in ("graph-run", "escape") and args.alg == "both":
        parser.error(f"{args.command}: --alg must be brfs or rrw")
    if args.precision is not None and args.precision < 0:
        parser.error("--precision must be non-negative")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """메인 함수. 종료 코드를 반환합니다."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        _check_required(args, parser)
    except SystemExit:
        return EXIT_USAGE
    if args.precision is None:
        args.precision = get_setting("ESCAPE_PRECISION")

    setup_logging(args.verbose)

    try:
        result = COMMANDS[args.command](args)
        payload = result.payload
        if isinstance(payload, str):
            text = payload
        elif isinstance(payload, dict):
            text = _render_mapping(payload, args.format)
        elif args.command == "sweep":
            text = _render_rows(payload, args.format)
        else:
            text = json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
        emit(text, args.out)
        return result.exit_code

    except _MissingSeed:
        logging.error("--seed가 필요합니다 (재현성). 무작위 시드를 쓰려면 --nondeterministic을 지정하세요.")
        return EXIT_USAGE
    except KeyboardInterrupt:
        logging.info("사용자에 의해 프로그램이 중단되었습니다.")
        return EXIT_INTERRUPTED
    except OutputError as e:
        logging.error("출력 실패: %s", e)
        return EXIT_OUTPUT
    except (DeadEnd, WalkBudgetExceeded, MemoryBudgetExceeded) as e:
        logging.error("실행 예산/막다른 정점: %s", e)
        return EXIT_BUDGET
    except (InvalidInput, InvalidSpec, NoExit, Unreachable, NotLeveled, OverflowError) as e:
        logging.error("입력 오류: %s", e)
        return EXIT_INVALID
    except EscapeEngineError as e:
        logging.error("처리 실패: %s", e)
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
