"""
몬테카를로 검증 모듈
BrFS/RRW를 반복 실행하여 기대 목표 검사 횟수를 추정하고 해석 공식과 비교합니다.

평균/분산은 목표 검사 횟수와 그 제곱의 정수 합으로 누적하므로 실행 순서(스레드 스케줄)와
무관하게 결과가 같습니다. 소수 변환은 보고 시점에만 수행합니다.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats as scipy_stats

from .analytics import (
    Expectation,
    Rational,
    expected_brfs_tree,
    expected_rrw_tree,
)
from .config import get_setting
from .errors import InvalidInput, WalkBudgetExceeded
from .search.brfs import TIE_LEXICOGRAPHIC, RunStats, TieBreaking, run_brfs
from .search.rrw import RrwConfig, run_rrw
from .seeding import check_seed, make_rng, mix, placement_seed, stream_seed
from .task_model import TreeTask, TreeTaskSpec, make_tree_task, shallow_size

logger = logging.getLogger(__name__)

ALGORITHMS = ("brfs", "rrw")
DECIMAL_PREC = 40
CHUNK_SIZE = 1024
_ORACLE_BATCH = 2048

# 추정 1회 결과: (목표 검사 횟수 또는 예산 초과 시 None, 계수 위반 여부)
TrialOutcome = Tuple[Optional[int], bool]


@dataclass(frozen=True)
class EstimateSummary:
    trials: int
    mean: Fraction
    variance: Fraction
    std_error: Decimal
    ci_low: Decimal
    ci_high: Decimal
    base_seed: int
    confidence: float
    budget_failures: int = 0
    accounting_violations: int = 0
    total: int = 0
    total_squares: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidInput("an estimate needs at least one completed trial")
        if self.variance < 0:
            raise InvalidInput(f"variance must be non-negative, got {self.variance}")
        if not self.ci_low <= self.mean <= self.ci_high:
            raise InvalidInput("confidence interval does not contain the mean")

    @classmethod
    def from_sums(cls, trials: int, total: int, total_squares: int, base_seed: int,
                  confidence: Optional[float] = None, budget_failures: int = 0,
                  accounting_violations: int = 0) -> "EstimateSummary":
        """정수 합 Σx, Σx²로부터 표본 평균/불편 분산/정규 근사 신뢰구간 계산"""
        if confidence is None:
            confidence = get_setting("ESCAPE_CONFIDENCE")
        if not 0 < confidence < 1:
            raise InvalidInput(f"confidence must lie in (0, 1), got {confidence}")
        if trials < 2:
            raise InvalidInput(f"at least 2 completed trials are required, got {trials}")

        mean = Fraction(total, trials)
        variance = Fraction(trials * total_squares - total * total, trials * (trials - 1))
        z = Decimal(repr(float(scipy_stats.norm.ppf(0.5 + confidence / 2))))
        with localcontext() as ctx:
            ctx.prec = DECIMAL_PREC
            std_error = (_to_decimal(variance) / trials).sqrt()
            center = _to_decimal(mean)
            half = z * std_error
            ci_low, ci_high = center - half, center + half
        # Decimal 반올림으로 구간 끝이 평균을 벗어나지 않도록 정확한 평균으로 보정
        if ci_low > mean:
            ci_low = _floor_decimal(mean)
        if ci_high < mean:
            ci_high = _ceil_decimal(mean)
        return cls(trials, mean, variance, std_error, ci_low, ci_high, base_seed,
                   confidence, budget_failures, accounting_violations, total, total_squares)

    def covers(self, value: Rational) -> bool:
        return self.ci_low <= Fraction(value) <= self.ci_high


@dataclass(frozen=True)
class ValidationReport:
    analytic: Expectation
    estimate: EstimateSummary
    z_score: Decimal
    passed: bool
    z_threshold: float = 4.0


@dataclass(frozen=True)
class OracleResult:
    """모든(또는 표본) 목표 배치에 대한 결정적 BrFS 목표 검사 횟수 평균"""
    branching: int
    goal_level: int
    goal_count: int
    placements: int
    exhaustive: bool
    mean: Fraction
    std_error: Decimal


def _to_decimal(value: Fraction) -> Decimal:
    return Decimal(value.numerator) / Decimal(value.denominator)


def _floor_decimal(value: Fraction) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PREC
        scale = 10 ** (DECIMAL_PREC // 2)
        return Decimal(math.floor(value * scale)) / scale


def _ceil_decimal(value: Fraction) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PREC
        scale = 10 ** (DECIMAL_PREC // 2)
        return Decimal(math.ceil(value * scale)) / scale


def run_stats_violation(run: RunStats, level_limit: int) -> bool:
    """계수 항등식 위반 또는 level_limit보다 깊은 레벨 검사 여부

    BrFS는 level_limit = d*, RRW는 워크 깊이 t = e*d*를 넘지 않아야 합니다.
    """
    return not run.accounting_holds() or run.max_tested_level > level_limit


def _check_trials(trials: int) -> None:
    if trials < 2:
        raise InvalidInput(f"trials must be >= 2, got {trials}")


def _run_batch(trial_fn: Callable[[int], TrialOutcome], trials: int,
               workers: Optional[int] = None) -> List[TrialOutcome]:
    """trial_fn(i)를 i=0..trials-1에 대해 실행하고 인덱스 순서로 결과 반환"""
    if workers is None:
        workers = get_setting("ESCAPE_WORKERS")
    workers = max(1, int(workers))
    chunks = [range(start, min(start + CHUNK_SIZE, trials))
              for start in range(0, trials, CHUNK_SIZE)]

    def run_chunk(indices: range) -> List[TrialOutcome]:
        return [trial_fn(i) for i in indices]

    if workers == 1 or len(chunks) == 1:
        results = [run_chunk(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run_chunk, chunks))
    return [outcome for chunk in results for outcome in chunk]


def _summarize(outcomes: Sequence[TrialOutcome], base_seed: int,
               confidence: Optional[float], label: str) -> EstimateSummary:
    total = 0
    total_squares = 0
    completed = 0
    failures = 0
    violations = 0
    for goal_tests, violated in outcomes:
        if violated:
            violations += 1
        if goal_tests is None:
            failures += 1
            continue
        completed += 1
        total += goal_tests
        total_squares += goal_tests * goal_tests

    if failures:
        logger.warning("%s: %d회 시행이 워크 예산을 초과하여 평균에서 제외되었습니다", label, failures)
    if violations:
        logger.error("%s: 계수 항등식 위반 %d건", label, violations)
    if completed < 2:
        raise WalkBudgetExceeded(None, get_setting("ESCAPE_MAX_WALKS"))

    summary = EstimateSummary.from_sums(completed, total, total_squares, base_seed,
                                        confidence, failures, violations)
    logger.info("%s: %d회 시행, 평균 %s", label, completed, _to_decimal(summary.mean))
    return summary


def estimate_brfs(b: int, d_star: int, g: int, trials: int, base_seed: int,
                  tie: Optional[Union[TieBreaking, str]] = None,
                  confidence: Optional[float] = None,
                  workers: Optional[int] = None) -> EstimateSummary:
    """BrFS 목표 검사 횟수의 몬테카를로 추정

    시행 i는 placement_seed(base_seed, i)로 목표 배치를 새로 뽑고,
    무작위 타이브레이킹이면 stream_seed(base_seed, i)로 레벨 순서를 섞습니다.
    """
    _check_trials(trials)
    check_seed(base_seed)
    base_spec = TreeTaskSpec(b, d_star, g)
    base_spec.validate()
    mode = tie.mode if isinstance(tie, TieBreaking) else (tie or TIE_LEXICOGRAPHIC)
    TieBreaking(mode)

    def trial(i: int) -> TrialOutcome:
        task = make_tree_task(base_spec.with_seed(placement_seed(base_seed, i)))
        run = run_brfs(task, TieBreaking(mode, stream_seed(base_seed, i)))
        return run.goal_tests, not run.found or run_stats_violation(run, d_star)

    logger.info("BrFS 추정 시작: b=%d, d*=%d, g=%d, %d회, tie=%s", b, d_star, g, trials, mode)
    outcomes = _run_batch(trial, trials, workers)
    return _summarize(outcomes, base_seed, confidence, "BrFS")


def estimate_rrw(b: int, d_star: int, g: int, depth_error: Rational, trials: int,
                 base_seed: int, confidence: Optional[float] = None,
                 max_walks: Optional[int] = None,
                 workers: Optional[int] = None) -> EstimateSummary:
    """RRW 목표 검사 횟수의 몬테카를로 추정

    예산 초과 시행은 평균에서 제외하고 ``budget_failures``로 보고합니다.
    """
    _check_trials(trials)
    check_seed(base_seed)
    base_spec = TreeTaskSpec(b, d_star, g)
    base_spec.validate()
    e = Fraction(depth_error)
    if max_walks is None:
        max_walks = get_setting("ESCAPE_MAX_WALKS")
    t = RrwConfig(e, 0, max_walks).depth(d_star)

    def trial(i: int) -> TrialOutcome:
        task = make_tree_task(base_spec.with_seed(placement_seed(base_seed, i)))
        try:
            run = run_rrw(task, RrwConfig(e, stream_seed(base_seed, i), max_walks))
        except WalkBudgetExceeded as exc:
            logger.debug("시행 %d: 워크 예산 초과 (%d회)", i, exc.max_walks)
            return None, False
        return run.goal_tests, not run.found or run_stats_violation(run, t)

    logger.info("RRW 추정 시작: b=%d, d*=%d, g=%d, e=%s, %d회", b, d_star, g, e, trials)
    outcomes = _run_batch(trial, trials, workers)
    return _summarize(outcomes, base_seed, confidence, "RRW")


def validate_against(analytic: Union[Expectation, Rational], estimate: EstimateSummary,
                     z_threshold: Optional[float] = None,
                     formula: Optional[str] = None) -> ValidationReport:
    """z = (평균 - 해석값)/표준오차, |z| <= z_threshold이면 통과

    analytic이 Expectation이 아니면 공식 태그 formula를 함께 지정해야 합니다.
    """
    if z_threshold is None:
        z_threshold = get_setting("ESCAPE_Z_THRESHOLD")
    if not isinstance(analytic, Expectation):
        if formula is None:
            raise InvalidInput("a raw analytic value needs its formula tag (thm1, thm2, cor1, cor2)")
        analytic = Expectation(Fraction(analytic), formula)
    elif formula is not None and formula != analytic.formula:
        raise InvalidInput(f"formula {formula!r} does not match expectation tag {analytic.formula!r}")

    diff = estimate.mean - analytic.value
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PREC
        if estimate.std_error == 0:
            if diff == 0:
                z = Decimal(0)
            else:
                z = Decimal("Infinity") if diff > 0 else Decimal("-Infinity")
        else:
            z = _to_decimal(diff) / estimate.std_error
    passed = abs(z) <= Decimal(repr(float(z_threshold)))
    return ValidationReport(analytic, estimate, z, passed, float(z_threshold))


def validate(alg: str, b: int, d_star: int, g: int, trials: int, base_seed: int,
             depth_error: Optional[Rational] = None, z_threshold: Optional[float] = None,
             tie: Optional[Union[TieBreaking, str]] = None,
             confidence: Optional[float] = None,
             max_walks: Optional[int] = None,
             workers: Optional[int] = None) -> ValidationReport:
    """추정값을 따름정리 1(BrFS) 또는 2(RRW)의 해석값과 비교"""
    if alg == "brfs":
        analytic = expected_brfs_tree(b, d_star, g)
        estimate = estimate_brfs(b, d_star, g, trials, base_seed, tie, confidence, workers)
    elif alg == "rrw":
        if depth_error is None:
            raise InvalidInput("RRW validation requires a depth error e")
        analytic = expected_rrw_tree(b, d_star, g, depth_error)
        estimate = estimate_rrw(b, d_star, g, depth_error, trials, base_seed, confidence,
                                max_walks, workers)
    else:
        raise InvalidInput(f"unknown algorithm {alg!r}; expected one of {ALGORITHMS}")

    report = validate_against(analytic, estimate, z_threshold)
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, "검증 %s: z=%s (기준 %s)", "통과" if report.passed else "실패",
               report.z_score, report.z_threshold)
    return report


def coverage_rate(alg: str, b: int, d_star: int, g: int, trials: int, repetitions: int,
                  base_seed: int, depth_error: Optional[Rational] = None,
                  confidence: Optional[float] = None) -> Fraction:
    """서로 다른 시드로 반복 추정했을 때 신뢰구간이 해석값을 포함한 비율"""
    if repetitions < 1:
        raise InvalidInput("repetitions must be >= 1")
    covered = 0
    for r in range(repetitions):
        report = validate(alg, b, d_star, g, trials, mix(base_seed, r), depth_error,
                          confidence=confidence)
        if report.estimate.covers(report.analytic.value):
            covered += 1
    logger.info("신뢰구간 포함률: %d/%d", covered, repetitions)
    return Fraction(covered, repetitions)


def _lexicographic_tests(shallow: int, placement: Sequence[int]) -> int:
    # 사전식 BrFS는 얕은 정점을 모두 검사한 뒤 목표 레벨을 인덱스 순서로 검사
    return shallow + min(placement) + 1


def _engine_tests(spec: TreeTaskSpec, placement: Sequence[int]) -> int:
    task = TreeTask(spec, tuple(sorted(int(i) for i in placement)))
    run = run_brfs(task, TieBreaking(TIE_LEXICOGRAPHIC))
    if run_stats_violation(run, spec.goal_level):
        raise AssertionError(f"accounting violated for placement {tuple(placement)}")
    return run.goal_tests


def enumerate_brfs_placements(b: int, d_star: int, g: int, cap: Optional[int] = None,
                              seed: int = 0, use_engine: bool = False) -> OracleResult:
    """목표 배치 전수 열거로 BrFS 기대 목표 검사 횟수를 정확히 계산

    배치 수 C(b^d*, g)가 cap 이하이면 모든 배치를 열거하고, 초과하면 seed로 고정된
    cap개의 균등 표본을 사용합니다. use_engine=True이면 각 배치에서 run_brfs를 실제로 실행합니다.
    """
    spec = TreeTaskSpec(b, d_star, g)
    spec.validate()
    if cap is None:
        cap = get_setting("ESCAPE_ORACLE_CAP")
    size = spec.goal_level_size
    shallow = shallow_size(b, d_star)
    count_fn = (lambda p: _engine_tests(spec, p)) if use_engine else (lambda p: _lexicographic_tests(shallow, p))

    combinations = math.comb(size, g)
    if combinations <= cap:
        total = sum(count_fn(p) for p in itertools.combinations(range(size), g))
        logger.debug("오라클: b=%d, d*=%d, g=%d 배치 %d개 전수 열거", b, d_star, g, combinations)
        return OracleResult(b, d_star, g, combinations, True,
                            Fraction(total, combinations), Decimal(0))

    rng = make_rng(seed)
    counts: List[int] = []
    remaining = cap
    while remaining:
        n = min(remaining, _ORACLE_BATCH)
        # 각 행에서 무작위 키가 가장 작은 g개 인덱스 = 균등 비복원 추출
        keys = rng.random((n, size))
        chosen = np.argpartition(keys, g - 1, axis=1)[:, :g]
        if use_engine:
            counts.extend(count_fn(row) for row in chosen.tolist())
        else:
            counts.extend((shallow + chosen.min(axis=1) + 1).tolist())
        remaining -= n

    summary = EstimateSummary.from_sums(len(counts), sum(counts),
                                        sum(c * c for c in counts), check_seed(seed))
    logger.info("오라클: 배치 %d개 중 %d개 표본 추출", combinations, cap)
    return OracleResult(b, d_star, g, cap, False, summary.mean, summary.std_error)


def equidistribution_counts(branching: int, draws: int, seed: int) -> np.ndarray:
    """PCG64 스트림으로 뽑은 후속 정점 인덱스의 빈도 (스트림 품질 점검용)"""
    rng = make_rng(seed)
    return np.bincount(rng.integers(0, branching, size=draws), minlength=branching)
