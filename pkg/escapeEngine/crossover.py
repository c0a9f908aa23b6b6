"""
크로스오버 분석 모듈
RRW의 기대 목표 검사 횟수가 BrFS와 같아지거나 작아지는 목표 수(크로스오버)를
이론적 하한, 정확한 스캔, 목표 밀도 기준으로 계산하고 그래프용 시리즈를 생성합니다.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .analytics import (
    Rational,
    check_depth_error,
    expected_brfs_tree,
    expected_rrw_tree,
)
from .config import get_setting
from .errors import InvalidInput
from .task_model import level_size

logger = logging.getLogger(__name__)

NOTE_D1_EQUALITY = "d*=1: expectations are exactly equal at g=b and BrFS is strictly better below"
NOTE_D1_EMPIRICAL = "d*=1 with e>1: no proven bound, empirical crossover reported as the bound"
NOTE_D2_SPECIAL = "d*=2, e=1: bound is one higher than the general formula"
NOTE_SATURATED = "formula exceeds b^d*: only the saturated goal level is guaranteed"


@dataclass(frozen=True)
class NoCrossover:
    """RRW never matches BrFS for any g in [1, b^d*] under the chosen predicate."""
    branching: int
    goal_level: int
    depth_error: Fraction
    strict: bool = False


@dataclass(frozen=True)
class CrossoverReport:
    branching: int
    goal_level: int
    depth_error: Fraction
    bound: int
    exact: Union[int, NoCrossover]
    density_bound: Fraction
    density_exact: Optional[Fraction]
    bound_is_empirical: bool = False
    note: str = ""


@dataclass
class SweepSeries:
    name: str
    x_label: str
    y_label: str
    points: List[Tuple[int, Union[int, Fraction]]] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        xs = [x for x, _ in self.points]
        if any(a >= b for a, b in zip(xs, xs[1:])):
            raise InvalidInput(f"series {self.name!r}: x values must be strictly increasing")


def _validate(b: int, d_star: int, depth_error: Rational) -> Fraction:
    if b < 2:
        raise InvalidInput(f"branching factor must be >= 2, got {b}")
    if d_star < 1:
        raise InvalidInput(f"goal level must be >= 1, got {d_star}")
    return check_depth_error(d_star, depth_error)


def rrw_matches_brfs(b: int, d_star: int, g: int, depth_error: Rational,
                     strict: bool = False) -> bool:
    """E[R] <= E[B] (strict=True이면 E[R] < E[B])"""
    brfs = expected_brfs_tree(b, d_star, g).value
    rrw = expected_rrw_tree(b, d_star, g, depth_error).value
    return rrw < brfs if strict else rrw <= brfs


def empirical_crossover(b: int, d_star: int, depth_error: Rational,
                        strict: bool = False,
                        scan_limit: Optional[int] = None) -> Union[int, NoCrossover]:
    """따름정리 1, 2의 정확한 비교로 찾은 최소 크로스오버 g

    후보가 scan_limit 이하이면 선형 스캔, 그보다 크면 단조 이분 탐색을 사용합니다.
    """
    e = _validate(b, d_star, depth_error)
    size = level_size(b, d_star)
    if scan_limit is None:
        scan_limit = get_setting("ESCAPE_SCAN_LIMIT")

    if size <= scan_limit:
        for g in range(1, size + 1):
            if rrw_matches_brfs(b, d_star, g, e, strict):
                return g
        return NoCrossover(b, d_star, e, strict)

    if not rrw_matches_brfs(b, d_star, size, e, strict):
        return NoCrossover(b, d_star, e, strict)
    lo, hi = 1, size
    while lo < hi:
        mid = (lo + hi) // 2
        if rrw_matches_brfs(b, d_star, mid, e, strict):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _bound_with_note(b: int, d_star: int, e: Fraction) -> Tuple[int, bool, str]:
    walk_depth = int(e * d_star)
    size = level_size(b, d_star)

    if d_star == 1:
        if e == 1:
            return b, False, NOTE_D1_EQUALITY
        exact = empirical_crossover(b, d_star, e)
        logger.warning("d*=1, e=%s: 증명된 하한이 없어 실제 크로스오버(%s)를 사용합니다", e, exact)
        if isinstance(exact, NoCrossover):
            raise InvalidInput(f"no crossover exists for b={b}, d*=1, e={e}")
        return exact, True, NOTE_D1_EMPIRICAL

    if d_star == 2 and e == 1:
        bound, note = (walk_depth - 1) * (b - 1) + 2, NOTE_D2_SPECIAL
    else:
        bound, note = (walk_depth - 1) * (b - 1) + 1, ""

    if bound > size:
        return size, False, NOTE_SATURATED
    return bound, False, note


def crossover_bound(b: int, d_star: int, depth_error: Rational) -> int:
    """정리 3(및 d*=1, d*=2·e=1 특수 경우)이 E[B] >= E[R]을 보장하는 최소 g"""
    e = _validate(b, d_star, depth_error)
    return _bound_with_note(b, d_star, e)[0]


def density_crossover(b: int, d_star: int, depth_error: Rational) -> Fraction:
    """크로스오버 하한 / b^d*"""
    return Fraction(crossover_bound(b, d_star, depth_error), level_size(b, d_star))


def crossover_report(b: int, d_star: int, depth_error: Rational,
                     strict: bool = False) -> CrossoverReport:
    e = _validate(b, d_star, depth_error)
    size = level_size(b, d_star)
    bound, empirical, note = _bound_with_note(b, d_star, e)
    exact = empirical_crossover(b, d_star, e, strict)
    density_exact = None if isinstance(exact, NoCrossover) else Fraction(exact, size)
    return CrossoverReport(
        branching=b,
        goal_level=d_star,
        depth_error=e,
        bound=bound,
        exact=exact,
        density_bound=Fraction(bound, size),
        density_exact=density_exact,
        bound_is_empirical=empirical,
        note=note,
    )


def _e_label(e: Fraction) -> str:
    return f"e={e}"


def _valid_depth(d_star: int, e: Fraction) -> bool:
    return (e * d_star).denominator == 1


def sweep_expected_tests(b: int, d_star: int, e_list: Sequence[Rational],
                         g_range: Iterable[int]) -> List[SweepSeries]:
    """목표 수 g에 따른 BrFS/RRW 기대 목표 검사 횟수 시리즈"""
    goals = list(g_range)
    errors = [_validate(b, d_star, e) for e in e_list]
    config = {"b": b, "d": d_star}

    series = [SweepSeries(
        name="brfs", x_label="goals", y_label="expected_goal_tests",
        points=[(g, expected_brfs_tree(b, d_star, g).value) for g in goals],
        config=dict(config),
    )]
    for e in errors:
        series.append(SweepSeries(
            name=f"rrw {_e_label(e)}", x_label="goals", y_label="expected_goal_tests",
            points=[(g, expected_rrw_tree(b, d_star, g, e).value) for g in goals],
            config={**config, "e": str(e)},
        ))
    return series


def sweep_crossover(b: int, d_range: Iterable[int], e_list: Sequence[Rational]) -> List[SweepSeries]:
    """목표 레벨에 따른 크로스오버 하한/실제값 시리즈 (e별 2개)

    e*d*가 정수가 아닌 레벨은 해당 e의 시리즈에서 제외합니다.
    """
    depths = list(d_range)
    result: List[SweepSeries] = []
    for raw_e in e_list:
        e = parse_error(raw_e)
        bound_points, exact_points = [], []
        for d_star in depths:
            if not _valid_depth(d_star, e):
                logger.debug("e=%s, d*=%d: e*d*가 정수가 아니므로 건너뜁니다", e, d_star)
                continue
            report = crossover_report(b, d_star, e)
            bound_points.append((d_star, report.bound))
            if isinstance(report.exact, NoCrossover):
                logger.warning("b=%d, d*=%d, e=%s: 크로스오버가 없습니다", b, d_star, e)
                continue
            exact_points.append((d_star, report.exact))
        config = {"b": b, "e": str(e)}
        result.append(SweepSeries(f"bound {_e_label(e)}", "goal_level", "goal_crossover",
                                  bound_points, dict(config)))
        result.append(SweepSeries(f"exact {_e_label(e)}", "goal_level", "goal_crossover",
                                  exact_points, dict(config)))
    return result


def sweep_density(b: int, d_range: Iterable[int], e_list: Sequence[Rational]) -> List[SweepSeries]:
    """목표 레벨에 따른 목표 밀도 크로스오버 시리즈 (e별 1개)"""
    depths = list(d_range)
    result: List[SweepSeries] = []
    for raw_e in e_list:
        e = parse_error(raw_e)
        points = [(d_star, density_crossover(b, d_star, e))
                  for d_star in depths if _valid_depth(d_star, e)]
        result.append(SweepSeries(f"density {_e_label(e)}", "goal_level", "density_crossover",
                                  points, {"b": b, "e": str(e)}))
    return result


def parse_error(value: Rational) -> Fraction:
    e = Fraction(value)
    if e < 1:
        raise InvalidInput(f"depth error must be >= 1, got {e}")
    return e
