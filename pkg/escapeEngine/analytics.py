"""
기대 목표 검사 횟수 해석 모듈
BrFS/RRW의 폐형식 기대값을 임의 정밀도 유리수(Fraction)로 계산합니다.

공식 태그:
    thm1  일반 작업의 BrFS 기대값      N_O + (N + 1)/(g + 1)
    thm2  일반 작업의 RRW 기대값       e d*/s - (e - 1) d* + 1
    cor1  균일 분기 트리의 BrFS 기대값  (b^d - 1)/(b - 1) + (b^d + 1)/(g + 1)
    cor2  균일 분기 트리의 RRW 기대값   e d* b^d / g - (e - 1) d* + 1
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Union

from .config import get_setting
from .errors import DeadEnd, InvalidInput, NotLeveled
from .task_model import GraphTask, graph_levels, is_leveled, level_counts

logger = logging.getLogger(__name__)

FORMULAS = ("thm1", "thm2", "cor1", "cor2")

Rational = Union[int, Fraction]


@dataclass(frozen=True)
class Expectation:
    value: Fraction
    formula: str

    def __post_init__(self):
        if self.formula not in FORMULAS:
            raise InvalidInput(f"unknown formula tag {self.formula!r}")
        if self.value <= 0:
            raise InvalidInput(f"expectation must be positive, got {self.value}")

    def render(self, precision: Optional[int] = None) -> str:
        """'6827/2 (3413.500000)' 형식"""
        return f"{self.value} ({render_decimal(self.value, precision)})"


@dataclass(frozen=True)
class SuccessProbability:
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))
        if not 0 < self.value <= 1:
            raise InvalidInput(f"success probability must lie in (0, 1], got {self.value}")


def render_decimal(value: Rational, precision: Optional[int] = None) -> str:
    """유리수를 round-half-even으로 precision 자리 소수 문자열로 변환"""
    if precision is None:
        precision = get_setting("ESCAPE_PRECISION")
    if precision < 0:
        raise InvalidInput("precision must be non-negative")
    value = Fraction(value)
    sign = "-" if value < 0 else ""
    value = abs(value)

    scaled, rem = divmod(value.numerator * 10 ** precision, value.denominator)
    twice = 2 * rem
    if twice > value.denominator or (twice == value.denominator and scaled % 2 == 1):
        scaled += 1

    if precision == 0:
        return f"{sign}{scaled}" if scaled else "0"
    whole, frac = divmod(scaled, 10 ** precision)
    if whole == 0 and frac == 0:
        sign = ""
    return f"{sign}{whole}.{frac:0{precision}d}"


def parse_rational(text: Union[str, int, Fraction]) -> Fraction:
    """'1.5', '3/2', '2' 형식의 문자열을 정확한 유리수로 변환 (float는 거부)"""
    if isinstance(text, float):
        raise InvalidInput("rationals must be given as strings or exact numbers, not float")
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise InvalidInput(f"cannot parse {text!r} as an exact rational")


def _probability_value(s: Union[SuccessProbability, Rational]) -> Fraction:
    if isinstance(s, SuccessProbability):
        return s.value
    s = Fraction(s)
    if s <= 0:
        raise InvalidInput("success probability s = 0: RRW never terminates")
    if s > 1:
        raise InvalidInput(f"success probability must be <= 1, got {s}")
    return s


def check_depth_error(goal_level: int, depth_error: Rational) -> Fraction:
    e = Fraction(depth_error)
    if e < 1:
        raise InvalidInput(f"depth error must be >= 1, got {e}")
    t = e * goal_level
    if t.denominator != 1:
        raise InvalidInput(f"e*d* = {e}*{goal_level} = {t} is not an integer")
    if t < 1:
        raise InvalidInput(f"e*d* must be >= 1, got {t}")
    return e


def _check_tree(b: int, d_star: int, g: int) -> int:
    if b < 2:
        raise InvalidInput(f"branching factor must be >= 2, got {b}")
    if d_star < 1:
        raise InvalidInput(f"goal level must be >= 1, got {d_star}")
    size = b ** d_star
    if not 1 <= g <= size:
        raise InvalidInput(f"goal count must lie in [1, {size}], got {g}")
    return size


def expected_brfs_general(shallow: int, at_level: int, goals: int) -> Expectation:
    if goals < 1:
        raise InvalidInput(f"goal count must be >= 1, got {goals}")
    if at_level < goals:
        raise InvalidInput(f"N_d* = {at_level} must be >= g = {goals}")
    if shallow < 0:
        raise InvalidInput(f"N_O must be >= 0, got {shallow}")
    return Expectation(shallow + Fraction(at_level + 1, goals + 1), "thm1")


def expected_rrw_general(goal_level: int, depth_error: Rational,
                         s: Union[SuccessProbability, Rational]) -> Expectation:
    e = check_depth_error(goal_level, depth_error)
    s = _probability_value(s)
    value = e * goal_level / s - (e - 1) * goal_level + 1
    return Expectation(value, "thm2")


def expected_brfs_tree(b: int, d_star: int, g: int) -> Expectation:
    size = _check_tree(b, d_star, g)
    value = Fraction(size - 1, b - 1) + Fraction(size + 1, g + 1)
    return Expectation(value, "cor1")


def expected_rrw_tree(b: int, d_star: int, g: int, depth_error: Rational) -> Expectation:
    size = _check_tree(b, d_star, g)
    e = check_depth_error(d_star, depth_error)
    value = e * d_star * Fraction(size, g) - (e - 1) * d_star + 1
    return Expectation(value, "cor2")


def tree_success_probability(b: int, d_star: int, g: int) -> SuccessProbability:
    size = _check_tree(b, d_star, g)
    return SuccessProbability(Fraction(g, size))


def brfs_minus_rrw_tree(b: int, d_star: int, g: int, depth_error: Rational) -> Fraction:
    """E[B] - E[R] (트리). 0 이상이면 RRW가 BrFS와 같거나 더 빠름"""
    return expected_brfs_tree(b, d_star, g).value - expected_rrw_tree(b, d_star, g, depth_error).value


def dp_success_probability(task: GraphTask, t: int) -> SuccessProbability:
    """레벨 그래프에서 균등 깊이-t 워크가 목표를 방문할 정확한 확률

    방문 확률을 한 단계씩 전방 전파하며, 목표에 도달한 확률 질량은 흡수합니다.
    """
    if not is_leveled(task):
        raise NotLeveled("graph is not leveled: some vertex is reachable by paths of different lengths")
    counts = level_counts(task)
    levels = graph_levels(task)
    deeper = [v for v in task.goals if v in levels and levels[v] != counts.goal_level]
    if deeper:
        raise NotLeveled(f"goals {sorted(deeper)} lie below the goal level {counts.goal_level}")
    if t < counts.goal_level:
        raise InvalidInput(f"walk depth t={t} is below the goal level {counts.goal_level}")

    if task.initial in task.goals:
        return SuccessProbability(Fraction(1))

    success = Fraction(0)
    mass: Dict[int, Fraction] = {task.initial: Fraction(1)}
    for depth in range(t):
        nxt: Dict[int, Fraction] = {}
        for v, p in mass.items():
            successors = task.adjacency[v]
            if not successors:
                raise DeadEnd(v, depth)
            share = p / len(successors)
            for w in successors:
                nxt[w] = nxt.get(w, Fraction(0)) + share
        mass = {}
        for w, p in nxt.items():
            if w in task.goals:
                success += p
            else:
                mass[w] = p
        if not mass:
            break

    logger.debug("DP 성공 확률 s=%s (t=%d)", success, t)
    return SuccessProbability(success)
