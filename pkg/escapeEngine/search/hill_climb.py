# hill_climb.py
"""Escape chain over an explicit graph with a heuristic.

Starting from the initial vertex, each plateau/local minimum is escaped by
running BrFS or RRW on the escape task rooted at the current vertex (goals are
vertices with a strictly smaller heuristic value). The vertex found becomes the
new current vertex. The chain ends when h reaches 0 or no improving vertex
remains.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

from ..errors import InvalidInput, NoExit, Unreachable
from ..seeding import mix
from ..task_model import make_escape_task
from .brfs import RunStats, TieBreaking, run_brfs
from .rrw import RrwConfig, run_rrw

logger = logging.getLogger(__name__)

ESCAPE_ALGORITHMS = ("brfs", "rrw")


@dataclass
class EscapeChainResult:
    start: int
    final: int
    reached_zero: bool
    escapes: List[RunStats] = field(default_factory=list)
    trajectory: List[int] = field(default_factory=list)

    @property
    def total_goal_tests(self) -> int:
        return sum(s.goal_tests for s in self.escapes)

    @property
    def total_successor_generations(self) -> int:
        return sum(s.successor_generations for s in self.escapes)


def escape_chain(adjacency: Sequence[Sequence[int]], heuristic: Sequence[float], initial: int,
                 algorithm: str = "brfs", depth_error: Fraction = Fraction(1),
                 seed: int = 0, tie_mode: Optional[str] = None,
                 max_escapes: Optional[int] = None,
                 max_walks: Optional[int] = None) -> EscapeChainResult:
    """지역 최소점 탈출을 반복하여 휴리스틱 0 또는 탈출 불가 지점까지 진행

    각 탈출의 시드는 mix(seed, i)로 파생됩니다.
    """
    if algorithm not in ESCAPE_ALGORITHMS:
        raise InvalidInput(f"unknown escape algorithm {algorithm!r}")

    result = EscapeChainResult(start=initial, final=initial, reached_zero=False,
                               trajectory=[initial])
    current = initial
    limit = max_escapes if max_escapes is not None else len(adjacency)

    for i in range(limit):
        if heuristic[current] == 0:
            break
        try:
            task = make_escape_task(adjacency, current, heuristic)
        except NoExit:
            logger.info("정점 %d에서 개선 정점이 없어 탈출을 종료합니다 (h=%s)",
                        current, heuristic[current])
            break

        if algorithm == "brfs":
            tie = TieBreaking(tie_mode, mix(seed, i)) if tie_mode else TieBreaking()
            stats = run_brfs(task, tie)
        else:
            kwargs = {} if max_walks is None else {"max_walks": max_walks}
            try:
                stats = run_rrw(task, RrwConfig(depth_error, mix(seed, i), **kwargs))
            except Unreachable:
                logger.info("정점 %d에서 도달 가능한 개선 정점이 없습니다", current)
                break

        result.escapes.append(stats)
        if not stats.found:
            logger.info("정점 %d에서 도달 가능한 개선 정점이 없습니다", current)
            break
        current = stats.path[-1]
        result.trajectory.append(current)
        logger.debug("탈출 %d: %d -> h=%s (목표 검사 %d회)",
                     i + 1, current, heuristic[current], stats.goal_tests)

    result.final = current
    result.reached_zero = heuristic[current] == 0
    return result
