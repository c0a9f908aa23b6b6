# brfs.py
"""Breadth-first search with exact goal-test / successor-generation accounting.

Every selected vertex is goal-tested first; a failed test is followed by one
successor generation step. The search stops on the first successful test, so a
successful run always has ``goal_tests == successor_generations + 1``.

The open list is a FIFO queue processed one level at a time. In random
tie-breaking mode each level is shuffled with a uniform permutation before it
is tested.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import get_setting
from ..errors import InvalidInput, MemoryBudgetExceeded
from ..seeding import check_seed, make_rng
from ..task_model import GraphTask, Task, TreeTask, level_size, tree_path

logger = logging.getLogger(__name__)

TIE_LEXICOGRAPHIC = "deterministic-lexicographic"
TIE_RANDOM = "uniform-random"
TIE_MODES = (TIE_LEXICOGRAPHIC, TIE_RANDOM)


@dataclass(frozen=True)
class RunStats:
    goal_tests: int
    successor_generations: int
    found: bool
    path: Tuple = ()
    walks: int = 0
    max_tested_level: int = -1
    tested_levels: Optional[Tuple[int, ...]] = None

    def accounting_holds(self) -> bool:
        return not self.found or self.goal_tests == self.successor_generations + 1


@dataclass(frozen=True)
class TieBreaking:
    mode: str = TIE_LEXICOGRAPHIC
    seed: int = 0

    def __post_init__(self):
        if self.mode not in TIE_MODES:
            raise InvalidInput(f"unknown tie-breaking mode {self.mode!r}; expected one of {TIE_MODES}")
        check_seed(self.seed)

    @property
    def is_random(self) -> bool:
        return self.mode == TIE_RANDOM


def run_brfs(task: Task, tie: Optional[TieBreaking] = None,
             frontier_cap: Optional[int] = None, trace: bool = False) -> RunStats:
    """BrFS를 실행하고 목표 검사/후속 생성 횟수를 반환합니다.

    Args:
        task: TreeTask 또는 GraphTask
        tie: 레벨 내 순서 결정 방식 (기본: 사전식)
        frontier_cap: 오픈 리스트 정점 수 상한 (기본: ESCAPE_FRONTIER_CAP)
        trace: True이면 검사한 정점의 레벨 순서를 ``tested_levels``에 기록

    Returns:
        RunStats. 오픈 리스트가 비면 found=False로 반환합니다.
    """
    tie = tie or TieBreaking()
    if frontier_cap is None:
        frontier_cap = get_setting("ESCAPE_FRONTIER_CAP")

    if isinstance(task, TreeTask):
        return _run_tree(task, tie, frontier_cap, trace)
    return _run_graph(task, tie, frontier_cap, trace)


def _run_tree(task: TreeTask, tie: TieBreaking, frontier_cap: int, trace: bool) -> RunStats:
    # 트리는 중복 정점이 없으므로 closed 리스트 없이 레벨 배열을 그대로 오픈 리스트로 사용
    b, d_star = task.branching, task.goal_level
    level_size(b, d_star)
    rng = make_rng(tie.seed) if tie.is_random else None
    goals = np.asarray(task.goal_indices, dtype=np.int64)

    goal_tests = 0
    generations = 0
    levels: List[int] = [] if trace else None
    current = np.zeros(1, dtype=np.int64)
    level = 0

    while current.size:
        if rng is not None:
            current = current[rng.permutation(current.size)]

        if level == d_star:
            hits = np.flatnonzero(np.isin(current, goals))
        else:
            hits = np.empty(0, dtype=np.int64)

        if hits.size:
            pos = int(hits[0])
            goal_tests += pos + 1
            generations += pos
            if trace:
                levels.extend([level] * (pos + 1))
            return RunStats(
                goal_tests=goal_tests,
                successor_generations=generations,
                found=True,
                path=tree_path(level, int(current[pos]), b),
                max_tested_level=level,
                tested_levels=None if levels is None else tuple(levels),
            )

        goal_tests += current.size
        generations += current.size
        if trace:
            levels.extend([level] * current.size)

        if level == d_star:
            # 목표 레벨에서 목표를 찾지 못하는 TreeTask는 존재하지 않음
            break
        if current.size * b > frontier_cap:
            raise MemoryBudgetExceeded(
                f"frontier of {current.size * b} vertices exceeds cap {frontier_cap}"
            )
        current = (current[:, None] * b + np.arange(b, dtype=np.int64)).ravel()
        level += 1

    return RunStats(goal_tests, generations, False, (), 0, level,
                    None if levels is None else tuple(levels))


def _run_graph(task: GraphTask, tie: TieBreaking, frontier_cap: int, trace: bool) -> RunStats:
    rng = make_rng(tie.seed) if tie.is_random else None
    goal_tests = 0
    generations = 0
    levels: List[int] = [] if trace else None

    # 생성 시점에 seen으로 표시하여 오픈 리스트 중복 삽입 방지
    parent: Dict[int, Optional[int]] = {task.initial: None}
    current = [task.initial]
    level = 0

    while current:
        if rng is not None:
            current = [current[i] for i in rng.permutation(len(current))]

        nxt: List[int] = []
        for v in current:
            goal_tests += 1
            if trace:
                levels.append(level)
            if v in task.goals:
                return RunStats(
                    goal_tests=goal_tests,
                    successor_generations=generations,
                    found=True,
                    path=_reconstruct(parent, v),
                    max_tested_level=level,
                    tested_levels=None if levels is None else tuple(levels),
                )
            generations += 1
            for w in task.adjacency[v]:
                if w not in parent:
                    parent[w] = v
                    nxt.append(w)
            if len(nxt) > frontier_cap:
                raise MemoryBudgetExceeded(
                    f"frontier of {len(nxt)} vertices exceeds cap {frontier_cap}"
                )
        current = nxt
        level += 1

    logger.info("BrFS: 오픈 리스트가 비었습니다 (목표 검사 %d회)", goal_tests)
    return RunStats(goal_tests, generations, False, (), 0, level - 1,
                    None if levels is None else tuple(levels))


def _reconstruct(parent: Dict[int, Optional[int]], v: int) -> Tuple[int, ...]:
    path = [v]
    while parent[v] is not None:
        v = parent[v]
        path.append(v)
    return tuple(reversed(path))
