# rrw.py
"""Constant-depth restarting random walks.

The initial vertex is goal-tested once. Each walk starts at the initial vertex
and samples a uniform successor per step, goal-testing every sampled vertex,
until a goal is hit or depth ``t = e * d*`` is reached, at which point the walk
restarts.

On implicit trees a whole walk is drawn at once: the first d* digits of the
walk decide whether it reaches a goal (all tree goals sit at level d*), so
walks are sampled in vectorised batches. Explicit graphs are walked step by
step and check for dead ends lazily.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np

from ..config import get_setting
from ..errors import DeadEnd, InvalidInput, WalkBudgetExceeded
from ..seeding import check_seed, make_rng
from ..task_model import GraphTask, Task, TreeTask, level_counts, level_size, tree_path
from .brfs import RunStats

logger = logging.getLogger(__name__)

MAX_WALK_BATCH = 1 << 16


@dataclass(frozen=True)
class RrwConfig:
    depth_error: Fraction = Fraction(1)
    walk_seed: int = 0
    max_walks: Optional[int] = field(default_factory=lambda: get_setting("ESCAPE_MAX_WALKS"))

    def __post_init__(self):
        e = Fraction(self.depth_error)
        object.__setattr__(self, "depth_error", e)
        if e < 1:
            raise InvalidInput(f"depth error must be >= 1, got {e}")
        if self.max_walks is not None and self.max_walks < 1:
            raise InvalidInput("max_walks must be a positive integer")
        check_seed(self.walk_seed)

    def depth(self, goal_level: int) -> int:
        """t = e * d*. 정수가 아니면 InvalidInput"""
        return walk_depth(self.depth_error, goal_level)


def walk_depth(depth_error: Fraction, goal_level: int) -> int:
    t = Fraction(depth_error) * goal_level
    if t.denominator != 1:
        raise InvalidInput(f"e*d* = {depth_error}*{goal_level} = {t} is not an integer")
    if t < 1:
        raise InvalidInput(f"walk depth e*d* must be >= 1, got {t}")
    return int(t)


def run_rrw(task: Task, config: Optional[RrwConfig] = None) -> RunStats:
    """Constant-depth RRW 실행

    Raises:
        DeadEnd: 깊이 t 이전에 후속 정점이 없는 정점에 도달
        WalkBudgetExceeded: max_walks 소진 (중단 시점 통계는 ``exc.stats``)
    """
    config = config or RrwConfig()
    if isinstance(task, TreeTask):
        return _run_tree(task, config)
    return _run_graph(task, config)


def _run_tree(task: TreeTask, config: RrwConfig) -> RunStats:
    b, d_star = task.branching, task.goal_level
    t = config.depth(d_star)
    size = level_size(b, d_star)
    rng = make_rng(config.walk_seed)
    goals = np.asarray(task.goal_indices, dtype=np.int64)
    powers = np.array([b ** k for k in range(d_star - 1, -1, -1)], dtype=np.int64)

    batch = int(min(max(64, math.ceil(size / len(goals))), MAX_WALK_BATCH))
    done = 0
    while True:
        n = batch
        if config.max_walks is not None:
            n = min(n, config.max_walks - done)
            if n <= 0:
                stats = RunStats(1 + done * t, done * t, False, (), done, t)
                raise WalkBudgetExceeded(stats, config.max_walks)

        digits = rng.integers(0, b, size=(n, d_star), dtype=np.int64)
        reached = digits @ powers
        hits = np.flatnonzero(np.isin(reached, goals))
        if hits.size:
            k = int(hits[0])
            walks = done + k + 1
            # 실패한 워크는 t회, 성공한 워크는 d*회 검사, 초기 정점 1회
            goal_tests = 1 + (walks - 1) * t + d_star
            return RunStats(
                goal_tests=goal_tests,
                successor_generations=goal_tests - 1,
                found=True,
                path=tree_path(d_star, int(reached[k]), b),
                walks=walks,
                max_tested_level=t if walks > 1 else d_star,
            )
        done += n


def _run_graph(task: GraphTask, config: RrwConfig) -> RunStats:
    if task.initial in task.goals:
        return RunStats(1, 0, True, (task.initial,), 0, 0)

    d_star = level_counts(task).goal_level
    t = config.depth(d_star)
    rng = make_rng(config.walk_seed)
    adjacency = task.adjacency
    goals = task.goals

    goal_tests = 1
    generations = 0
    walks = 0
    deepest = 0
    while True:
        if config.max_walks is not None and walks >= config.max_walks:
            stats = RunStats(goal_tests, generations, False, (), walks, deepest)
            raise WalkBudgetExceeded(stats, config.max_walks)
        walks += 1
        v = task.initial
        path: List[int] = [v]
        for depth in range(t):
            successors = adjacency[v]
            if not successors:
                raise DeadEnd(v, depth)
            v = successors[int(rng.integers(len(successors)))]
            generations += 1
            goal_tests += 1
            path.append(v)
            if v in goals:
                return RunStats(goal_tests, generations, True, tuple(path), walks,
                                max(deepest, depth + 1))
        deepest = t


def empirical_success_probability(task: Task, t: int, trials: int, seed: int) -> Fraction:
    """깊이 t 랜덤 워크가 t 단계 이내에 목표를 방문하는 비율 추정"""
    if trials < 1:
        raise InvalidInput("trials must be >= 1")
    if t < 0:
        raise InvalidInput("walk depth must be non-negative")
    rng = make_rng(seed)

    if isinstance(task, TreeTask):
        b, d_star = task.branching, task.goal_level
        if t < d_star:
            return Fraction(0)
        goals = np.asarray(task.goal_indices, dtype=np.int64)
        powers = np.array([b ** k for k in range(d_star - 1, -1, -1)], dtype=np.int64)
        hits = 0
        remaining = trials
        while remaining:
            n = min(remaining, MAX_WALK_BATCH)
            reached = rng.integers(0, b, size=(n, d_star), dtype=np.int64) @ powers
            hits += int(np.count_nonzero(np.isin(reached, goals)))
            remaining -= n
        return Fraction(hits, trials)

    hits = 0
    for _ in range(trials):
        v = task.initial
        for depth in range(t):
            successors = task.adjacency[v]
            if not successors:
                raise DeadEnd(v, depth)
            v = successors[int(rng.integers(len(successors)))]
            if v in task.goals:
                hits += 1
                break
    return Fraction(hits, trials)
