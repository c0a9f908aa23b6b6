"""탐색 작업 정의 모듈.

균일 분기 방향 트리(암묵적 표현), 명시적 그래프, 지역 최소점 탈출 작업을 정의하고
레벨 통계를 계산합니다.

트리 정점은 ``(level, index)`` 쌍으로 표현합니다. ``index``는 루트에서 해당 정점까지의
경로를 b진수 자릿수로 읽은 값이며 ``0 <= index < b**level`` 입니다.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .errors import InvalidInput, InvalidSpec, NoExit, Unreachable
from .seeding import check_seed, make_rng

logger = logging.getLogger(__name__)

INT64_MAX = (1 << 63) - 1
MATERIALIZE_LIMIT = 200_000

TreeVertex = Tuple[int, int]


def level_size(b: int, level: int) -> int:
    """b**level, 네이티브(int64) 범위를 넘으면 OverflowError"""
    size = b ** level
    if size > INT64_MAX:
        raise OverflowError(f"b^d = {b}^{level} exceeds the int64 range")
    return size


def shallow_size(b: int, level: int) -> int:
    """level보다 얕은 정점 수 (b^level - 1)/(b - 1)"""
    return (b ** level - 1) // (b - 1)


@dataclass(frozen=True)
class TreeTaskSpec:
    branching: int
    goal_level: int
    goal_count: int
    placement_seed: int = 0

    def validate(self) -> None:
        if self.branching < 2:
            raise InvalidSpec(f"branching factor must be >= 2, got {self.branching}")
        if self.goal_level < 1:
            raise InvalidSpec(f"goal level must be >= 1, got {self.goal_level}")
        size = level_size(self.branching, self.goal_level)
        if not 1 <= self.goal_count <= size:
            raise InvalidSpec(
                f"goal count must lie in [1, {size}] for b={self.branching}, d*={self.goal_level}, "
                f"got {self.goal_count}"
            )
        check_seed(self.placement_seed)

    @property
    def goal_level_size(self) -> int:
        return level_size(self.branching, self.goal_level)

    def with_seed(self, seed: int) -> "TreeTaskSpec":
        return TreeTaskSpec(self.branching, self.goal_level, self.goal_count, seed)


@dataclass(frozen=True)
class TreeTask:
    spec: TreeTaskSpec
    goal_indices: Tuple[int, ...]
    goal_set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "goal_set", frozenset(self.goal_indices))

    @property
    def branching(self) -> int:
        return self.spec.branching

    @property
    def goal_level(self) -> int:
        return self.spec.goal_level

    @property
    def initial(self) -> TreeVertex:
        return (0, 0)

    def is_goal(self, vertex: TreeVertex) -> bool:
        level, index = vertex
        return level == self.spec.goal_level and index in self.goal_set

    def successors(self, vertex: TreeVertex) -> List[TreeVertex]:
        return tree_successors(vertex[0], vertex[1], self.spec.branching)


@dataclass(frozen=True)
class GraphTask:
    vertex_count: int
    adjacency: Tuple[Tuple[int, ...], ...]
    initial: int
    goals: frozenset
    heuristic: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.vertex_count < 1:
            raise InvalidSpec("graph must have at least one vertex")
        if len(self.adjacency) != self.vertex_count:
            raise InvalidSpec(
                f"adjacency has {len(self.adjacency)} rows for {self.vertex_count} vertices"
            )
        if not 0 <= self.initial < self.vertex_count:
            raise InvalidSpec(f"initial vertex {self.initial} out of range")
        for u, row in enumerate(self.adjacency):
            for v in row:
                if not 0 <= v < self.vertex_count:
                    raise InvalidSpec(f"edge {u}->{v} points outside [0, {self.vertex_count})")
        for v in self.goals:
            if not 0 <= v < self.vertex_count:
                raise InvalidSpec(f"goal vertex {v} out of range")

    def is_goal(self, vertex: int) -> bool:
        return vertex in self.goals

    def successors(self, vertex: int) -> Tuple[int, ...]:
        return self.adjacency[vertex]


Task = Union[TreeTask, GraphTask]


@dataclass(frozen=True)
class LevelCounts:
    goal_level: int
    shallow_count: int
    goal_level_count: int
    goal_count_at_level: int


def make_tree_task(spec: TreeTaskSpec) -> TreeTask:
    """목표 레벨에서 g개 목표를 시드에 따라 비복원 균등 추출하여 TreeTask 생성"""
    spec.validate()
    size = spec.goal_level_size
    if spec.goal_count == size:
        indices = range(size)
    else:
        rng = make_rng(spec.placement_seed)
        indices = rng.choice(size, size=spec.goal_count, replace=False)
    return TreeTask(spec=spec, goal_indices=tuple(sorted(int(i) for i in indices)))


def make_graph_task(adjacency: Sequence[Sequence[int]], initial: int,
                    goals, heuristic: Optional[Sequence[float]] = None) -> GraphTask:
    return GraphTask(
        vertex_count=len(adjacency),
        adjacency=tuple(tuple(int(v) for v in row) for row in adjacency),
        initial=int(initial),
        goals=frozenset(int(v) for v in goals),
        heuristic=None if heuristic is None else tuple(heuristic),
    )


def make_escape_task(adjacency: Sequence[Sequence[int]], initial: int,
                     heuristic: Sequence[float]) -> GraphTask:
    """initial보다 휴리스틱 값이 엄격히 작은 정점을 목표로 하는 탈출 작업 생성"""
    if len(heuristic) != len(adjacency):
        raise InvalidSpec(
            f"heuristic has {len(heuristic)} values for {len(adjacency)} vertices"
        )
    if any(h < 0 for h in heuristic):
        raise InvalidSpec("heuristic values must be non-negative")
    if not 0 <= initial < len(adjacency):
        raise InvalidSpec(f"initial vertex {initial} out of range")

    h0 = heuristic[initial]
    goals = [v for v, h in enumerate(heuristic) if h < h0]
    if not goals:
        raise NoExit(f"no vertex improves on h(initial)={h0}")
    return make_graph_task(adjacency, initial, goals, heuristic)


def graph_levels(task: GraphTask) -> Dict[int, int]:
    """초기 정점에서의 최단(무가중) 거리. 도달 불가 정점은 포함하지 않음"""
    levels = {task.initial: 0}
    queue = deque([task.initial])
    while queue:
        u = queue.popleft()
        for v in task.adjacency[u]:
            if v not in levels:
                levels[v] = levels[u] + 1
                queue.append(v)
    return levels


def level_counts(task: Task) -> LevelCounts:
    """d*, N_O, N_{d*}와 d*에 위치한 목표 수 계산"""
    if isinstance(task, TreeTask):
        b, d = task.branching, task.goal_level
        return LevelCounts(
            goal_level=d,
            shallow_count=shallow_size(b, d),
            goal_level_count=level_size(b, d),
            goal_count_at_level=len(task.goal_indices),
        )

    levels = graph_levels(task)
    reachable_goals = [levels[v] for v in task.goals if v in levels]
    if not reachable_goals:
        raise Unreachable("no goal is reachable from the initial vertex")
    d_star = min(reachable_goals)

    shallow = sum(1 for lv in levels.values() if lv < d_star)
    at_level = sum(1 for lv in levels.values() if lv == d_star)
    return LevelCounts(
        goal_level=d_star,
        shallow_count=shallow,
        goal_level_count=at_level,
        goal_count_at_level=sum(1 for lv in reachable_goals if lv == d_star),
    )


def is_leveled(task: GraphTask) -> bool:
    """도달 가능한 모든 간선 u->v가 level(v) = level(u) + 1을 만족하는지"""
    levels = graph_levels(task)
    for u, lv in levels.items():
        for v in task.adjacency[u]:
            if levels[v] != lv + 1:
                return False
    return True


def goal_level_violations(task: GraphTask) -> List[int]:
    """d*보다 깊은 레벨에 있는 도달 가능 목표 (정리 2의 전제 위반)"""
    levels = graph_levels(task)
    d_star = level_counts(task).goal_level
    return sorted(v for v in task.goals if v in levels and levels[v] > d_star)


# --- 암묵적 트리 헬퍼 ---

def tree_successors(level: int, index: int, b: int) -> List[TreeVertex]:
    base = index * b
    return [(level + 1, base + k) for k in range(b)]


def tree_vertex_digits(level: int, index: int, b: int) -> Tuple[int, ...]:
    """정점의 루트로부터의 경로 자릿수 (최상위 자릿수 먼저)"""
    digits = []
    for _ in range(level):
        index, digit = divmod(index, b)
        digits.append(digit)
    if index:
        raise ValueError(f"index out of range for level {level}")
    return tuple(reversed(digits))


def tree_path(level: int, index: int, b: int) -> Tuple[TreeVertex, ...]:
    """루트에서 (level, index)까지의 정점 경로 (경로 자릿수를 차례로 누적)"""
    path = [(0, 0)]
    prefix = 0
    for lv, digit in enumerate(tree_vertex_digits(level, index, b), start=1):
        prefix = prefix * b + digit
        path.append((lv, prefix))
    return tuple(path)


def iter_tree_level(level: int, b: int) -> Iterator[TreeVertex]:
    """루트에서 후속 정점 생성을 반복하여 level의 정점을 열거"""
    frontier: List[TreeVertex] = [(0, 0)]
    for _ in range(level):
        frontier = [child for v in frontier for child in tree_successors(v[0], v[1], b)]
    yield from frontier


def tree_vertex_id(level: int, index: int, b: int) -> int:
    """레벨 순서 정점 번호 (materialize_tree에서 사용)"""
    return shallow_size(b, level) + index


def materialize_tree(task: TreeTask, depth: Optional[int] = None) -> GraphTask:
    """TreeTask를 명시적 GraphTask로 변환 (오라클 교차 검증용)

    depth 레벨까지의 정점을 만들고, depth 레벨 정점은 후속 정점이 없습니다.
    """
    b = task.branching
    depth = task.goal_level if depth is None else depth
    total = shallow_size(b, depth + 1)
    if total > MATERIALIZE_LIMIT:
        raise InvalidInput(f"tree with {total} vertices is too large to materialize")

    adjacency: List[Tuple[int, ...]] = []
    for level in range(depth + 1):
        for index in range(b ** level):
            if level == depth:
                adjacency.append(())
            else:
                adjacency.append(tuple(tree_vertex_id(level + 1, index * b + k, b) for k in range(b)))
    goals = [tree_vertex_id(task.goal_level, i, b) for i in task.goal_indices]
    return make_graph_task(adjacency, 0, goals)


# --- 텍스트 형식 그래프 입력 ---

def split_graph_text(text: str) -> Tuple[List[List[int]], int, Optional[List[int]], Optional[List[float]]]:
    """명시적 그래프 텍스트 형식을 (인접 리스트, 초기 정점, 목표 목록, 휴리스틱)으로 분해

    형식: 첫 줄 "V E", 이어서 E줄의 "u v" 간선, 한 줄의 초기 정점, 마지막으로 목표 정점
    목록 한 줄 또는 "h:" 뒤에 V개의 휴리스틱 값. 빈 줄과 '#' 주석은 무시합니다.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InvalidSpec("empty graph description")

    try:
        header = lines[0].split()
        vertex_count, edge_count = int(header[0]), int(header[1])
    except (IndexError, ValueError):
        raise InvalidSpec(f"bad header line: {lines[0]!r}")

    if len(lines) != edge_count + 3:
        raise InvalidSpec(
            f"expected {edge_count + 3} non-empty lines, found {len(lines)}"
        )

    adjacency: List[List[int]] = [[] for _ in range(vertex_count)]
    for ln in lines[1:edge_count + 1]:
        try:
            u, v = (int(x) for x in ln.split())
        except ValueError:
            raise InvalidSpec(f"bad edge line: {ln!r}")
        if not 0 <= u < vertex_count:
            raise InvalidSpec(f"edge source {u} out of range")
        adjacency[u].append(v)

    try:
        initial = int(lines[edge_count + 1])
    except ValueError:
        raise InvalidSpec(f"bad initial vertex line: {lines[edge_count + 1]!r}")

    last = lines[edge_count + 2]
    if last.startswith("h:"):
        try:
            heuristic = [float(x) for x in last[2:].split()]
        except ValueError:
            raise InvalidSpec(f"bad heuristic line: {last!r}")
        return adjacency, initial, None, heuristic

    try:
        goals = [int(x) for x in last.split()]
    except ValueError:
        raise InvalidSpec(f"bad goal line: {last!r}")
    return adjacency, initial, goals, None


def parse_graph_text(text: str) -> GraphTask:
    """텍스트 형식 그래프를 GraphTask로 변환. "h:" 줄이 있으면 탈출 작업을 만듭니다."""
    adjacency, initial, goals, heuristic = split_graph_text(text)
    if heuristic is not None:
        return make_escape_task(adjacency, initial, heuristic)
    return make_graph_task(adjacency, initial, goals)


def load_graph_file(path: Path) -> GraphTask:
    logger.info("그래프 파일 읽는 중: %s", path)
    return parse_graph_text(Path(path).read_text(encoding="utf-8"))
