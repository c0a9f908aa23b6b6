"""탐색 작업/엔진/분석 단계에서 발생하는 예외 모음."""


class EscapeEngineError(Exception):
    """escapeEngine 공통 예외"""
    pass


class InvalidSpec(EscapeEngineError):
    """트리 작업 파라미터(b, d*, g)가 유효하지 않음"""
    pass


class InvalidInput(EscapeEngineError):
    """분석 함수의 사전 조건 위반"""
    pass


class NoExit(EscapeEngineError):
    """휴리스틱이 엄격히 개선되는 정점이 없음 (탈출 불가 지역 최소점)"""
    pass


class Unreachable(EscapeEngineError):
    """초기 정점에서 도달 가능한 목표가 없음"""
    pass


class NotLeveled(EscapeEngineError):
    """그래프가 레벨 그래프가 아니거나 목표가 d*보다 깊은 곳에 있음"""
    pass


class DeadEnd(EscapeEngineError):
    """랜덤 워크가 깊이 t에 도달하기 전에 후속 정점이 없는 정점을 만남"""

    def __init__(self, vertex: int, depth: int):
        super().__init__(f"vertex {vertex} has no successors at depth {depth}")
        self.vertex = vertex
        self.depth = depth


class MemoryBudgetExceeded(EscapeEngineError):
    """BrFS 프런티어가 설정된 정점 상한을 초과"""
    pass


class WalkBudgetExceeded(EscapeEngineError):
    """RRW가 max_walks에 도달. 중단 시점의 RunStats를 ``stats``로 보관"""

    def __init__(self, stats, max_walks: int):
        super().__init__(f"walk budget of {max_walks} walks exhausted")
        self.stats = stats
        self.max_walks = max_walks


class OutputError(EscapeEngineError):
    """결과 파일을 쓸 수 없음"""
    pass
