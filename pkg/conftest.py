import pytest


@pytest.fixture(autouse=True)
def isolated_results(tmp_path, monkeypatch):
    """결과/로그 폴더를 테스트별 임시 경로로 분리"""
    monkeypatch.setenv("RESULTS_FOLDER_PATH", str(tmp_path / "results"))
    monkeypatch.setenv("ESCAPE_LOG_TO_FILE", "false")
    return tmp_path
