import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

from .config import get_results_base_path, get_setting

MAX_LOG_SIZE = 1 * 1024 * 1024  # 1MB
LOG_FORMAT = "%(levelname)s: %(message)s"


class _LogFile:
    """Size-capped log file that rolls over to a new timestamped file."""

    def __init__(self, directory: Path, max_bytes: int = MAX_LOG_SIZE) -> None:
        self.directory = directory
        self.max_bytes = max_bytes
        self.directory.mkdir(parents=True, exist_ok=True)
        self._file = self._open_latest()
        self.write(f"--- Log started at {datetime.now().isoformat()} ---\n")

    def _open_latest(self):
        logs = sorted(self.directory.glob("*.log"))
        if logs:
            last = logs[-1]
            if last.stat().st_size < self.max_bytes:
                return open(last, "a", encoding="utf-8")
        return open(self.directory / self._timestamped_name(), "a", encoding="utf-8")

    def _rollover(self):
        if self._file:
            self._file.close()
        self._file = open(self.directory / self._timestamped_name(), "a", encoding="utf-8")

    def _timestamped_name(self) -> str:
        """Return a filesystem-safe log file name for the current timestamp."""
        # Windows disallows ``:`` in file names.
        return datetime.now().strftime("%Y-%m-%d_%H-%M-%S.log")

    def write(self, message: str) -> None:
        if not isinstance(message, str):
            message = str(message)
        if self._file.tell() + len(message.encode("utf-8")) > self.max_bytes:
            self._rollover()
        self._file.write(message)
        self._file.flush()

    def flush(self) -> None:
        self._file.flush()

    def close(self) -> None:
        if self._file:
            self._file.close()
            self._file = None


def _get_log_directory() -> Path:
    """Resolve the log directory under the configured results folder."""
    return (get_results_base_path() / "log").resolve()


def setup_logging(verbose: bool = False, log_to_file: Optional[bool] = None) -> Optional[_LogFile]:
    """Configure the root logger: stderr console plus an optional rolling log file.

    Command output stays on stdout, so log records never mix into CSV/JSON output.
    """
    level = logging.DEBUG if verbose else logging.INFO
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]

    if log_to_file is None:
        log_to_file = get_setting("ESCAPE_LOG_TO_FILE")

    logfile = None
    if log_to_file:
        try:
            logfile = _LogFile(_get_log_directory())
            handlers.append(logging.StreamHandler(logfile))
        except OSError as e:
            print(f"WARNING: 로그 파일을 열 수 없습니다: {e}", file=sys.stderr)

    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)
    return logfile
