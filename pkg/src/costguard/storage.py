"""File persistence helpers: fsynced append-only logs and atomic JSON snapshots."""

from __future__ import annotations

import json
import os
import tempfile
import threading
from pathlib import Path
from typing import Any, Iterator


class AppendLog:
    """Append-only text log, one entry per line, fsynced per append by default.

    Entries must not contain newlines; the log is the durability point for
    whatever store it backs, so appends happen under a lock.
    """

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, line: str, fsync: bool = True) -> None:
        if "\n" in line:
            raise ValueError("log entries must be single lines")
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()
            if fsync:
                os.fsync(self._fh.fileno())

    def sync(self) -> None:
        with self._lock:
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def lines(self) -> Iterator[str]:
        """Replay committed entries; a torn trailing line (crash artifact) is skipped."""
        if not self.path.exists():
            return
        with open(self.path, "r", encoding="utf-8", newline="") as fh:
            for raw in fh:
                if not raw.endswith("\n"):
                    break  # partial append from a crash; ignore the tail
                line = raw[:-1]
                if line:
                    yield line

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.flush()
                os.fsync(self._fh.fileno())
                self._fh.close()


def atomic_write_json(path: Path, payload: Any) -> None:
    """Write JSON via temp-file-then-rename so readers never see a torn file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def read_json(path: Path, default: Any = None) -> Any:
    path = Path(path)
    if not path.exists():
        return default
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
