"""Append-only JSON-lines action log, rotated per sim day, paged by byte
offset."""

from __future__ import annotations

import json
from pathlib import Path

DAY_S = 86400.0


class ActionLog:
    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)

    def _file_for(self, stamp: float) -> Path:
        day = int(stamp // DAY_S)
        return self.dir / f"actions-{day:04d}.jsonl"

    def append(self, stamp: float, record: dict) -> None:
        row = {"stamp": round(stamp, 3), **record}
        with open(self._file_for(stamp), "a") as f:
            f.write(json.dumps(row, separators=(",", ":"), sort_keys=True) + "\n")

    def files(self) -> list[Path]:
        return sorted(self.dir.glob("actions-*.jsonl"))

    def read(self, since_offset: int = 0, limit: int = 500) -> dict:
        """Page across the concatenation of the rotated files by byte offset."""
        entries: list[dict] = []
        base = 0
        next_offset = since_offset
        for path in self.files():
            size = path.stat().st_size
            if since_offset < base + size:
                with open(path, "rb") as f:
                    f.seek(max(0, since_offset - base))
                    while len(entries) < limit:
                        line = f.readline()
                        if not line:
                            break
                        try:
                            entries.append(json.loads(line))
                        except json.JSONDecodeError:
                            pass
                        next_offset = base + f.tell()
                if len(entries) >= limit:
                    break
            base += size
        return {"entries": entries, "next": next_offset}
