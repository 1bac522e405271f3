"""Face registry with one-way storage.

Feature vectors are salted-hashed on ingest; the raw vector is never
persisted and no API can return it.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass


@dataclass(frozen=True)
class FaceRegistryEntry:
    label: str
    encoding: str                  # hex digest; irreversible
    created_at: float


class FaceRegistry:
    def __init__(self, salt: bytes | None = None):
        self._salt = salt if salt is not None else os.urandom(16)
        self._entries: list[FaceRegistryEntry] = []

    def _encode(self, vector: list[float]) -> str:
        h = hashlib.sha256(self._salt)
        for v in vector:
            h.update(f"{float(v):.9f};".encode())
        return h.hexdigest()

    def add(self, label: str, vector: list[float], created_at: float = 0.0) -> FaceRegistryEntry:
        entry = FaceRegistryEntry(label=label, encoding=self._encode(vector),
                                  created_at=created_at)
        self._entries.append(entry)
        return entry

    def identify(self, vector: list[float]) -> str | None:
        """Exact-encoding lookup; demonstrates matching without stored vectors."""
        code = self._encode(vector)
        for e in self._entries:
            if e.encoding == code:
                return e.label
        return None

    def list(self) -> list[dict]:
        return [{"label": e.label, "encoding": e.encoding, "created_at": e.created_at}
                for e in self._entries]
