"""Line- and tab-oriented file helpers."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .records import json_line


def read_jsonl(path: str | Path) -> Iterator[dict]:
    """Yield one dict per non-blank line. Raises on malformed JSON; feeds that
    expect to tolerate bad lines (corpus ingestion) do their own line loop."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: bad JSON ({exc})") from exc


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json_line(rec))
            fh.write("\n")
            n += 1
    return n


def read_tsv(path: str | Path, ncols: int) -> Iterator[tuple[str, ...]]:
    """Yield rows as tuples, checking column count. Blank lines and lines
    starting with '#' are skipped."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = tuple(line.split("\t"))
            if len(parts) != ncols:
                raise ValueError(f"{path}:{lineno}: expected {ncols} columns, got {len(parts)}")
            yield parts


def write_tsv(path: str | Path, rows: Iterable[tuple]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write("\t".join(str(c) for c in row))
            fh.write("\n")
            n += 1
    return n
