"""Machine-readable result records: JSON, CSV and the JSON Lines cache.

Values are decimal strings with enough digits to round-trip at the
record's precision; binary floats never appear in output.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

CSV_HEADER = ("d", "a", "b", "u", "v", "norm", "g", "x", "y", "route", "n", "value", "error", "precision")


@dataclass(frozen=True)
class ResultRecord:
    d: int
    a: int
    b: int
    u: int
    v: int
    norm: int
    g: int | None
    x: str | None
    y: str | None
    route: str
    n: int | str
    value: str | None
    error_indicator: str | None
    precision_bits: int
    timestamp: str
    status: str = "ok"

    @property
    def cache_key(self) -> tuple:
        return (self.d, self.u, self.v, self.route, self.n, self.precision_bits)

    @property
    def conductor_key(self) -> tuple:
        """Key used by the scan cache to skip whole (conductor, route) runs."""
        return (self.d, self.u, self.v, self.route.split(":")[0], self.precision_bits)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ResultRecord":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})

    def csv_row(self) -> list[str]:
        values = (
            self.d, self.a, self.b, self.u, self.v, self.norm, self.g, self.x, self.y,
            self.route, self.n, self.value, self.error_indicator, self.precision_bits,
        )
        return ["" if v is None else str(v) for v in values]


def now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def sort_records(records: Iterable[ResultRecord]) -> list[ResultRecord]:
    """Route, then numeric ``n``, then estimates."""

    def key(r: ResultRecord):
        is_estimate = not isinstance(r.n, int)
        return (r.d, r.u, r.v, r.route, is_estimate, r.n if not is_estimate else 0, str(r.n))

    return sorted(records, key=key)


def to_json(records: Iterable[ResultRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2, ensure_ascii=False) + "\n"


def from_json(text: str) -> list[ResultRecord]:
    return [ResultRecord.from_dict(item) for item in json.loads(text)]


def to_csv(records: Iterable[ResultRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def to_jsonl_line(record: ResultRecord) -> str:
    return json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True) + "\n"


def read_jsonl(path: Path) -> Iterator[ResultRecord]:
    if not path.exists():
        return
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield ResultRecord.from_dict(json.loads(line))


def append_jsonl(path: Path, records: Iterable[ResultRecord]) -> None:
    with path.open("a", encoding="utf-8") as fh:
        for r in records:
            fh.write(to_jsonl_line(r))
