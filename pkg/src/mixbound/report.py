"""CSV and JSON certification reports."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, List, Optional

from .montecarlo import Verdict

HEADER = ("chain", "bound", "p", "n", "tau", "sigma", "bound_value",
          "empirical_value", "std_error", "ratio", "holds")


@dataclass(frozen=True)
class ReportRow:
    chain: str
    bound: str
    p: float
    n: int
    tau: int
    sigma: float
    bound_value: float
    empirical_value: float
    std_error: float
    ratio: Optional[float]
    holds: bool

    @classmethod
    def from_verdict(cls, chain: str, tau: int, sigma: float, v: Verdict) -> "ReportRow":
        return cls(chain, v.bound_name, float(v.p), int(v.n), int(tau), float(sigma),
                   float(v.bound_value), float(v.empirical_value), float(v.std_error),
                   v.ratio, v.holds)

    def to_fields(self) -> List[str]:
        return [
            self.chain, self.bound, repr(self.p), str(self.n), str(self.tau), repr(self.sigma),
            repr(self.bound_value), repr(self.empirical_value), repr(self.std_error),
            "" if self.ratio is None else repr(self.ratio), "true" if self.holds else "false",
        ]

    @classmethod
    def from_fields(cls, rec: dict) -> "ReportRow":
        return cls(
            rec["chain"], rec["bound"], float(rec["p"]), int(rec["n"]), int(rec["tau"]),
            float(rec["sigma"]), float(rec["bound_value"]), float(rec["empirical_value"]),
            float(rec["std_error"]), None if rec["ratio"] == "" else float(rec["ratio"]),
            rec["holds"] == "true",
        )


def to_csv(rows: Iterable[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for row in rows:
        w.writerow(row.to_fields())
    return buf.getvalue()


def read_csv(text: str) -> List[ReportRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [ReportRow.from_fields(rec) for rec in reader]


def to_json(rows: Iterable[ReportRow], extra: Optional[dict] = None) -> str:
    doc = dict(extra or {})
    doc["rows"] = [asdict(r) for r in rows]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
