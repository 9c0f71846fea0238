"""Check records and machine-readable reports."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def digest(obj) -> str:
    """Short SHA-256 of a JSON rendering of ``obj`` (arrays become nested lists)."""
    blob = json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return repr(obj)


@dataclass
class Record:
    """One executed check.

    ``kind`` is ``"check"`` (counts toward the overall pass) or
    ``"discrepancy"`` (a flagged mismatch with a displayed formula; reported,
    not counted).
    """

    check: str
    tag: str
    residual: float
    tolerance: float
    inputs: object = None
    kind: str = "check"
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "tag": self.tag,
            "kind": self.kind,
            "inputs_digest": digest(self.inputs),
            "residual": _plain(float(self.residual)),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
            "flagged": self.kind == "discrepancy" and not self.passed,
            "note": self.note,
        }


@dataclass
class Report:
    command: str
    records: list = field(default_factory=list)
    conventions: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)
    timestamp: str = ""

    def add(self, rec: Record) -> Record:
        if any(r.check == rec.check for r in self.records):
            raise ValueError(f"duplicate check name {rec.check!r}")
        self.records.append(rec)
        return rec

    def extend(self, other: "Report", prefix: str = "") -> None:
        for r in other.records:
            self.add(Record(prefix + r.check, r.tag, r.residual, r.tolerance, r.inputs, r.kind, r.note))

    @property
    def checks(self) -> list:
        return [r for r in self.records if r.kind == "check"]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.checks)

    def payload(self) -> dict:
        """Report tree without the timestamp (deterministic for a fixed config and seed)."""
        recs = sorted(self.records, key=lambda r: r.check)
        return {
            "command": self.command,
            "pass": self.passed,
            "summary": {
                "checks": len(self.checks),
                "failed": sum(not r.passed for r in self.checks),
                "flagged_discrepancies": sum(r.kind == "discrepancy" and not r.passed for r in self.records),
            },
            "records": [r.as_dict() for r in recs],
            "conventions": _plain(self.conventions),
            "environment": _plain(self.environment),
        }

    def to_json(self) -> str:
        d = self.payload()
        d["timestamp"] = self.timestamp
        return json.dumps(d, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "kind", "tag", "residual", "tolerance", "pass"])
        for r in sorted(self.records, key=lambda r: r.check):
            w.writerow([r.check, r.kind, r.tag, f"{r.residual:.6e}", f"{r.tolerance:.3e}", int(r.passed)])
        return buf.getvalue()

    def write(self, path: str | Path, csv_path: str | Path | None = None) -> None:
        Path(path).write_text(self.to_json() + "\n")
        if csv_path:
            Path(csv_path).write_text(self.to_csv())

    def summary_lines(self) -> list[str]:
        lines = []
        for r in sorted(self.records, key=lambda r: r.check):
            if r.kind == "check":
                status = "PASS" if r.passed else "FAIL"
            else:
                status = "ok  " if r.passed else "FLAG"
            lines.append(f"{status} {r.check:<52s} {r.residual:11.3e} <= {r.tolerance:.1e}")
        return lines


def environment_block(seed: int, steps, backend: str, tol_scale: float) -> dict:
    import scipy

    return {
        "seed": seed,
        "fd_steps": steps.as_dict(),
        "tol_scale": tol_scale,
        "backend": backend,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
