"""Run traces: time-indexed metric rows plus a recomputable summary.

A trace is fully determined by (scenario, seed); no wall-clock data is ever
written to the file so identical runs produce byte-identical output.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

__version__ = "0.1.0"


def fmt(value) -> str:
    """Canonical cell formatting: 9 significant digits for floats."""
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


@dataclass
class Trace:
    kind: str
    header: dict
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    complete: bool = True

    def add_row(self, values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row width {len(values)} != {len(self.columns)} columns")
        self.rows.append(list(values))

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def validate(self) -> None:
        """Rows strictly increasing in time (first column)."""
        times = [r[0] for r in self.rows]
        for a, b in zip(times, times[1:]):
            if not b > a:
                raise ValueError(f"trace rows not strictly increasing in time at t={b}")


def to_csv(trace: Trace) -> str:
    lines = [f"# kind={trace.kind}"]
    for k in sorted(trace.header):
        lines.append(f"# {k}={fmt(trace.header[k])}")
    lines.append(f"# complete={int(trace.complete)}")
    for k in sorted(trace.summary):
        lines.append(f"# summary.{k}={fmt(trace.summary[k])}")
    lines.append(",".join(trace.columns))
    for row in trace.rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def to_summary_text(trace: Trace) -> str:
    lines = [f"kind: {trace.kind}", f"complete: {trace.complete}", "header:"]
    for k in sorted(trace.header):
        lines.append(f"  {k}: {fmt(trace.header[k])}")
    lines.append(f"rows: {len(trace.rows)}")
    lines.append("summary:")
    for k in sorted(trace.summary):
        lines.append(f"  {k}: {fmt(trace.summary[k])}")
    return "\n".join(lines) + "\n"


def export(trace: Trace, path: str, format: str = "csv") -> None:
    """Write atomically: tmp file in the target directory, then rename."""
    if format == "csv":
        payload = to_csv(trace)
    elif format == "summary":
        payload = to_summary_text(trace)
    else:
        raise ValueError(f"unknown export format: {format!r}")
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".trace-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class InvariantViolation(RuntimeError):
    """A runtime invariant was breached mid-simulation; carries the step context."""

    def __init__(self, invariant: str, t: float, detail: str = ""):
        self.invariant = invariant
        self.t = t
        super().__init__(f"invariant breached: {invariant} at t={t:.3f} {detail}".rstrip())
