"""Experiment records with deterministic CSV and manifest serialization.

Every experiment resolves to an ExperimentRecord carrying the exact
parameters used (seed included), tabular rows, and the aggregate statistics.
Serialization is byte-deterministic: floats print with 17 significant
digits, column order is fixed by the experiment, key order is sorted, no
timestamps.  Wall-clock time is kept in memory only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

FORMAT_VERSION = "1"


def fmt_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


@dataclass
class ExperimentRecord:
    experiment: str
    params: dict
    columns: list
    rows: list
    aggregate: dict
    seed: int
    wallclock: float = field(default=0.0, compare=False)

    def csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(fmt_value(v) for v in row))
        return "\n".join(lines) + "\n"

    def manifest_text(self) -> str:
        lines = [
            f"format_version={FORMAT_VERSION}",
            f"experiment={self.experiment}",
            f"seed={self.seed}",
        ]
        for k in sorted(self.params):
            lines.append(f"param.{k}={fmt_value(self.params[k])}")
        for k in sorted(self.aggregate):
            lines.append(f"aggregate.{k}={fmt_value(self.aggregate[k])}")
        lines.append(f"rows={len(self.rows)}")
        return "\n".join(lines) + "\n"


def emit_csv(record: ExperimentRecord, path: str) -> None:
    """Write the CSV and its .manifest sidecar (same basename)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(record.csv_text())
    base = path[:-4] if path.endswith(".csv") else path
    with open(base + ".manifest", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(record.manifest_text())
