"""Evaluation reports: per-rollout rows plus recomputable aggregates.

Policy evaluation and open-loop replay share this schema so their
outputs can be compared column for column. Aggregates are stored as
comment lines and must match a fresh recomputation from the rows to
1e-12; the reader does not trust them blindly and neither should you.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParseError

REPORT_MAGIC = "# pivotlift-report v1"

# one row per rollout, fixed column order
COLUMNS = (
    "rollout",
    "task_reward",
    "min_d_trans",
    "min_d_rot",
    "final_d_trans",
    "final_d_rot",
    "success",
    "dropped",
    "steps",
    "gravity",
    "dim_scale",
    "box_mass",
    "friction",
    "init_x",
    "init_z",
    "init_theta",
)

_INT_COLUMNS = {"rollout", "success", "dropped", "steps"}

# aggregate statistics carried in the header
_AGG_MEAN_STD = ("task_reward", "min_d_trans", "min_d_rot")


@dataclass
class EvalReport:
    """Rollout table with metadata, serialized as commented CSV."""

    rows: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add_row(self, **kw):
        missing = set(COLUMNS) - set(kw)
        if missing:
            raise ValueError(f"row missing columns {sorted(missing)}")
        self.rows.append({k: kw[k] for k in COLUMNS})

    def column(self, name):
        if name not in COLUMNS:
            raise KeyError(name)
        return np.array([r[name] for r in self.rows], dtype=float)

    def aggregates(self):
        """Recompute summary statistics from the rows.

        Empty reports produce no aggregates at all rather than NaNs.
        """
        if not self.rows:
            return {}
        out = {}
        for name in _AGG_MEAN_STD:
            col = self.column(name)
            out[f"{name}_mean"] = float(np.mean(col))
            out[f"{name}_std"] = float(np.std(col))
        out["success_rate"] = float(np.mean(self.column("success")))
        return out

    def write(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.dumps())

    def dumps(self):
        buf = io.StringIO()
        buf.write(REPORT_MAGIC + "\n")
        for key in sorted(self.meta):
            buf.write(f"# {key}: {self.meta[key]}\n")
        for name, value in sorted(self.aggregates().items()):
            buf.write(f"# aggregate: {name} {value!r}\n")
        buf.write(",".join(COLUMNS) + "\n")
        for row in self.rows:
            cells = []
            for name in COLUMNS:
                v = row[name]
                if name in _INT_COLUMNS:
                    cells.append(str(int(v)))
                else:
                    cells.append(repr(float(v)))
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def read_report(path):
    """Parse a report file and verify its stored aggregates.

    Returns an EvalReport; stored aggregate lines that disagree with a
    recomputation from the rows by more than 1e-12 raise ParseError.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != REPORT_MAGIC:
        raise ParseError(f"{path}:1: expected '{REPORT_MAGIC}'")
    meta = {}
    stored_agg = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        if body.startswith("aggregate:"):
            parts = body[len("aggregate:"):].split()
            if len(parts) != 2:
                raise ParseError(f"{path}:{i + 1}: malformed aggregate line")
            try:
                stored_agg[parts[0]] = float(parts[1])
            except ValueError:
                raise ParseError(
                    f"{path}:{i + 1}: non-numeric aggregate {parts[1]!r}")
        else:
            key, sep, value = body.partition(":")
            if sep:
                meta[key.strip()] = value.strip()
        i += 1
    if i >= len(lines):
        raise ParseError(f"{path}:{len(lines)}: missing column header")
    header = tuple(lines[i].split(","))
    if header != COLUMNS:
        raise ParseError(
            f"{path}:{i + 1}: column header does not match schema")
    report = EvalReport(meta=meta)
    for j in range(i + 1, len(lines)):
        if not lines[j]:
            continue
        cells = lines[j].split(",")
        if len(cells) != len(COLUMNS):
            raise ParseError(
                f"{path}:{j + 1}: expected {len(COLUMNS)} fields, "
                f"got {len(cells)}")
        row = {}
        for name, cell in zip(COLUMNS, cells):
            try:
                row[name] = int(cell) if name in _INT_COLUMNS else float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}:{j + 1}: non-numeric value {cell!r}")
        report.rows.append(row)
    fresh = report.aggregates()
    for name, value in stored_agg.items():
        if name not in fresh:
            raise ParseError(
                f"{path}: stored aggregate {name!r} is not recomputable")
        if abs(fresh[name] - value) > 1e-12:
            raise ParseError(
                f"{path}: aggregate {name} mismatch: stored {value!r}, "
                f"recomputed {fresh[name]!r}")
    return report
