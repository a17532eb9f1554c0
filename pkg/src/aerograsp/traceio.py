"""
Trace CSV export/import and RMS tables.

Angles are stored in radians; the RMS table reports them in degrees.
Floats are written with ``repr`` so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .simkernel import RunTrace

SCHEMA = "aerograsp-trace"
SCHEMA_VERSION = 1
COORDS = ("x", "y", "z", "phi", "theta", "psi", "alpha1", "alpha2")
ANGLE_COLUMNS = COORDS[3:]
VECTOR_GROUPS = ("chi", "chi_d", "e", "s", "tau")


class SchemaError(ValueError):
    pass


def columns() -> List[str]:
    cols = ["t"]
    for group in VECTOR_GROUPS:
        cols += [f"{group}_{c}" for c in COORDS]
    cols += ["khat0", "khat1", "khat2", "u1", "V", "gripper_state", "event"]
    return cols


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace_csv(trace: RunTrace, path, metadata: Optional[Dict[str, object]] = None) -> Path:
    """Write ``trace`` with a one-line metadata header carrying the schema version."""
    path = Path(path)
    meta = {"schema": SCHEMA, "version": SCHEMA_VERSION, "scenario": trace.scenario,
            "controller": trace.controller, "dt": trace.dt}
    meta.update(metadata or {})
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns())
    for i in range(len(trace)):
        row = [_fmt(trace.t[i])]
        for group in VECTOR_GROUPS:
            row += [_fmt(v) for v in getattr(trace, group)[i]]
        row += [_fmt(v) for v in trace.khat[i]]
        row += [_fmt(trace.u1[i]), _fmt(trace.V[i]), trace.gripper[i], trace.event[i]]
        writer.writerow(row)
    path.write_text(buf.getvalue())
    return path


@dataclass
class TraceTable:
    """Columns of a trace CSV plus its metadata header."""

    metadata: Dict[str, object]
    data: Dict[str, np.ndarray]
    gripper_state: List[str]
    event: List[str]

    def group(self, name: str) -> np.ndarray:
        return np.column_stack([self.data[f"{name}_{c}"] for c in COORDS])

    @property
    def label(self) -> str:
        m = self.metadata
        label = f"{m.get('scenario', '?')}/{m.get('controller', '?')}"
        if m.get("case") is not None:
            label += f"/case{m['case']}"
        return label


def read_trace_csv(path) -> TraceTable:
    text = Path(path).read_text()
    first, _, rest = text.partition("\n")
    if not first.startswith("# "):
        raise SchemaError(f"{path}: missing metadata header")
    try:
        meta = json.loads(first[2:])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: unreadable metadata header") from exc
    if meta.get("schema") != SCHEMA or meta.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: schema {meta.get('schema')!r} version {meta.get('version')!r}"
                          f" does not match {SCHEMA!r} version {SCHEMA_VERSION}")
    reader = csv.reader(io.StringIO(rest))
    header = next(reader, None)
    if header != columns():
        raise SchemaError(f"{path}: column header does not match the schema")
    rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    numeric = np.array([r[:-2] for r in rows], dtype=float)
    data = {name: numeric[:, j] for j, name in enumerate(header[:-2])}
    return TraceTable(meta, data, [r[-2] for r in rows], [r[-1] for r in rows])


@dataclass
class RmsTable:
    """Per-run RMS rows (m for position, deg for angles) and optional reduction row."""

    labels: List[str]
    rows: np.ndarray
    reduction: Optional[np.ndarray] = None
    columns: Sequence[str] = field(default=COORDS)

    def format(self) -> str:
        width = max([len(lbl) for lbl in self.labels] + [12])
        head = " " * width + "".join(f"{c:>10}" for c in self.columns)
        units = " " * width + "".join(f"{'(m)' if c in COORDS[:3] else '(deg)':>10}"
                                      for c in self.columns)
        lines = [head, units]
        for lbl, row in zip(self.labels, self.rows):
            lines.append(f"{lbl:<{width}}" + "".join(f"{v:10.4f}" for v in row))
        if self.reduction is not None:
            lines.append(f"{'% reduction':<{width}}" + "".join(f"{v:10.1f}" for v in self.reduction))
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["run"] + list(self.columns))
        for lbl, row in zip(self.labels, self.rows):
            writer.writerow([lbl] + [_fmt(v) for v in row])
        if self.reduction is not None:
            writer.writerow(["percent_reduction"] + [_fmt(v) for v in self.reduction])
        return buf.getvalue()


def rms_row(e: np.ndarray) -> np.ndarray:
    """RMS per coordinate with angles converted to degrees."""
    e = np.asarray(e, dtype=float)
    if len(e) == 0:
        raise ValueError("rms of an empty series")
    row = np.sqrt(np.mean(e ** 2, axis=0))
    row[3:] = np.degrees(row[3:])
    return row


def percent_reduction(baseline: np.ndarray, proposed: np.ndarray) -> np.ndarray:
    baseline = np.asarray(baseline, dtype=float)
    proposed = np.asarray(proposed, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 100.0 * (baseline - proposed) / baseline
    return np.where(baseline == 0, 0.0, out)


def rms_table(tables: Sequence[TraceTable], pair: bool = False) -> RmsTable:
    """Table of RMS rows; with ``pair`` the first table is the baseline, the second the proposed."""
    if pair and len(tables) != 2:
        raise ValueError("a paired table needs exactly two traces (baseline, proposed)")
    rows = np.array([rms_row(t.group("e")) for t in tables])
    reduction = percent_reduction(rows[0], rows[1]) if pair else None
    return RmsTable([t.label for t in tables], rows, reduction)
