"""CSV ingestion and export of RSSI snapshot streams.

Schema (header required, UTF-8): ``timestamp,node_id,rssi_dbm,gt_x,gt_y``.
One row per node reading; ground-truth columns may be empty. Rows sharing a
timestamp form one snapshot. Snapshots are emitted in order of first
appearance of their timestamp.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..channel import RssiSnapshot
from ..core import NodeLayout, Position

COLUMNS = ("timestamp", "node_id", "rssi_dbm", "gt_x", "gt_y")


class DatasetError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class DatasetRecord:
    timestamp: float
    node_id: str
    rssi: float
    truth: Position | None = None
    line: int = 0


@dataclass
class IngestResult:
    snapshots: list[RssiSnapshot]
    truths: list[Position | None]
    diagnostics: list[str] = field(default_factory=list)
    rows_in: int = 0
    rows_used: int = 0
    rows_diagnosed: int = 0

    def __iter__(self):
        return iter(zip(self.snapshots, self.truths))

    def __len__(self) -> int:
        return len(self.snapshots)


def _float(text: str, name: str, line: int) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise DatasetError(f"bad {name} value {text!r}", line) from None
    if not math.isfinite(v):
        raise DatasetError(f"non-finite {name} value {text!r}", line)
    return v


def read_records(path: str | Path, layout: NodeLayout) -> list[DatasetRecord]:
    known = set(layout.ids)
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != list(COLUMNS[:3]):
            raise DatasetError(f"expected header starting with {','.join(COLUMNS[:3])}", 1)
        has_truth = [h.strip() for h in header[3:5]] == list(COLUMNS[3:])
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(f"expected {len(header)} fields, got {len(row)}", line)
            ts = _float(row[0], "timestamp", line)
            nid = row[1].strip()
            if nid not in known:
                raise DatasetError(f"unknown node_id {nid!r}", line)
            rssi = _float(row[2], "rssi_dbm", line)
            truth = None
            if has_truth and (row[3].strip() or row[4].strip()):
                truth = Position(_float(row[3], "gt_x", line), _float(row[4], "gt_y", line))
            out.append(DatasetRecord(ts, nid, rssi, truth, line))
    return out


def group_records(records: Sequence[DatasetRecord], layout: NodeLayout) -> IngestResult:
    groups: dict[float, list[DatasetRecord]] = {}
    for r in records:
        groups.setdefault(r.timestamp, []).append(r)
    res = IngestResult([], [], rows_in=len(records))
    ids = layout.ids
    for ts, rows in groups.items():
        by_node: dict[str, DatasetRecord] = {}
        dupes = []
        for r in rows:
            if r.node_id in by_node:
                dupes.append(r)
            else:
                by_node[r.node_id] = r
        missing = [i for i in ids if i not in by_node]
        if missing or dupes:
            why = f"missing nodes {missing}" if missing else f"duplicate readings for {sorted({d.node_id for d in dupes})}"
            for r in rows:
                res.diagnostics.append(f"line {r.line}: timestamp {ts!r} rejected ({why})")
            res.rows_diagnosed += len(rows)
            continue
        res.snapshots.append(RssiSnapshot(ts, tuple(by_node[i].rssi for i in ids), tuple(ids)))
        truths = [r.truth for r in rows if r.truth is not None]
        res.truths.append(truths[0] if truths else None)
        res.rows_used += len(rows)
    assert res.rows_in == res.rows_used + res.rows_diagnosed
    return res


def ingest_dataset(path: str | Path, layout: NodeLayout) -> IngestResult:
    """Read a canonical CSV into complete snapshots; incomplete timestamps are diagnosed, not dropped silently."""
    return group_records(read_records(path, layout), layout)


def export_snapshots(path: str | Path, snapshots: Iterable[RssiSnapshot],
                     truths: Iterable[Position | None] | None = None) -> int:
    """Write snapshots in the canonical schema; floats use repr so a re-ingest is exact."""
    snapshots = list(snapshots)
    truths = list(truths) if truths is not None else [None] * len(snapshots)
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for snap, truth in zip(snapshots, truths):
            gx, gy = ("", "") if truth is None else (repr(truth.x), repr(truth.y))
            for nid, v in zip(snap.node_ids, snap.readings):
                w.writerow([repr(float(snap.timestamp)), nid, repr(float(v)), gx, gy])
                n += 1
    return n
