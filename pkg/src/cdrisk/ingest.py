"""CDR stream parsing with per-line quarantine.

Raw dumps are dirty, so individual bad lines are never fatal: each one is
counted under a reason code and excluded.  Validation short-circuits per
line in a fixed order: field count, timestamp, direction, self-call,
antenna lookup, duration.  Empty caller/callee fields count as missing
fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable

from .core import AntennaRegistry, CallRecord, Direction, format_timestamp, parse_timestamp

REASON_BAD_FIELD_COUNT = "bad_field_count"
REASON_BAD_TIMESTAMP = "bad_timestamp"
REASON_BAD_DIRECTION = "bad_direction"
REASON_SELF_CALL = "self_call"
REASON_UNKNOWN_ANTENNA = "unknown_antenna"
REASON_BAD_DURATION = "bad_duration"

REJECT_REASONS = (
    REASON_BAD_FIELD_COUNT,
    REASON_BAD_TIMESTAMP,
    REASON_BAD_DIRECTION,
    REASON_SELF_CALL,
    REASON_UNKNOWN_ANTENNA,
    REASON_BAD_DURATION,
)

_DIRECTIONS = {"I": Direction.INCOMING, "O": Direction.OUTGOING}


class IngestError(Exception):
    """Fatal ingestion failure (unreadable source)."""


@dataclass
class IngestReport:
    """Data-quality statistics for one parse (or a merge of parses)."""

    total_lines: int = 0
    accepted: int = 0
    rejected_by_reason: dict[str, int] = field(default_factory=dict)
    users: set[str] = field(default_factory=set)
    antennas: set[str] = field(default_factory=set)
    t_min: datetime | None = None
    t_max: datetime | None = None

    @property
    def rejected_total(self) -> int:
        return sum(self.rejected_by_reason.values())

    @property
    def distinct_users(self) -> int:
        return len(self.users)

    @property
    def distinct_antennas(self) -> int:
        return len(self.antennas)

    def merge(self, other: "IngestReport") -> "IngestReport":
        """Combine shard reports: counters sum, spans take min/max."""
        rejected = dict(self.rejected_by_reason)
        for reason, count in other.rejected_by_reason.items():
            rejected[reason] = rejected.get(reason, 0) + count
        t_min = min(x for x in (self.t_min, other.t_min) if x is not None) \
            if (self.t_min or other.t_min) else None
        t_max = max(x for x in (self.t_max, other.t_max) if x is not None) \
            if (self.t_max or other.t_max) else None
        return IngestReport(
            total_lines=self.total_lines + other.total_lines,
            accepted=self.accepted + other.accepted,
            rejected_by_reason=rejected,
            users=self.users | other.users,
            antennas=self.antennas | other.antennas,
            t_min=t_min,
            t_max=t_max,
        )

    def to_dict(self) -> dict:
        return {
            "total_lines": self.total_lines,
            "accepted": self.accepted,
            "rejected_total": self.rejected_total,
            "rejected_by_reason": {k: self.rejected_by_reason[k] for k in sorted(self.rejected_by_reason)},
            "distinct_users": self.distinct_users,
            "distinct_antennas": self.distinct_antennas,
            "time_span": {
                "min": format_timestamp(self.t_min) if self.t_min else None,
                "max": format_timestamp(self.t_max) if self.t_max else None,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def parse_cdr_stream(
    lines: Iterable[str], registry: AntennaRegistry
) -> tuple[list[CallRecord], IngestReport]:
    """Parse CDR lines ``caller,callee,timestamp,direction,antenna[,duration_s]``.

    Well-formed lines with a registered antenna become records, in input
    order; everything else is counted per reason and dropped.
    """
    records: list[CallRecord] = []
    report = IngestReport()
    rejected = report.rejected_by_reason

    def reject(reason: str) -> None:
        rejected[reason] = rejected.get(reason, 0) + 1

    for raw in lines:
        report.total_lines += 1
        parts = raw.rstrip("\r\n").split(",")
        nf = len(parts)
        if nf not in (5, 6) or not parts[0] or not parts[1]:
            reject(REASON_BAD_FIELD_COUNT)
            continue
        caller, callee, ts_text, dir_text, antenna = parts[:5]
        try:
            ts = parse_timestamp(ts_text)
        except ValueError:
            reject(REASON_BAD_TIMESTAMP)
            continue
        direction = _DIRECTIONS.get(dir_text)
        if direction is None:
            reject(REASON_BAD_DIRECTION)
            continue
        if caller == callee:
            reject(REASON_SELF_CALL)
            continue
        if antenna not in registry:
            reject(REASON_UNKNOWN_ANTENNA)
            continue
        duration = 0
        if nf == 6:
            try:
                duration = int(parts[5])
            except ValueError:
                reject(REASON_BAD_DURATION)
                continue
            if duration < 0:
                reject(REASON_BAD_DURATION)
                continue
        records.append(CallRecord(caller, callee, ts, direction, antenna, duration))
        report.accepted += 1
        report.users.add(caller)
        report.users.add(callee)
        report.antennas.add(antenna)
        if report.t_min is None or ts < report.t_min:
            report.t_min = ts
        if report.t_max is None or ts > report.t_max:
            report.t_max = ts

    return records, report


def parse_cdr_file(
    path: str | Path, registry: AntennaRegistry
) -> tuple[list[CallRecord], IngestReport]:
    try:
        with open(path) as fh:
            return parse_cdr_stream(fh, registry)
    except OSError as exc:
        raise IngestError(f"cannot read CDR source {path}: {exc}") from exc
