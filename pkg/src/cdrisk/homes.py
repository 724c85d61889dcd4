"""Home-antenna inference from weeknight activity.

A client's home is the antenna carrying most of their weeknight events
(event counts proxy time spent; CDRs only log events).  Ties break by the
all-bucket event count, then by smallest antenna id, so inference is
order-free.  Clients with no weeknight events fall back to their most
used antenna overall and are flagged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator

from .core import CallRecord, EndemicZone, TimeBucket

PROVENANCE_WEEKNIGHT = "weeknight"
PROVENANCE_FALLBACK = "fallback_all_calls"


@dataclass
class HomeAssignment:
    """Per-client home antenna plus how it was decided."""

    homes: dict[str, str] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    def __contains__(self, user: str) -> bool:
        return user in self.homes

    def __len__(self) -> int:
        return len(self.homes)

    def get(self, user: str) -> str | None:
        return self.homes.get(user)

    def items(self) -> Iterator[tuple[str, str]]:
        return iter(self.homes.items())

    def to_csv(self) -> str:
        lines = ["user_id,home_antenna,provenance"]
        for user in sorted(self.homes):
            lines.append(f"{user},{self.homes[user]},{self.provenance[user]}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def infer_homes(
    records: Iterable[CallRecord],
    window: tuple[datetime, datetime] | None = None,
) -> HomeAssignment:
    """Infer each client's home antenna, optionally restricted to a
    half-open ``[start, end)`` time window."""
    weeknight: dict[str, dict[str, int]] = {}
    overall: dict[str, dict[str, int]] = {}
    for rec in records:
        if window is not None and not (window[0] <= rec.timestamp < window[1]):
            continue
        user = rec.caller
        counts = overall.get(user)
        if counts is None:
            counts = {}
            overall[user] = counts
        counts[rec.antenna] = counts.get(rec.antenna, 0) + 1
        if rec.bucket is TimeBucket.WEEKNIGHT:
            counts = weeknight.get(user)
            if counts is None:
                counts = {}
                weeknight[user] = counts
            counts[rec.antenna] = counts.get(rec.antenna, 0) + 1

    assignment = HomeAssignment()
    for user in sorted(overall):
        all_counts = overall[user]
        night_counts = weeknight.get(user)
        if night_counts:
            best = min(
                night_counts,
                key=lambda a: (-night_counts[a], -all_counts.get(a, 0), a),
            )
            prov = PROVENANCE_WEEKNIGHT
        else:
            best = min(all_counts, key=lambda a: (-all_counts[a], a))
            prov = PROVENANCE_FALLBACK
        assignment.homes[user] = best
        assignment.provenance[user] = prov
    return assignment


def residents_of(homes: HomeAssignment, zone: EndemicZone) -> set[str]:
    """Users whose home antenna lies inside the zone."""
    return {user for user, antenna in homes.items() if antenna in zone}


def load_homes_csv(path: str | Path) -> HomeAssignment:
    assignment = HomeAssignment()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["user_id", "home_antenna", "provenance"]:
            raise ValueError(f"bad homes header in {path}: {header}")
        for user, antenna, prov in reader:
            assignment.homes[user] = antenna
            assignment.provenance[user] = prov
    return assignment
