"""Domain types shared by every pipeline stage.

Call records, antennas, endemic zones, weekday/weeknight/weekend time
bucketing, and great-circle distance.  Everything here is an immutable
value after construction; the operations are pure functions.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

UTC = timezone.utc

EARTH_RADIUS_KM = 6371.0

# Bucket boundaries: 08:00:00 opens the daytime window, 20:00:00 the night
# window that runs into the following morning.
DAY_START_HOUR = 8
NIGHT_START_HOUR = 20

TIMESTAMP_FORMAT = "YYYY-MM-DDThh:mm:ssZ"
_TS_RE = re.compile(r"(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})Z")


class TimeBucket(enum.IntEnum):
    WEEKDAY = 0
    WEEKNIGHT = 1
    WEEKEND = 2


class Direction(enum.Enum):
    """Direction of a call relative to the logged client."""

    INCOMING = "I"
    OUTGOING = "O"


def parse_timestamp(text: str) -> datetime:
    """Parse a strict ``YYYY-MM-DDThh:mm:ssZ`` UTC timestamp."""
    m = _TS_RE.fullmatch(text)
    if m is None:
        raise ValueError(f"bad timestamp {text!r} (expected {TIMESTAMP_FORMAT})")
    y, mo, d, h, mi, s = (int(g) for g in m.groups())
    return datetime(y, mo, d, h, mi, s, tzinfo=UTC)


def format_timestamp(ts: datetime) -> str:
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def classify_time(ts: datetime) -> TimeBucket:
    """Classify an instant into weekday / weeknight / weekend.

    The daytime window (08:00-19:59) belongs to ``weekday`` Monday through
    Friday and to ``weekend`` on Saturday and Sunday.  A night window
    (20:00 through 07:59 of the next day) belongs to the day on which it
    opens: Friday night spills into Saturday morning as ``weeknight``, and
    Sunday night into Monday morning as ``weekend``.  Total function --
    every instant maps to exactly one bucket.
    """
    hour = ts.hour
    wd = ts.weekday()
    if DAY_START_HOUR <= hour < NIGHT_START_HOUR:
        return TimeBucket.WEEKDAY if wd < 5 else TimeBucket.WEEKEND
    opener = wd if hour >= NIGHT_START_HOUR else (wd - 1) % 7
    return TimeBucket.WEEKNIGHT if opener < 5 else TimeBucket.WEEKEND


@dataclass(frozen=True, slots=True)
class CallRecord:
    """One communication event logged for a client.

    ``caller`` is the billed client, ``direction`` is relative to that
    client, and ``antenna`` is the tower that served that client.  The
    time bucket is derived once at construction.
    """

    caller: str
    callee: str
    timestamp: datetime
    direction: Direction
    antenna: str
    duration_s: int = 0
    bucket: TimeBucket = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.caller == self.callee:
            raise ValueError(f"self-call for user {self.caller!r}")
        if self.duration_s < 0:
            raise ValueError(f"negative duration {self.duration_s}")
        object.__setattr__(self, "bucket", classify_time(self.timestamp))

    @property
    def is_outgoing(self) -> bool:
        return self.direction is Direction.OUTGOING


@dataclass(frozen=True, slots=True)
class Antenna:
    id: str
    latitude: float
    longitude: float

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("empty antenna id")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range for {self.id!r}: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range for {self.id!r}: {self.longitude}")


class AntennaRegistry:
    """All known antennas, keyed by unique id."""

    def __init__(self, antennas: Iterable[Antenna]):
        self._by_id: dict[str, Antenna] = {}
        for ant in antennas:
            if ant.id in self._by_id:
                raise ValueError(f"duplicate antenna id {ant.id!r}")
            self._by_id[ant.id] = ant

    def __contains__(self, antenna_id: str) -> bool:
        return antenna_id in self._by_id

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self) -> Iterator[Antenna]:
        return iter(sorted(self._by_id.values(), key=lambda a: a.id))

    def get(self, antenna_id: str) -> Antenna:
        try:
            return self._by_id[antenna_id]
        except KeyError:
            raise KeyError(f"unknown antenna {antenna_id!r}") from None

    def ids(self) -> list[str]:
        return sorted(self._by_id)

    @classmethod
    def from_csv(cls, path: str | Path) -> "AntennaRegistry":
        """Load a registry from a CSV file with header ``antenna_id,lat,lon``."""
        antennas = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["antenna_id", "lat", "lon"]:
                raise ValueError(f"bad registry header in {path}: {header}")
            for lineno, row in enumerate(reader, start=2):
                if len(row) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
                try:
                    antennas.append(Antenna(row[0], float(row[1]), float(row[2])))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
        return cls(antennas)

    def to_csv(self) -> str:
        lines = ["antenna_id,lat,lon"]
        for ant in self:
            lines.append(f"{ant.id},{ant.latitude:.6f},{ant.longitude:.6f}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EndemicZone:
    """The set of antennas covering the endemic region."""

    name: str
    members: frozenset[str]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError(f"endemic zone {self.name!r} has no member antennas")

    def __contains__(self, antenna_id: str) -> bool:
        return antenna_id in self.members

    def validate_against(self, registry: AntennaRegistry) -> None:
        unknown = sorted(a for a in self.members if a not in registry)
        if unknown:
            raise ValueError(f"zone {self.name!r} references unknown antennas: {unknown}")

    def content_hash(self) -> str:
        return hashlib.sha256(",".join(sorted(self.members)).encode()).hexdigest()

    @classmethod
    def load(cls, path: str | Path, name: str | None = None) -> "EndemicZone":
        """Load a zone from CSV (header ``antenna_id``) or a JSON id array."""
        path = Path(path)
        text = path.read_text()
        zone_name = name if name is not None else path.stem
        if text.lstrip().startswith("["):
            ids = json.loads(text)
            if not isinstance(ids, list) or not all(isinstance(x, str) for x in ids):
                raise ValueError(f"{path}: JSON zone file must be an array of antenna ids")
            return cls(zone_name, frozenset(ids))
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "antenna_id":
            raise ValueError(f"{path}: expected CSV header 'antenna_id' or a JSON array")
        return cls(zone_name, frozenset(ln.strip() for ln in lines[1:]))

    def to_csv(self) -> str:
        return "antenna_id\n" + "\n".join(sorted(self.members)) + "\n"


@dataclass(frozen=True)
class StudyWindow:
    """Past (T0) and present (T1) observation windows, both half-open."""

    t0_start: datetime
    t0_end: datetime
    t1_start: datetime
    t1_end: datetime

    def __post_init__(self) -> None:
        if not (self.t0_start < self.t0_end <= self.t1_start < self.t1_end):
            raise ValueError(
                "study window must satisfy t0_start < t0_end <= t1_start < t1_end"
            )

    def in_t0(self, ts: datetime) -> bool:
        return self.t0_start <= ts < self.t0_end

    def in_t1(self, ts: datetime) -> bool:
        return self.t1_start <= ts < self.t1_end


def haversine_km(a: Antenna, b: Antenna) -> float:
    """Great-circle distance between two antennas in kilometers."""
    return _haversine_km(a.latitude, a.longitude, b.latitude, b.longitude)


def _haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    h = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))
