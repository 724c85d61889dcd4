"""Per-user model features from present-day activity, labels from the past.

The classifier predicts whether a user lived in the endemic zone during
the past period T0 from what they did during the present period T1: which
antennas they used, how far they roam, and how much they talk to zone
residents.  Labels come from running home inference on T0 alone.

Feature schema (version 1), fixed column order:

* 36 edge aggregates: neighbor group (all / endemic / nonendemic) x
  direction relative to the user (out / in) x bucket (weekday /
  weeknight / weekend) x metric (calls / duration_s).
* 2 mobility diameters (all calls, weeknight only), in km.
* degree and endemic neighbor count.
* endemic / exposed / vulnerable flags (0/1).
* 20 zone-membership indicators for the top-10 antennas (all calls,
  then weeknight), zero-padded when a user has fewer than 10.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .core import (
    AntennaRegistry,
    CallRecord,
    EndemicZone,
    StudyWindow,
    TimeBucket,
    format_timestamp,
    haversine_km,
)
from .graph import CommGraph
from .homes import HomeAssignment, infer_homes, residents_of

FEATURE_SCHEMA_VERSION = "1"
TOP_K = 10

EDGE_GROUPS = ("all", "endemic", "nonendemic")
EDGE_DIRECTIONS = ("out", "in")
EDGE_BUCKETS = ("weekday", "weeknight", "weekend")
EDGE_METRICS = ("calls", "duration_s")


def _edge_columns() -> list[str]:
    return [
        f"{direction}_{bucket}_{metric}_{group}"
        for group in EDGE_GROUPS
        for direction in EDGE_DIRECTIONS
        for bucket in EDGE_BUCKETS
        for metric in EDGE_METRICS
    ]


# (name, kind) with kind "int" or "float"; order defines the dataset layout.
FEATURE_COLUMNS: tuple[tuple[str, str], ...] = tuple(
    [(name, "int") for name in _edge_columns()]
    + [
        ("mobility_diameter_all_km", "float"),
        ("mobility_diameter_weeknight_km", "float"),
        ("degree", "int"),
        ("endemic_neighbor_count", "int"),
        ("endemic_flag", "int"),
        ("exposed_flag", "int"),
        ("vulnerable_flag", "int"),
    ]
    + [(f"top_all_endemic_{i:02d}", "int") for i in range(1, TOP_K + 1)]
    + [(f"top_weeknight_endemic_{i:02d}", "int") for i in range(1, TOP_K + 1)]
)

FEATURE_NAMES: tuple[str, ...] = tuple(name for name, _ in FEATURE_COLUMNS)


@dataclass(frozen=True)
class UserFeatures:
    user: str
    top_antennas_all: tuple[str, ...]
    top_antennas_weeknight: tuple[str, ...]
    endemic_flag: bool
    exposed_flag: bool
    mobility_diameter_all_km: float
    mobility_diameter_weeknight_km: float
    degree: int
    endemic_neighbor_count: int
    vulnerable_flag: bool
    edge_aggregates: dict[str, int]
    top_all_endemic: tuple[int, ...]  # zone membership of top_antennas_all, padded
    top_weeknight_endemic: tuple[int, ...]

    def to_vector(self) -> list[float]:
        values: list[float] = [float(self.edge_aggregates[name]) for name in _edge_columns()]
        values.append(self.mobility_diameter_all_km)
        values.append(self.mobility_diameter_weeknight_km)
        values.append(float(self.degree))
        values.append(float(self.endemic_neighbor_count))
        values.append(1.0 if self.endemic_flag else 0.0)
        values.append(1.0 if self.exposed_flag else 0.0)
        values.append(1.0 if self.vulnerable_flag else 0.0)
        values.extend(float(x) for x in self.top_all_endemic)
        values.extend(float(x) for x in self.top_weeknight_endemic)
        return values


def split_periods(
    records: Iterable[CallRecord], window: StudyWindow
) -> tuple[list[CallRecord], list[CallRecord], int]:
    """Partition records into (T0, T1, dropped-outside-count)."""
    t0: list[CallRecord] = []
    t1: list[CallRecord] = []
    dropped = 0
    for rec in records:
        if window.in_t0(rec.timestamp):
            t0.append(rec)
        elif window.in_t1(rec.timestamp):
            t1.append(rec)
        else:
            dropped += 1
    return t0, t1, dropped


def top_antennas(
    records: Iterable[CallRecord],
    user: str,
    k: int = TOP_K,
    bucket: TimeBucket | None = None,
) -> list[str]:
    """The user's most used antennas, by descending event count then id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(
        rec.antenna
        for rec in records
        if rec.caller == user and (bucket is None or rec.bucket is bucket)
    )
    return _top_from_counts(counts, k)


def _top_from_counts(counts: dict[str, int], k: int) -> list[str]:
    return sorted(counts, key=lambda a: (-counts[a], a))[:k]


def mobility_diameter(antennas: Iterable[str], registry: AntennaRegistry) -> float:
    """Maximum pairwise great-circle distance over the used antennas (the
    diameter of their convex hull); 0.0 for fewer than two antennas."""
    points = [registry.get(a) for a in set(antennas)]
    if len(points) < 2:
        return 0.0
    return max(haversine_km(a, b) for a, b in combinations(points, 2))


def build_features(
    records_t1: Sequence[CallRecord],
    graph_t1: CommGraph,
    homes_t1: HomeAssignment,
    zone: EndemicZone,
    registry: AntennaRegistry,
) -> dict[str, UserFeatures]:
    """Feature vectors for every T1 client (users with >= 1 T1 record)."""
    residents = residents_of(homes_t1, zone)
    edge_names = _edge_columns()

    by_user: dict[str, list[CallRecord]] = {}
    for rec in records_t1:
        by_user.setdefault(rec.caller, []).append(rec)

    out: dict[str, UserFeatures] = {}
    for user in sorted(by_user):
        events = by_user[user]
        counts_all = Counter(rec.antenna for rec in events)
        counts_wn = Counter(
            rec.antenna for rec in events if rec.bucket is TimeBucket.WEEKNIGHT
        )
        top_all = _top_from_counts(counts_all, TOP_K)
        top_wn = _top_from_counts(counts_wn, TOP_K)

        neighbors = graph_t1.neighbors(user)
        endemic_neighbors = {v for v in neighbors if v in residents}

        aggregates = dict.fromkeys(edge_names, 0)
        for v in neighbors:
            oriented = graph_t1.edge_counts_from(user, v)
            group = "endemic" if v in endemic_neighbors else "nonendemic"
            idx = 0
            for direction in EDGE_DIRECTIONS:
                for bucket in EDGE_BUCKETS:
                    for metric in EDGE_METRICS:
                        value = oriented[idx]
                        idx += 1
                        if value:
                            aggregates[f"{direction}_{bucket}_{metric}_all"] += value
                            aggregates[f"{direction}_{bucket}_{metric}_{group}"] += value

        out[user] = UserFeatures(
            user=user,
            top_antennas_all=tuple(top_all),
            top_antennas_weeknight=tuple(top_wn),
            endemic_flag=homes_t1.get(user) in zone,
            exposed_flag=any(a in zone for a in top_all) or any(a in zone for a in top_wn),
            mobility_diameter_all_km=mobility_diameter(counts_all, registry),
            mobility_diameter_weeknight_km=mobility_diameter(counts_wn, registry),
            degree=len(neighbors),
            endemic_neighbor_count=len(endemic_neighbors),
            vulnerable_flag=bool(endemic_neighbors),
            edge_aggregates=aggregates,
            top_all_endemic=_membership_flags(top_all, zone),
            top_weeknight_endemic=_membership_flags(top_wn, zone),
        )
    return out


def _membership_flags(antennas: Sequence[str], zone: EndemicZone) -> tuple[int, ...]:
    flags = [1 if a in zone else 0 for a in antennas[:TOP_K]]
    flags += [0] * (TOP_K - len(flags))
    return tuple(flags)


def build_labels(records_t0: Sequence[CallRecord], zone: EndemicZone) -> dict[str, bool]:
    """Past-residency labels: home inference over T0 activity alone."""
    homes_t0 = infer_homes(records_t0)
    return {user: antenna in zone for user, antenna in homes_t0.items()}


@dataclass
class DatasetTable:
    """Joined feature rows and labels, ready to serialize."""

    user_ids: list[str]
    rows: list[list[float]]
    labels: list[int]
    excluded_no_label: int
    excluded_no_features: int

    @property
    def n_rows(self) -> int:
        return len(self.rows)


def assemble_dataset(
    features: dict[str, UserFeatures], labels: dict[str, bool]
) -> DatasetTable:
    """Inner-join features and labels by user; count the excluded."""
    users = sorted(set(features) & set(labels))
    return DatasetTable(
        user_ids=users,
        rows=[features[u].to_vector() for u in users],
        labels=[1 if labels[u] else 0 for u in users],
        excluded_no_label=len(set(features) - set(labels)),
        excluded_no_features=len(set(labels) - set(features)),
    )


def dataset_to_csv(table: DatasetTable) -> str:
    header = "user_id," + ",".join(FEATURE_NAMES) + ",label"
    lines = [header]
    for user, row, label in zip(table.user_ids, table.rows, table.labels):
        cells = [user]
        for (name, kind), value in zip(FEATURE_COLUMNS, row):
            cells.append(str(int(value)) if kind == "int" else f"{value:.6f}")
        cells.append(str(label))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def dataset_manifest(
    table: DatasetTable, window: StudyWindow, zone: EndemicZone, extra: dict | None = None
) -> str:
    doc = {
        "schema_version": FEATURE_SCHEMA_VERSION,
        "feature_columns": list(FEATURE_NAMES),
        "window": {
            "t0_start": format_timestamp(window.t0_start),
            "t0_end": format_timestamp(window.t0_end),
            "t1_start": format_timestamp(window.t1_start),
            "t1_end": format_timestamp(window.t1_end),
        },
        "zone": {"name": zone.name, "hash": zone.content_hash()},
        "rows": table.n_rows,
        "positive_labels": sum(table.labels),
        "excluded_no_label": table.excluded_no_label,
        "excluded_no_features": table.excluded_no_features,
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2) + "\n"


def write_dataset(
    table: DatasetTable,
    window: StudyWindow,
    zone: EndemicZone,
    csv_path: str | Path,
    manifest_path: str | Path,
    extra: dict | None = None,
) -> None:
    Path(csv_path).write_text(dataset_to_csv(table))
    Path(manifest_path).write_text(dataset_manifest(table, window, zone, extra))
