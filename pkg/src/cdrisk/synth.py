"""Deterministic synthetic CDR corpora with planted ground truth.

The generator plants everything downstream stages try to recover, so it
doubles as the oracle for home inference, vulnerability tagging, and
migration prediction.

Geometry: antennas sit on a square grid (0.1 degree spacing) and the
endemic zone is the westernmost block of cells.  Social structure is a
two-block model over present-day (T1) residency: zone residents pick
in-zone contacts with probability 0.9; migrants (zone home in T0,
outside in T1) keep ties back to the zone with probability
``tie_strength_endemic``; everyone else reaches into the zone with that
probability damped by ``4**-hops``, where hops is the grid distance from
their home to the zone -- so cross-block tie strength decays with
distance.

Traffic: each user makes a fixed ``round(mean_calls_per_user_per_period)``
calls per period, split into weekday/weeknight/weekend quotas of
0.5/0.3/0.2.  Call instants are uniform within their bucket.  Weeknight
calls route via the home antenna with probability ``p_home_call`` and a
ring-1 grid neighbor otherwise; daytime and weekend calls stay home with
probability 0.5 and roam up to ring 2 otherwise.

All randomness comes from numpy PCG64 streams: a master stream seeded
with ``seed`` plants homes and migration, and each user's contacts and
calls come from an independent stream seeded ``seed XOR user_index``, so
per-user generation is order-independent and parallelizable.  A fixed
seed yields byte-identical output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .core import (
    DAY_START_HOUR,
    NIGHT_START_HOUR,
    StudyWindow,
    TimeBucket,
    UTC,
)

GRID_SPACING_DEG = 0.1
GRID_ORIGIN_LAT = -30.0
GRID_ORIGIN_LON = -65.0

BUCKET_WEIGHTS = (0.5, 0.3, 0.2)  # weekday, weeknight, weekend quotas
CONTACTS_POISSON_MEAN = 2.0  # contacts per user = 1 + Poisson(2)
ENDEMIC_IN_BLOCK_P = 0.9
TIE_DECAY_BASE = 4.0
DAY_HOME_P = 0.5
DURATION_RANGE_S = (10, 600)
MIN_PERIOD_DAYS = 7  # every bucket must be reachable within each period


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_users: int
    n_antennas: int
    endemic_antenna_fraction: float = 0.25
    p_home_call: float = 0.9
    migrant_fraction: float = 0.1
    mean_calls_per_user_per_period: float = 40.0
    tie_strength_endemic: float = 0.8

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.n_users < 2:
            raise ValueError("n_users must be >= 2 (calls need a counterparty)")
        if self.n_antennas < 2:
            raise ValueError("n_antennas must be >= 2")
        for name in ("endemic_antenna_fraction", "p_home_call", "migrant_fraction", "tie_strength_endemic"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.mean_calls_per_user_per_period <= 0:
            raise ValueError("mean_calls_per_user_per_period must be positive")


@dataclass(frozen=True)
class UserTruth:
    t0_home: str
    t1_home: str
    lived_in_endemic_t0: bool
    contacts: tuple[str, ...]


@dataclass
class GroundTruth:
    users: dict[str, UserTruth]

    def migrants(self) -> list[str]:
        return sorted(u for u, t in self.users.items() if t.t0_home != t.t1_home)

    def to_json(self) -> str:
        doc = {
            user: {
                "t0_home": t.t0_home,
                "t1_home": t.t1_home,
                "lived_in_endemic_t0": t.lived_in_endemic_t0,
                "contacts": list(t.contacts),
            }
            for user, t in sorted(self.users.items())
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        doc = json.loads(text)
        users = {
            user: UserTruth(
                t0_home=entry["t0_home"],
                t1_home=entry["t1_home"],
                lived_in_endemic_t0=bool(entry["lived_in_endemic_t0"]),
                contacts=tuple(entry.get("contacts", ())),
            )
            for user, entry in doc.items()
        }
        return cls(users)


@dataclass
class SynthOutput:
    records_csv: str
    registry_csv: str
    zone_csv: str
    ground_truth: GroundTruth

    @property
    def ground_truth_json(self) -> str:
        return self.ground_truth.to_json()

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "records": out / "records.csv",
            "registry": out / "antennas.csv",
            "zone": out / "zone.csv",
            "ground_truth": out / "ground_truth.json",
        }
        paths["records"].write_text(self.records_csv)
        paths["registry"].write_text(self.registry_csv)
        paths["zone"].write_text(self.zone_csv)
        paths["ground_truth"].write_text(self.ground_truth_json)
        return paths


def antenna_id(index: int) -> str:
    return f"A{index:04d}"


def user_id(index: int) -> str:
    return f"u{index:05d}"


def grid_cols(n_antennas: int) -> int:
    return math.ceil(math.sqrt(n_antennas))


def antenna_cell(index: int, n_antennas: int) -> tuple[int, int]:
    cols = grid_cols(n_antennas)
    return index // cols, index % cols


def antenna_latlon(index: int, n_antennas: int) -> tuple[float, float]:
    row, col = antenna_cell(index, n_antennas)
    return GRID_ORIGIN_LAT + GRID_SPACING_DEG * row, GRID_ORIGIN_LON + GRID_SPACING_DEG * col


def zone_size(n_antennas: int, fraction: float) -> int:
    return min(max(int(round(fraction * n_antennas)), 1), n_antennas - 1)


def zone_indices(n_antennas: int, fraction: float) -> list[int]:
    """The westernmost grid cells, column-major, that make up the zone."""
    m = zone_size(n_antennas, fraction)
    order = sorted(range(n_antennas), key=lambda i: (antenna_cell(i, n_antennas)[1], antenna_cell(i, n_antennas)[0]))
    return sorted(order[:m])

def hops_to_zone(n_antennas: int, fraction: float) -> dict[str, int]:
    """Chebyshev grid distance from each antenna to the nearest zone cell."""
    zone_cells = [antenna_cell(i, n_antennas) for i in zone_indices(n_antennas, fraction)]
    hops = {}
    for i in range(n_antennas):
        row, col = antenna_cell(i, n_antennas)
        hops[antenna_id(i)] = min(max(abs(row - zr), abs(col - zc)) for zr, zc in zone_cells)
    return hops


def registry_csv(n_antennas: int) -> str:
    lines = ["antenna_id,lat,lon"]
    for i in range(n_antennas):
        lat, lon = antenna_latlon(i, n_antennas)
        lines.append(f"{antenna_id(i)},{lat:.6f},{lon:.6f}")
    return "\n".join(lines) + "\n"


def zone_csv(n_antennas: int, fraction: float) -> str:
    ids = sorted(antenna_id(i) for i in zone_indices(n_antennas, fraction))
    return "antenna_id\n" + "\n".join(ids) + "\n"


def bucket_quotas(total_calls: int) -> tuple[int, int, int]:
    n_weekday = int(round(BUCKET_WEIGHTS[0] * total_calls))
    n_weeknight = int(round(BUCKET_WEIGHTS[1] * total_calls))
    n_weekend = max(total_calls - n_weekday - n_weeknight, 0)
    return n_weekday, n_weeknight, n_weekend


def classify_epochs(epochs: np.ndarray) -> np.ndarray:
    """Vectorized time-bucket classification of POSIX second arrays.

    Must agree with :func:`cdrisk.core.classify_time` instant for instant.
    """
    days = epochs // 86400
    wd = (days + 3) % 7  # 1970-01-01 was a Thursday
    hour = (epochs % 86400) // 3600
    day_part = (hour >= DAY_START_HOUR) & (hour < NIGHT_START_HOUR)
    opener = np.where(hour >= NIGHT_START_HOUR, wd, (wd - 1) % 7)
    return np.where(
        day_part,
        np.where(wd < 5, int(TimeBucket.WEEKDAY), int(TimeBucket.WEEKEND)),
        np.where(opener < 5, int(TimeBucket.WEEKNIGHT), int(TimeBucket.WEEKEND)),
    ).astype(np.int8)


def _epoch(ts: datetime) -> int:
    return int(ts.timestamp())


def _iso(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, UTC).strftime("%Y-%m-%dT%H:%M:%SZ")


def _sample_bucket_epochs(
    rng: np.random.Generator, start: int, end: int, quotas: tuple[int, int, int]
) -> list[list[int]]:
    """Uniform instants within [start, end) per bucket, by rejection."""
    pools: list[list[int]] = [[], [], []]
    batch = max(64, 4 * sum(quotas))
    guard = 0
    while any(len(pools[b]) < quotas[b] for b in range(3)):
        guard += 1
        if guard > 1000:
            raise RuntimeError("bucket sampling did not converge; is the period >= 7 days?")
        draw = rng.integers(start, end, size=batch, dtype=np.int64)
        buckets = classify_epochs(draw)
        for b in range(3):
            missing = quotas[b] - len(pools[b])
            if missing > 0:
                pools[b].extend(int(e) for e in draw[buckets == b][:missing])
    return pools


def _ring(index: int, n_antennas: int, radius: int, cache: dict) -> list[int]:
    key = (index, radius)
    ring = cache.get(key)
    if ring is None:
        cols = grid_cols(n_antennas)
        row, col = index // cols, index % cols
        ring = []
        for dr in range(-radius, radius + 1):
            for dc in range(-radius, radius + 1):
                if dr == 0 and dc == 0:
                    continue
                r, c = row + dr, col + dc
                if r < 0 or c < 0 or c >= cols:
                    continue
                j = r * cols + c
                if j < n_antennas:
                    ring.append(j)
        cache[key] = ring
    return ring


def generate(config: SynthConfig, window: StudyWindow) -> SynthOutput:
    """Generate a full corpus: CDR CSV, antenna registry, zone file, and
    the planted ground truth."""
    n_u, n_a = config.n_users, config.n_antennas
    for start, end in ((window.t0_start, window.t0_end), (window.t1_start, window.t1_end)):
        if end - start < timedelta(days=MIN_PERIOD_DAYS):
            raise ValueError(f"each period must span at least {MIN_PERIOD_DAYS} days")

    zone_idx = zone_indices(n_a, config.endemic_antenna_fraction)
    zone_set = set(zone_idx)
    nonzone_idx = [i for i in range(n_a) if i not in zone_set]
    hop_map = hops_to_zone(n_a, config.endemic_antenna_fraction)
    hop_by_index = {i: hop_map[antenna_id(i)] for i in range(n_a)}

    master = np.random.Generator(np.random.PCG64(config.seed))
    migrant_draw = master.random(n_u)
    base_home = master.integers(0, n_a, size=n_u)
    migrant_t0_pick = master.integers(0, len(zone_idx), size=n_u)
    migrant_t1_pick = master.integers(0, len(nonzone_idx), size=n_u)

    is_migrant = migrant_draw < config.migrant_fraction
    t0_home = np.where(is_migrant, np.asarray(zone_idx)[migrant_t0_pick], base_home)
    t1_home = np.where(is_migrant, np.asarray(nonzone_idx)[migrant_t1_pick], base_home)

    endemic_pool = [i for i in range(n_u) if int(t1_home[i]) in zone_set]
    nonendemic_pool = [i for i in range(n_u) if int(t1_home[i]) not in zone_set]

    t0_span = (_epoch(window.t0_start), _epoch(window.t0_end))
    t1_span = (_epoch(window.t1_start), _epoch(window.t1_end))
    calls_per_period = max(1, int(round(config.mean_calls_per_user_per_period)))
    quotas = bucket_quotas(calls_per_period)

    ring_cache: dict = {}
    rows: list[tuple[int, str, int, str, str, str, int]] = []
    truth: dict[str, UserTruth] = {}

    for i in range(n_u):
        rng = np.random.Generator(np.random.PCG64(config.seed ^ i))
        uid = user_id(i)

        if is_migrant[i]:
            p_endemic_tie = config.tie_strength_endemic
        elif int(t1_home[i]) in zone_set:
            p_endemic_tie = ENDEMIC_IN_BLOCK_P
        else:
            hops = hop_by_index[int(t1_home[i])]
            p_endemic_tie = config.tie_strength_endemic * TIE_DECAY_BASE ** (-hops)

        n_contacts = 1 + int(rng.poisson(CONTACTS_POISSON_MEAN))
        contacts: set[int] = set()
        attempts = 0
        while len(contacts) < n_contacts and attempts < 20 * n_contacts + 20:
            attempts += 1
            use_endemic = rng.random() < p_endemic_tie
            pool = endemic_pool if use_endemic else nonendemic_pool
            if not pool:
                pool = nonendemic_pool if use_endemic else endemic_pool
            j = pool[int(rng.integers(0, len(pool)))]
            if j != i:
                contacts.add(j)
        if not contacts:
            contacts.add((i + 1) % n_u)
        contact_ids = tuple(user_id(j) for j in sorted(contacts))

        seq = 0
        for (start, end), home in ((t0_span, int(t0_home[i])), (t1_span, int(t1_home[i]))):
            pools = _sample_bucket_epochs(rng, start, end, quotas)
            for bucket, epochs in enumerate(pools):
                c = len(epochs)
                if c == 0:
                    continue
                if bucket == TimeBucket.WEEKNIGHT:
                    p_home, radius = config.p_home_call, 1
                else:
                    p_home, radius = DAY_HOME_P, 2
                stay_home = rng.random(c) < p_home
                ring = _ring(home, n_a, radius, ring_cache)
                roam_pick = rng.integers(0, len(ring), size=c)
                callee_pick = rng.integers(0, len(contact_ids), size=c)
                out_draw = rng.random(c)
                durations = rng.integers(DURATION_RANGE_S[0], DURATION_RANGE_S[1] + 1, size=c)
                for k in range(c):
                    antenna = home if stay_home[k] else ring[int(roam_pick[k])]
                    rows.append(
                        (
                            epochs[k],
                            uid,
                            seq,
                            contact_ids[int(callee_pick[k])],
                            "O" if out_draw[k] < 0.5 else "I",
                            antenna_id(antenna),
                            int(durations[k]),
                        )
                    )
                    seq += 1

        truth[uid] = UserTruth(
            t0_home=antenna_id(int(t0_home[i])),
            t1_home=antenna_id(int(t1_home[i])),
            lived_in_endemic_t0=int(t0_home[i]) in zone_set,
            contacts=contact_ids,
        )

    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    lines = [f"{caller},{callee},{_iso(epoch)},{direction},{antenna},{dur}"
             for epoch, caller, _seq, callee, direction, antenna, dur in rows]

    return SynthOutput(
        records_csv="\n".join(lines) + "\n",
        registry_csv=registry_csv(n_a),
        zone_csv=zone_csv(n_a, config.endemic_antenna_fraction),
        ground_truth=GroundTruth(truth),
    )
