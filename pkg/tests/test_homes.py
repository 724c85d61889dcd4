"""Home inference: argmax rules, tie-breaks, fallback, residency."""

from __future__ import annotations

import random

from cdrisk.core import EndemicZone, parse_timestamp
from cdrisk.homes import (
    PROVENANCE_FALLBACK,
    PROVENANCE_WEEKNIGHT,
    HomeAssignment,
    infer_homes,
    load_homes_csv,
    residents_of,
)

from conftest import make_record


def night_records(user, antenna, n, minute_offset=0):
    return [
        make_record(caller=user, callee="other", antenna=antenna,
                    timestamp=parse_timestamp(f"2015-08-05T22:{(minute_offset + i) % 60:02d}:00Z"))
        for i in range(n)
    ]


def day_records(user, antenna, n, minute_offset=0):
    return [
        make_record(caller=user, callee="other", antenna=antenna,
                    timestamp=parse_timestamp(f"2015-08-05T10:{(minute_offset + i) % 60:02d}:00Z"))
        for i in range(n)
    ]


def test_unique_weeknight_argmax():
    records = night_records("u1", "A", 5) + night_records("u1", "B", 2, 10)
    homes = infer_homes(records)
    assert homes.get("u1") == "A"
    assert homes.provenance["u1"] == PROVENANCE_WEEKNIGHT


def test_tie_broken_by_all_bucket_count():
    # weeknight counts A:3 B:3; overall counts A:4 B:7 -> B wins
    records = (
        night_records("u1", "A", 3)
        + night_records("u1", "B", 3, 10)
        + day_records("u1", "A", 1)
        + day_records("u1", "B", 4, 10)
    )
    homes = infer_homes(records)
    assert homes.get("u1") == "B"


def test_double_tie_broken_by_antenna_id():
    records = night_records("u1", "B", 2) + night_records("u1", "A", 2, 10)
    homes = infer_homes(records)
    assert homes.get("u1") == "A"


def test_fallback_to_all_calls():
    records = day_records("u1", "C", 9)
    homes = infer_homes(records)
    assert homes.get("u1") == "C"
    assert homes.provenance["u1"] == PROVENANCE_FALLBACK


def test_zero_records_means_no_entry():
    homes = infer_homes([])
    assert len(homes) == 0
    assert homes.get("u1") is None


def test_callees_are_not_assigned_homes():
    homes = infer_homes(night_records("u1", "A", 2))
    assert "other" not in homes


def test_order_independence():
    rng = random.Random(3)
    records = (
        night_records("u1", "A", 3) + night_records("u1", "B", 3, 20)
        + day_records("u1", "B", 2) + night_records("u2", "C", 4)
        + day_records("u3", "D", 5)
    )
    base = infer_homes(records)
    for _ in range(10):
        shuffled = records[:]
        rng.shuffle(shuffled)
        again = infer_homes(shuffled)
        assert again.homes == base.homes
        assert again.provenance == base.provenance


def test_adding_records_at_home_never_moves_home():
    rng = random.Random(4)
    records = (
        night_records("u1", "A", 3) + night_records("u1", "B", 2, 20)
        + day_records("u1", "C", 4)
    )
    home = infer_homes(records).get("u1")
    for extra_night in (0, 1, 3):
        for extra_day in (0, 2):
            grown = (
                records
                + night_records("u1", home, extra_night, 40)
                + day_records("u1", home, extra_day, 40)
            )
            rng.shuffle(grown)
            assert infer_homes(grown).get("u1") == home


def test_window_filtering():
    inside = night_records("u1", "A", 2)
    outside = [
        make_record(caller="u1", callee="x", antenna="B",
                    timestamp=parse_timestamp("2016-03-02T22:00:00Z"))
        for _ in range(5)
    ]
    window = (parse_timestamp("2015-01-01T00:00:00Z"), parse_timestamp("2016-01-01T00:00:00Z"))
    homes = infer_homes(inside + outside, window)
    assert homes.get("u1") == "A"


def test_residents_of():
    homes = HomeAssignment(homes={"u1": "A", "u2": "B"},
                           provenance={"u1": "weeknight", "u2": "weeknight"})
    zone = EndemicZone("z", frozenset({"A"}))
    assert residents_of(homes, zone) == {"u1"}
    assert residents_of(HomeAssignment(), zone) == set()


def test_residents_match_brute_force_and_union_law():
    rng = random.Random(5)
    antennas = [f"A{i}" for i in range(10)]
    homes = HomeAssignment()
    for i in range(200):
        user = f"u{i}"
        homes.homes[user] = rng.choice(antennas)
        homes.provenance[user] = "weeknight"
    z1 = EndemicZone("z1", frozenset(rng.sample(antennas, 3)))
    z2 = EndemicZone("z2", frozenset(rng.sample(antennas, 4)))
    brute1 = {u for u, a in homes.items() if a in z1.members}
    assert residents_of(homes, z1) == brute1
    union = EndemicZone("u", z1.members | z2.members)
    assert residents_of(homes, union) == residents_of(homes, z1) | residents_of(homes, z2)


def test_csv_round_trip(tmp_path):
    records = night_records("u1", "A", 2) + day_records("u2", "B", 1)
    homes = infer_homes(records)
    path = tmp_path / "homes.csv"
    homes.write_csv(path)
    loaded = load_homes_csv(path)
    assert loaded.homes == homes.homes
    assert loaded.provenance == homes.provenance
