"""Core domain types: time bucketing, distance, registries, windows."""

from __future__ import annotations

import math
import random
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdrisk.core import (
    Antenna,
    AntennaRegistry,
    CallRecord,
    Direction,
    EndemicZone,
    StudyWindow,
    TimeBucket,
    classify_time,
    format_timestamp,
    haversine_km,
    parse_timestamp,
)

UTC = timezone.utc


def reference_bucket(ts: datetime) -> TimeBucket:
    """Independent re-statement of the bucketing rule for cross-checking.

    Built from explicit day/hour membership sets rather than the
    production arithmetic.
    """
    weekdays = {0, 1, 2, 3, 4}
    day_hours = set(range(8, 20))
    if ts.hour in day_hours:
        return TimeBucket.WEEKDAY if ts.weekday() in weekdays else TimeBucket.WEEKEND
    if ts.hour >= 20:
        night_owner = ts.weekday()
    else:
        night_owner = (ts - timedelta(days=1)).weekday()
    return TimeBucket.WEEKNIGHT if night_owner in weekdays else TimeBucket.WEEKEND


class TestClassifyTime:
    def test_weekday_working_hours(self):
        assert classify_time(parse_timestamp("2015-08-05T10:00:00Z")) is TimeBucket.WEEKDAY

    def test_saturday_noon_is_weekend(self):
        assert classify_time(parse_timestamp("2015-08-08T12:00:00Z")) is TimeBucket.WEEKEND

    def test_friday_late_night_is_weeknight(self):
        assert classify_time(parse_timestamp("2015-08-07T23:30:00Z")) is TimeBucket.WEEKNIGHT

    def test_saturday_early_morning_owned_by_friday_night(self):
        assert classify_time(parse_timestamp("2015-08-08T07:00:00Z")) is TimeBucket.WEEKNIGHT

    def test_sunday_night_spill_is_weekend(self):
        assert classify_time(parse_timestamp("2015-08-09T20:00:00Z")) is TimeBucket.WEEKEND
        assert classify_time(parse_timestamp("2015-08-10T07:59:59Z")) is TimeBucket.WEEKEND

    def test_day_bucket_boundaries(self):
        # 08:00:00 starts the day bucket, 20:00:00 the night bucket
        assert classify_time(parse_timestamp("2015-08-05T08:00:00Z")) is TimeBucket.WEEKDAY
        assert classify_time(parse_timestamp("2015-08-05T07:59:59Z")) is TimeBucket.WEEKNIGHT
        assert classify_time(parse_timestamp("2015-08-05T20:00:00Z")) is TimeBucket.WEEKNIGHT
        assert classify_time(parse_timestamp("2015-08-05T19:59:59Z")) is TimeBucket.WEEKDAY

    def test_monday_morning_after_sunday_night(self):
        assert classify_time(parse_timestamp("2015-08-10T07:00:00Z")) is TimeBucket.WEEKEND
        assert classify_time(parse_timestamp("2015-08-10T08:00:00Z")) is TimeBucket.WEEKDAY

    @given(
        st.datetimes(
            min_value=datetime(2000, 1, 1),
            max_value=datetime(2030, 1, 1),
            timezones=st.just(UTC),
        )
    )
    @settings(max_examples=300)
    def test_total_and_matches_reference(self, ts):
        bucket = classify_time(ts)
        assert isinstance(bucket, TimeBucket)
        assert bucket is reference_bucket(ts)

    def test_every_hour_of_a_full_week(self):
        # exhaustive sweep: one bucket per hour, no gaps
        start = parse_timestamp("2015-08-03T00:00:00Z")  # a Monday
        seen = set()
        for h in range(24 * 7):
            ts = start + timedelta(hours=h)
            bucket = classify_time(ts)
            assert bucket is reference_bucket(ts)
            seen.add(bucket)
        assert seen == set(TimeBucket)


class TestHaversine:
    def test_identical_coordinates(self):
        a = Antenna("a", -31.4, -64.2)
        assert haversine_km(a, Antenna("b", -31.4, -64.2)) == 0.0

    def test_half_circumference(self):
        # closed form: pi * R
        d = haversine_km(Antenna("a", 0.0, 0.0), Antenna("b", 0.0, 180.0))
        assert d == pytest.approx(math.pi * 6371.0, abs=0.01)
        assert d == pytest.approx(20015.09, abs=0.01)

    def test_one_degree_on_equator(self):
        # closed form: 2 pi R / 360
        d = haversine_km(Antenna("a", 0.0, 0.0), Antenna("b", 0.0, 1.0))
        assert d == pytest.approx(111.195, abs=0.001)

    def test_symmetry_and_triangle_inequality(self):
        rng = random.Random(7)
        for _ in range(200):
            pts = [
                Antenna(f"r{i}", rng.uniform(-89, 89), rng.uniform(-179, 179))
                for i in range(3)
            ]
            ab = haversine_km(pts[0], pts[1])
            ba = haversine_km(pts[1], pts[0])
            assert ab == ba
            ac = haversine_km(pts[0], pts[2])
            cb = haversine_km(pts[2], pts[1])
            assert ab <= ac + cb + 1e-9 * max(ab, 1.0)


class TestTimestamps:
    def test_round_trip(self):
        ts = parse_timestamp("2015-08-03T09:15:00Z")
        assert format_timestamp(ts) == "2015-08-03T09:15:00Z"

    @pytest.mark.parametrize(
        "bad",
        ["2015-08-03 09:15:00Z", "2015-08-03T09:15:00", "2015-13-03T09:15:00Z",
         "2015-08-03T25:15:00Z", "not-a-date", ""],
    )
    def test_rejects_malformed(self, bad):
        with pytest.raises(ValueError):
            parse_timestamp(bad)


class TestCallRecord:
    def test_self_call_rejected(self):
        with pytest.raises(ValueError):
            CallRecord("u1", "u1", parse_timestamp("2015-08-05T10:00:00Z"),
                       Direction.OUTGOING, "A")

    def test_bucket_cached(self):
        rec = CallRecord("u1", "u2", parse_timestamp("2015-08-05T22:00:00Z"),
                         Direction.OUTGOING, "A")
        assert rec.bucket is TimeBucket.WEEKNIGHT


class TestAntennaAndRegistry:
    def test_coordinate_bounds(self):
        with pytest.raises(ValueError):
            Antenna("x", 91.0, 0.0)
        with pytest.raises(ValueError):
            Antenna("x", 0.0, -180.5)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            AntennaRegistry([Antenna("A", 0, 0), Antenna("A", 1, 1)])

    def test_csv_round_trip(self, registry, tmp_path):
        path = tmp_path / "reg.csv"
        path.write_text(registry.to_csv())
        loaded = AntennaRegistry.from_csv(path)
        assert loaded.ids() == registry.ids()
        assert loaded.get("A").latitude == registry.get("A").latitude

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "reg.csv"
        path.write_text("id,latitude,longitude\nA,0,0\n")
        with pytest.raises(ValueError):
            AntennaRegistry.from_csv(path)


class TestEndemicZone:
    def test_empty_zone_rejected(self):
        with pytest.raises(ValueError):
            EndemicZone("empty", frozenset())

    def test_unknown_member_fails_validation(self, registry):
        zone = EndemicZone("z", frozenset({"A", "NOPE"}))
        with pytest.raises(ValueError):
            zone.validate_against(registry)

    def test_load_csv(self, tmp_path):
        path = tmp_path / "zone.csv"
        path.write_text("antenna_id\nA\nC\n")
        zone = EndemicZone.load(path)
        assert zone.members == frozenset({"A", "C"})
        assert zone.name == "zone"

    def test_load_json(self, tmp_path):
        path = tmp_path / "zone.json"
        path.write_text('["A", "B"]\n')
        zone = EndemicZone.load(path, name="gran-chaco")
        assert zone.members == frozenset({"A", "B"})
        assert zone.name == "gran-chaco"

    def test_content_hash_is_order_free(self):
        z1 = EndemicZone("z", frozenset({"A", "B"}))
        z2 = EndemicZone("z", frozenset({"B", "A"}))
        assert z1.content_hash() == z2.content_hash()


class TestStudyWindow:
    def test_valid_window(self, window):
        assert window.in_t0(parse_timestamp("2014-01-01T00:00:00Z"))
        assert not window.in_t0(parse_timestamp("2015-08-01T00:00:00Z"))
        assert window.in_t1(parse_timestamp("2015-08-01T00:00:00Z"))
        assert not window.in_t1(parse_timestamp("2016-01-01T00:00:00Z"))

    def test_ordering_enforced(self):
        t = parse_timestamp
        with pytest.raises(ValueError):
            StudyWindow(t("2015-01-01T00:00:00Z"), t("2014-01-01T00:00:00Z"),
                        t("2015-06-01T00:00:00Z"), t("2015-12-01T00:00:00Z"))
        with pytest.raises(ValueError):
            StudyWindow(t("2014-01-01T00:00:00Z"), t("2015-01-01T00:00:00Z"),
                        t("2014-06-01T00:00:00Z"), t("2015-12-01T00:00:00Z"))
