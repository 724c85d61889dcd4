"""Shared fixtures: a small registry, record factory, and study window."""

from __future__ import annotations

from datetime import timezone

import pytest

from cdrisk.core import (
    Antenna,
    AntennaRegistry,
    CallRecord,
    Direction,
    EndemicZone,
    StudyWindow,
    parse_timestamp,
)

UTC = timezone.utc

# 2015-08-05 was a Wednesday, 2015-08-08 a Saturday.
TS_WEEKDAY = parse_timestamp("2015-08-05T10:00:00Z")
TS_WEEKNIGHT = parse_timestamp("2015-08-05T22:00:00Z")
TS_WEEKEND = parse_timestamp("2015-08-08T12:00:00Z")


def make_record(
    caller="u1",
    callee="u2",
    timestamp=TS_WEEKDAY,
    direction=Direction.OUTGOING,
    antenna="A",
    duration_s=0,
):
    if isinstance(timestamp, str):
        timestamp = parse_timestamp(timestamp)
    return CallRecord(caller, callee, timestamp, direction, antenna, duration_s)


@pytest.fixture
def registry():
    return AntennaRegistry(
        [
            Antenna("A", -27.5, -61.0),
            Antenna("B", -27.5, -60.0),
            Antenna("C", -28.5, -61.0),
            Antenna("D", -28.5, -60.0),
        ]
    )


@pytest.fixture
def zone_a():
    return EndemicZone("test-zone", frozenset({"A"}))


@pytest.fixture(scope="session")
def window():
    return StudyWindow(
        parse_timestamp("2014-01-01T00:00:00Z"),
        parse_timestamp("2015-08-01T00:00:00Z"),
        parse_timestamp("2015-08-01T00:00:00Z"),
        parse_timestamp("2016-01-01T00:00:00Z"),
    )
