"""Per-antenna risk indicators, display filtering, and map export.

For every antenna: resident count, vulnerable-resident count, outgoing
call volume, and outgoing calls received by endemic-zone residents.
Vulnerable means sharing at least one communication edge with a zone
resident.  Export renders each antenna as a circle whose area tracks the
resident population and whose color tracks the vulnerable fraction.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .core import AntennaRegistry, CallRecord, EndemicZone
from .graph import CommGraph
from .homes import HomeAssignment, residents_of

logger = logging.getLogger(__name__)

DEFAULT_BETA = 0.01
DEFAULT_MIN_POPULATION = 50
DEFAULT_COLOR_MAX = 0.5
DEFAULT_RADIUS_K = 1.0

STATS_CSV_HEADER = "antenna_id,lat,lon,residents,vulnerable,frac_vulnerable,calls_out,calls_to_endemic"


@dataclass(frozen=True)
class AntennaStats:
    """Risk indicators for one antenna."""

    antenna_id: str
    lat: float
    lon: float
    residents: int
    vulnerable: int
    calls_out: int
    calls_to_endemic: int

    def __post_init__(self) -> None:
        if not 0 <= self.vulnerable <= self.residents:
            raise ValueError(f"{self.antenna_id}: vulnerable {self.vulnerable} > residents {self.residents}")
        if not 0 <= self.calls_to_endemic <= self.calls_out:
            raise ValueError(f"{self.antenna_id}: calls_to_endemic {self.calls_to_endemic} > calls_out {self.calls_out}")

    @property
    def frac_vulnerable(self) -> float:
        return self.vulnerable / self.residents if self.residents else 0.0


@dataclass
class RiskMap:
    """A filtered set of antenna indicators plus the parameters that made it."""

    stats: list[AntennaStats]
    beta: float
    min_population: int
    zone_name: str
    color_max: float = DEFAULT_COLOR_MAX
    radius_k: float = DEFAULT_RADIUS_K
    metadata: dict = field(default_factory=dict)


def tag_vulnerable(graph: CommGraph, residents: set[str]) -> set[str]:
    """Everyone who neighbors a zone resident.

    Residents themselves are tagged only when they neighbor another
    resident.  Residents unknown to the graph are skipped with a warning.
    """
    unknown = sum(1 for r in residents if r not in graph.nodes)
    if unknown:
        logger.warning("tag_vulnerable: %d resident(s) not present in the graph", unknown)
    tagged: set[str] = set()
    for resident in residents:
        tagged |= graph.neighbors(resident)
    return tagged


def aggregate_antennas(
    records: Iterable[CallRecord],
    graph: CommGraph,
    homes: HomeAssignment,
    zone: EndemicZone,
    registry: AntennaRegistry,
    count_zone_residents_as_vulnerable: bool = False,
) -> list[AntennaStats]:
    """Aggregate indicators per antenna; every registry antenna appears,
    zeroed when silent.

    ``count_zone_residents_as_vulnerable`` additionally tags every zone
    resident, for the reading where living in the zone implies exposure.
    """
    residents = residents_of(homes, zone)
    vulnerable = tag_vulnerable(graph, residents)
    if count_zone_residents_as_vulnerable:
        vulnerable = vulnerable | residents

    n_residents: dict[str, int] = {}
    n_vulnerable: dict[str, int] = {}
    for user, antenna in homes.items():
        if antenna not in registry:
            raise ValueError(f"home antenna {antenna!r} not in registry")
        n_residents[antenna] = n_residents.get(antenna, 0) + 1
        if user in vulnerable:
            n_vulnerable[antenna] = n_vulnerable.get(antenna, 0) + 1

    calls_out: dict[str, int] = {}
    calls_endemic: dict[str, int] = {}
    for rec in records:
        if not rec.is_outgoing:
            continue
        antenna = rec.antenna
        if antenna not in registry:
            raise ValueError(f"record antenna {antenna!r} not in registry")
        calls_out[antenna] = calls_out.get(antenna, 0) + 1
        if rec.callee in residents:
            calls_endemic[antenna] = calls_endemic.get(antenna, 0) + 1

    stats = []
    for ant in registry:
        stats.append(
            AntennaStats(
                antenna_id=ant.id,
                lat=ant.latitude,
                lon=ant.longitude,
                residents=n_residents.get(ant.id, 0),
                vulnerable=n_vulnerable.get(ant.id, 0),
                calls_out=calls_out.get(ant.id, 0),
                calls_to_endemic=calls_endemic.get(ant.id, 0),
            )
        )
    return stats


def filter_map(stats: Iterable[AntennaStats], beta: float, min_population: int) -> list[AntennaStats]:
    """Keep antennas with vulnerable fraction strictly above ``beta`` and
    population strictly above ``min_population``; empty antennas drop."""
    return [
        s
        for s in stats
        if s.residents > 0
        and s.residents > min_population
        and s.vulnerable / s.residents > beta
    ]


def marker_radius(residents: int, radius_k: float = DEFAULT_RADIUS_K) -> float:
    """Circle radius proportional to sqrt(population), so area tracks population."""
    return radius_k * math.sqrt(residents)


def color_for(frac: float, color_max: float = DEFAULT_COLOR_MAX) -> str:
    """Linear yellow-to-red ramp, saturating at ``color_max``."""
    t = 1.0 if color_max <= 0 else min(frac / color_max, 1.0)
    green = int(round(255 * (1.0 - t)))
    return f"#FF{green:02X}00"


def export_geojson(risk: RiskMap) -> str:
    """Serialize a risk map as a GeoJSON FeatureCollection.

    Parameters and provenance ride in a top-level ``metadata`` foreign
    member; floats are rounded to 6 decimals.
    """
    features = []
    for s in sorted(risk.stats, key=lambda s: s.antenna_id):
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [round(s.lon, 6), round(s.lat, 6)],
                },
                "properties": {
                    "antenna_id": s.antenna_id,
                    "residents": s.residents,
                    "vulnerable": s.vulnerable,
                    "frac_vulnerable": round(s.frac_vulnerable, 6),
                    "calls_out": s.calls_out,
                    "calls_to_endemic": s.calls_to_endemic,
                    "marker_radius": round(marker_radius(s.residents, risk.radius_k), 6),
                    "color": color_for(s.frac_vulnerable, risk.color_max),
                },
            }
        )
    doc = {
        "type": "FeatureCollection",
        "metadata": {
            "zone": risk.zone_name,
            "beta": round(risk.beta, 6),
            "min_population": risk.min_population,
            "color_max": round(risk.color_max, 6),
            "radius_k": round(risk.radius_k, 6),
            **risk.metadata,
        },
        "features": features,
    }
    return json.dumps(doc, indent=2) + "\n"


def stats_to_csv(stats: Iterable[AntennaStats]) -> str:
    """Indicator table, one row per antenna, floats fixed to 6 decimals."""
    lines = [STATS_CSV_HEADER]
    for s in sorted(stats, key=lambda s: s.antenna_id):
        lines.append(
            f"{s.antenna_id},{s.lat:.6f},{s.lon:.6f},{s.residents},{s.vulnerable},"
            f"{s.frac_vulnerable:.6f},{s.calls_out},{s.calls_to_endemic}"
        )
    return "\n".join(lines) + "\n"


def load_stats_csv(path: str | Path) -> list[AntennaStats]:
    stats = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != STATS_CSV_HEADER:
            raise ValueError(f"bad stats header in {path}: {header}")
        for line in fh:
            if not line.strip():
                continue
            ant, lat, lon, res, vul, _frac, out, end = line.rstrip("\n").split(",")
            stats.append(
                AntennaStats(ant, float(lat), float(lon), int(res), int(vul), int(out), int(end))
            )
    return stats
