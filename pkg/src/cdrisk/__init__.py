"""cdrisk: antenna-level disease-risk maps and long-term migration
prediction from call detail records."""

from .core import (
    Antenna,
    AntennaRegistry,
    CallRecord,
    Direction,
    EndemicZone,
    StudyWindow,
    TimeBucket,
    classify_time,
    haversine_km,
)
from .ingest import IngestReport, parse_cdr_file, parse_cdr_stream
from .graph import CommGraph, EdgeStats, build_graph, merge_graphs
from .homes import HomeAssignment, infer_homes, residents_of
from .riskmap import (
    AntennaStats,
    RiskMap,
    aggregate_antennas,
    export_geojson,
    filter_map,
    tag_vulnerable,
)
from .features import (
    UserFeatures,
    assemble_dataset,
    build_features,
    build_labels,
    mobility_diameter,
    split_periods,
    top_antennas,
)
from .classify import (
    Dataset,
    LogRegModel,
    Metrics,
    MNBModel,
    evaluate,
    evaluate_scores,
    split_dataset,
    train_logreg,
    train_mnb,
)
from .synth import GroundTruth, SynthConfig, SynthOutput, generate

__version__ = "0.1.0"

__all__ = [
    "Antenna",
    "AntennaRegistry",
    "AntennaStats",
    "CallRecord",
    "CommGraph",
    "Dataset",
    "Direction",
    "EdgeStats",
    "EndemicZone",
    "GroundTruth",
    "HomeAssignment",
    "IngestReport",
    "LogRegModel",
    "Metrics",
    "MNBModel",
    "RiskMap",
    "StudyWindow",
    "SynthConfig",
    "SynthOutput",
    "TimeBucket",
    "UserFeatures",
    "aggregate_antennas",
    "assemble_dataset",
    "build_features",
    "build_graph",
    "build_labels",
    "classify_time",
    "evaluate",
    "evaluate_scores",
    "export_geojson",
    "filter_map",
    "generate",
    "haversine_km",
    "infer_homes",
    "merge_graphs",
    "mobility_diameter",
    "parse_cdr_file",
    "parse_cdr_stream",
    "residents_of",
    "split_dataset",
    "split_periods",
    "tag_vulnerable",
    "top_antennas",
    "train_logreg",
    "train_mnb",
]
