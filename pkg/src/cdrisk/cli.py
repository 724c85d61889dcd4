"""Command-line pipeline runner.

Each subcommand reads declared inputs, writes fixed-name artifacts under
``--out-dir``, and prints a one-line JSON summary to stdout.  Report
paths render matplotlib figures next to the delimited outputs.  Exit
codes: 0 success, 1 validation error (machine-readable JSON on stderr),
2 usage error.

Options may come from a flat ``key=value`` file via ``--config``;
explicit flags win.  All randomness flows from ``--seed`` -- no wall
clock leaks into any artifact, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .classify import (
    DEFAULT_L2_PENALTY,
    DEFAULT_MAX_ITERS,
    DEFAULT_TOLERANCE,
    DEFAULT_TRAIN_FRACTION,
    Dataset,
    count_feature_columns,
    evaluate,
    load_model_json,
    save_model_json,
    split_dataset,
    train_logreg,
    train_mnb,
    tune_l2,
)
from .core import (
    AntennaRegistry,
    EndemicZone,
    StudyWindow,
    format_timestamp,
    parse_timestamp,
)
from .features import (
    assemble_dataset,
    build_features,
    build_labels,
    dataset_manifest,
    dataset_to_csv,
    split_periods,
)
from .graph import build_graph, write_edges_csv
from .homes import infer_homes
from .ingest import IngestError, parse_cdr_file
from .riskmap import (
    DEFAULT_BETA,
    DEFAULT_COLOR_MAX,
    DEFAULT_MIN_POPULATION,
    DEFAULT_RADIUS_K,
    RiskMap,
    aggregate_antennas,
    export_geojson,
    filter_map,
    stats_to_csv,
)
from .synth import SynthConfig, generate


class CliError(Exception):
    """Validation failure: reported as JSON on stderr with exit code 1."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_meta(**paths: Path) -> dict:
    return {
        name: {"path": str(path), "sha256": _sha256(path)}
        for name, path in paths.items()
    }


def _artifact_meta(**paths: Path) -> dict:
    """Like _input_meta but path-relative: sibling artifacts are referenced
    by bare name so reruns into different directories stay byte-identical."""
    return {
        name: {"path": path.name, "sha256": _sha256(path)}
        for name, path in paths.items()
    }


def _load_config(path: str) -> dict[str, str]:
    config: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        config[key.strip()] = value.strip()
    return config


def _cast_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


class Settings:
    """Resolve each option: explicit flag, then config file, then default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = _load_config(args.config) if getattr(args, "config", None) else {}

    def get(self, key: str, cast=str, default=None, required: bool = False):
        value = getattr(self.args, key, None)
        if value is None and key in self.config:
            try:
                value = cast(self.config[key])
            except ValueError as exc:
                raise CliError(f"config key {key}: {exc}") from exc
        if value is None:
            value = default
        if value is None and required:
            raise CliError(f"missing required option --{key.replace('_', '-')} (or config key {key})")
        return value

    def path(self, key: str, must_exist: bool = True, required: bool = True) -> Path | None:
        raw = self.get(key, str, required=required)
        if raw is None:
            return None
        path = Path(raw)
        if must_exist and not path.exists():
            raise CliError(f"input path for --{key.replace('_', '-')} does not exist: {path}")
        return path

    def out_dir(self) -> Path:
        out = Path(self.get("out_dir", str, required=True))
        out.mkdir(parents=True, exist_ok=True)
        return out

    def window(self) -> StudyWindow:
        values = {}
        for key in ("t0_start", "t0_end", "t1_start", "t1_end"):
            values[key] = self.get(key, parse_timestamp, required=True)
        try:
            return StudyWindow(**values)
        except ValueError as exc:
            raise CliError(str(exc)) from exc


@dataclass
class RunConfig:
    """Echoed verbatim into every artifact the pipeline emits."""

    records: str
    registry: str
    zone: str
    t0_start: str
    t0_end: str
    t1_start: str
    t1_end: str
    beta: float
    min_population: int
    color_max: float
    radius_k: float
    count_zone_residents_as_vulnerable: bool
    l2_penalty: float
    seed: int
    train_fraction: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _summary(command: str, **info) -> int:
    print(json.dumps({"command": command, **info}, sort_keys=True))
    return 0


def _load_registry(settings: Settings) -> tuple[AntennaRegistry, Path]:
    path = settings.path("registry")
    try:
        return AntennaRegistry.from_csv(path), path
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _load_zone(settings: Settings, registry: AntennaRegistry) -> tuple[EndemicZone, Path]:
    path = settings.path("zone")
    try:
        zone = EndemicZone.load(path)
        zone.validate_against(registry)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return zone, path


def _parse_records(settings: Settings, registry: AntennaRegistry):
    path = settings.path("records")
    records, report = parse_cdr_file(path, registry)
    if not records:
        raise CliError(f"no valid records in {path}")
    return records, report, path


def _time_span(report) -> dict:
    return {
        "min": format_timestamp(report.t_min) if report.t_min else None,
        "max": format_timestamp(report.t_max) if report.t_max else None,
    }


# ---------------------------------------------------------------- synth


def cmd_synth(args: argparse.Namespace) -> int:
    settings = Settings(args)
    out = settings.out_dir()
    window = settings.window()
    try:
        config = SynthConfig(
            seed=settings.get("seed", int, default=42),
            n_users=settings.get("n_users", int, required=True),
            n_antennas=settings.get("n_antennas", int, required=True),
            endemic_antenna_fraction=settings.get("endemic_fraction", float, default=0.25),
            p_home_call=settings.get("p_home_call", float, default=0.9),
            migrant_fraction=settings.get("migrant_fraction", float, default=0.1),
            mean_calls_per_user_per_period=settings.get("mean_calls", float, default=40.0),
            tie_strength_endemic=settings.get("tie_strength", float, default=0.8),
        )
        output = generate(config, window)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    paths = output.write(out)
    return _summary(
        "synth",
        users=config.n_users,
        antennas=config.n_antennas,
        records=output.records_csv.count("\n"),
        migrants=len(output.ground_truth.migrants()),
        seed=config.seed,
        artifacts={name: _sha256(path) for name, path in paths.items()},
        out_dir=str(out),
    )


# --------------------------------------------------------------- ingest


def cmd_ingest(args: argparse.Namespace) -> int:
    settings = Settings(args)
    out = settings.out_dir()
    registry, _ = _load_registry(settings)
    path = settings.path("records")
    records, report = parse_cdr_file(path, registry)
    (out / "ingest_report.json").write_text(report.to_json())
    return _summary(
        "ingest",
        accepted=report.accepted,
        rejected=report.rejected_total,
        distinct_users=report.distinct_users,
        out_dir=str(out),
    )


# ---------------------------------------------------------- graph/homes


def _optional_window(settings: Settings):
    start = settings.get("window_start", parse_timestamp)
    end = settings.get("window_end", parse_timestamp)
    if (start is None) != (end is None):
        raise CliError("--window-start and --window-end must be given together")
    return (start, end) if start is not None else None


def cmd_graph(args: argparse.Namespace) -> int:
    settings = Settings(args)
    out = settings.out_dir()
    registry, _ = _load_registry(settings)
    records, _report, _ = _parse_records(settings, registry)
    window = _optional_window(settings)
    if window is not None:
        records = [r for r in records if window[0] <= r.timestamp < window[1]]
    graph = build_graph(records)
    write_edges_csv(graph, out / "edges.csv")
    return _summary(
        "graph",
        nodes=len(graph.nodes),
        clients=len(graph.clients),
        edges=graph.n_edges,
        out_dir=str(out),
    )


def cmd_homes(args: argparse.Namespace) -> int:
    settings = Settings(args)
    out = settings.out_dir()
    registry, _ = _load_registry(settings)
    records, _report, _ = _parse_records(settings, registry)
    homes = infer_homes(records, _optional_window(settings))
    homes.write_csv(out / "homes.csv")
    fallbacks = sum(1 for p in homes.provenance.values() if p != "weeknight")
    return _summary("homes", clients=len(homes), fallback_assignments=fallbacks, out_dir=str(out))


# -------------------------------------------------------------- riskmap


def _riskmap_params(settings: Settings) -> dict:
    return {
        "beta": settings.get("beta", float, default=DEFAULT_BETA),
        "min_population": settings.get("min_pop", int, default=DEFAULT_MIN_POPULATION),
        "color_max": settings.get("color_max", float, default=DEFAULT_COLOR_MAX),
        "radius_k": settings.get("radius_k", float, default=DEFAULT_RADIUS_K),
        "count_zone_residents_as_vulnerable": settings.get(
            "count_zone_residents_as_vulnerable", _cast_bool, default=False
        ),
    }


def _write_riskmap_artifacts(
    out: Path,
    records,
    registry: AntennaRegistry,
    zone: EndemicZone,
    params: dict,
    inputs: dict,
    time_span: dict,
) -> dict:
    from .plotting import render_risk_map

    graph = build_graph(records)
    homes = infer_homes(records)
    stats = aggregate_antennas(
        records,
        graph,
        homes,
        zone,
        registry,
        count_zone_residents_as_vulnerable=params["count_zone_residents_as_vulnerable"],
    )
    kept = filter_map(stats, params["beta"], params["min_population"])
    risk = RiskMap(
        stats=kept,
        beta=params["beta"],
        min_population=params["min_population"],
        zone_name=zone.name,
        color_max=params["color_max"],
        radius_k=params["radius_k"],
        metadata={
            "parameters": dict(params),
            "inputs": inputs,
            "time_span": time_span,
            "antennas_total": len(stats),
            "antennas_plotted": len(kept),
        },
    )
    (out / "riskmap.geojson").write_text(export_geojson(risk))
    (out / "antenna_stats.csv").write_text(stats_to_csv(stats))
    zone_coords = [
        (registry.get(a).longitude, registry.get(a).latitude) for a in sorted(zone.members)
    ]
    render_risk_map(risk, out / "riskmap.png", zone_coords)
    return {"antennas_total": len(stats), "antennas_plotted": len(kept)}


def cmd_riskmap(args: argparse.Namespace) -> int:
    settings = Settings(args)
    out = settings.out_dir()
    registry, registry_path = _load_registry(settings)
    zone, zone_path = _load_zone(settings, registry)
    records, report, records_path = _parse_records(settings, registry)
    params = _riskmap_params(settings)
    inputs = _input_meta(records=records_path, registry=registry_path, zone=zone_path)
    info = _write_riskmap_artifacts(out, records, registry, zone, params, inputs, _time_span(report))
    return _summary("riskmap", **params, **info, out_dir=str(out))


# ------------------------------------------------------------- features


def _write_feature_artifacts(
    out: Path,
    records,
    window: StudyWindow,
    zone: EndemicZone,
    registry: AntennaRegistry,
    inputs: dict,
) -> dict:
    t0_records, t1_records, dropped = split_periods(records, window)
    if not t1_records:
        raise CliError("no records fall inside T1; check the window")
    if not t0_records:
        raise CliError("no records fall inside T0; check the window")
    graph_t1 = build_graph(t1_records)
    homes_t1 = infer_homes(t1_records)
    feats = build_features(t1_records, graph_t1, homes_t1, zone, registry)
    labels = build_labels(t0_records, zone)
    table = assemble_dataset(feats, labels)
    if table.n_rows == 0:
        raise CliError("empty dataset: no user has both T1 features and a T0 label")
    extra = {"inputs": inputs, "records_outside_window": dropped}
    (out / "dataset.csv").write_text(dataset_to_csv(table))
    (out / "dataset_manifest.json").write_text(dataset_manifest(table, window, zone, extra))
    return {
        "rows": table.n_rows,
        "positive_labels": sum(table.labels),
        "excluded_no_label": table.excluded_no_label,
        "excluded_no_features": table.excluded_no_features,
        "records_outside_window": dropped,
    }


def cmd_features(args: argparse.Namespace) -> int:
    settings = Settings(args)
    out = settings.out_dir()
    registry, registry_path = _load_registry(settings)
    zone, zone_path = _load_zone(settings, registry)
    records, _report, records_path = _parse_records(settings, registry)
    window = settings.window()
    inputs = _input_meta(records=records_path, registry=registry_path, zone=zone_path)
    info = _write_feature_artifacts(out, records, window, zone, registry, inputs)
    return _summary("features", **info, out_dir=str(out))


# ------------------------------------------------------------ train/eval


def _train_params(settings: Settings) -> dict:
    return {
        "l2_penalty": settings.get("l2", float, default=DEFAULT_L2_PENALTY),
        "seed": settings.get("seed", int, default=0),
        "train_fraction": settings.get("train_fraction", float, default=DEFAULT_TRAIN_FRACTION),
        "tolerance": settings.get("tol", float, default=DEFAULT_TOLERANCE),
        "max_iters": settings.get("max_iters", int, default=DEFAULT_MAX_ITERS),
    }


def _train_model(dataset: Dataset, params: dict, tune: bool):
    try:
        train, _test = split_dataset(
            dataset, train_fraction=params["train_fraction"], seed=params["seed"]
        )
        tuning = None
        lam = params["l2_penalty"]
        if tune:
            lam, losses = tune_l2(train, seed=params["seed"])
            tuning = {
                "selected_l2_penalty": lam,
                "validation_loss_by_penalty": {f"{k:g}": v for k, v in losses.items()},
            }
        model = train_logreg(
            train,
            l2_penalty=lam,
            tolerance=params["tolerance"],
            max_iters=params["max_iters"],
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return model, tuning


def cmd_train(args: argparse.Namespace) -> int:
    settings = Settings(args)
    out = settings.out_dir()
    dataset_path = settings.path("dataset")
    try:
        dataset = Dataset.from_csv(dataset_path)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    params = _train_params(settings)
    tune = bool(settings.get("tune_l2", _cast_bool, default=False))
    model, tuning = _train_model(dataset, params, tune)
    extra = {
        "split": {"seed": params["seed"], "train_fraction": params["train_fraction"]},
        "inputs": _input_meta(dataset=dataset_path),
    }
    if tuning:
        extra["tuning"] = tuning
    save_model_json(model, out / "model.json", extra)
    return _summary(
        "train",
        l2_penalty=model.l2_penalty,
        converged=model.convergence.converged,
        iterations=model.convergence.iterations,
        out_dir=str(out),
    )


def cmd_evaluate(args: argparse.Namespace) -> int:
    settings = Settings(args)
    out = settings.out_dir()
    model_path = settings.path("model")
    dataset_path = settings.path("dataset")
    try:
        model, doc = load_model_json(model_path)
        dataset = Dataset.from_csv(dataset_path)
    except (ValueError, KeyError) as exc:
        raise CliError(f"cannot load model/dataset: {exc}") from exc
    all_rows = bool(settings.get("all_rows", _cast_bool, default=False))
    if all_rows:
        test = dataset
    else:
        split_info = doc.get("split")
        if not split_info:
            raise CliError("model.json lacks split info; pass --all-rows to evaluate on every row")
        try:
            _train, test = split_dataset(
                dataset,
                train_fraction=float(split_info["train_fraction"]),
                seed=int(split_info["seed"]),
            )
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    try:
        metrics = evaluate(model, test)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    doc_out = metrics.to_dict()
    doc_out["n_test"] = test.n_rows
    doc_out["inputs"] = _input_meta(model=model_path, dataset=dataset_path)
    (out / "metrics.json").write_text(json.dumps(doc_out, indent=2) + "\n")
    from .plotting import render_roc

    if metrics.auc is not None:
        render_roc(test.y, model.score(test), out / "roc.png", title="migration prediction")
    return _summary(
        "evaluate",
        auc=metrics.auc,
        f1=metrics.f1,
        accuracy=metrics.accuracy,
        n_test=test.n_rows,
        out_dir=str(out),
    )


# ------------------------------------------------------------- pipeline


def cmd_pipeline(args: argparse.Namespace) -> int:
    settings = Settings(args)
    out = settings.out_dir()
    registry, registry_path = _load_registry(settings)
    zone, zone_path = _load_zone(settings, registry)
    records, report, records_path = _parse_records(settings, registry)
    window = settings.window()
    riskmap_params = _riskmap_params(settings)
    train_params = _train_params(settings)
    skip_baseline = bool(settings.get("skip_baseline", _cast_bool, default=False))

    run_config = RunConfig(
        records=str(records_path),
        registry=str(registry_path),
        zone=str(zone_path),
        t0_start=format_timestamp(window.t0_start),
        t0_end=format_timestamp(window.t0_end),
        t1_start=format_timestamp(window.t1_start),
        t1_end=format_timestamp(window.t1_end),
        beta=riskmap_params["beta"],
        min_population=riskmap_params["min_population"],
        color_max=riskmap_params["color_max"],
        radius_k=riskmap_params["radius_k"],
        count_zone_residents_as_vulnerable=riskmap_params["count_zone_residents_as_vulnerable"],
        l2_penalty=train_params["l2_penalty"],
        seed=train_params["seed"],
        train_fraction=train_params["train_fraction"],
    )
    inputs = _input_meta(records=records_path, registry=registry_path, zone=zone_path)

    (out / "ingest_report.json").write_text(report.to_json())
    riskmap_info = _write_riskmap_artifacts(
        out, records, registry, zone, riskmap_params, inputs, _time_span(report)
    )
    feature_info = _write_feature_artifacts(out, records, window, zone, registry, inputs)

    dataset = Dataset.from_csv(out / "dataset.csv")
    tune = bool(settings.get("tune_l2", _cast_bool, default=False))
    model, tuning = _train_model(dataset, train_params, tune)
    model_extra = {
        "split": {"seed": train_params["seed"], "train_fraction": train_params["train_fraction"]},
        "inputs": _artifact_meta(dataset=out / "dataset.csv"),
    }
    if tuning:
        model_extra["tuning"] = tuning
    save_model_json(model, out / "model.json", model_extra)

    try:
        train, test = split_dataset(
            dataset, train_fraction=train_params["train_fraction"], seed=train_params["seed"]
        )
        metrics = evaluate(model, test)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    metrics_doc = metrics.to_dict()
    metrics_doc["n_test"] = test.n_rows
    metrics_doc["inputs"] = _artifact_meta(model=out / "model.json", dataset=out / "dataset.csv")
    (out / "metrics.json").write_text(json.dumps(metrics_doc, indent=2) + "\n")

    from .plotting import render_roc

    if metrics.auc is not None:
        render_roc(test.y, model.score(test), out / "roc.png", title="migration prediction")

    baseline_doc = None
    if not skip_baseline:
        try:
            baseline = train_mnb(train, columns=count_feature_columns(dataset.columns))
            baseline_doc = evaluate(baseline, test).to_dict()
        except ValueError as exc:
            baseline_doc = {"error": str(exc)}

    artifact_names = [
        "ingest_report.json",
        "riskmap.geojson",
        "antenna_stats.csv",
        "riskmap.png",
        "dataset.csv",
        "dataset_manifest.json",
        "model.json",
        "metrics.json",
    ]
    if (out / "roc.png").exists():
        artifact_names.append("roc.png")
    report_doc = {
        "parameters": run_config.to_dict(),
        "inputs": inputs,
        "ingest": report.to_dict(),
        "riskmap": riskmap_info,
        "dataset": feature_info,
        "model": {
            "l2_penalty": model.l2_penalty,
            "convergence": model.convergence.to_dict(),
        },
        "metrics": {k: metrics_doc[k] for k in ("f1", "accuracy", "auc", "precision", "recall", "confusion")},
        "baseline_metrics": baseline_doc,
        "artifacts": {name: _sha256(out / name) for name in artifact_names},
    }
    (out / "report.json").write_text(json.dumps(report_doc, indent=2) + "\n")
    return _summary(
        "pipeline",
        auc=metrics.auc,
        f1=metrics.f1,
        rows=feature_info["rows"],
        antennas_plotted=riskmap_info["antennas_plotted"],
        out_dir=str(out),
    )


# ---------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", dest="out_dir", help="directory for output artifacts")
    p.add_argument("--config", help="flat key=value config file; flags override it")


def _add_inputs(p: argparse.ArgumentParser, zone: bool = True) -> None:
    p.add_argument("--records", help="CDR CSV file")
    p.add_argument("--registry", help="antenna registry CSV (antenna_id,lat,lon)")
    if zone:
        p.add_argument("--zone", help="endemic zone file (CSV with antenna_id header, or JSON array)")


def _add_window(p: argparse.ArgumentParser) -> None:
    for name in ("t0-start", "t0-end", "t1-start", "t1-end"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=parse_timestamp,
                       help=f"{name.replace('-', ' ')} (YYYY-MM-DDThh:mm:ssZ)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdrisk",
        description="Risk maps and migration prediction from call detail records.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    _add_common(p)
    _add_window(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-users", dest="n_users", type=int)
    p.add_argument("--n-antennas", dest="n_antennas", type=int)
    p.add_argument("--endemic-fraction", dest="endemic_fraction", type=float)
    p.add_argument("--p-home-call", dest="p_home_call", type=float)
    p.add_argument("--migrant-fraction", dest="migrant_fraction", type=float)
    p.add_argument("--mean-calls", dest="mean_calls", type=float)
    p.add_argument("--tie-strength", dest="tie_strength", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse and validate a CDR file")
    _add_common(p)
    _add_inputs(p, zone=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("graph", help="build the communication graph edge dump")
    _add_common(p)
    _add_inputs(p, zone=False)
    p.add_argument("--window-start", dest="window_start", type=parse_timestamp)
    p.add_argument("--window-end", dest="window_end", type=parse_timestamp)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("homes", help="infer home antennas")
    _add_common(p)
    _add_inputs(p, zone=False)
    p.add_argument("--window-start", dest="window_start", type=parse_timestamp)
    p.add_argument("--window-end", dest="window_end", type=parse_timestamp)
    p.set_defaults(func=cmd_homes)

    p = sub.add_parser("riskmap", help="aggregate per-antenna indicators and export the map")
    _add_common(p)
    _add_inputs(p)
    p.add_argument("--beta", type=float, help="minimum vulnerable fraction (strict)")
    p.add_argument("--min-pop", dest="min_pop", type=int, help="minimum antenna population (strict)")
    p.add_argument("--color-max", dest="color_max", type=float)
    p.add_argument("--radius-k", dest="radius_k", type=float)
    p.add_argument("--count-zone-residents-as-vulnerable", dest="count_zone_residents_as_vulnerable",
                   action="store_true", default=None)
    p.set_defaults(func=cmd_riskmap)

    p = sub.add_parser("features", help="build the migration dataset (T1 features, T0 labels)")
    _add_common(p)
    _add_inputs(p)
    _add_window(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train the migration classifier")
    _add_common(p)
    p.add_argument("--dataset", help="dataset CSV from the features stage")
    p.add_argument("--l2", type=float, help="L2 penalty strength")
    p.add_argument("--seed", type=int)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--tune-l2", dest="tune_l2", action="store_true", default=None,
                   help="pick the penalty on a small held-out validation slice")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model")
    _add_common(p)
    p.add_argument("--model", help="model.json from the train stage")
    p.add_argument("--dataset", help="dataset CSV")
    p.add_argument("--all-rows", dest="all_rows", action="store_true", default=None,
                   help="evaluate on every row instead of the recorded test split")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="run riskmap and migration stages end to end")
    _add_common(p)
    _add_inputs(p)
    _add_window(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--min-pop", dest="min_pop", type=int)
    p.add_argument("--color-max", dest="color_max", type=float)
    p.add_argument("--radius-k", dest="radius_k", type=float)
    p.add_argument("--count-zone-residents-as-vulnerable", dest="count_zone_residents_as_vulnerable",
                   action="store_true", default=None)
    p.add_argument("--l2", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--tune-l2", dest="tune_l2", action="store_true", default=None)
    p.add_argument("--skip-baseline", dest="skip_baseline", action="store_true", default=None)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"error": "validation", "detail": str(exc)}), file=sys.stderr)
        return 1
    except IngestError as exc:
        print(json.dumps({"error": "ingest", "detail": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "io", "detail": str(exc)}), file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
