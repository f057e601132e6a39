"""Batch command-line front end.

Stages communicate through files in the output directory: ``ingest`` or
``synth`` writes the canonical panel, downstream stages read it back and
add their own artifacts under stable names. The ``pipeline`` subcommand
runs every stage in order and finishes with tidy plot-data files; running
the stage subcommands one by one produces byte-identical artifacts,
because every stage is deterministic given the config and seed.

Exit codes: 0 on success, 1 when inputs fail validation (bad config,
malformed panel, missing stage prerequisite), 2 when a computation fails
at runtime. The ``BANKRISK_LOG`` environment variable sets the log level
(DEBUG, INFO, WARNING, ERROR); logs go to standard error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import reports
from .abm import AbmParams, ScenarioKind, ShockScenario, SimResult, run_simulation
from .config import RunConfig, load_config
from .ensemble import (
    EnsembleResult,
    EnsembleSpec,
    RiskClassification,
    classification_table,
    run_ensemble,
)
from .errors import (
    BankRiskError,
    MissingAnomalyReport,
    MissingStageOutput,
    SimulationError,
    ValidationError,
)
from .metrics import (
    RiskRatioRow,
    country_aggregate_srisk,
    risk_ratios,
    rolling_profit_correlation,
)
from .network import (
    DynamicNetwork,
    build_dynamic_network,
    network_stats,
    segment_by_tier,
)
from .panel import BankPanel, generate_synthetic_panel, load_panel, save_panel
from .tgnn import (
    AnomalyReport,
    anomaly_scores,
    baseline_anomaly,
    init_model,
    save_model,
    train,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

LOG_ENV = "BANKRISK_LOG"

log = logging.getLogger("bankrisk.cli")


def _emit(out_path: Path) -> None:
    print(f"wrote {out_path}")


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_panel(out: Path) -> BankPanel:
    path = out / reports.PANEL_CSV
    if not path.exists():
        raise MissingStageOutput(
            f"{path} not found; run the ingest or synth stage first")
    return load_panel(path)


def stage_panel(config: RunConfig, out: Path) -> BankPanel:
    """Materialize the run's panel from the configured source."""
    if config.input_csv is not None:
        panel = load_panel(config.input_csv, config.schema or None)
    else:
        panel = generate_synthetic_panel(config.synth)
    path = out / reports.PANEL_CSV
    save_panel(panel, path)
    _emit(path)
    return panel


def stage_metrics(config: RunConfig, out: Path,
                  panel: Optional[BankPanel] = None):
    panel = panel if panel is not None else _require_panel(out)
    rows = risk_ratios(panel, k=config.srisk_k)
    path = out / reports.METRICS_CSV
    reports.write_metrics_csv(rows, path)
    _emit(path)

    aggregate = country_aggregate_srisk(rows)
    agg_path = out / reports.AGGREGATE_SRISK_CSV
    reports.write_country_series_csv(aggregate, agg_path)
    _emit(agg_path)

    correlation = rolling_profit_correlation(panel, config.window)
    corr_path = out / reports.ROLLING_CORRELATION_CSV
    reports.write_year_series_csv(correlation, corr_path)
    _emit(corr_path)
    return rows, aggregate, correlation


def _network_years(config: RunConfig, panel: BankPanel) -> List[int]:
    if config.network_years:
        return list(config.network_years)
    # the first panel year has no trailing window to compare against
    return list(panel.years[1:])


def stage_network(config: RunConfig, out: Path,
                  panel: Optional[BankPanel] = None) -> DynamicNetwork:
    panel = panel if panel is not None else _require_panel(out)
    years = _network_years(config, panel)
    dynet = build_dynamic_network(panel, years, config.window,
                                  config.index_spec, config.gamma)
    stats = []
    segments = {}
    for net in dynet.networks:
        csv_path = out / reports.network_csv_name(net.year)
        reports.write_network_csv(net, csv_path)
        _emit(csv_path)
        json_path = out / reports.network_json_name(net.year)
        reports.write_network_json(net, json_path)
        _emit(json_path)
        stats.append(network_stats(net, config.threshold))
        segments[net.year] = segment_by_tier(net, panel)
    stats_path = out / reports.NETWORK_STATS_CSV
    reports.write_network_stats_csv(stats, stats_path)
    _emit(stats_path)
    tier_path = out / reports.TIER_SEGMENTS_CSV
    reports.write_tier_segments_csv(segments, tier_path)
    _emit(tier_path)
    return dynet


def stage_anomaly(config: RunConfig, out: Path,
                  panel: Optional[BankPanel] = None,
                  dynet: Optional[DynamicNetwork] = None) -> AnomalyReport:
    panel = panel if panel is not None else _require_panel(out)
    if dynet is None:
        years = _network_years(config, panel)
        dynet = build_dynamic_network(panel, years, config.window,
                                      config.index_spec, config.gamma)
    model = init_model(feature_spec=config.feature_spec,
                       hidden_dim=config.tgnn_hidden_dim,
                       n_layers=config.tgnn_n_layers,
                       seed=config.seed,
                       n_nodes=len(dynet.roster))
    trained, trace = train(model, dynet, epochs=config.tgnn_epochs,
                           learning_rate=config.tgnn_learning_rate,
                           panel=panel)
    log.info("tgnn training: loss %.6f -> %.6f over %d epochs",
             trace[0], trace[-1], config.tgnn_epochs)
    model_path = out / reports.MODEL_JSON
    save_model(trained, model_path)
    _emit(model_path)

    tgnn_report = anomaly_scores(trained, dynet, panel)
    scored_years = sorted({row.year for row in tgnn_report.rows})
    baselines = [baseline_anomaly(panel, year) for year in scored_years]
    merged = reports.merge_reports(tgnn_report, *baselines)

    anomaly_path = out / reports.ANOMALY_CSV
    reports.write_anomaly_csv(merged, anomaly_path)
    _emit(anomaly_path)
    excluded_path = out / reports.ANOMALY_EXCLUDED_CSV
    reports.write_anomaly_excluded_csv(merged, excluded_path)
    _emit(excluded_path)
    return merged


def _default_year(panel: BankPanel) -> int:
    # anomaly scores attach to transition years, so the final panel year
    # has no ranking; the same default must serve every scenario kind or
    # the pipeline and the stage sequence would disagree
    years = panel.years
    return years[-2] if len(years) >= 2 else years[-1]


def _resolve_scenario(config: RunConfig, panel: BankPanel,
                      kind: Optional[ScenarioKind] = None,
                      year: Optional[int] = None) -> ShockScenario:
    kind = kind if kind is not None else config.scenario_kind
    year = (year if year is not None
            else (config.scenario_year if config.scenario_year is not None
                  else _default_year(panel)))
    k = None if kind is ScenarioKind.GEOPOLITICAL else config.scenario_k
    return ShockScenario(kind=kind, year=year, k=k,
                         method=config.scenario_method,
                         country=config.scenario_country,
                         shock_pct_override=config.scenario_shock_override)


def _scenario_inputs(config: RunConfig, out: Path, panel: BankPanel,
                     kind: ScenarioKind,
                     ) -> Tuple[Optional[List[RiskRatioRow]],
                                Optional[AnomalyReport]]:
    """Ranking inputs a scenario needs: shortfall metrics are recomputed
    from the panel, the anomaly report is read from the prior stage's
    file so the simulated targets are exactly the published ones."""
    metrics = (risk_ratios(panel, k=config.srisk_k)
               if kind is ScenarioKind.TOP_SRISK_CS else None)
    report = None
    if kind is ScenarioKind.TOP_ANOMALOUS:
        path = out / reports.ANOMALY_CSV
        if not path.exists():
            raise MissingAnomalyReport(
                f"{path} not found; run the anomaly stage before a "
                f"TopAnomalous scenario")
        report = reports.read_anomaly_csv(path)
    return metrics, report


def stage_simulate(config: RunConfig, out: Path,
                   scenario: ShockScenario,
                   panel: Optional[BankPanel] = None,
                   ) -> Tuple[str, SimResult]:
    panel = panel if panel is not None else _require_panel(out)
    metrics, report = _scenario_inputs(config, out, panel, scenario.kind)
    result = run_simulation(panel, scenario.year, scenario, config.abm,
                            metrics=metrics, anomaly_report=report)
    label = reports.scenario_label(scenario)
    json_path = out / reports.simresult_json_name(scenario)
    reports.write_simresult_json(result, scenario, json_path)
    _emit(json_path)
    trace_path = out / reports.trace_csv_name(scenario)
    reports.write_trace_csv(result, trace_path)
    _emit(trace_path)
    return label, result


def stage_ensemble(config: RunConfig, out: Path,
                   panel: Optional[BankPanel] = None,
                   ) -> Tuple[EnsembleResult,
                              Tuple[RiskClassification, ...]]:
    panel = panel if panel is not None else _require_panel(out)
    year = (config.scenario_year if config.scenario_year is not None
            else _default_year(panel))
    years = config.ensemble_years or (year,)
    kind = config.ensemble_kind
    k = None if kind is ScenarioKind.GEOPOLITICAL else config.ensemble_k
    scenario = ShockScenario(kind=kind, year=years[0], k=k,
                             method=config.scenario_method,
                             country=config.ensemble_country,
                             shock_pct_override=config.scenario_shock_override)
    metrics, report = _scenario_inputs(config, out, panel, kind)
    spec = EnsembleSpec(base_params=config.abm, scenario=scenario,
                        years=tuple(years), n_runs=config.ensemble_n_runs,
                        perturbation=config.perturbation,
                        master_seed=config.seed,
                        thresholds=config.thresholds)
    result = run_ensemble(spec, panel, metrics=metrics,
                          anomaly_report=report,
                          n_workers=config.ensemble_workers)
    json_path = out / reports.ENSEMBLE_JSON
    reports.write_ensemble_json(result, json_path)
    _emit(json_path)
    rows = classification_table(result)
    table_path = out / reports.CLASSIFICATION_CSV
    reports.write_classification_csv(rows, table_path)
    _emit(table_path)
    return result, rows


def emit_plot_data(out: Path, *,
                   metrics_rows=None, aggregate=None, correlation=None,
                   sim_results: Optional[Dict[str, SimResult]] = None,
                   sim_year: Optional[int] = None,
                   ensemble_result: Optional[EnsembleResult] = None,
                   classification_rows=None) -> None:
    """Tidy figure files from in-memory stage outputs; every figure's
    inputs must be present."""
    missing = [name for name, value in (
        ("metrics", metrics_rows), ("aggregate", aggregate),
        ("correlation", correlation), ("simulation", sim_results),
        ("ensemble", ensemble_result),
        ("classification", classification_rows),
    ) if value is None]
    if missing or sim_year is None:
        raise MissingStageOutput(
            "plot data needs stage outputs: " + ", ".join(missing))
    for name, writer, args in (
        (reports.FIG_RATIO_TRENDS_CSV,
         reports.write_fig_ratio_trends, (metrics_rows,)),
        (reports.FIG_INTERCONNECTEDNESS_CSV,
         reports.write_fig_interconnectedness, (aggregate, correlation)),
        (reports.FIG_SCENARIO_DAMAGE_CSV,
         reports.write_fig_scenario_damage, (sim_results, sim_year)),
        (reports.FIG_GEOPOLITICAL_CSV,
         reports.write_fig_geopolitical, (ensemble_result,)),
        (reports.FIG_RESILIENCE_CSV,
         reports.write_fig_resilience, (classification_rows,)),
    ):
        path = out / name
        writer(*args, path)
        _emit(path)


def stage_pipeline(config: RunConfig, out: Path) -> None:
    panel = stage_panel(config, out)
    metrics_rows, aggregate, correlation = stage_metrics(config, out, panel)
    dynet = stage_network(config, out, panel)
    stage_anomaly(config, out, panel, dynet)
    sim_results: Dict[str, SimResult] = {}
    sim_year = None
    for kind in config.pipeline_scenarios:
        scenario = _resolve_scenario(config, panel, kind=kind)
        sim_year = scenario.year
        label, result = stage_simulate(config, out, scenario, panel)
        sim_results[label] = result
    ensemble_result, classification_rows = stage_ensemble(config, out,
                                                          panel)
    emit_plot_data(out, metrics_rows=metrics_rows, aggregate=aggregate,
                   correlation=correlation, sim_results=sim_results,
                   sim_year=sim_year, ensemble_result=ensemble_result,
                   classification_rows=classification_rows)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="key=value configuration file")
    common.add_argument("--seed", type=int, metavar="U64",
                        help="override io.seed")
    common.add_argument("--out", metavar="DIR",
                        help="override io.out_dir")
    common.add_argument("--scenario", metavar="NAME",
                        help="override scenario.kind "
                             "(TopAssets, TopSriskCs, TopAnomalous, "
                             "Geopolitical)")
    common.add_argument("--year", type=int, metavar="Y",
                        help="override scenario.year")

    parser = argparse.ArgumentParser(
        prog="bankrisk",
        description="Systemic-risk analytics over annual bank panels")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("ingest", "validate an input CSV and write the canonical panel"),
        ("synth", "generate the synthetic panel"),
        ("metrics", "risk ratios, capital shortfalls, and aggregates"),
        ("network", "similarity networks, stats, and tier segments"),
        ("anomaly", "train the detector and write anomaly rankings"),
        ("simulate", "run one shock scenario"),
        ("ensemble", "Monte Carlo runs and the risk classification"),
        ("pipeline", "all stages in order plus plot data"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _configure(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed,
                         synth=replace(config.synth, seed=args.seed))
    if args.out is not None:
        config = replace(config, out_dir=args.out)
    if args.scenario is not None:
        kinds = {k.value: k for k in ScenarioKind}
        if args.scenario not in kinds:
            raise ValidationError(
                f"unknown scenario {args.scenario!r} (one of "
                + ", ".join(sorted(kinds)) + ")")
        config = replace(config, scenario_kind=kinds[args.scenario])
    if args.year is not None:
        config = replace(config, scenario_year=args.year)
    config.validate()
    return config


def _dispatch(args) -> None:
    config = _configure(args)
    out = _out_dir(config)
    if args.command == "ingest":
        if config.input_csv is None:
            raise ValidationError("ingest needs io.input_csv in the config")
        stage_panel(config, out)
    elif args.command == "synth":
        if config.input_csv is not None:
            raise ValidationError(
                "synth runs the synthetic generator; io.input_csv is set")
        stage_panel(config, out)
    elif args.command == "metrics":
        stage_metrics(config, out)
    elif args.command == "network":
        stage_network(config, out)
    elif args.command == "anomaly":
        stage_anomaly(config, out)
    elif args.command == "simulate":
        panel = _require_panel(out)
        scenario = _resolve_scenario(config, panel)
        stage_simulate(config, out, scenario, panel)
    elif args.command == "ensemble":
        stage_ensemble(config, out)
    elif args.command == "pipeline":
        stage_pipeline(config, out)
    else:  # pragma: no cover - argparse enforces the choices
        raise ValidationError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, force=True,
        level=getattr(logging, os.environ.get(LOG_ENV, "WARNING").upper(),
                      logging.WARNING))
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _dispatch(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SimulationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except BankRiskError as exc:  # pragma: no cover - defensive
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - the CLI boundary
        log.exception("unexpected failure")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
