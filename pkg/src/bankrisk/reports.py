"""File emitters for every analysis stage.

All writers are deterministic: fixed column orders, rows sorted by their
natural keys, floats rendered with repr (shortest round-trip form), JSON
with sorted keys, and a bare ``\\n`` line terminator. Two runs over equal
inputs produce byte-identical files.

The ``fig_*`` writers reshape stage outputs into tidy plot data (one
observation per row). They only copy values that already exist in the
stage outputs they mirror; nothing is recomputed, so a figure file can be
checked cell-for-cell against its source.
"""

from __future__ import annotations

import csv
import json
from typing import Dict, Mapping, Optional, Sequence, Tuple

from .abm import ScenarioKind, ShockScenario, SimResult
from .ensemble import (
    EnsembleResult,
    RISK_BANDS,
    RiskClassification,
)
from .errors import InvalidInput, ParseError
from .metrics import AssetTier, RiskRatioRow
from .network import NetworkStats, YearNetwork
from .tgnn import AnomalyReport, AnomalyRow, Method

PANEL_CSV = "panel.csv"
METRICS_CSV = "metrics.csv"
AGGREGATE_SRISK_CSV = "aggregate_srisk.csv"
ROLLING_CORRELATION_CSV = "rolling_correlation.csv"
NETWORK_STATS_CSV = "network_stats.csv"
TIER_SEGMENTS_CSV = "tier_segments.csv"
ANOMALY_CSV = "anomaly.csv"
ANOMALY_EXCLUDED_CSV = "anomaly_excluded.csv"
MODEL_JSON = "tgnn_model.json"
ENSEMBLE_JSON = "ensemble.json"
CLASSIFICATION_CSV = "classification.csv"
FIG_RATIO_TRENDS_CSV = "fig_ratio_trends.csv"
FIG_INTERCONNECTEDNESS_CSV = "fig_interconnectedness.csv"
FIG_SCENARIO_DAMAGE_CSV = "fig_scenario_damage.csv"
FIG_GEOPOLITICAL_CSV = "fig_geopolitical.csv"
FIG_RESILIENCE_CSV = "fig_resilience.csv"

# Column label for system-level series that have no country dimension.
ALL_COUNTRIES = "ALL"

_RATIO_FIELDS = ("npl_ratio", "cet1_ratio", "roa", "leverage", "srisk_cs")
_SUMMARY_FIELDS = ("deposit_loss_pct", "failure_rate",
                   "capital_remaining_pct")


def network_csv_name(year: int) -> str:
    return f"network_{year}.csv"


def network_json_name(year: int) -> str:
    return f"network_{year}.json"


def scenario_label(scenario: ShockScenario) -> str:
    """Stable filename fragment for a scenario."""
    parts = [scenario.kind.value]
    if scenario.kind is ScenarioKind.GEOPOLITICAL:
        parts.append(scenario.country or ALL_COUNTRIES)
    elif scenario.kind is ScenarioKind.TOP_ANOMALOUS:
        parts.append(scenario.method.value)
    return "_".join(parts)


def simresult_json_name(scenario: ShockScenario) -> str:
    return f"simresult_{scenario_label(scenario)}.json"


def trace_csv_name(scenario: ShockScenario) -> str:
    return f"trace_{scenario_label(scenario)}.csv"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def write_metrics_csv(rows: Sequence[RiskRatioRow], path) -> None:
    header = ("bank_id", "country", "year") + _RATIO_FIELDS
    ordered = sorted(rows, key=lambda r: (r.bank_id, r.year))
    _write_csv(path, header,
               ([r.bank_id, r.country, r.year]
                + [getattr(r, f) for f in _RATIO_FIELDS]
                for r in ordered))


def write_country_series_csv(series: Mapping[Tuple[str, int], float],
                             path) -> None:
    """(country, year) keyed values as country,year,value rows."""
    _write_csv(path, ("country", "year", "value"),
               ([c, y, series[(c, y)]] for c, y in sorted(series)))


def write_year_series_csv(series: Mapping[int, Optional[float]], path,
                          country: str = ALL_COUNTRIES) -> None:
    """Year-keyed system-level series; years with no observation are
    omitted rather than written empty."""
    _write_csv(path, ("country", "year", "value"),
               ([country, y, series[y]] for y in sorted(series)
                if series[y] is not None))


def write_network_csv(net: YearNetwork, path) -> None:
    """Upper-triangle long form; the symmetric lower half and the unit
    diagonal are implied."""
    rows = []
    for i, bank_i in enumerate(net.roster):
        for j in range(i + 1, len(net.roster)):
            rows.append([net.year, bank_i, net.roster[j],
                         float(net.adjacency[i, j])])
    _write_csv(path, ("year", "bank_i", "bank_j", "weight"), rows)


def write_network_json(net: YearNetwork, path) -> None:
    _write_json(path, {
        "year": net.year,
        "gamma": net.gamma,
        "roster": list(net.roster),
        "adjacency": [[float(v) for v in row] for row in net.adjacency],
    })


def write_network_stats_csv(stats: Sequence[NetworkStats], path) -> None:
    header = ("year", "threshold", "n_nodes", "n_edges", "density",
              "n_components")
    ordered = sorted(stats, key=lambda s: s.year)
    _write_csv(path, header,
               ([s.year, s.threshold, s.n_nodes, s.n_edges, s.density,
                 s.n_components] for s in ordered))


def write_tier_segments_csv(
        segments: Mapping[int, Mapping[AssetTier, YearNetwork]],
        path) -> None:
    """Tier membership per year as year,tier,bank_id rows."""
    rows = []
    for year in sorted(segments):
        for tier in AssetTier:
            for bank_id in segments[year][tier].roster:
                rows.append([year, tier.value, bank_id])
    _write_csv(path, ("year", "tier", "bank_id"), rows)


def write_anomaly_csv(report: AnomalyReport, path) -> None:
    ordered = sorted(report.rows,
                     key=lambda r: (r.year, r.method.value, r.rank))
    _write_csv(path, ("year", "bank_id", "method", "score", "rank"),
               ([r.year, r.bank_id, r.method.value, r.score, r.rank]
                for r in ordered))


def write_anomaly_excluded_csv(report: AnomalyReport, path) -> None:
    _write_csv(path, ("year", "bank_id"),
               ([y, b] for y, b in sorted(report.excluded)))


def read_anomaly_csv(path) -> AnomalyReport:
    """Rebuild a report from its CSV form. The report type re-validates
    rank contiguity, so a hand-edited file that breaks the ranking fails
    here rather than downstream."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["year", "bank_id", "method", "score", "rank"]:
            raise ParseError(0, "header", ",".join(header or []))
        rows = []
        for lineno, row in enumerate(reader, start=1):
            if len(row) != 5:
                raise ParseError(lineno, "row", ",".join(row))
            year_s, bank_id, method_s, score_s, rank_s = row
            try:
                method = Method(method_s)
            except ValueError:
                raise ParseError(lineno, "method", method_s) from None
            try:
                rows.append(AnomalyRow(year=int(year_s), bank_id=bank_id,
                                       method=method, score=float(score_s),
                                       rank=int(rank_s)))
            except ValueError:
                raise ParseError(lineno, "row", ",".join(row)) from None
    return AnomalyReport(rows=tuple(rows))


def merge_reports(*reports: AnomalyReport) -> AnomalyReport:
    rows = []
    excluded = []
    for report in reports:
        rows.extend(report.rows)
        excluded.extend(report.excluded)
    return AnomalyReport(rows=tuple(rows), excluded=tuple(sorted(excluded)))


def _scenario_dict(scenario: ShockScenario) -> dict:
    return {
        "kind": scenario.kind.value,
        "year": scenario.year,
        "k": scenario.k,
        "method": scenario.method.value,
        "country": scenario.country,
        "shock_pct_override": scenario.shock_pct_override,
    }


def write_simresult_json(result: SimResult, scenario: ShockScenario,
                         path) -> None:
    _write_json(path, {
        "scenario": _scenario_dict(scenario),
        "summary": {
            "deposit_loss_pct": result.deposit_loss_pct,
            "failure_rate": result.failure_rate,
            "capital_remaining_pct": result.capital_remaining_pct,
            "steps_run": result.steps_run,
        },
        "per_bank": [{
            "bank_id": a.bank_id,
            "alive": a.alive,
            "capital": a.capital,
            "deposits": a.deposits,
            "fear": a.fear,
        } for a in result.per_bank],
    })


def write_trace_csv(result: SimResult, path) -> None:
    _write_csv(path, ("tau", "deposits", "capital", "systemic_fear",
                      "failures"),
               ([t.tau, t.deposits, t.capital, t.systemic_fear, t.failures]
                for t in result.trace))


def write_ensemble_json(result: EnsembleResult, path) -> None:
    spec = result.spec
    _write_json(path, {
        "spec": {
            "n_runs": spec.n_runs,
            "master_seed": spec.master_seed,
            "years": list(spec.years),
            "scenario": _scenario_dict(spec.scenario),
            "base_params": {
                "alpha": spec.base_params.alpha,
                "psi": spec.base_params.psi,
                "shock_pct": spec.base_params.shock_pct,
                "fire_sale_haircut": spec.base_params.fire_sale_haircut,
                "liquidity_fraction": spec.base_params.liquidity_fraction,
                "horizon": spec.base_params.horizon,
                "stop_epsilon": spec.base_params.stop_epsilon,
            },
            "perturbation": {
                "alpha": spec.perturbation.alpha,
                "psi": spec.perturbation.psi,
                "fire_sale_haircut": spec.perturbation.fire_sale_haircut,
                "shock_pct": spec.perturbation.shock_pct,
            },
            "thresholds": {
                "low": spec.thresholds.low,
                "medium": spec.thresholds.medium,
                "high": spec.thresholds.high,
            },
        },
        "cells": [{
            "country": cell.country,
            "year": cell.year,
            "mean_capital_remaining": cell.mean_capital_remaining,
            "deposit_loss_quantiles": {
                "q05": cell.deposit_loss.q05,
                "q25": cell.deposit_loss.q25,
                "q50": cell.deposit_loss.q50,
                "q75": cell.deposit_loss.q75,
                "q95": cell.deposit_loss.q95,
            },
            "capital_remaining_quantiles": {
                "q05": cell.capital_remaining.q05,
                "q25": cell.capital_remaining.q25,
                "q50": cell.capital_remaining.q50,
                "q75": cell.capital_remaining.q75,
                "q95": cell.capital_remaining.q95,
            },
            "runs": [{
                "run_index": r.run_index,
                "seed": r.seed,
                "alpha": r.alpha,
                "psi": r.psi,
                "fire_sale_haircut": r.fire_sale_haircut,
                "shock_pct": r.shock_pct,
                "deposit_loss_pct": r.deposit_loss_pct,
                "capital_remaining_pct": r.capital_remaining_pct,
                "failure_rate": r.failure_rate,
                "steps_run": r.steps_run,
                "band": r.band.value,
            } for r in cell.runs],
        } for cell in result.cells],
    })


def write_classification_csv(rows: Sequence[RiskClassification],
                             path) -> None:
    """Pivot layout: one row per (country, band), one probability column
    per year, countries alphabetical and bands least to most severe. A
    (country, year) the ensemble never simulated leaves an empty cell."""
    if not rows:
        raise InvalidInput("no classification rows to write")
    years = sorted({r.year for r in rows})
    by_key = {(r.country, r.year): r for r in rows}
    countries = sorted({r.country for r in rows})
    header = ["country", "risk_level"] + [str(y) for y in years]
    out = []
    for country in countries:
        for band in RISK_BANDS:
            cells = []
            for year in years:
                row = by_key.get((country, year))
                cells.append(None if row is None else row.probability(band))
            out.append([country, band.value] + cells)
    _write_csv(path, header, out)


def write_fig_ratio_trends(rows: Sequence[RiskRatioRow], path) -> None:
    """Per-bank ratio observations, tidy; country trend figures group and
    average these at plot time."""
    ordered = sorted(rows, key=lambda r: (r.country, r.year, r.bank_id))
    out = []
    for r in ordered:
        for ratio in _RATIO_FIELDS:
            value = getattr(r, ratio)
            if value is not None:
                out.append([r.country, r.year, r.bank_id, ratio, value])
    _write_csv(path, ("country", "year", "bank_id", "ratio", "value"), out)


def write_fig_interconnectedness(
        aggregate: Mapping[Tuple[str, int], float],
        correlation: Mapping[int, Optional[float]], path) -> None:
    """Country-level shortfall series plus the system-wide rolling profit
    correlation, one series column keyed file."""
    out = []
    for country, year in sorted(aggregate):
        out.append([country, year, "aggregate_srisk_cs",
                    aggregate[(country, year)]])
    for year in sorted(correlation):
        if correlation[year] is not None:
            out.append([ALL_COUNTRIES, year, "rolling_correlation",
                        correlation[year]])
    _write_csv(path, ("country", "year", "series", "value"), out)


def write_fig_scenario_damage(results: Mapping[str, SimResult],
                              year: int, path) -> None:
    """One row per (year, scenario, metric) from the run summaries."""
    out = []
    for label in sorted(results):
        summary = results[label]
        for metric in _SUMMARY_FIELDS:
            out.append([year, label, metric, getattr(summary, metric)])
    _write_csv(path, ("year", "scenario", "metric", "value"), out)


def write_fig_geopolitical(result: EnsembleResult, path) -> None:
    """Deposit-loss quantiles per ensemble cell, mirroring ensemble.json."""
    out = []
    for cell in result.cells:
        for metric, value in (("deposit_loss_q05", cell.deposit_loss.q05),
                              ("deposit_loss_q50", cell.deposit_loss.q50),
                              ("deposit_loss_q95", cell.deposit_loss.q95)):
            out.append([cell.country, cell.year, metric, value])
    _write_csv(path, ("country", "year", "metric", "value"), out)


def write_fig_resilience(rows: Sequence[RiskClassification], path) -> None:
    """Mean capital remaining per (country, year), mirroring the
    classification rows."""
    ordered = sorted(rows, key=lambda r: (r.country, r.year))
    _write_csv(path, ("country", "year", "mean_capital_remaining"),
               ([r.country, r.year, r.mean_capital_remaining]
                for r in ordered))
