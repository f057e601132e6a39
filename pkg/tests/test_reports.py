import csv
import json

import numpy as np
import pytest

from bankrisk.abm import AbmParams, ScenarioKind, ShockScenario, run_simulation
from bankrisk.ensemble import (
    EnsembleSpec,
    Perturbation,
    RiskClassification,
    run_ensemble,
    classification_table,
)
from bankrisk.errors import InvalidInput, ParseError
from bankrisk.metrics import AssetTier, RiskRatioRow, risk_ratios
from bankrisk.network import YearNetwork, network_stats, segment_by_tier
from bankrisk.panel import BankPanel, BankYearRecord
from bankrisk.reports import (
    ALL_COUNTRIES,
    merge_reports,
    network_csv_name,
    network_json_name,
    read_anomaly_csv,
    scenario_label,
    simresult_json_name,
    trace_csv_name,
    write_anomaly_csv,
    write_anomaly_excluded_csv,
    write_classification_csv,
    write_country_series_csv,
    write_ensemble_json,
    write_fig_geopolitical,
    write_fig_interconnectedness,
    write_fig_ratio_trends,
    write_fig_resilience,
    write_fig_scenario_damage,
    write_metrics_csv,
    write_network_csv,
    write_network_json,
    write_network_stats_csv,
    write_simresult_json,
    write_tier_segments_csv,
    write_trace_csv,
    write_year_series_csv,
)
from bankrisk.tgnn import AnomalyReport, AnomalyRow, Method


def bank(bank_id, equity, assets, deposits, country="India", year=2015):
    return BankYearRecord(bank_id=bank_id, country=country, year=year,
                          total_assets=assets,
                          total_liabilities=assets - equity,
                          total_equity=equity,
                          total_customer_deposits=deposits)


def small_panel():
    return BankPanel.from_records([
        bank("B00", 80.0, 1200.0, 700.0, country="China"),
        bank("B01", 50.0, 900.0, 500.0, country="China"),
        bank("B02", 60.0, 800.0, 450.0),
        bank("B03", 40.0, 600.0, 300.0),
    ])


def rows_of(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def tiny_network():
    adj = np.array([[1.0, 0.5, 0.25],
                    [0.5, 1.0, 0.75],
                    [0.25, 0.75, 1.0]])
    return YearNetwork(year=2015, roster=("A", "B", "C"), adjacency=adj,
                       gamma=2.0)


class TestScenarioLabel:
    def test_plain_kinds(self):
        assert scenario_label(
            ShockScenario(ScenarioKind.TOP_ASSETS, 2015, k=5)) == "TopAssets"
        assert scenario_label(
            ShockScenario(ScenarioKind.TOP_SRISK_CS, 2015,
                          k=5)) == "TopSriskCs"

    def test_geopolitical_includes_country(self):
        scen = ShockScenario(ScenarioKind.GEOPOLITICAL, 2015,
                             country="India")
        assert scenario_label(scen) == "Geopolitical_India"
        assert simresult_json_name(scen) == "simresult_Geopolitical_India.json"
        assert trace_csv_name(scen) == "trace_Geopolitical_India.csv"

    def test_anomalous_includes_method(self):
        scen = ShockScenario(ScenarioKind.TOP_ANOMALOUS, 2015, k=5,
                             method=Method.BASELINE)
        assert scenario_label(scen) == "TopAnomalous_Baseline"

    def test_network_names(self):
        assert network_csv_name(2015) == "network_2015.csv"
        assert network_json_name(2015) == "network_2015.json"


class TestMetricsCsv:
    def test_header_and_rows(self, tmp_path):
        rows = risk_ratios(small_panel())
        path = tmp_path / "metrics.csv"
        write_metrics_csv(rows, path)
        parsed = rows_of(path)
        assert parsed[0] == ["bank_id", "country", "year", "npl_ratio",
                             "cet1_ratio", "roa", "leverage", "srisk_cs"]
        assert len(parsed) == 1 + len(rows)
        assert parsed[1][0] == "B00"
        # missing ratios serialize as empty cells
        assert parsed[1][3] == ""
        assert float(parsed[1][7]) == rows[0].srisk_cs

    def test_byte_identical_rewrites(self, tmp_path):
        rows = risk_ratios(small_panel())
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_metrics_csv(rows, a)
        write_metrics_csv(rows, b)
        assert a.read_bytes() == b.read_bytes()


class TestSeriesCsv:
    def test_country_series_sorted(self, tmp_path):
        path = tmp_path / "agg.csv"
        write_country_series_csv({("India", 2016): 2.0,
                                  ("China", 2015): 1.0}, path)
        parsed = rows_of(path)
        assert parsed == [["country", "year", "value"],
                          ["China", "2015", "1.0"],
                          ["India", "2016", "2.0"]]

    def test_year_series_skips_missing(self, tmp_path):
        path = tmp_path / "corr.csv"
        write_year_series_csv({2015: 0.5, 2016: None, 2017: -0.25}, path)
        parsed = rows_of(path)
        assert parsed == [["country", "year", "value"],
                          [ALL_COUNTRIES, "2015", "0.5"],
                          [ALL_COUNTRIES, "2017", "-0.25"]]


class TestNetworkFiles:
    def test_csv_upper_triangle(self, tmp_path):
        path = tmp_path / "net.csv"
        write_network_csv(tiny_network(), path)
        parsed = rows_of(path)
        assert parsed[0] == ["year", "bank_i", "bank_j", "weight"]
        assert parsed[1:] == [["2015", "A", "B", "0.5"],
                              ["2015", "A", "C", "0.25"],
                              ["2015", "B", "C", "0.75"]]

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "net.json"
        net = tiny_network()
        write_network_json(net, path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        assert doc["year"] == 2015
        assert doc["roster"] == ["A", "B", "C"]
        assert doc["gamma"] == 2.0
        assert np.allclose(doc["adjacency"], net.adjacency)

    def test_stats_csv(self, tmp_path):
        path = tmp_path / "stats.csv"
        write_network_stats_csv([network_stats(tiny_network())], path)
        parsed = rows_of(path)
        assert parsed[0] == ["year", "threshold", "n_nodes", "n_edges",
                             "density", "n_components"]
        assert parsed[1][:4] == ["2015", "0.0", "3", "3"]

    def test_tier_segments_csv(self, tmp_path):
        panel = small_panel()
        adj = np.eye(4)
        adj[adj == 0] = 0.5
        net = YearNetwork(year=2015, roster=tuple(panel.roster),
                          adjacency=adj, gamma=1.0)
        segments = {2015: segment_by_tier(net, panel)}
        path = tmp_path / "tiers.csv"
        write_tier_segments_csv(segments, path)
        parsed = rows_of(path)
        assert parsed[0] == ["year", "tier", "bank_id"]
        # synthetic banks here are all far below the Mega cutoff
        assert all(row[1] == AssetTier.REGULAR.value for row in parsed[1:])
        assert [row[2] for row in parsed[1:]] == list(panel.roster)


def toy_report():
    rows = (AnomalyRow(2015, "B00", Method.TGNN, 1.5, 1),
            AnomalyRow(2015, "B01", Method.TGNN, -0.5, 2),
            AnomalyRow(2015, "B02", Method.BASELINE, 2.0, 1),
            AnomalyRow(2015, "B00", Method.BASELINE, 1.0, 2))
    return AnomalyReport(rows=rows, excluded=((2015, "B09"),))


class TestAnomalyCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "anomaly.csv"
        report = toy_report()
        write_anomaly_csv(report, path)
        loaded = read_anomaly_csv(path)
        assert sorted(loaded.rows, key=lambda r: (r.year, r.method.value,
                                                  r.rank)) == sorted(
            report.rows, key=lambda r: (r.year, r.method.value, r.rank))

    def test_rows_sorted_by_year_method_rank(self, tmp_path):
        path = tmp_path / "anomaly.csv"
        write_anomaly_csv(toy_report(), path)
        parsed = rows_of(path)
        assert [(r[2], r[4]) for r in parsed[1:]] == [
            ("Baseline", "1"), ("Baseline", "2"),
            ("TGNN", "1"), ("TGNN", "2")]

    def test_excluded_file(self, tmp_path):
        path = tmp_path / "excluded.csv"
        write_anomaly_excluded_csv(toy_report(), path)
        assert rows_of(path) == [["year", "bank_id"], ["2015", "B09"]]

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "anomaly.csv"
        path.write_text("wrong,header\n1,2\n", encoding="utf-8")
        with pytest.raises(ParseError):
            read_anomaly_csv(path)

    def test_bad_method_rejected(self, tmp_path):
        path = tmp_path / "anomaly.csv"
        path.write_text("year,bank_id,method,score,rank\n"
                        "2015,B00,Oracle,1.0,1\n", encoding="utf-8")
        with pytest.raises(ParseError):
            read_anomaly_csv(path)

    def test_broken_ranks_rejected(self, tmp_path):
        path = tmp_path / "anomaly.csv"
        path.write_text("year,bank_id,method,score,rank\n"
                        "2015,B00,TGNN,1.0,1\n"
                        "2015,B01,TGNN,2.0,2\n", encoding="utf-8")
        # rank 2 has the higher score; the report type refuses the order
        with pytest.raises(InvalidInput):
            read_anomaly_csv(path)

    def test_merge_reports(self):
        merged = merge_reports(
            AnomalyReport(rows=(AnomalyRow(2015, "B00", Method.TGNN,
                                           1.0, 1),)),
            AnomalyReport(rows=(AnomalyRow(2015, "B00", Method.BASELINE,
                                           1.0, 1),)))
        assert len(merged.rows) == 2


PARAMS = AbmParams(horizon=5)
SCENARIO = ShockScenario(ScenarioKind.TOP_ASSETS, 2015, k=2)


class TestSimResultFiles:
    def test_json_summary_matches_result(self, tmp_path):
        result = run_simulation(small_panel(), 2015, SCENARIO, PARAMS)
        path = tmp_path / "sim.json"
        write_simresult_json(result, SCENARIO, path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        assert doc["summary"]["deposit_loss_pct"] == result.deposit_loss_pct
        assert doc["summary"]["steps_run"] == result.steps_run
        assert doc["scenario"]["kind"] == "TopAssets"
        assert doc["scenario"]["k"] == 2
        assert len(doc["per_bank"]) == 4
        assert doc["per_bank"][0]["bank_id"] == "B00"

    def test_trace_csv(self, tmp_path):
        result = run_simulation(small_panel(), 2015, SCENARIO, PARAMS)
        path = tmp_path / "trace.csv"
        write_trace_csv(result, path)
        parsed = rows_of(path)
        assert parsed[0] == ["tau", "deposits", "capital", "systemic_fear",
                             "failures"]
        assert len(parsed) == 1 + len(result.trace)
        assert float(parsed[1][1]) == result.trace[0].deposits


def small_ensemble():
    spec = EnsembleSpec(base_params=PARAMS, scenario=SCENARIO,
                        years=(2015,), n_runs=3, master_seed=5)
    return run_ensemble(spec, small_panel())


class TestEnsembleJson:
    def test_document_structure(self, tmp_path):
        result = small_ensemble()
        path = tmp_path / "ensemble.json"
        write_ensemble_json(result, path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        assert doc["spec"]["n_runs"] == 3
        assert doc["spec"]["master_seed"] == 5
        assert doc["spec"]["thresholds"]["low"] == 0.8
        (cell,) = doc["cells"]
        assert cell["country"] == "ALL"
        assert len(cell["runs"]) == 3
        run0 = cell["runs"][0]
        assert run0["band"] in ("Low", "Medium", "High", "Critical")
        assert run0["deposit_loss_pct"] == (
            result.cells[0].runs[0].deposit_loss_pct)

    def test_byte_identical_rewrites(self, tmp_path):
        result = small_ensemble()
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_ensemble_json(result, a)
        write_ensemble_json(result, b)
        assert a.read_bytes() == b.read_bytes()


def classification_rows():
    def row(country, year, p):
        return RiskClassification(country=country, year=year, p_low=p,
                                  p_medium=1.0 - p, p_high=0.0,
                                  p_critical=0.0,
                                  mean_capital_remaining=0.7)
    return [row("Brazil", 2018, 0.24), row("Brazil", 2019, 0.22),
            row("Russia", 2018, 0.15)]


class TestClassificationCsv:
    def test_pivot_layout(self, tmp_path):
        path = tmp_path / "classification.csv"
        write_classification_csv(classification_rows(), path)
        parsed = rows_of(path)
        assert parsed[0] == ["country", "risk_level", "2018", "2019"]
        assert len(parsed) == 1 + 2 * 4
        assert parsed[1] == ["Brazil", "Low", "0.24", "0.22"]
        assert parsed[2] == ["Brazil", "Medium", "0.76", "0.78"]
        # Russia was only simulated in 2018; 2019 stays empty
        assert parsed[5] == ["Russia", "Low", "0.15", ""]

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(InvalidInput):
            write_classification_csv([], tmp_path / "c.csv")


class TestFigureData:
    def test_ratio_trends_mirror_metrics(self, tmp_path):
        rows = risk_ratios(small_panel())
        fig = tmp_path / "fig1.csv"
        write_fig_ratio_trends(rows, fig)
        parsed = rows_of(fig)
        assert parsed[0] == ["country", "year", "bank_id", "ratio", "value"]
        by_key = {(r.bank_id, f): getattr(r, f)
                  for r in rows for f in ("npl_ratio", "cet1_ratio", "roa",
                                          "leverage", "srisk_cs")}
        for country, year, bank_id, ratio, value in parsed[1:]:
            assert float(value) == by_key[(bank_id, ratio)]
        present = sum(1 for v in by_key.values() if v is not None)
        assert len(parsed) - 1 == present

    def test_interconnectedness_cardinality(self, tmp_path):
        agg = {("China", 2015): 3.0, ("China", 2016): 4.0,
               ("India", 2015): 1.0, ("India", 2016): 2.0}
        corr = {2015: None, 2016: 0.4}
        fig = tmp_path / "fig4.csv"
        write_fig_interconnectedness(agg, corr, fig)
        parsed = rows_of(fig)[1:]
        agg_rows = [r for r in parsed if r[2] == "aggregate_srisk_cs"]
        corr_rows = [r for r in parsed if r[2] == "rolling_correlation"]
        assert len(agg_rows) == 4
        assert [r[:2] for r in corr_rows] == [[ALL_COUNTRIES, "2016"]]

    def test_scenario_damage_one_row_per_metric(self, tmp_path):
        result = run_simulation(small_panel(), 2015, SCENARIO, PARAMS)
        fig = tmp_path / "fig5.csv"
        write_fig_scenario_damage({"TopAssets": result,
                                   "TopSriskCs": result}, 2015, fig)
        parsed = rows_of(fig)[1:]
        assert len(parsed) == 2 * 3
        keys = {(r[0], r[1], r[2]) for r in parsed}
        assert len(keys) == 6
        loss = [r for r in parsed
                if r[1] == "TopAssets" and r[2] == "deposit_loss_pct"]
        assert float(loss[0][3]) == result.deposit_loss_pct

    def test_geopolitical_mirrors_quantiles(self, tmp_path):
        result = small_ensemble()
        fig = tmp_path / "fig6.csv"
        write_fig_geopolitical(result, fig)
        parsed = rows_of(fig)[1:]
        assert len(parsed) == 3 * len(result.cells)
        q50 = [r for r in parsed if r[2] == "deposit_loss_q50"]
        assert float(q50[0][3]) == result.cells[0].deposit_loss.q50

    def test_resilience_mirrors_classification(self, tmp_path):
        result = small_ensemble()
        rows = classification_table(result)
        fig = tmp_path / "fig7.csv"
        write_fig_resilience(rows, fig)
        parsed = rows_of(fig)
        assert parsed[0] == ["country", "year", "mean_capital_remaining"]
        assert float(parsed[1][2]) == rows[0].mean_capital_remaining
