import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bankrisk.abm import AbmParams, ScenarioKind, ShockScenario, run_simulation
from bankrisk.ensemble import (
    DEFAULT_THRESHOLDS,
    RISK_BANDS,
    SYSTEM_WIDE,
    EnsembleCell,
    EnsembleResult,
    EnsembleRunRecord,
    EnsembleSpec,
    Perturbation,
    Quantiles,
    RiskBand,
    RiskClassification,
    RiskThresholds,
    classification_table,
    classify_risk,
    derive_run_seed,
    run_ensemble,
)
from bankrisk.errors import InvalidInput, InvariantViolation
from bankrisk.panel import BankPanel, BankYearRecord


def bank(bank_id, equity, assets, deposits, country="India", year=2015):
    return BankYearRecord(bank_id=bank_id, country=country, year=year,
                          total_assets=assets,
                          total_liabilities=assets - equity,
                          total_equity=equity,
                          total_customer_deposits=deposits)


def small_panel(years=(2015,)):
    recs = []
    for y in years:
        recs += [
            bank("B00", 80.0, 1200.0, 700.0, country="China", year=y),
            bank("B01", 50.0, 900.0, 500.0, country="China", year=y),
            bank("B02", 60.0, 800.0, 450.0, country="India", year=y),
            bank("B03", 40.0, 600.0, 300.0, country="India", year=y),
        ]
    return BankPanel.from_records(recs)


BASE = AbmParams(horizon=10)


def spec_for(panel_years=(2015,), scenario=None, **kw):
    scenario = scenario or ShockScenario(ScenarioKind.TOP_ASSETS,
                                         panel_years[0], k=2)
    defaults = dict(base_params=BASE, scenario=scenario,
                    years=tuple(panel_years), n_runs=4,
                    perturbation=Perturbation(), master_seed=7)
    defaults.update(kw)
    return EnsembleSpec(**defaults)


class TestClassifyRisk:
    @pytest.mark.parametrize("x,band", [
        (1.0, RiskBand.LOW),
        (0.80, RiskBand.LOW),
        (0.79, RiskBand.MEDIUM),
        (0.60, RiskBand.MEDIUM),
        (0.599, RiskBand.HIGH),
        (0.45, RiskBand.HIGH),
        (0.30, RiskBand.HIGH),
        (0.299, RiskBand.CRITICAL),
        (0.0, RiskBand.CRITICAL),
    ])
    def test_bands(self, x, band):
        assert classify_risk(x) is band

    @pytest.mark.parametrize("bad", [-0.01, 1.01, float("nan")])
    def test_out_of_range(self, bad):
        with pytest.raises(InvalidInput):
            classify_risk(bad)

    @pytest.mark.parametrize("bad", ["0.5", None, True])
    def test_non_numbers(self, bad):
        with pytest.raises(InvalidInput):
            classify_risk(bad)

    @given(x=st.floats(0.0, 1.0), y=st.floats(0.0, 1.0))
    @settings(max_examples=200)
    def test_monotone_step_function(self, x, y):
        lo, hi = min(x, y), max(x, y)
        assert classify_risk(lo).severity >= classify_risk(hi).severity

    @given(x=st.floats(0.0, 1.0))
    def test_total_on_unit_interval(self, x):
        assert classify_risk(x) in RISK_BANDS

    def test_severity_ordering(self):
        assert [b.severity for b in RISK_BANDS] == [0, 1, 2, 3]
        assert [b.value for b in RISK_BANDS] == [
            "Low", "Medium", "High", "Critical"]

    def test_custom_thresholds_shift_bands(self):
        strict = RiskThresholds(low=0.95, medium=0.90, high=0.85)
        assert classify_risk(0.92, strict) is RiskBand.MEDIUM
        assert classify_risk(0.92) is RiskBand.LOW
        assert classify_risk(0.50, strict) is RiskBand.CRITICAL

    @pytest.mark.parametrize("bad", [
        RiskThresholds(low=0.3, medium=0.6, high=0.8),
        RiskThresholds(low=0.8, medium=0.8, high=0.3),
        RiskThresholds(low=1.2, medium=0.6, high=0.3),
        RiskThresholds(low=0.8, medium=0.6, high=0.0),
    ])
    def test_disordered_thresholds_rejected(self, bad):
        with pytest.raises(InvalidInput):
            classify_risk(0.5, bad)

    def test_defaults_match_documented_bands(self):
        assert (DEFAULT_THRESHOLDS.low, DEFAULT_THRESHOLDS.medium,
                DEFAULT_THRESHOLDS.high) == (0.80, 0.60, 0.30)


class TestPerturbation:
    def test_defaults(self):
        p = Perturbation()
        assert (p.alpha, p.psi, p.fire_sale_haircut, p.shock_pct) == (
            0.10, 0.10, 0.10, 0.10)
        p.validate()
        assert not p.is_zero()
        assert Perturbation(0.0, 0.0, 0.0, 0.0).is_zero()

    @pytest.mark.parametrize("kw", [
        dict(alpha=-0.1), dict(psi=1.0), dict(fire_sale_haircut=1.5),
        dict(shock_pct=-1e-9),
    ])
    def test_invalid_half_widths(self, kw):
        with pytest.raises(InvalidInput):
            Perturbation(**kw).validate()


class TestEnsembleSpec:
    def test_valid(self):
        spec_for().validate()

    def test_bad_n_runs(self):
        with pytest.raises(InvalidInput):
            spec_for(n_runs=0).validate()

    @pytest.mark.parametrize("seed", [-1, 2 ** 64])
    def test_bad_master_seed(self, seed):
        with pytest.raises(InvalidInput):
            spec_for(master_seed=seed).validate()

    @pytest.mark.parametrize("years", [(), (2016, 2015), (2015, 2015)])
    def test_bad_years(self, years):
        with pytest.raises(InvalidInput):
            spec_for(years=years).validate()

    def test_geopolitical_without_country_is_legal(self):
        scen = ShockScenario(ScenarioKind.GEOPOLITICAL, 2015, country=None)
        spec_for(scenario=scen).validate()

    def test_geopolitical_bad_override(self):
        scen = ShockScenario(ScenarioKind.GEOPOLITICAL, 2015, country=None,
                             shock_pct_override=1.5)
        with pytest.raises(InvalidInput):
            spec_for(scenario=scen).validate()

    def test_non_geopolitical_still_needs_k(self):
        scen = ShockScenario(ScenarioKind.TOP_ASSETS, 2015, k=None)
        with pytest.raises(InvalidInput):
            spec_for(scenario=scen).validate()


class TestDeriveRunSeed:
    def test_stable_and_64_bit(self):
        a = derive_run_seed(7, "India", 2015, 3)
        b = derive_run_seed(7, "India", 2015, 3)
        assert a == b
        assert 0 <= a < 2 ** 64

    def test_coordinates_matter(self):
        base = derive_run_seed(7, "India", 2015, 3)
        assert derive_run_seed(8, "India", 2015, 3) != base
        assert derive_run_seed(7, "China", 2015, 3) != base
        assert derive_run_seed(7, "India", 2016, 3) != base
        assert derive_run_seed(7, "India", 2015, 4) != base

    def test_run_indices_distinct(self):
        seeds = [derive_run_seed(0, SYSTEM_WIDE, 2015, i)
                 for i in range(50)]
        assert len(set(seeds)) == 50


class TestQuantiles:
    def test_two_point_sample_interpolates_linearly(self):
        q = Quantiles.from_values([0.0, 1.0])
        assert q.q05 == pytest.approx(0.05)
        assert q.q25 == pytest.approx(0.25)
        assert q.q50 == pytest.approx(0.50)
        assert q.q75 == pytest.approx(0.75)
        assert q.q95 == pytest.approx(0.95)

    def test_constant_sample(self):
        q = Quantiles.from_values([0.4, 0.4, 0.4])
        assert (q.q05, q.q25, q.q50, q.q75, q.q95) == (
            0.4, 0.4, 0.4, 0.4, 0.4)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInput):
            Quantiles.from_values([])


class TestRunEnsemble:
    def test_degenerate_ensemble_matches_single_run(self):
        spec = spec_for(n_runs=1,
                        perturbation=Perturbation(0.0, 0.0, 0.0, 0.0))
        result = run_ensemble(spec, small_panel())
        single = run_simulation(small_panel(), 2015, spec.scenario, BASE)
        (cell,) = result.cells
        (rec,) = cell.runs
        assert rec.alpha == BASE.alpha
        assert rec.psi == BASE.psi
        assert rec.fire_sale_haircut == BASE.fire_sale_haircut
        assert rec.shock_pct == BASE.shock_pct
        assert rec.deposit_loss_pct == single.deposit_loss_pct
        assert rec.capital_remaining_pct == single.capital_remaining_pct
        assert rec.failure_rate == single.failure_rate
        assert rec.steps_run == single.steps_run
        assert cell.deposit_loss.q50 == single.deposit_loss_pct

    def test_same_seed_identical(self):
        spec = spec_for(n_runs=5)
        panel = small_panel()
        assert run_ensemble(spec, panel) == run_ensemble(spec, panel)

    def test_different_seed_differs(self):
        panel = small_panel()
        a = run_ensemble(spec_for(n_runs=5, master_seed=1), panel)
        b = run_ensemble(spec_for(n_runs=5, master_seed=2), panel)
        pa = [(r.alpha, r.psi) for r in a.cells[0].runs]
        pb = [(r.alpha, r.psi) for r in b.cells[0].runs]
        assert pa != pb

    def test_run_prefix_independent_of_n_runs(self):
        panel = small_panel()
        short = run_ensemble(spec_for(n_runs=3), panel)
        long = run_ensemble(spec_for(n_runs=7), panel)
        assert long.cells[0].runs[:3] == short.cells[0].runs

    def test_worker_count_invariance(self):
        spec = spec_for(n_runs=6)
        panel = small_panel()
        seq = run_ensemble(spec, panel, n_workers=1)
        par3 = run_ensemble(spec, panel, n_workers=3)
        par6 = run_ensemble(spec, panel, n_workers=6)
        assert seq == par3 == par6

    def test_bad_worker_count(self):
        with pytest.raises(InvalidInput):
            run_ensemble(spec_for(), small_panel(), n_workers=0)

    def test_draws_respect_bounds(self):
        base = AbmParams(alpha=0.95, psi=0.2, fire_sale_haircut=0.4,
                         shock_pct=0.98, horizon=5)
        spec = spec_for(base_params=base, n_runs=40,
                        perturbation=Perturbation(0.1, 0.1, 0.1, 0.1))
        result = run_ensemble(spec, small_panel())
        for r in result.cells[0].runs:
            assert base.alpha * 0.9 - 1e-12 <= r.alpha <= 1.0
            assert base.psi * 0.9 - 1e-12 <= r.psi <= base.psi * 1.1 + 1e-12
            assert (base.fire_sale_haircut * 0.9 - 1e-12
                    <= r.fire_sale_haircut
                    <= base.fire_sale_haircut * 1.1 + 1e-12)
            assert base.shock_pct * 0.9 - 1e-12 <= r.shock_pct <= 1.0
        alphas = {r.alpha for r in result.cells[0].runs}
        assert len(alphas) > 1

    def test_zero_widths_pin_parameters_but_runs_still_seeded(self):
        spec = spec_for(n_runs=5,
                        perturbation=Perturbation(0.0, 0.0, 0.0, 0.0))
        result = run_ensemble(spec, small_panel())
        outcomes = {(r.deposit_loss_pct, r.capital_remaining_pct)
                    for r in result.cells[0].runs}
        assert len(outcomes) == 1
        seeds = {r.seed for r in result.cells[0].runs}
        assert len(seeds) == 5

    def test_override_folded_into_perturbed_shock(self):
        scen = ShockScenario(ScenarioKind.TOP_ASSETS, 2015, k=2,
                             shock_pct_override=0.9)
        spec = spec_for(scenario=scen, n_runs=3,
                        perturbation=Perturbation(0.0, 0.0, 0.0, 0.0))
        result = run_ensemble(spec, small_panel())
        direct = run_simulation(small_panel(), 2015, scen, BASE)
        for r in result.cells[0].runs:
            assert r.shock_pct == 0.9
            assert r.deposit_loss_pct == direct.deposit_loss_pct

    def test_system_wide_cells(self):
        result = run_ensemble(spec_for(), small_panel())
        assert [(c.country, c.year) for c in result.cells] == [
            (SYSTEM_WIDE, 2015)]

    def test_geopolitical_expands_to_all_countries(self):
        scen = ShockScenario(ScenarioKind.GEOPOLITICAL, 2015, country=None)
        spec = spec_for(panel_years=(2015, 2016), scenario=scen, n_runs=2)
        result = run_ensemble(spec, small_panel(years=(2015, 2016)))
        assert [(c.country, c.year) for c in result.cells] == [
            ("China", 2015), ("China", 2016),
            ("India", 2015), ("India", 2016)]

    def test_geopolitical_explicit_country(self):
        scen = ShockScenario(ScenarioKind.GEOPOLITICAL, 2015,
                             country="India")
        result = run_ensemble(spec_for(scenario=scen, n_runs=2),
                              small_panel())
        assert [(c.country, c.year) for c in result.cells] == [
            ("India", 2015)]

    def test_missing_year_rejected(self):
        with pytest.raises(InvalidInput):
            run_ensemble(spec_for(panel_years=(2019,)), small_panel())

    def test_records_carry_band_of_their_outcome(self):
        result = run_ensemble(spec_for(n_runs=6), small_panel())
        for r in result.cells[0].runs:
            assert r.band is classify_risk(r.capital_remaining_pct)

    @given(seed=st.integers(0, 2 ** 64 - 1))
    @settings(max_examples=15, deadline=None)
    def test_probabilities_always_simplex(self, seed):
        spec = spec_for(n_runs=3, master_seed=seed)
        rows = classification_table(run_ensemble(spec, small_panel()))
        for row in rows:
            total = row.p_low + row.p_medium + row.p_high + row.p_critical
            assert total == pytest.approx(1.0, abs=1e-12)


def record(i, capital, **kw):
    fields = dict(run_index=i, seed=i, alpha=0.5, psi=0.1,
                  fire_sale_haircut=0.3, shock_pct=0.5,
                  deposit_loss_pct=1.0 - capital,
                  capital_remaining_pct=capital, failure_rate=0.0,
                  steps_run=1, band=classify_risk(capital))
    fields.update(kw)
    return EnsembleRunRecord(**fields)


def cell_of(capitals, country="ALL", year=2015):
    runs = tuple(record(i, c) for i, c in enumerate(capitals))
    vals = [r.capital_remaining_pct for r in runs]
    return EnsembleCell(country=country, year=year, runs=runs,
                        deposit_loss=Quantiles.from_values(
                            [r.deposit_loss_pct for r in runs]),
                        capital_remaining=Quantiles.from_values(vals))


def result_of(cells):
    return EnsembleResult(spec=spec_for(), cells=tuple(cells))


class TestClassificationTable:
    def test_counting_oracle(self):
        # 6 runs at 0.85 (Low) and 2 at 0.65 (Medium)
        (row,) = classification_table(
            result_of([cell_of([0.85] * 6 + [0.65] * 2)]))
        assert row.p_low == pytest.approx(0.75)
        assert row.p_medium == pytest.approx(0.25)
        assert row.p_high == 0.0
        assert row.p_critical == 0.0
        assert row.mean_capital_remaining == pytest.approx(0.8)

    def test_five_hundred_run_split(self):
        caps = [0.70] * 375 + [0.90] * 125
        (row,) = classification_table(result_of([cell_of(caps)]))
        assert row.p_medium == pytest.approx(0.75)
        assert row.p_low == pytest.approx(0.25)

    def test_single_band_degenerate(self):
        (row,) = classification_table(result_of([cell_of([0.1, 0.2, 0.05])]))
        assert row.p_critical == 1.0
        assert row.p_low == row.p_medium == row.p_high == 0.0

    def test_row_order_mirrors_cells(self):
        rows = classification_table(result_of([
            cell_of([0.9], country="Brazil", year=2018),
            cell_of([0.9], country="Brazil", year=2019),
            cell_of([0.5], country="Russia", year=2018),
        ]))
        assert [(r.country, r.year) for r in rows] == [
            ("Brazil", 2018), ("Brazil", 2019), ("Russia", 2018)]

    def test_probability_accessor(self):
        (row,) = classification_table(result_of([cell_of([0.85, 0.65])]))
        assert row.probability(RiskBand.LOW) == 0.5
        assert row.probability(RiskBand.MEDIUM) == 0.5
        assert row.probability(RiskBand.CRITICAL) == 0.0

    def test_empty_ensemble_rejected(self):
        with pytest.raises(InvalidInput):
            classification_table(result_of([]))

    def test_empty_cell_rejected(self):
        empty = EnsembleCell(country="ALL", year=2015, runs=(),
                             deposit_loss=Quantiles.from_values([0.0]),
                             capital_remaining=Quantiles.from_values([0.0]))
        with pytest.raises(InvalidInput):
            classification_table(result_of([empty]))


class TestRiskClassificationInvariants:
    def test_simplex_enforced(self):
        with pytest.raises(InvariantViolation):
            RiskClassification(country="X", year=2015, p_low=0.5,
                               p_medium=0.5, p_high=0.1, p_critical=0.0,
                               mean_capital_remaining=0.5)

    def test_range_enforced(self):
        with pytest.raises(InvariantViolation):
            RiskClassification(country="X", year=2015, p_low=1.5,
                               p_medium=-0.5, p_high=0.0, p_critical=0.0,
                               mean_capital_remaining=0.5)

    def test_valid_row(self):
        row = RiskClassification(country="X", year=2015, p_low=0.25,
                                 p_medium=0.75, p_high=0.0, p_critical=0.0,
                                 mean_capital_remaining=0.81)
        assert row.probability(RiskBand.MEDIUM) == 0.75
