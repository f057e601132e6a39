"""Monte Carlo ensembles over the bank-run simulator.

A single simulation answers "what happens under these exact behavioral
parameters". The ensemble layer repeats the scenario many times, jittering
the behavioral parameters a little on each run, and turns the resulting
outcome distribution into band probabilities: the share of runs whose
remaining capital lands in each risk band. One ensemble cell is one
(country, year) pair; scenarios without a country dimension get a single
system-wide cell per year.

Reproducibility contract: run i of a cell depends only on the master seed
and the cell coordinates, never on how many other runs exist or on how the
runs are scheduled. Per-run seeds come from a keyed-less BLAKE2b hash of
the decimal rendering of (master_seed, country, year, run_index), and each
run consumes exactly four uniform draws in a fixed order, so results are
byte-stable across processes, platforms, and worker counts.
"""

from __future__ import annotations

import enum
import hashlib
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .abm import (
    AbmParams,
    ScenarioKind,
    ShockScenario,
    run_simulation,
)
from .errors import InvalidInput, InvariantViolation
from .metrics import RiskRatioRow
from .panel import BankPanel
from .tgnn import AnomalyReport

# Cell label for scenarios that shock a bank set rather than a country.
SYSTEM_WIDE = "ALL"

# Largest double strictly below 1.0, the upper clamp for the fire-sale
# haircut whose valid range is half-open.
_HAIRCUT_MAX = math.nextafter(1.0, 0.0)


class RiskBand(enum.Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"
    CRITICAL = "Critical"

    @property
    def severity(self) -> int:
        """0 for Low up to 3 for Critical; higher is worse."""
        return _SEVERITY[self]


_SEVERITY = {RiskBand.LOW: 0, RiskBand.MEDIUM: 1,
             RiskBand.HIGH: 2, RiskBand.CRITICAL: 3}

# Ordered least to most severe, the fixed column order of reports.
RISK_BANDS: Tuple[RiskBand, ...] = (RiskBand.LOW, RiskBand.MEDIUM,
                                    RiskBand.HIGH, RiskBand.CRITICAL)


@dataclass(frozen=True)
class RiskThresholds:
    """Inclusive lower bounds of the Low, Medium, and High bands; anything
    below the High floor is Critical."""
    low: float = 0.80
    medium: float = 0.60
    high: float = 0.30

    def validate(self) -> None:
        if not 1.0 >= self.low > self.medium > self.high > 0.0:
            raise InvalidInput(
                f"thresholds must satisfy 1 >= low > medium > high > 0, "
                f"got ({self.low}, {self.medium}, {self.high})")


DEFAULT_THRESHOLDS = RiskThresholds()


def classify_risk(mean_capital_remaining: float,
                  thresholds: RiskThresholds = DEFAULT_THRESHOLDS,
                  ) -> RiskBand:
    """Band for a capital-remaining fraction.

    With the default thresholds: Low at 0.80 and above, Medium from 0.60,
    High from 0.30, Critical below that. Lower bounds are inclusive, so
    0.80 reads Low.
    """
    thresholds.validate()
    x = mean_capital_remaining
    if not isinstance(x, (int, float)) or isinstance(x, bool):
        raise InvalidInput(f"capital fraction must be a number, got {x!r}")
    if math.isnan(x) or not 0.0 <= x <= 1.0:
        raise InvalidInput(f"capital fraction must be in [0, 1], got {x}")
    if x >= thresholds.low:
        return RiskBand.LOW
    if x >= thresholds.medium:
        return RiskBand.MEDIUM
    if x >= thresholds.high:
        return RiskBand.HIGH
    return RiskBand.CRITICAL


@dataclass(frozen=True)
class Perturbation:
    """Relative half-widths for the per-run parameter jitter.

    Each run draws each parameter uniformly in [p*(1-h), p*(1+h)] and
    clamps the draw to the parameter's valid range. Draw order is fixed:
    alpha, psi, fire_sale_haircut, shock_pct. A half-width of zero pins
    that parameter to its base value while still consuming its draw, so
    narrowing one width never shifts another parameter's stream.
    """
    alpha: float = 0.10
    psi: float = 0.10
    fire_sale_haircut: float = 0.10
    shock_pct: float = 0.10

    def validate(self) -> None:
        for name in ("alpha", "psi", "fire_sale_haircut", "shock_pct"):
            h = getattr(self, name)
            if not 0.0 <= h < 1.0:
                raise InvalidInput(
                    f"half-width {name} must be in [0, 1), got {h}")

    def is_zero(self) -> bool:
        return (self.alpha == 0.0 and self.psi == 0.0
                and self.fire_sale_haircut == 0.0 and self.shock_pct == 0.0)


@dataclass(frozen=True)
class EnsembleSpec:
    """What to repeat, how often, and how to jitter it.

    years lists the panel years to simulate, one set of cells per year;
    the scenario's own year field is re-pointed to each. A Geopolitical
    scenario with country=None expands to one cell per country present in
    that panel year; with an explicit country it stays a single cell.
    """
    base_params: AbmParams
    scenario: ShockScenario
    years: Tuple[int, ...]
    n_runs: int = 500
    perturbation: Perturbation = Perturbation()
    master_seed: int = 0
    thresholds: RiskThresholds = DEFAULT_THRESHOLDS

    def validate(self) -> None:
        self.base_params.validate()
        self.perturbation.validate()
        self.thresholds.validate()
        if self.n_runs < 1:
            raise InvalidInput(f"n_runs must be >= 1, got {self.n_runs}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise InvalidInput(
                f"master_seed must fit in 64 bits, got {self.master_seed}")
        if not self.years:
            raise InvalidInput("years must be non-empty")
        if list(self.years) != sorted(set(self.years)):
            raise InvalidInput(
                f"years must be strictly ascending, got {self.years}")
        if self.scenario.kind is ScenarioKind.GEOPOLITICAL:
            # country=None is the expand-to-every-country mode, legal here
            # even though a single simulation would reject it.
            ov = self.scenario.shock_pct_override
            if ov is not None and not 0.0 <= ov <= 1.0:
                raise InvalidInput(
                    f"shock_pct override must be in [0, 1], got {ov}")
        else:
            self.scenario.validate()


@dataclass(frozen=True)
class EnsembleRunRecord:
    """One simulation's drawn parameters and headline outcomes."""
    run_index: int
    seed: int
    alpha: float
    psi: float
    fire_sale_haircut: float
    shock_pct: float
    deposit_loss_pct: float
    capital_remaining_pct: float
    failure_rate: float
    steps_run: int
    band: RiskBand


@dataclass(frozen=True)
class Quantiles:
    q05: float
    q25: float
    q50: float
    q75: float
    q95: float

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "Quantiles":
        if not values:
            raise InvalidInput("cannot summarize an empty sample")
        qs = np.quantile(np.asarray(values, dtype=float),
                         [0.05, 0.25, 0.50, 0.75, 0.95])
        return cls(*(float(q) for q in qs))


@dataclass(frozen=True)
class EnsembleCell:
    """All runs of one (country, year) coordinate plus their summaries."""
    country: str
    year: int
    runs: Tuple[EnsembleRunRecord, ...]
    deposit_loss: Quantiles
    capital_remaining: Quantiles

    @property
    def mean_capital_remaining(self) -> float:
        return statistics.fmean(r.capital_remaining_pct for r in self.runs)


@dataclass(frozen=True)
class EnsembleResult:
    spec: EnsembleSpec
    cells: Tuple[EnsembleCell, ...]


@dataclass(frozen=True)
class RiskClassification:
    """Band probabilities for one cell. Probabilities are run counts over
    n_runs, so they always form an exact simplex up to rounding."""
    country: str
    year: int
    p_low: float
    p_medium: float
    p_high: float
    p_critical: float
    mean_capital_remaining: float

    def __post_init__(self):
        total = self.p_low + self.p_medium + self.p_high + self.p_critical
        if abs(total - 1.0) > 1e-9:
            raise InvariantViolation(
                f"band probabilities sum to {total}, not 1")
        for name in ("p_low", "p_medium", "p_high", "p_critical",
                     "mean_capital_remaining"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvariantViolation(f"{name} outside [0, 1]: {v}")

    def probability(self, band: RiskBand) -> float:
        return {RiskBand.LOW: self.p_low, RiskBand.MEDIUM: self.p_medium,
                RiskBand.HIGH: self.p_high,
                RiskBand.CRITICAL: self.p_critical}[band]


def derive_run_seed(master_seed: int, country: str, year: int,
                    run_index: int) -> int:
    """Stable 64-bit seed for one run of one cell.

    BLAKE2b over the decimal rendering of the coordinates, independent of
    Python hash randomization and of every other run. The pipe-separated
    text form keeps distinct coordinates distinct (country names cannot
    contain the separator in panel data, and the numbers are unambiguous).
    """
    payload = f"{master_seed}|{country}|{year}|{run_index}".encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(),
                          "big")


def _draw_params(base: AbmParams, pert: Perturbation, eff_shock: float,
                 seed: int) -> AbmParams:
    """Jittered copy of base for one run. Exactly four uniforms, in the
    documented order, whatever the half-widths are."""
    rng = np.random.default_rng(seed)

    def draw(p: float, h: float) -> float:
        return float(rng.uniform(p * (1.0 - h), p * (1.0 + h)))

    alpha = min(1.0, max(0.0, draw(base.alpha, pert.alpha)))
    psi = max(0.0, draw(base.psi, pert.psi))
    haircut = min(_HAIRCUT_MAX,
                  max(0.0, draw(base.fire_sale_haircut,
                                pert.fire_sale_haircut)))
    shock = min(1.0, max(0.0, draw(eff_shock, pert.shock_pct)))
    return replace(base, alpha=alpha, psi=psi, fire_sale_haircut=haircut,
                   shock_pct=shock)


def _cell_coordinates(spec: EnsembleSpec,
                      panel: BankPanel) -> List[Tuple[str, int]]:
    """(country, year) pairs to simulate, sorted country-major."""
    coords: List[Tuple[str, int]] = []
    for year in spec.years:
        records = panel.for_year(year)
        if not records:
            raise InvalidInput(f"panel has no records for year {year}")
        if spec.scenario.kind is ScenarioKind.GEOPOLITICAL:
            if spec.scenario.country is None:
                coords.extend((c, year)
                              for c in sorted({r.country for r in records}))
            else:
                coords.append((spec.scenario.country, year))
        else:
            coords.append((SYSTEM_WIDE, year))
    return sorted(coords)


def _run_once(panel: BankPanel, year: int, scenario: ShockScenario,
              spec: EnsembleSpec, eff_shock: float, country: str,
              run_index: int,
              metrics: Optional[Sequence[RiskRatioRow]],
              anomaly_report: Optional[AnomalyReport]) -> EnsembleRunRecord:
    seed = derive_run_seed(spec.master_seed, country, year, run_index)
    params = _draw_params(spec.base_params, spec.perturbation, eff_shock,
                          seed)
    result = run_simulation(panel, year, scenario, params,
                            metrics=metrics, anomaly_report=anomaly_report)
    return EnsembleRunRecord(
        run_index=run_index,
        seed=seed,
        alpha=params.alpha,
        psi=params.psi,
        fire_sale_haircut=params.fire_sale_haircut,
        shock_pct=params.shock_pct,
        deposit_loss_pct=result.deposit_loss_pct,
        capital_remaining_pct=result.capital_remaining_pct,
        failure_rate=result.failure_rate,
        steps_run=result.steps_run,
        band=classify_risk(result.capital_remaining_pct, spec.thresholds),
    )


def run_ensemble(spec: EnsembleSpec, panel: BankPanel,
                 metrics: Optional[Sequence[RiskRatioRow]] = None,
                 anomaly_report: Optional[AnomalyReport] = None,
                 n_workers: int = 1) -> EnsembleResult:
    """Simulate every cell n_runs times with per-run parameter jitter.

    A scenario shock_pct override is folded into the jittered parameters
    (the override value is what gets perturbed) so a single code path
    drives every run. Runs are independent; with n_workers > 1 they are
    spread over a thread pool, and either way the reduction collects them
    in run-index order, so the result is identical for any worker count.
    """
    spec.validate()
    if n_workers < 1:
        raise InvalidInput(f"n_workers must be >= 1, got {n_workers}")
    eff_shock = (spec.scenario.shock_pct_override
                 if spec.scenario.shock_pct_override is not None
                 else spec.base_params.shock_pct)

    cells: List[EnsembleCell] = []
    executor = (ThreadPoolExecutor(max_workers=n_workers)
                if n_workers > 1 else None)
    try:
        for country, year in _cell_coordinates(spec, panel):
            scenario = replace(spec.scenario, year=year,
                               shock_pct_override=None)
            if spec.scenario.kind is ScenarioKind.GEOPOLITICAL:
                scenario = replace(scenario, country=country)

            def one(i: int, _y=year, _s=scenario, _c=country):
                return _run_once(panel, _y, _s, spec, eff_shock, _c, i,
                                 metrics, anomaly_report)

            if executor is None:
                runs = [one(i) for i in range(spec.n_runs)]
            else:
                runs = list(executor.map(one, range(spec.n_runs)))
            cells.append(EnsembleCell(
                country=country,
                year=year,
                runs=tuple(runs),
                deposit_loss=Quantiles.from_values(
                    [r.deposit_loss_pct for r in runs]),
                capital_remaining=Quantiles.from_values(
                    [r.capital_remaining_pct for r in runs]),
            ))
    finally:
        if executor is not None:
            executor.shutdown()
    return EnsembleResult(spec=spec, cells=tuple(cells))


def classification_table(
        ensemble: EnsembleResult) -> Tuple[RiskClassification, ...]:
    """One probability row per cell, in the result's cell order."""
    if not ensemble.cells:
        raise InvalidInput("ensemble has no cells")
    rows = []
    for cell in ensemble.cells:
        if not cell.runs:
            raise InvalidInput(
                f"cell ({cell.country}, {cell.year}) has no runs")
        n = len(cell.runs)
        counts = {band: 0 for band in RISK_BANDS}
        for r in cell.runs:
            counts[r.band] += 1
        rows.append(RiskClassification(
            country=cell.country,
            year=cell.year,
            p_low=counts[RiskBand.LOW] / n,
            p_medium=counts[RiskBand.MEDIUM] / n,
            p_high=counts[RiskBand.HIGH] / n,
            p_critical=counts[RiskBand.CRITICAL] / n,
            mean_capital_remaining=cell.mean_capital_remaining,
        ))
    return tuple(rows)
