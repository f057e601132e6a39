"""First-order risk measures over a bank panel.

Capital shortfall (full formula and its balance-sheet-only variant, both
clamped at zero), per-bank risk ratios, asset-tier classification, the
composite risk index that feeds the similarity network, rolling
profitability correlation, and country-level shortfall aggregates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateYear, InvalidInput
from .panel import BankPanel

DEFAULT_K = 0.08

MEGA_FLOOR = 50_000.0      # millions USD
REGULAR_CEILING = 10_000.0


class AssetTier(enum.Enum):
    MEGA = "Mega"
    LARGE = "Large"
    REGULAR = "Regular"


@dataclass(frozen=True)
class SriskInputs:
    k: float
    liabilities: float
    market_equity: float
    lrmes: float

    def validate(self) -> None:
        if not (0.0 < self.k < 1.0):
            raise InvalidInput(f"k must lie in (0, 1), got {self.k}")
        if self.liabilities < 0:
            raise InvalidInput("liabilities must be non-negative")
        if self.market_equity < 0:
            raise InvalidInput("market_equity must be non-negative")
        if not (0.0 <= self.lrmes <= 1.0):
            raise InvalidInput(f"lrmes must lie in [0, 1], got {self.lrmes}")


def srisk_full(inputs: SriskInputs) -> float:
    """Expected capital shortfall under a market decline, clamped at zero.

    k*D - (1-k)*W*(1-LRMES) with caller-supplied LRMES; no market-data
    estimation happens here.
    """
    inputs.validate()
    raw = (inputs.k * inputs.liabilities
           - (1.0 - inputs.k) * inputs.market_equity * (1.0 - inputs.lrmes))
    return max(0.0, raw)


def srisk_cs(liabilities: float, equity: float, k: float = DEFAULT_K) -> float:
    """Balance-sheet capital shortfall max(0, k*L - (1-k)*E).

    Equity may be negative (distressed banks); liabilities may not.
    """
    if not (0.0 < k < 1.0):
        raise InvalidInput(f"k must lie in (0, 1), got {k}")
    if liabilities < 0:
        raise InvalidInput("liabilities must be non-negative")
    if not (math.isfinite(liabilities) and math.isfinite(equity)):
        raise InvalidInput("non-finite shortfall inputs")
    return max(0.0, k * liabilities - (1.0 - k) * equity)


def classify_tier(total_assets: float) -> AssetTier:
    """Mega at or above $50B, Regular at or below $10B, Large between."""
    if total_assets < 0:
        raise InvalidInput("total_assets must be non-negative")
    if total_assets >= MEGA_FLOOR:
        return AssetTier.MEGA
    if total_assets <= REGULAR_CEILING:
        return AssetTier.REGULAR
    return AssetTier.LARGE


@dataclass(frozen=True)
class RiskRatioRow:
    bank_id: str
    country: str
    year: int
    npl_ratio: Optional[float]
    cet1_ratio: Optional[float]
    roa: Optional[float]
    leverage: Optional[float]
    srisk_cs: float


def risk_ratios(panel: BankPanel, k: float = DEFAULT_K) -> List[RiskRatioRow]:
    """One row per (bank, year); ratios are None when an input is missing or
    a denominator is zero. The shortfall is always computed because the
    liabilities and equity fields are mandatory."""
    rows = []
    for rec in panel.records:
        rows.append(RiskRatioRow(
            bank_id=rec.bank_id,
            country=rec.country,
            year=rec.year,
            npl_ratio=rec.npl_ratio,
            cet1_ratio=rec.cet1_ratio,
            roa=rec.roa,
            leverage=rec.leverage,
            srisk_cs=srisk_cs(rec.total_liabilities, rec.total_equity, k),
        ))
    return rows


# Composite risk index. Sign +1 means higher raw values mean more risk.
SIGN_VALUES = {"+": 1.0, "-": -1.0}

DEFAULT_COMPONENTS = (("npl_ratio", "+"), ("cet1_ratio", "-"),
                      ("roa", "-"), ("leverage", "+"))


@dataclass(frozen=True)
class CompositeIndexSpec:
    components: Tuple[Tuple[str, str], ...] = DEFAULT_COMPONENTS

    def validate(self) -> None:
        if not self.components:
            raise InvalidInput("composite index needs at least one component")
        for name, sign in self.components:
            if sign not in SIGN_VALUES:
                raise InvalidInput(f"sign for {name!r} must be '+' or '-'")


def composite_index(panel: BankPanel,
                    spec: CompositeIndexSpec = CompositeIndexSpec(),
                    ) -> Dict[str, Tuple[Tuple[int, Optional[float]], ...]]:
    """Per-bank risk index series.

    For each (bank, year): the signed mean of the bank's available
    components after cross-sectional z-scoring within the year (population
    standard deviation). A zero-variance component contributes 0 but still
    counts as available; the index is None only when every component is
    missing for that bank-year.
    """
    spec.validate()
    zscores: dict = {}
    for year in panel.years:
        recs = panel.for_year(year)
        if len(recs) < 2:
            raise DegenerateYear(
                f"year {year} has {len(recs)} bank(s); need at least 2")
        for name, _ in spec.components:
            vals = [(r.bank_id, getattr(r, name)) for r in recs]
            present = np.array([v for _, v in vals if v is not None])
            if present.size == 0:
                continue
            mean = float(present.mean())
            std = float(present.std())
            for bank_id, v in vals:
                if v is None:
                    continue
                z = (v - mean) / std if std > 0 else 0.0
                zscores[(bank_id, year, name)] = z

    out = {}
    for bank_id in panel.roster:
        series = []
        for rec in panel.series(bank_id):
            terms = []
            for name, sign in spec.components:
                z = zscores.get((bank_id, rec.year, name))
                if z is not None:
                    terms.append(SIGN_VALUES[sign] * z)
            value = sum(terms) / len(terms) if terms else None
            series.append((rec.year, value))
        out[bank_id] = tuple(series)
    return out


def rolling_profit_correlation(panel: BankPanel, window: int,
                               ) -> Dict[int, Optional[float]]:
    """Average pairwise Pearson correlation of ROA over the trailing window.

    A pair is eligible for a year only when both banks report ROA in every
    year of the window and neither series is constant; years with no
    eligible pair map to None.
    """
    if window < 3:
        raise InvalidInput(f"window must be >= 3, got {window}")
    roa = {(r.bank_id, r.year): r.roa for r in panel.records}
    out: Dict[int, Optional[float]] = {}
    for year in panel.years:
        span = range(year - window + 1, year + 1)
        series = {}
        for bank_id in panel.roster:
            vals = [roa.get((bank_id, y)) for y in span]
            if all(v is not None for v in vals):
                arr = np.array(vals)
                if arr.std() > 0:
                    series[bank_id] = arr
        banks = sorted(series)
        corrs = []
        for i, a in enumerate(banks):
            for b in banks[i + 1:]:
                corrs.append(float(np.corrcoef(series[a], series[b])[0, 1]))
        out[year] = sum(corrs) / len(corrs) if corrs else None
    return out


def country_aggregate_srisk(rows: Sequence[RiskRatioRow],
                            ) -> Dict[Tuple[str, int], float]:
    """Sum of clamped per-bank shortfalls grouped by (country, year)."""
    if not rows:
        raise InvalidInput("no rows to aggregate")
    agg: Dict[Tuple[str, int], float] = {}
    for row in rows:
        key = (row.country, row.year)
        agg[key] = agg.get(key, 0.0) + row.srisk_cs
    return agg
