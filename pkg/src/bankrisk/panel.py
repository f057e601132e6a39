"""Annual bank balance-sheet panels: loading, validation, synthesis, slicing.

The panel is the single source of truth for every downstream stage. CSV is
the canonical interchange format; the default header mapping accepts both
the snake_case canonical names and the vendor-style column titles they were
derived from ("Total Customer Deposits", "Ranking Year", ...). Monetary
fields are millions of USD, ratio fields are percentages as reported.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field, fields as dc_fields
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    DuplicateKey,
    EmptySlice,
    InvalidInput,
    InvalidSpec,
    InvariantViolation,
    MissingColumn,
    ParseError,
)

log = logging.getLogger(__name__)

BRICS_COUNTRIES = ("Brazil", "China", "India", "Russia", "SouthAfrica")

YEAR_MIN = 1990
YEAR_MAX = 2100

# Column order of the canonical CSV schema. Kinds: s = string, i = integer,
# f = nullable float (currency or percentage, both plain floats).
_FIELD_KINDS = (
    ("bank_id", "s"),
    ("bank_name", "s"),
    ("country", "s"),
    ("year", "i"),
    ("total_assets", "f"),
    ("total_liabilities", "f"),
    ("total_equity", "f"),
    ("total_customer_deposits", "f"),
    ("gross_loans", "f"),
    ("impaired_loans", "f"),
    ("net_income", "f"),
    ("net_interest_income", "f"),
    ("tier1_capital", "f"),
    ("core_tier1_ratio", "f"),
    ("tier1_ratio", "f"),
    ("total_regulatory_capital_ratio", "f"),
    ("loan_loss_provisions", "f"),
    ("average_assets", "f"),
    ("fitch_core_capital", "f"),
    ("total_subordinated_debt", "f"),
    ("net_int_rev_avg_assets", "f"),
    ("net_income_avg_assets", "f"),
    ("rwa_floor_cap", "f"),
    ("rwa_credit_risk", "f"),
    ("rwa_market_risk", "f"),
    ("rwa_operational_risk", "f"),
)

CSV_COLUMNS = tuple(name for name, _ in _FIELD_KINDS)

# Columns that must be mappable in any input file.
MANDATORY_COLUMNS = (
    "bank_id",
    "country",
    "year",
    "total_assets",
    "total_liabilities",
    "total_equity",
    "total_customer_deposits",
    "gross_loans",
)

# Cells that must be non-empty in every row (equity may be negative but it
# must be present; deposits and loans may be missing on a per-row basis).
_REQUIRED_CELLS = ("bank_id", "country", "year", "total_assets",
                   "total_liabilities", "total_equity")


def _norm(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower())


# Vendor-style column titles mapped onto canonical fields, matched after
# lower-casing and stripping punctuation so spacing variants still resolve.
_ALIASES = {
    "name": "bank_name",
    "countryname": "country",
    "rankingyear": "year",
    "coretier1regulatorycapitalratio": "core_tier1_ratio",
    "tier1regulatorycapitalratio": "tier1_ratio",
    "totalsubordinateddebtonbalancesheet": "total_subordinated_debt",
    "netincomeaveragetotalassets": "net_income_avg_assets",
    "riskweightedassetsincludingfloorcapperbaselii": "rwa_floor_cap",
    "riskweightedassetscreditrisk": "rwa_credit_risk",
    "riskweightedassetsmarketrisk": "rwa_market_risk",
    "riskweightedassetsoperationalmarketrisk": "rwa_operational_risk",
}
_ALIASES.update({_norm(name): name for name, _ in _FIELD_KINDS})

_COUNTRY_CANON = {_norm(c): c for c in BRICS_COUNTRIES}


def normalize_country(raw: str) -> str:
    """Map spelling variants of the five core countries onto canonical names;
    any other non-empty string passes through verbatim."""
    return _COUNTRY_CANON.get(_norm(raw), raw.strip())


@dataclass(frozen=True)
class BankYearRecord:
    bank_id: str
    country: str
    year: int
    total_assets: float
    total_liabilities: float
    total_equity: float
    bank_name: Optional[str] = None
    total_customer_deposits: Optional[float] = None
    gross_loans: Optional[float] = None
    impaired_loans: Optional[float] = None
    net_income: Optional[float] = None
    net_interest_income: Optional[float] = None
    tier1_capital: Optional[float] = None
    core_tier1_ratio: Optional[float] = None
    tier1_ratio: Optional[float] = None
    total_regulatory_capital_ratio: Optional[float] = None
    loan_loss_provisions: Optional[float] = None
    average_assets: Optional[float] = None
    fitch_core_capital: Optional[float] = None
    total_subordinated_debt: Optional[float] = None
    net_int_rev_avg_assets: Optional[float] = None
    net_income_avg_assets: Optional[float] = None
    rwa_floor_cap: Optional[float] = None
    rwa_credit_risk: Optional[float] = None
    rwa_market_risk: Optional[float] = None
    rwa_operational_risk: Optional[float] = None

    def __post_init__(self):
        if not self.bank_id:
            raise InvariantViolation("empty bank_id")
        if not (YEAR_MIN <= self.year <= YEAR_MAX):
            raise InvariantViolation(
                f"year {self.year} outside [{YEAR_MIN}, {YEAR_MAX}]")
        for f in dc_fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise InvariantViolation(f"non-finite value in {f.name}")
        for name in ("total_assets", "total_liabilities", "gross_loans",
                     "impaired_loans"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise InvariantViolation(f"{name} negative: {v}")
        if (self.impaired_loans is not None and self.gross_loans is not None
                and self.impaired_loans > self.gross_loans):
            raise InvariantViolation(
                f"impaired_loans {self.impaired_loans} exceeds gross_loans "
                f"{self.gross_loans}")

    # Risk-ratio views. Each returns None when an input is missing or a
    # denominator is zero; consumers treat None as "not observed".

    @property
    def npl_ratio(self) -> Optional[float]:
        if self.impaired_loans is None or not self.gross_loans:
            return None
        return self.impaired_loans / self.gross_loans

    @property
    def cet1_ratio(self) -> Optional[float]:
        return self.core_tier1_ratio

    @property
    def roa(self) -> Optional[float]:
        denom = self.average_assets
        if denom is None:
            denom = self.total_assets
        if self.net_income is None or not denom:
            return None
        return self.net_income / denom

    @property
    def leverage(self) -> Optional[float]:
        if self.total_liabilities is None or not self.total_equity:
            return None
        return self.total_liabilities / self.total_equity


INDEX_COMPONENTS = ("npl_ratio", "cet1_ratio", "roa", "leverage")


def has_index_component(rec: BankYearRecord) -> bool:
    return any(getattr(rec, c) is not None for c in INDEX_COMPONENTS)


@dataclass(frozen=True)
class BankPanel:
    records: tuple
    roster: tuple
    years: tuple

    @classmethod
    def from_records(cls, records: Iterable[BankYearRecord]) -> "BankPanel":
        recs = sorted(records, key=lambda r: (r.bank_id, r.year))
        seen = set()
        for r in recs:
            key = (r.bank_id, r.year)
            if key in seen:
                raise DuplicateKey(*key)
            seen.add(key)
        roster = tuple(sorted({r.bank_id for r in recs}))
        years = tuple(sorted({r.year for r in recs}))
        return cls(records=tuple(recs), roster=roster, years=years)

    def for_year(self, year: int) -> tuple:
        return tuple(r for r in self.records if r.year == year)

    def series(self, bank_id: str) -> tuple:
        """All records of one bank, ascending by year."""
        return tuple(r for r in self.records if r.bank_id == bank_id)

    def get(self, bank_id: str, year: int) -> Optional[BankYearRecord]:
        for r in self.records:
            if r.bank_id == bank_id and r.year == year:
                return r
        return None


def _parse_cell(raw: str, kind: str, row: int, column: str):
    text = raw.strip() if raw is not None else ""
    if text == "":
        return None
    try:
        if kind == "i":
            return int(text)
        if kind == "f":
            v = float(text)
            if not math.isfinite(v):
                raise ValueError("non-finite")
            return v
        return text
    except ValueError:
        raise ParseError(row, column, text) from None


def load_panel(path, schema: Optional[Mapping[str, str]] = None) -> BankPanel:
    """Read a CSV panel.

    `schema` maps canonical field names to the file's column titles and
    overrides the built-in alias table. When no bank_id column resolves,
    bank_name stands in as the identifier.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn("bank_id") from None
        rows = list(reader)

    by_norm = {}
    for idx, title in enumerate(header):
        canon = _ALIASES.get(_norm(title))
        if canon is not None and canon not in by_norm:
            by_norm[canon] = idx
    if schema:
        title_index = {t.strip(): i for i, t in enumerate(header)}
        for canon, title in schema.items():
            if canon not in CSV_COLUMNS:
                raise InvalidSpec(f"unknown field in schema mapping: {canon!r}")
            if title.strip() not in title_index:
                raise MissingColumn(title)
            by_norm[canon] = title_index[title.strip()]

    if "bank_id" not in by_norm and "bank_name" in by_norm:
        by_norm["bank_id"] = by_norm["bank_name"]
    for col in MANDATORY_COLUMNS:
        if col not in by_norm:
            raise MissingColumn(col)

    kinds = dict(_FIELD_KINDS)
    records = []
    for rownum, row in enumerate(rows, start=1):
        values = {}
        for name, idx in by_norm.items():
            raw = row[idx] if idx < len(row) else ""
            values[name] = _parse_cell(raw, kinds[name], rownum, name)
        for name in _REQUIRED_CELLS:
            if values.get(name) is None:
                raise ParseError(rownum, name, "")
        values["country"] = normalize_country(values["country"])
        try:
            records.append(BankYearRecord(**values))
        except InvariantViolation as exc:
            raise InvariantViolation(f"row {rownum}: {exc}") from None
    return BankPanel.from_records(records)


def save_panel(panel: BankPanel, path) -> None:
    """Write the canonical CSV form. Floats are serialized with repr so a
    load_panel round trip reproduces every value exactly."""
    kinds = dict(_FIELD_KINDS)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in panel.records:
            out = []
            for name in CSV_COLUMNS:
                v = getattr(rec, name)
                if v is None:
                    out.append("")
                elif kinds[name] == "f":
                    out.append(repr(float(v)))
                else:
                    out.append(str(v))
            writer.writerow(out)


_COUNTRY_CODES = {"Brazil": "BR", "China": "CN", "India": "IN",
                  "Russia": "RU", "SouthAfrica": "ZA"}


@dataclass(frozen=True)
class SyntheticPanelSpec:
    n_banks: int = 60
    year_start: int = 2008
    year_end: int = 2024
    country_mix: Mapping[str, float] = field(
        default_factory=lambda: {c: 0.2 for c in BRICS_COUNTRIES})
    size_mu: float = 9.0
    size_sigma: float = 1.6
    shock_years: tuple = ()
    seed: int = 0

    def validate(self) -> None:
        if self.n_banks < 2:
            raise InvalidSpec("n_banks must be at least 2")
        if self.year_end < self.year_start:
            raise InvalidSpec("year_end precedes year_start")
        if not (YEAR_MIN <= self.year_start and self.year_end <= YEAR_MAX):
            raise InvalidSpec("years outside supported range")
        if self.size_sigma <= 0:
            raise InvalidSpec("size_sigma must be positive")
        if not self.country_mix:
            raise InvalidSpec("country_mix is empty")
        total = 0.0
        for c, p in self.country_mix.items():
            if p < 0:
                raise InvalidSpec(f"negative proportion for {c}")
            total += p
        if abs(total - 1.0) > 1e-9:
            raise InvalidSpec(f"country proportions sum to {total}, not 1")


def _country_counts(spec: SyntheticPanelSpec) -> list:
    """Largest-remainder apportionment of n_banks across the mix."""
    items = sorted(spec.country_mix.items())
    quotas = [(c, spec.n_banks * p) for c, p in items]
    counts = {c: int(q) for c, q in quotas}
    short = spec.n_banks - sum(counts.values())
    remainders = sorted(quotas, key=lambda cq: (cq[1] - int(cq[1]), cq[0]),
                        reverse=True)
    for c, _ in remainders[:short]:
        counts[c] += 1
    return [(c, n) for c, n in sorted(counts.items()) if n > 0]


def generate_synthetic_panel(spec: SyntheticPanelSpec) -> BankPanel:
    """Deterministic synthetic panel.

    The balance identity assets = liabilities + equity holds exactly in
    floating point: liabilities are assets*(1 - e) with e < 0.5, so equity
    computed as assets - liabilities is exact by Sterbenz's lemma and the
    three values recombine without rounding.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    years = range(spec.year_start, spec.year_end + 1)
    shock_years = set(spec.shock_years)

    records = []
    serial = 0
    for country, n in _country_counts(spec):
        code = _COUNTRY_CODES.get(country, "XX")
        for _ in range(n):
            serial += 1
            bank_id = f"{code}{serial:03d}"
            base_assets = float(rng.lognormal(spec.size_mu, spec.size_sigma))
            growth = float(rng.normal(0.05, 0.03))
            base_equity_ratio = float(np.clip(rng.normal(0.10, 0.03),
                                              0.04, 0.30))
            base_npl = float(rng.uniform(0.01, 0.06))
            deposit_share = float(rng.uniform(0.55, 0.90))
            loan_share = float(rng.uniform(0.45, 0.70))

            prev_assets = None
            for t, year in enumerate(years):
                wiggle = float(rng.normal(0.0, 0.05))
                assets = base_assets * (1.0 + growth) ** t * math.exp(wiggle)
                e = float(np.clip(base_equity_ratio + rng.normal(0.0, 0.01),
                                  0.03, 0.45))
                liabilities = assets * (1.0 - e)
                equity = assets - liabilities
                deposits = liabilities * deposit_share
                gross = assets * loan_share
                npl = float(np.clip(base_npl + rng.normal(0.0, 0.01),
                                    0.0, 0.25))
                if year in shock_years:
                    npl = min(0.60, npl * float(rng.uniform(2.0, 4.0)))
                impaired = gross * npl
                roa = float(rng.normal(0.010, 0.006))
                net_income = assets * roa
                nii = assets * float(rng.uniform(0.015, 0.030))
                cet1 = float(np.clip(rng.normal(12.0, 2.0), 5.0, 25.0))
                tier1 = cet1 + float(rng.uniform(0.5, 2.0))
                total_reg = tier1 + float(rng.uniform(1.0, 3.0))
                avg_assets = (assets if prev_assets is None
                              else 0.5 * (assets + prev_assets))
                records.append(BankYearRecord(
                    bank_id=bank_id,
                    bank_name=f"Synthetic Bank {bank_id}",
                    country=country,
                    year=year,
                    total_assets=assets,
                    total_liabilities=liabilities,
                    total_equity=equity,
                    total_customer_deposits=deposits,
                    gross_loans=gross,
                    impaired_loans=impaired,
                    net_income=net_income,
                    net_interest_income=nii,
                    tier1_capital=equity * float(rng.uniform(0.85, 1.0)),
                    core_tier1_ratio=cet1,
                    tier1_ratio=tier1,
                    total_regulatory_capital_ratio=total_reg,
                    loan_loss_provisions=impaired * float(rng.uniform(0.2,
                                                                      0.6)),
                    average_assets=avg_assets,
                ))
                prev_assets = assets
    return BankPanel.from_records(records)


def panel_slice(panel: BankPanel, year: int, window: int) -> BankPanel:
    """Trailing window [year - window + 1, year], truncated at panel start.

    The roster keeps banks with at least two in-window years offering a
    computable composite-index component; the rest are dropped and logged.
    """
    if window < 2:
        raise InvalidInput(f"window must be >= 2, got {window}")
    if year not in panel.years:
        raise InvalidInput(f"year {year} not in panel")
    lo = year - window + 1
    in_window = [r for r in panel.records if lo <= r.year <= year]
    counts = {}
    for r in in_window:
        if has_index_component(r):
            counts[r.bank_id] = counts.get(r.bank_id, 0) + 1
    kept = {b for b, n in counts.items() if n >= 2}
    dropped = sorted({r.bank_id for r in in_window} - kept)
    if dropped:
        log.info("panel_slice(year=%d, window=%d): dropped %d bank(s): %s",
                 year, window, len(dropped), ", ".join(dropped))
    if not kept:
        raise EmptySlice(
            f"no bank has 2+ usable observations in [{lo}, {year}]")
    return BankPanel.from_records(
        [r for r in in_window if r.bank_id in kept])
