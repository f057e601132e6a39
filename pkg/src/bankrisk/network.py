"""Dynamic bank-similarity networks from composite-index series.

Stage one of the pipeline: each year gets a dense weighted adjacency
matrix whose entries are exp(-gamma * DTW distance) between the banks'
trailing-window risk-index paths. Networks across a year range share one
roster so the temporal model can consume them as a sequence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .dtw import dtw_distance, median_gamma, similarity
from .errors import (
    AllZeroDistances,
    EmptyRoster,
    EmptySlice,
    InvalidInput,
    InvariantViolation,
    MissingAssets,
)
from .metrics import AssetTier, CompositeIndexSpec, classify_tier, composite_index
from .panel import BankPanel, has_index_component, panel_slice

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class RiskSeries:
    bank_id: str
    values: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        if len(self.values) < 2:
            raise InvariantViolation(
                f"risk series for {self.bank_id} has fewer than 2 points")
        years = [y for y, _ in self.values]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise InvariantViolation(
                f"risk series years not strictly increasing for {self.bank_id}")

    @property
    def path(self) -> Tuple[float, ...]:
        return tuple(v for _, v in self.values)


@dataclass(frozen=True, eq=False)
class YearNetwork:
    year: int
    roster: Tuple[str, ...]
    adjacency: np.ndarray
    gamma: float

    def __post_init__(self):
        adj = self.adjacency
        n = len(self.roster)
        if adj.shape != (n, n):
            raise InvariantViolation(
                f"adjacency shape {adj.shape} does not match roster size {n}")
        if n:
            if not np.all(np.isfinite(adj)):
                raise InvariantViolation("non-finite adjacency entries")
            if np.abs(adj - adj.T).max() > SYMMETRY_TOL:
                raise InvariantViolation("adjacency is not symmetric")
            if np.any(np.diag(adj) != 1.0):
                raise InvariantViolation("adjacency diagonal must be 1")
            if np.any(adj <= 0.0) or np.any(adj > 1.0):
                raise InvariantViolation("weights must lie in (0, 1]")
        adj.flags.writeable = False


@dataclass(frozen=True)
class DynamicNetwork:
    networks: Tuple[YearNetwork, ...]
    window: int

    def __post_init__(self):
        if not self.networks:
            raise InvariantViolation("dynamic network has no years")
        roster = self.networks[0].roster
        for net in self.networks:
            if net.roster != roster:
                raise InvariantViolation("networks do not share one roster")
        years = [net.year for net in self.networks]
        if years != list(range(years[0], years[0] + len(years))):
            raise InvariantViolation(f"years not contiguous: {years}")

    @property
    def roster(self) -> Tuple[str, ...]:
        return self.networks[0].roster

    @property
    def years(self) -> Tuple[int, ...]:
        return tuple(net.year for net in self.networks)


def _stable_subpanel(sliced: BankPanel) -> BankPanel:
    """Iteratively drop window years with fewer than 2 records and banks left
    with fewer than 2 index observations, until both rules hold. Years with a
    single reporter cannot be cross-sectionally standardized."""
    records = list(sliced.records)
    while True:
        year_counts: Dict[int, int] = {}
        for r in records:
            year_counts[r.year] = year_counts.get(r.year, 0) + 1
        kept_years = {y for y, n in year_counts.items() if n >= 2}
        trimmed = [r for r in records if r.year in kept_years]
        bank_counts: Dict[str, int] = {}
        for r in trimmed:
            if has_index_component(r):
                bank_counts[r.bank_id] = bank_counts.get(r.bank_id, 0) + 1
        kept_banks = {b for b, n in bank_counts.items() if n >= 2}
        next_records = [r for r in trimmed if r.bank_id in kept_banks]
        if len(next_records) == len(records):
            break
        records = next_records
    if not records:
        raise EmptySlice(
            "no year in the window retains 2 standardizable banks")
    return BankPanel.from_records(records)


def _series_for(panel: BankPanel, spec: CompositeIndexSpec,
                ) -> Dict[str, RiskSeries]:
    index = composite_index(panel, spec)
    out = {}
    for bank_id, pairs in index.items():
        points = tuple((y, v) for y, v in pairs if v is not None)
        out[bank_id] = RiskSeries(bank_id=bank_id, values=points)
    return out


def _network_from_series(year: int, series: Dict[str, RiskSeries],
                         gamma: Optional[float]) -> YearNetwork:
    roster = tuple(sorted(series))
    n = len(roster)
    dist = np.zeros((n, n))
    pair_distances = []
    for i in range(n):
        for j in range(i + 1, n):
            d = dtw_distance(series[roster[i]].path, series[roster[j]].path)
            dist[i, j] = dist[j, i] = d
            pair_distances.append(d)
    if gamma is None:
        try:
            gamma = median_gamma(pair_distances)
        except AllZeroDistances:
            # identical series everywhere: any bandwidth yields weight 1
            gamma = 1.0
            log.warning("year %d: all DTW distances zero, gamma set to 1.0",
                        year)
    adj = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            adj[i, j] = adj[j, i] = similarity(dist[i, j], gamma)
    return YearNetwork(year=year, roster=roster, adjacency=adj, gamma=gamma)


def _single_bank_network(year: int, bank_id: str,
                         gamma: Optional[float]) -> YearNetwork:
    return YearNetwork(year=year, roster=(bank_id,),
                       adjacency=np.ones((1, 1)),
                       gamma=gamma if gamma is not None else 1.0)


def build_year_network(panel: BankPanel, year: int, window: int,
                       spec: CompositeIndexSpec = CompositeIndexSpec(),
                       gamma: Optional[float] = None) -> YearNetwork:
    """Similarity network for one year from the trailing window.

    gamma defaults to the median heuristic over this year's pairwise
    distances, so the median-distance pair lands at weight 0.5.
    """
    sliced = panel_slice(panel, year, window)
    if len(sliced.roster) == 1:
        return _single_bank_network(year, sliced.roster[0], gamma)
    sub = _stable_subpanel(sliced)
    if len(sub.roster) == 1:
        return _single_bank_network(year, sub.roster[0], gamma)
    return _network_from_series(year, _series_for(sub, spec), gamma)


def build_dynamic_network(panel: BankPanel, years: Sequence[int], window: int,
                          spec: CompositeIndexSpec = CompositeIndexSpec(),
                          gamma: Optional[float] = None) -> DynamicNetwork:
    """One network per year over a common roster.

    The roster is the intersection of the banks qualifying in every year of
    the range; per-year exclusions are logged. Each year keeps its own
    median-heuristic gamma unless one is pinned.
    """
    years = sorted(years)
    if not years:
        raise InvalidInput("empty year range")
    for y in years:
        if y not in panel.years:
            raise InvalidInput(f"year {y} not in panel")

    rosters = {}
    for y in years:
        try:
            sliced = panel_slice(panel, y, window)
            if len(sliced.roster) > 1:
                sliced = _stable_subpanel(sliced)
            rosters[y] = set(sliced.roster)
        except EmptySlice:
            rosters[y] = set()
    common = set.intersection(*(rosters[y] for y in years))
    for y in years:
        dropped = sorted(rosters[y] - common)
        if dropped:
            log.info("year %d: excluded from common roster: %s", y,
                     ", ".join(dropped))
    if not common:
        raise EmptyRoster(
            f"no bank qualifies in every year {years[0]}..{years[-1]}")

    nets = []
    for y in years:
        sub = BankPanel.from_records(
            [r for r in panel_slice(panel, y, window).records
             if r.bank_id in common])
        if len(common) == 1:
            nets.append(_single_bank_network(y, next(iter(common)), gamma))
            continue
        sub = _stable_subpanel(sub)
        nets.append(_network_from_series(y, _series_for(sub, spec), gamma))
    return DynamicNetwork(networks=tuple(nets), window=window)


def segment_by_tier(network: YearNetwork, panel: BankPanel,
                    ) -> Dict[AssetTier, YearNetwork]:
    """Induced subgraphs on the Mega/Large/Regular rosters, tiers taken
    from that year's total assets; weights are carried over unchanged."""
    tiers: Dict[AssetTier, list] = {t: [] for t in AssetTier}
    for bank_id in network.roster:
        rec = panel.get(bank_id, network.year)
        if rec is None:
            raise MissingAssets(bank_id, network.year)
        tiers[classify_tier(rec.total_assets)].append(bank_id)
    out = {}
    pos = {b: i for i, b in enumerate(network.roster)}
    for tier, banks in tiers.items():
        idx = np.array([pos[b] for b in banks], dtype=int)
        adj = (network.adjacency[np.ix_(idx, idx)].copy() if len(idx)
               else np.zeros((0, 0)))
        out[tier] = YearNetwork(year=network.year, roster=tuple(banks),
                                adjacency=adj, gamma=network.gamma)
    return out


@dataclass(frozen=True)
class NetworkStats:
    year: int
    threshold: float
    n_nodes: int
    n_edges: int
    density: float
    weighted_degree: Tuple[float, ...]
    n_components: int


def network_stats(network: YearNetwork, threshold: float = 0.0,
                  ) -> NetworkStats:
    """Edge counts above the threshold, per-node weighted degree (row sum
    net of the self-loop), and connected components of the thresholded
    graph."""
    if not (0.0 <= threshold < 1.0):
        raise InvalidInput(f"threshold must lie in [0, 1), got {threshold}")
    adj = network.adjacency
    n = len(network.roster)
    degree = tuple(float(adj[i].sum() - adj[i, i]) for i in range(n))

    n_edges = 0
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j] > threshold:
                n_edges += 1
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    pairs = n * (n - 1) // 2
    density = n_edges / pairs if pairs else 0.0
    components = len({find(i) for i in range(n)}) if n else 0
    return NetworkStats(year=network.year, threshold=threshold, n_nodes=n,
                        n_edges=n_edges, density=density,
                        weighted_degree=degree, n_components=components)
