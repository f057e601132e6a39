"""Fear-driven bank-run simulator.

Banks start from one panel year's balance sheets. A capital shock to a
chosen set of institutions seeds depositor fear; fear ratchets up with
capital losses and never subsides, withdrawals scale with a blend of each
bank's own fear and system-wide fear, and banks meet outflows from cash
first, then fire sales at a haircut, then default on the remainder. A bank
whose capital falls to or below zero fails permanently.

Contagion here is purely behavioral: there is no interbank exposure
network, so distress spreads only through the shared fear term. Updates
inside a step are synchronous (every withdrawal is computed from the
previous step's state before any book is touched), which makes a run fully
deterministic for given inputs.

Currency units follow the panel (millions); a "pct" in a result field is a
fraction in [0, 1].
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    InsufficientBanks,
    InvalidInput,
    InvariantViolation,
    MissingAnomalyReport,
    MissingField,
    UnknownBank,
)
from .metrics import RiskRatioRow, risk_ratios
from .panel import BankPanel
from .tgnn import AnomalyReport, Method, top_k

# Solvency floor standing in for zero equity at initialization, so the
# fear ratio capital/initial_capital stays defined for pre-failed banks.
PRE_FAILED_CAPITAL = 1e-9


@dataclass
class BankAgent:
    """One bank's running books. capital only ever decreases; fear only
    ever increases; a failed bank's fields are frozen for good."""
    bank_id: str
    country: str
    capital: float
    initial_capital: float
    deposits: float
    cash: float
    illiquid_assets: float
    fear: float = 0.0
    alive: bool = True
    pre_failed: bool = False


@dataclass(frozen=True)
class AbmParams:
    """Simulation controls.

    alpha blends own fear against systemic fear in the withdrawal rule;
    psi scales per-step withdrawal intensity (zero disables withdrawals);
    shock_pct is the capital fraction destroyed at the shocked banks;
    fire_sale_haircut is the value lost per unit of illiquid assets sold;
    liquidity_fraction sets initial cash as a share of total assets;
    horizon caps the step count; stop_epsilon ends a run early once a
    step's total withdrawals fall below that fraction of initial deposits.
    """
    alpha: float = 0.5
    psi: float = 0.1
    shock_pct: float = 0.5
    fire_sale_haircut: float = 0.3
    liquidity_fraction: float = 0.1
    horizon: int = 50
    stop_epsilon: float = 1e-4

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInput(f"alpha must be in [0, 1], got {self.alpha}")
        if self.psi < 0.0:
            raise InvalidInput(f"psi must be non-negative, got {self.psi}")
        if not 0.0 <= self.shock_pct <= 1.0:
            raise InvalidInput(
                f"shock_pct must be in [0, 1], got {self.shock_pct}")
        if not 0.0 <= self.fire_sale_haircut < 1.0:
            raise InvalidInput(
                f"fire_sale_haircut must be in [0, 1), got "
                f"{self.fire_sale_haircut}")
        if not 0.0 < self.liquidity_fraction <= 1.0:
            raise InvalidInput(
                f"liquidity_fraction must be in (0, 1], got "
                f"{self.liquidity_fraction}")
        if self.horizon < 0:
            raise InvalidInput(
                f"horizon must be non-negative, got {self.horizon}")
        if self.stop_epsilon < 0.0:
            raise InvalidInput(
                f"stop_epsilon must be non-negative, got "
                f"{self.stop_epsilon}")


class ScenarioKind(enum.Enum):
    TOP_ASSETS = "TopAssets"
    TOP_SRISK_CS = "TopSriskCs"
    TOP_ANOMALOUS = "TopAnomalous"
    GEOPOLITICAL = "Geopolitical"


@dataclass(frozen=True)
class ShockScenario:
    """Which banks get shocked, and in which balance-sheet year."""
    kind: ScenarioKind
    year: int
    k: Optional[int] = None
    method: Method = Method.TGNN
    country: Optional[str] = None
    shock_pct_override: Optional[float] = None

    def validate(self) -> None:
        if self.kind is ScenarioKind.GEOPOLITICAL:
            if not self.country:
                raise InvalidInput("Geopolitical scenario needs a country")
        else:
            if self.k is None or self.k < 1:
                raise InvalidInput(
                    f"{self.kind.value} scenario needs k >= 1, got {self.k}")
        if self.shock_pct_override is not None and not (
                0.0 <= self.shock_pct_override <= 1.0):
            raise InvalidInput(
                f"shock_pct override must be in [0, 1], got "
                f"{self.shock_pct_override}")


@dataclass(frozen=True)
class TraceRow:
    """End-of-step totals over the accounting population (banks that were
    alive after initialization). Deposits cover live banks only, so a
    failure moves its frozen deposits out of the total; capital keeps
    failed banks' frozen values so aggregate erosion stays visible."""
    tau: int
    deposits: float
    capital: float
    systemic_fear: float
    failures: int


@dataclass(frozen=True)
class AgentSummary:
    bank_id: str
    alive: bool
    capital: float
    deposits: float
    fear: float


@dataclass(frozen=True)
class SimResult:
    deposit_loss_pct: float
    failure_rate: float
    capital_remaining_pct: float
    steps_run: int
    trace: Tuple[TraceRow, ...]
    per_bank: Tuple[AgentSummary, ...]

    def __post_init__(self):
        for name in ("deposit_loss_pct", "failure_rate",
                     "capital_remaining_pct"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvariantViolation(f"{name} outside [0, 1]: {v}")


@dataclass
class SimState:
    agents: List[BankAgent]
    tau: int = 0
    trace: List[TraceRow] = field(default_factory=list)
    last_withdrawals: float = 0.0


def init_agents(panel: BankPanel, year: int,
                params: AbmParams) -> List[BankAgent]:
    """One agent per bank-year record. Cash is liquidity_fraction of total
    assets, the rest is illiquid; capital equals equity. Banks entering
    with non-positive equity are marked pre-failed: alive=False, fear 1,
    capital at a tiny positive floor."""
    params.validate()
    records = panel.for_year(year)
    if not records:
        raise InvalidInput(f"panel has no records for year {year}")
    agents = []
    for rec in records:
        if rec.total_customer_deposits is None:
            raise MissingField(rec.bank_id, "total_customer_deposits")
        cash = params.liquidity_fraction * rec.total_assets
        agent = BankAgent(
            bank_id=rec.bank_id,
            country=rec.country,
            capital=rec.total_equity,
            initial_capital=rec.total_equity,
            deposits=rec.total_customer_deposits,
            cash=cash,
            illiquid_assets=max(0.0, rec.total_assets - cash),
        )
        if rec.total_equity <= 0.0:
            agent.capital = PRE_FAILED_CAPITAL
            agent.initial_capital = PRE_FAILED_CAPITAL
            agent.alive = False
            agent.pre_failed = True
            agent.fear = 1.0
        agents.append(agent)
    return agents


def build_shock_set(scenario: ShockScenario, panel: BankPanel,
                    metrics: Optional[Sequence[RiskRatioRow]] = None,
                    anomaly_report: Optional[AnomalyReport] = None,
                    ) -> frozenset:
    """Bank ids targeted by the scenario. Ranking ties break by bank_id."""
    scenario.validate()
    records = panel.for_year(scenario.year)
    if scenario.kind is ScenarioKind.TOP_ASSETS:
        if len(records) < scenario.k:
            raise InsufficientBanks(
                f"year {scenario.year} has {len(records)} banks, need "
                f"{scenario.k}")
        ordered = sorted(records, key=lambda r: (-r.total_assets, r.bank_id))
        return frozenset(r.bank_id for r in ordered[:scenario.k])
    if scenario.kind is ScenarioKind.TOP_SRISK_CS:
        rows = [m for m in (metrics if metrics is not None
                            else risk_ratios(panel))
                if m.year == scenario.year]
        if len(rows) < scenario.k:
            raise InsufficientBanks(
                f"year {scenario.year} has {len(rows)} scored banks, need "
                f"{scenario.k}")
        ordered = sorted(rows, key=lambda m: (-m.srisk_cs, m.bank_id))
        return frozenset(m.bank_id for m in ordered[:scenario.k])
    if scenario.kind is ScenarioKind.TOP_ANOMALOUS:
        if anomaly_report is None:
            raise MissingAnomalyReport(
                f"{scenario.kind.value} scenario needs an anomaly report")
        subset = AnomalyReport(
            rows=tuple(r for r in anomaly_report.rows
                       if r.method is scenario.method),
            excluded=anomaly_report.excluded)
        return frozenset(top_k(subset, scenario.year, scenario.k))
    hits = [r.bank_id for r in records if r.country == scenario.country]
    if not hits:
        raise InsufficientBanks(
            f"no banks in {scenario.country} in year {scenario.year}")
    return frozenset(hits)


def apply_shock(agents: Sequence[BankAgent], shocked: frozenset,
                shock_pct: float) -> Sequence[BankAgent]:
    """Destroy shock_pct of capital at each targeted live bank. The fear
    denominator initial_capital keeps its pre-shock value, so the shock
    itself registers as fear at the next update. Already-failed banks are
    frozen and skipped."""
    if not 0.0 <= shock_pct <= 1.0:
        raise InvalidInput(f"shock_pct must be in [0, 1], got {shock_pct}")
    known = {a.bank_id for a in agents}
    stray = sorted(shocked - known)
    if stray:
        raise UnknownBank(f"shock set names absent banks: "
                          f"{', '.join(stray)}")
    for agent in agents:
        if agent.alive and agent.bank_id in shocked:
            agent.capital *= 1.0 - shock_pct
    return agents


def update_fear(agent: BankAgent) -> float:
    """Ratchet rule: fear never falls. Failed banks hold fear 1."""
    if not agent.alive:
        agent.fear = 1.0
        return agent.fear
    loss = 1.0 - agent.capital / agent.initial_capital
    agent.fear = min(1.0, max(agent.fear, loss))
    return agent.fear


def systemic_fear(agents: Sequence[BankAgent]) -> float:
    """Mean fear across the run's participants. Banks that fail during the
    run stay in the average with fear held at 1, amplifying panic. Banks
    that entered the simulation already insolvent never participated, so
    they are left out; otherwise a single bad record would send every
    unshocked simulation into a run. A system with no participants at all
    reads as fully fearful."""
    if not agents:
        raise InvalidInput("no agents")
    participants = [a for a in agents if not a.pre_failed]
    if not participants:
        return 1.0
    return sum(a.fear for a in participants) / len(participants)


def compute_withdrawal(agent: BankAgent, f_sys: float,
                       params: AbmParams) -> float:
    """Deposit outflow demanded this step, capped at the deposit stock."""
    if not agent.alive:
        return 0.0
    pressure = params.alpha * agent.fear + (1.0 - params.alpha) * f_sys
    return min(agent.deposits, agent.deposits * pressure * params.psi)


def settle_withdrawal(agent: BankAgent, amount: float,
                      params: AbmParams) -> BankAgent:
    """Pay a withdrawal: cash first, then fire sales of illiquid assets at
    the configured haircut, then default on the rest.

    Selling s of illiquid assets raises s*(1-haircut) for withdrawers and
    burns s*haircut of capital. Any amount still unmet once assets run out
    is written off against capital one-for-one; the deposits leave the
    books either way.
    """
    if amount < 0.0 or amount > agent.deposits * (1.0 + 1e-12):
        raise InvalidInput(
            f"withdrawal {amount} outside [0, deposits={agent.deposits}]")
    cash_used = min(agent.cash, amount)
    shortfall = amount - cash_used
    agent.cash -= cash_used
    agent.deposits -= amount
    if shortfall > 0.0:
        recovery = 1.0 - params.fire_sale_haircut
        capacity = agent.illiquid_assets * recovery
        if shortfall >= capacity:
            sold = agent.illiquid_assets
            proceeds = capacity
        else:
            sold = shortfall / recovery
            proceeds = shortfall
        write_off = shortfall - proceeds
        agent.illiquid_assets -= sold
        agent.capital -= (sold - proceeds) + write_off
    return agent


def _trace_row(state: SimState, f_sys: float) -> TraceRow:
    live_deposits = sum(a.deposits for a in state.agents
                        if a.alive and not a.pre_failed)
    capital = sum(a.capital for a in state.agents if not a.pre_failed)
    failures = sum(1 for a in state.agents if not a.alive)
    return TraceRow(tau=state.tau, deposits=live_deposits, capital=capital,
                    systemic_fear=f_sys, failures=failures)


def step(state: SimState, params: AbmParams) -> SimState:
    """One synchronous round: systemic fear and withdrawal demands come
    from the previous step's state; then books settle, fears ratchet, and
    insolvencies (capital at or below zero) are marked."""
    agents = state.agents
    f_sys = systemic_fear(agents)
    demands = [compute_withdrawal(a, f_sys, params) for a in agents]
    for agent, amount in zip(agents, demands):
        if agent.alive and amount > 0.0:
            settle_withdrawal(agent, amount, params)
    for agent in agents:
        update_fear(agent)
    for agent in agents:
        if agent.alive and agent.capital <= 0.0:
            agent.alive = False
            agent.fear = 1.0
    state.tau += 1
    state.last_withdrawals = sum(demands)
    state.trace.append(_trace_row(state, systemic_fear(agents)))
    return state


def run_simulation(panel: BankPanel, year: int, scenario: ShockScenario,
                   params: AbmParams,
                   metrics: Optional[Sequence[RiskRatioRow]] = None,
                   anomaly_report: Optional[AnomalyReport] = None,
                   ) -> SimResult:
    """Initialize from the panel year, shock the scenario's banks, let
    fear propagate until the horizon or until withdrawals die down.

    Loss accounting covers banks alive after initialization: deposits at
    banks that fail during the run count as lost, banks that entered
    already insolvent are excluded from the deposit and capital bases and
    from the fear average but do count toward the failure rate.
    """
    params.validate()
    scenario.validate()
    if scenario.year != year:
        raise InvalidInput(
            f"scenario year {scenario.year} does not match run year {year}")
    agents = init_agents(panel, year, params)
    shocked = build_shock_set(scenario, panel, metrics, anomaly_report)
    shock_pct = (scenario.shock_pct_override
                 if scenario.shock_pct_override is not None
                 else params.shock_pct)
    apply_shock(agents, shocked, shock_pct)
    for agent in agents:
        update_fear(agent)
    state = SimState(agents=agents, tau=0)
    state.trace.append(_trace_row(state, systemic_fear(agents)))

    initial_deposits = state.trace[0].deposits
    initial_capital = state.trace[0].capital
    steps_run = 0
    for _ in range(params.horizon):
        step(state, params)
        steps_run += 1
        if state.last_withdrawals < params.stop_epsilon * initial_deposits:
            break

    final = state.trace[-1]
    if initial_deposits > 0.0:
        deposit_loss = 1.0 - final.deposits / initial_deposits
    else:
        deposit_loss = 0.0
    if initial_capital > 0.0:
        capital_remaining = max(0.0, final.capital) / initial_capital
    else:
        capital_remaining = 0.0
    per_bank = tuple(AgentSummary(bank_id=a.bank_id, alive=a.alive,
                                  capital=a.capital, deposits=a.deposits,
                                  fear=a.fear)
                     for a in agents)
    return SimResult(
        deposit_loss_pct=min(1.0, max(0.0, deposit_loss)),
        failure_rate=sum(1 for a in agents if not a.alive) / len(agents),
        capital_remaining_pct=min(1.0, capital_remaining),
        steps_run=steps_run,
        trace=tuple(state.trace),
        per_bank=per_bank,
    )
