"""Run configuration for the command-line front end.

The format is flat ``key=value`` text: one assignment per line, ``#``
starts a comment, blank lines are skipped, and dotted prefixes group keys
into sections (``abm.alpha=0.5``). There is no nesting and no quoting;
values are parsed by the key's declared type. Unknown and duplicate keys
are errors so a typo cannot silently fall back to a default.

A run takes its panel either from ``io.input_csv`` or from the synthetic
generator, never both: setting the input path together with any ``synth.``
key is rejected. ``io.seed`` is the run's single seed; it drives the
synthetic generator, the network-model initialization, and the ensemble's
master seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from .abm import AbmParams, ScenarioKind
from .ensemble import Perturbation, RiskThresholds
from .errors import InvalidSpec
from .metrics import DEFAULT_COMPONENTS, DEFAULT_K, CompositeIndexSpec
from .panel import BRICS_COUNTRIES, CSV_COLUMNS, SyntheticPanelSpec
from .tgnn import FeatureSpec, Method

DEFAULT_COUNTRY_MIX = {c: 0.2 for c in BRICS_COUNTRIES}


@dataclass(frozen=True)
class RunConfig:
    """Typed view of one configuration file. Field defaults equal the
    documented sample config, so an empty file is a valid run."""
    input_csv: Optional[str] = None
    schema: Mapping[str, str] = field(default_factory=dict)
    synth: SyntheticPanelSpec = SyntheticPanelSpec()
    window: int = 3
    index_spec: CompositeIndexSpec = CompositeIndexSpec()
    srisk_k: float = DEFAULT_K
    gamma: Optional[float] = None
    threshold: float = 0.0
    network_years: Tuple[int, ...] = ()
    tgnn_hidden_dim: int = 8
    tgnn_n_layers: int = 2
    tgnn_epochs: int = 200
    tgnn_learning_rate: float = 0.01
    feature_spec: FeatureSpec = FeatureSpec()
    abm: AbmParams = AbmParams()
    scenario_kind: ScenarioKind = ScenarioKind.TOP_ASSETS
    scenario_year: Optional[int] = None
    scenario_k: int = 5
    scenario_method: Method = Method.TGNN
    scenario_country: Optional[str] = None
    scenario_shock_override: Optional[float] = None
    pipeline_scenarios: Tuple[ScenarioKind, ...] = (
        ScenarioKind.TOP_ASSETS, ScenarioKind.TOP_SRISK_CS,
        ScenarioKind.TOP_ANOMALOUS)
    ensemble_kind: ScenarioKind = ScenarioKind.GEOPOLITICAL
    ensemble_country: Optional[str] = None
    ensemble_k: int = 5
    ensemble_years: Tuple[int, ...] = ()
    ensemble_n_runs: int = 500
    ensemble_workers: int = 1
    perturbation: Perturbation = Perturbation()
    thresholds: RiskThresholds = RiskThresholds()
    out_dir: str = "out"
    seed: int = 0

    def validate(self) -> None:
        if self.input_csv is None:
            self.synth.validate()
        self.index_spec.validate()
        self.feature_spec.validate()
        self.abm.validate()
        self.perturbation.validate()
        self.thresholds.validate()
        if self.window < 2:
            raise InvalidSpec(f"index.window must be >= 2, got {self.window}")
        if not 0.0 < self.srisk_k < 1.0:
            raise InvalidSpec(
                f"metrics.k must be in (0, 1), got {self.srisk_k}")
        if self.gamma is not None and self.gamma <= 0.0:
            raise InvalidSpec(
                f"network.gamma must be positive, got {self.gamma}")
        if not 0.0 <= self.threshold < 1.0:
            raise InvalidSpec(
                f"network.threshold must be in [0, 1), got {self.threshold}")
        if self.tgnn_hidden_dim < 1 or self.tgnn_n_layers < 1:
            raise InvalidSpec("tgnn dimensions must be at least 1")
        if self.tgnn_epochs < 0:
            raise InvalidSpec(
                f"tgnn.epochs must be non-negative, got {self.tgnn_epochs}")
        if self.tgnn_learning_rate <= 0.0:
            raise InvalidSpec("tgnn.learning_rate must be positive")
        if self.scenario_k < 1 or self.ensemble_k < 1:
            raise InvalidSpec("scenario k values must be at least 1")
        if self.ensemble_n_runs < 1:
            raise InvalidSpec(
                f"ensemble.n_runs must be >= 1, got {self.ensemble_n_runs}")
        if self.ensemble_workers < 1:
            raise InvalidSpec(
                f"ensemble.workers must be >= 1, got {self.ensemble_workers}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidSpec(
                f"io.seed must fit in 64 bits, got {self.seed}")
        if not self.out_dir:
            raise InvalidSpec("io.out_dir must be non-empty")


def _bool(raw: str, key: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise InvalidSpec(f"{key}: expected a boolean, got {raw!r}")


def _int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise InvalidSpec(f"{key}: expected an integer, got {raw!r}") from None


def _float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise InvalidSpec(f"{key}: expected a number, got {raw!r}") from None


def _years(raw: str, key: str) -> Tuple[int, ...]:
    """Comma list of years and inclusive ``a-b`` ranges, e.g.
    ``2018-2020,2024``."""
    years = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo_text, _, hi_text = part.partition("-")
            lo, hi = _int(lo_text, key), _int(hi_text, key)
            if hi < lo:
                raise InvalidSpec(f"{key}: range {part!r} runs backwards")
            years.extend(range(lo, hi + 1))
        else:
            years.append(_int(part, key))
    out = tuple(sorted(set(years)))
    return out


def _country_mix(raw: str, key: str) -> Dict[str, float]:
    mix = {}
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, weight = part.partition(":")
        if not sep:
            raise InvalidSpec(f"{key}: expected name:weight, got {part!r}")
        mix[name.strip()] = _float(weight.strip(), key)
    if not mix:
        raise InvalidSpec(f"{key}: empty country mix")
    return mix


def _components(raw: str, key: str) -> Tuple[Tuple[str, str], ...]:
    comps = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, sign = part.partition(":")
        if not sep:
            raise InvalidSpec(f"{key}: expected name:sign, got {part!r}")
        comps.append((name.strip(), sign.strip()))
    if not comps:
        raise InvalidSpec(f"{key}: empty component list")
    return tuple(comps)


def _names(raw: str) -> Tuple[str, ...]:
    return tuple(p.strip() for p in raw.split(",") if p.strip())


def _scenario_kind(raw: str, key: str) -> ScenarioKind:
    for kind in ScenarioKind:
        if kind.value == raw:
            return kind
    valid = ", ".join(k.value for k in ScenarioKind)
    raise InvalidSpec(f"{key}: unknown scenario {raw!r} (one of {valid})")


def _method(raw: str, key: str) -> Method:
    for method in Method:
        if method.value.lower() == raw.lower():
            return method
    valid = ", ".join(m.value for m in Method)
    raise InvalidSpec(f"{key}: unknown method {raw!r} (one of {valid})")


# Every accepted key. The parser rejects anything else, so this table is
# the format's authoritative schema; columns.* is the one open family.
_KNOWN_KEYS = frozenset([
    "io.input_csv", "io.out_dir", "io.seed",
    "synth.n_banks", "synth.year_start", "synth.year_end",
    "synth.size_mu", "synth.size_sigma", "synth.country_mix",
    "synth.shock_years",
    "index.window", "index.components",
    "metrics.k",
    "network.gamma", "network.threshold", "network.years",
    "tgnn.hidden_dim", "tgnn.n_layers", "tgnn.epochs",
    "tgnn.learning_rate", "tgnn.components", "tgnn.include_degree",
    "tgnn.include_identity",
    "abm.alpha", "abm.psi", "abm.shock_pct", "abm.fire_sale_haircut",
    "abm.liquidity_fraction", "abm.horizon", "abm.stop_epsilon",
    "scenario.kind", "scenario.year", "scenario.k", "scenario.method",
    "scenario.country", "scenario.shock_pct_override",
    "pipeline.scenarios",
    "ensemble.scenario", "ensemble.country", "ensemble.k",
    "ensemble.years", "ensemble.n_runs", "ensemble.workers",
    "ensemble.perturb_alpha", "ensemble.perturb_psi",
    "ensemble.perturb_fire_sale_haircut", "ensemble.perturb_shock_pct",
    "ensemble.threshold_low", "ensemble.threshold_medium",
    "ensemble.threshold_high",
])


def parse_config_text(text: str) -> Dict[str, str]:
    """Raw key-to-value mapping with format checking only."""
    values: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise InvalidSpec(f"line {lineno}: expected key=value, got "
                              f"{stripped!r}")
        key = key.strip()
        if not key:
            raise InvalidSpec(f"line {lineno}: empty key")
        if key in values:
            raise InvalidSpec(f"line {lineno}: duplicate key {key!r}")
        if key not in _KNOWN_KEYS and not key.startswith("columns."):
            raise InvalidSpec(f"line {lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def config_from_mapping(values: Mapping[str, str]) -> RunConfig:
    """Typed config from parsed key-value pairs; absent keys keep their
    defaults, empty values mean "unset" for the optional keys."""
    base = RunConfig()

    def get(key: str, default):
        return values.get(key, default)

    input_csv = values.get("io.input_csv", "") or None
    if input_csv is not None:
        synth_keys = sorted(k for k in values if k.startswith("synth."))
        if synth_keys:
            raise InvalidSpec(
                "io.input_csv and synth.* are mutually exclusive; found "
                + ", ".join(synth_keys))

    schema = {key[len("columns."):]: v for key, v in values.items()
              if key.startswith("columns.")}
    for name in schema:
        if name not in CSV_COLUMNS:
            raise InvalidSpec(f"columns.{name}: unknown panel field")

    seed = _int(get("io.seed", "0"), "io.seed")

    mix_raw = values.get("synth.country_mix", "")
    synth = SyntheticPanelSpec(
        n_banks=_int(get("synth.n_banks", "60"), "synth.n_banks"),
        year_start=_int(get("synth.year_start", "2008"),
                        "synth.year_start"),
        year_end=_int(get("synth.year_end", "2024"), "synth.year_end"),
        country_mix=(_country_mix(mix_raw, "synth.country_mix") if mix_raw
                     else dict(DEFAULT_COUNTRY_MIX)),
        size_mu=_float(get("synth.size_mu", "9.0"), "synth.size_mu"),
        size_sigma=_float(get("synth.size_sigma", "1.6"),
                          "synth.size_sigma"),
        shock_years=_years(get("synth.shock_years", ""),
                           "synth.shock_years"),
        seed=seed,
    )

    comp_raw = values.get("index.components", "")
    index_spec = (CompositeIndexSpec(_components(comp_raw,
                                                 "index.components"))
                  if comp_raw else CompositeIndexSpec(DEFAULT_COMPONENTS))

    gamma_raw = values.get("network.gamma", "")
    feat_raw = values.get("tgnn.components", None)
    feature_spec = FeatureSpec(
        components=(_names(feat_raw) if feat_raw is not None
                    else base.feature_spec.components),
        include_degree=_bool(get("tgnn.include_degree", "true"),
                             "tgnn.include_degree"),
        include_identity=_bool(get("tgnn.include_identity", "false"),
                               "tgnn.include_identity"),
    )

    abm = AbmParams(
        alpha=_float(get("abm.alpha", "0.5"), "abm.alpha"),
        psi=_float(get("abm.psi", "0.1"), "abm.psi"),
        shock_pct=_float(get("abm.shock_pct", "0.5"), "abm.shock_pct"),
        fire_sale_haircut=_float(get("abm.fire_sale_haircut", "0.3"),
                                 "abm.fire_sale_haircut"),
        liquidity_fraction=_float(get("abm.liquidity_fraction", "0.1"),
                                  "abm.liquidity_fraction"),
        horizon=_int(get("abm.horizon", "50"), "abm.horizon"),
        stop_epsilon=_float(get("abm.stop_epsilon", "0.0001"),
                            "abm.stop_epsilon"),
    )

    year_raw = values.get("scenario.year", "")
    override_raw = values.get("scenario.shock_pct_override", "")
    pipeline_raw = values.get("pipeline.scenarios", "")
    pipeline_scenarios = (
        tuple(_scenario_kind(name, "pipeline.scenarios")
              for name in _names(pipeline_raw))
        if pipeline_raw else base.pipeline_scenarios)

    perturbation = Perturbation(
        alpha=_float(get("ensemble.perturb_alpha", "0.1"),
                     "ensemble.perturb_alpha"),
        psi=_float(get("ensemble.perturb_psi", "0.1"),
                   "ensemble.perturb_psi"),
        fire_sale_haircut=_float(
            get("ensemble.perturb_fire_sale_haircut", "0.1"),
            "ensemble.perturb_fire_sale_haircut"),
        shock_pct=_float(get("ensemble.perturb_shock_pct", "0.1"),
                         "ensemble.perturb_shock_pct"),
    )
    thresholds = RiskThresholds(
        low=_float(get("ensemble.threshold_low", "0.8"),
                   "ensemble.threshold_low"),
        medium=_float(get("ensemble.threshold_medium", "0.6"),
                      "ensemble.threshold_medium"),
        high=_float(get("ensemble.threshold_high", "0.3"),
                    "ensemble.threshold_high"),
    )

    config = RunConfig(
        input_csv=input_csv,
        schema=schema,
        synth=synth,
        window=_int(get("index.window", "3"), "index.window"),
        index_spec=index_spec,
        srisk_k=_float(get("metrics.k", "0.08"), "metrics.k"),
        gamma=_float(gamma_raw, "network.gamma") if gamma_raw else None,
        threshold=_float(get("network.threshold", "0.0"),
                         "network.threshold"),
        network_years=_years(get("network.years", ""), "network.years"),
        tgnn_hidden_dim=_int(get("tgnn.hidden_dim", "8"),
                             "tgnn.hidden_dim"),
        tgnn_n_layers=_int(get("tgnn.n_layers", "2"), "tgnn.n_layers"),
        tgnn_epochs=_int(get("tgnn.epochs", "200"), "tgnn.epochs"),
        tgnn_learning_rate=_float(get("tgnn.learning_rate", "0.01"),
                                  "tgnn.learning_rate"),
        feature_spec=feature_spec,
        abm=abm,
        scenario_kind=_scenario_kind(get("scenario.kind", "TopAssets"),
                                     "scenario.kind"),
        scenario_year=_int(year_raw, "scenario.year") if year_raw else None,
        scenario_k=_int(get("scenario.k", "5"), "scenario.k"),
        scenario_method=_method(get("scenario.method", "TGNN"),
                                "scenario.method"),
        scenario_country=values.get("scenario.country", "") or None,
        scenario_shock_override=(_float(override_raw,
                                        "scenario.shock_pct_override")
                                 if override_raw else None),
        pipeline_scenarios=pipeline_scenarios,
        ensemble_kind=_scenario_kind(get("ensemble.scenario",
                                         "Geopolitical"),
                                     "ensemble.scenario"),
        ensemble_country=values.get("ensemble.country", "") or None,
        ensemble_k=_int(get("ensemble.k", "5"), "ensemble.k"),
        ensemble_years=_years(get("ensemble.years", ""), "ensemble.years"),
        ensemble_n_runs=_int(get("ensemble.n_runs", "500"),
                             "ensemble.n_runs"),
        ensemble_workers=_int(get("ensemble.workers", "1"),
                              "ensemble.workers"),
        perturbation=perturbation,
        thresholds=thresholds,
        out_dir=get("io.out_dir", "out"),
        seed=seed,
    )
    config.validate()
    return config


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_mapping(parse_config_text(fh.read()))
