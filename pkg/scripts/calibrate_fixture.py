"""Seed search for the bundled stress-test panel.

The repo ships a synthetic panel with a documented scenario ordering:
shocking the five largest banks drains more deposits than shocking the
five largest capital shortfalls, which in turn beats the five most
anomalous banks, with a wide gap between the first two; and the five
largest banks sit in a single country, so the matching country-wide
scenario dominates the size scenario by shock-set monotonicity. Whether
those properties hold depends on where the size and capitalization
draws land, so this script scans generator seeds, evaluates candidates
end to end (metrics, networks, detector training, simulations, and a
parameter sweep), and reports every seed that passes with margin.

The checks here are deliberately stricter than the properties the test
suite asserts, so the pinned seed has headroom against numerical noise.
"""

import argparse
import sys
import time
from dataclasses import replace
from itertools import product

from bankrisk.abm import AbmParams, ScenarioKind, ShockScenario, run_simulation
from bankrisk.metrics import risk_ratios
from bankrisk.network import build_dynamic_network
from bankrisk.panel import SyntheticPanelSpec, generate_synthetic_panel, save_panel
from bankrisk.tgnn import anomaly_scores, init_model, train

SIM_YEAR = 2023
TOP_K = 5
GAP_MIN = 1.6           # demanded ratio of the first two losses at defaults
SWEEP_MARGIN = 1.03     # demanded loss ratio at every sweep point
SWEEP_FACTORS = (0.9, 1.0, 1.1)


def top_assets_country(panel, year, k=TOP_K):
    """Country shared by the k largest banks of the year, else None."""
    recs = sorted(panel.for_year(year), key=lambda r: -r.total_assets)[:k]
    countries = {r.country for r in recs}
    return countries.pop() if len(countries) == 1 else None


def evaluate(seed, year=SIM_YEAR, verbose=True):
    panel = generate_synthetic_panel(SyntheticPanelSpec(seed=seed))
    country = top_assets_country(panel, year)
    if country is None:
        return None

    metrics = risk_ratios(panel)
    dynet = build_dynamic_network(panel, panel.years[1:], 3)
    model = init_model(seed=seed, n_nodes=len(dynet.roster))
    trained, _ = train(model, dynet, panel=panel)
    report = anomaly_scores(trained, dynet, panel)

    base = AbmParams()

    def loss(kind, params, **kw):
        scenario = ShockScenario(kind, year, **kw)
        result = run_simulation(panel, year, scenario, params,
                                metrics=metrics, anomaly_report=report)
        return result.deposit_loss_pct

    ta = loss(ScenarioKind.TOP_ASSETS, base, k=TOP_K)
    ts = loss(ScenarioKind.TOP_SRISK_CS, base, k=TOP_K)
    an = loss(ScenarioKind.TOP_ANOMALOUS, base, k=TOP_K)
    geo = loss(ScenarioKind.GEOPOLITICAL, base, country=country)

    checks = {
        "gap": ta > GAP_MIN * ts,
        "order": ts > SWEEP_MARGIN * an,
        "geo": geo >= ta,
    }

    sweep_ok = True
    worst_ta_ts = float("inf")
    worst_ts_an = float("inf")
    if all(checks.values()):
        for fa, fp, fd in product(SWEEP_FACTORS, repeat=3):
            params = replace(base, alpha=base.alpha * fa,
                             psi=base.psi * fp,
                             fire_sale_haircut=base.fire_sale_haircut * fd)
            sta = loss(ScenarioKind.TOP_ASSETS, params, k=TOP_K)
            sts = loss(ScenarioKind.TOP_SRISK_CS, params, k=TOP_K)
            san = loss(ScenarioKind.TOP_ANOMALOUS, params, k=TOP_K)
            worst_ta_ts = min(worst_ta_ts, sta / sts if sts else float("inf"))
            worst_ts_an = min(worst_ts_an, sts / san if san else float("inf"))
            if not (sta > SWEEP_MARGIN * sts and sts > SWEEP_MARGIN * san):
                sweep_ok = False
                break
    checks["sweep"] = sweep_ok and all(checks.values())

    if verbose:
        print(f"seed {seed}: country={country} "
              f"losses TA={ta:.4f} TS={ts:.4f} AN={an:.4f} GEO={geo:.4f} "
              f"gap={ta / ts if ts else float('inf'):.2f}x "
              f"sweep_min=({worst_ta_ts:.2f}, {worst_ts_an:.2f}) "
              f"checks={checks}")
    if all(checks.values()):
        return {"seed": seed, "country": country, "ta": ta, "ts": ts,
                "an": an, "geo": geo,
                "sweep_min": (worst_ta_ts, worst_ts_an)}
    return None


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--start-seed", type=int, default=0)
    parser.add_argument("--n-seeds", type=int, default=5000)
    parser.add_argument("--year", type=int, default=SIM_YEAR)
    parser.add_argument("--stop-after", type=int, default=1,
                        help="stop once this many seeds pass")
    parser.add_argument("--emit", metavar="PATH",
                        help="write the panel for --start-seed and exit")
    args = parser.parse_args(argv)

    if args.emit:
        panel = generate_synthetic_panel(
            SyntheticPanelSpec(seed=args.start_seed))
        save_panel(panel, args.emit)
        print(f"wrote {args.emit} (seed {args.start_seed})")
        return 0

    t0 = time.time()
    passed = []
    candidates = 0
    for seed in range(args.start_seed, args.start_seed + args.n_seeds):
        panel = generate_synthetic_panel(SyntheticPanelSpec(seed=seed))
        if top_assets_country(panel, args.year) is None:
            continue
        candidates += 1
        hit = evaluate(seed, args.year)
        if hit:
            passed.append(hit)
            if len(passed) >= args.stop_after:
                break
    dt = time.time() - t0
    print(f"scanned up to seed {seed}, {candidates} concentrated candidates, "
          f"{len(passed)} passed, {dt:.0f}s")
    for hit in passed:
        print("PASS", hit)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
