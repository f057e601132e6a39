"""Recovery experiment for the temporal anomaly detector.

Builds a two-community dynamic network whose final-year edges for one
bank are adversarially rearranged, trains the one-step-ahead
reconstruction model, and reports where the planted bank lands in the
score ranking of the transition year. Repeats over a seed range so the
hit rate, not a single lucky draw, is the reported quantity.

Balance-sheet features are useless here because an edge permutation
leaves every node attribute untouched, so the model runs on one-hot
node indicators alone.

Usage:
    python3 scripts/planted_anomaly_experiment.py --n-seeds 10
"""

from __future__ import annotations

import argparse
import sys
import time

from bankrisk.tgnn import (
    Activation,
    FeatureSpec,
    anomaly_scores,
    init_model,
    planted_anomaly_network,
    train,
)

IDENTITY_ONLY = FeatureSpec(components=(), include_degree=False,
                            include_identity=True)


def run_once(seed: int, n_banks: int, epochs: int,
             learning_rate: float) -> tuple[int, str, str]:
    """Returns (rank of planted bank, planted id, top-ranked id)."""
    dynet, planted = planted_anomaly_network(seed, n_banks=n_banks)
    model = init_model(IDENTITY_ONLY, hidden_dim=8, seed=seed,
                       n_nodes=n_banks,
                       hidden_activation=Activation.IDENTITY)
    trained, _ = train(model, dynet, epochs=epochs,
                       learning_rate=learning_rate)
    report = anomaly_scores(trained, dynet)
    year = dynet.networks[-2].year
    rows = [row for row in report.rows if row.year == year]
    planted_rank = next(r.rank for r in rows if r.bank_id == planted)
    top = min(rows, key=lambda r: r.rank).bank_id
    return planted_rank, planted, top


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--start-seed", type=int, default=0)
    ap.add_argument("--n-seeds", type=int, default=10)
    ap.add_argument("--n-banks", type=int, default=20)
    ap.add_argument("--epochs", type=int, default=300)
    ap.add_argument("--learning-rate", type=float, default=10.0)
    args = ap.parse_args()

    t0 = time.perf_counter()
    hits = 0
    for seed in range(args.start_seed, args.start_seed + args.n_seeds):
        rank, planted, top = run_once(seed, args.n_banks, args.epochs,
                                      args.learning_rate)
        hits += rank == 1
        note = "" if rank == 1 else f"  (top was {top})"
        print(f"seed {seed}: planted {planted} ranked {rank}{note}")
    elapsed = time.perf_counter() - t0
    print(f"recovered at rank 1 in {hits}/{args.n_seeds} repetitions, "
          f"{elapsed:.1f}s")
    return 0 if hits == args.n_seeds else 1


if __name__ == "__main__":
    sys.exit(main())
