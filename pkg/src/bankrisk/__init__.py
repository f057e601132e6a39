"""Systemic-risk analytics for annual bank panels.

Stages: balance-sheet risk metrics, DTW similarity networks, temporal
graph-network anomaly detection, and agent-based bank-run simulations
with Monte Carlo risk classification.
"""

__version__ = "0.1.0"
