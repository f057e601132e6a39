"""Temporal graph model for structural anomaly detection.

A small graph-convolution stack whose layer weights evolve across years
through a GRU cell (the cell's input at each step is the previous weight
itself), trained to reconstruct next year's adjacency from this year's
embeddings through a sigmoid inner-product decoder. Gradients are computed
by hand with full backpropagation through time; training is plain
full-batch gradient descent, single threaded, bit-reproducible under a
fixed seed.

A static robust z-score detector over single-year risk ratios serves as
the comparison baseline.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateYear,
    DimensionMismatch,
    InsufficientBanks,
    InvalidInput,
    NonFiniteLoss,
    RosterMismatch,
    ZeroDegreeNode,
)
from .network import DynamicNetwork, YearNetwork
from .panel import BankPanel, INDEX_COMPONENTS


class Activation(enum.Enum):
    RELU = "relu"
    IDENTITY = "identity"
    SIGMOID = "sigmoid"


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _apply_activation(u: np.ndarray, kind: Activation) -> np.ndarray:
    if kind is Activation.RELU:
        return np.maximum(u, 0.0)
    if kind is Activation.SIGMOID:
        return _sigmoid(u)
    return u


def _activation_grad(u: np.ndarray, h: np.ndarray,
                     kind: Activation) -> np.ndarray:
    if kind is Activation.RELU:
        return (u > 0.0).astype(float)
    if kind is Activation.SIGMOID:
        return h * (1.0 - h)
    return np.ones_like(u)


@dataclass(frozen=True)
class GcnLayerParams:
    weight: np.ndarray
    activation: Activation


@dataclass(frozen=True)
class GruCellParams:
    """One cell shared by all columns of a layer's weight matrix; each
    column is an independent hidden vector of size k = weight rows."""
    wz: np.ndarray
    uz: np.ndarray
    bz: np.ndarray
    wr: np.ndarray
    ur: np.ndarray
    br: np.ndarray
    wh: np.ndarray
    uh: np.ndarray
    bh: np.ndarray


@dataclass(frozen=True)
class FeatureSpec:
    """Node features: per-year cross-sectional z-scores of the named record
    properties (missing values sit at 0, the cross-sectional mean), plus
    the node's weighted degree in that year's network. include_identity
    adds one-hot node indicators, the usual stand-in when a network is
    analyzed without balance-sheet attributes."""
    components: Tuple[str, ...] = INDEX_COMPONENTS
    include_degree: bool = True
    include_identity: bool = False

    def dim_for(self, n_nodes: int) -> int:
        return (len(self.components) + (1 if self.include_degree else 0)
                + (n_nodes if self.include_identity else 0))

    def validate(self) -> None:
        if not (self.components or self.include_degree
                or self.include_identity):
            raise InvalidInput("feature spec selects no features")


@dataclass(frozen=True)
class TemporalModelState:
    layers: Tuple[GcnLayerParams, ...]
    grus: Tuple[GruCellParams, ...]
    feature_spec: FeatureSpec
    rng_seed: int

    def __post_init__(self):
        dims = [self.layers[0].weight.shape[0]]
        for layer in self.layers:
            if layer.weight.shape[0] != dims[-1]:
                raise DimensionMismatch(
                    f"layer input {layer.weight.shape[0]} does not chain "
                    f"from {dims[-1]}")
            dims.append(layer.weight.shape[1])
        if len(self.grus) != len(self.layers):
            raise DimensionMismatch("one GRU cell per layer required")

    @property
    def in_dim(self) -> int:
        return self.layers[0].weight.shape[0]


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
            ) -> np.ndarray:
    r = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_in, fan_out))


def init_model(feature_spec: FeatureSpec = FeatureSpec(),
               hidden_dim: int = 8,
               n_layers: int = 2,
               seed: int = 0,
               n_nodes: int = 0,
               hidden_activation: Activation = Activation.RELU,
               ) -> TemporalModelState:
    """Glorot-uniform weights, zero biases, deterministic under seed.

    Layers run feature_dim -> hidden -> ... -> hidden with the hidden
    activation between and an identity map on the last layer. n_nodes is
    required only when the feature spec includes identity indicators,
    since those widen the input layer by one column per bank.
    """
    feature_spec.validate()
    if hidden_dim < 1 or n_layers < 1:
        raise InvalidInput("hidden_dim and n_layers must be positive")
    if feature_spec.include_identity and n_nodes < 1:
        raise InvalidInput(
            "identity features need n_nodes at model construction")
    rng = np.random.default_rng(seed)
    dims = [feature_spec.dim_for(n_nodes)] + [hidden_dim] * n_layers
    layers = []
    for l in range(n_layers):
        act = (Activation.IDENTITY if l == n_layers - 1
               else hidden_activation)
        layers.append(GcnLayerParams(weight=_glorot(rng, dims[l],
                                                    dims[l + 1]),
                                     activation=act))
    grus = []
    for l in range(n_layers):
        k = dims[l]
        grus.append(GruCellParams(
            wz=_glorot(rng, k, k), uz=_glorot(rng, k, k), bz=np.zeros(k),
            wr=_glorot(rng, k, k), ur=_glorot(rng, k, k), br=np.zeros(k),
            wh=_glorot(rng, k, k), uh=_glorot(rng, k, k), bh=np.zeros(k)))
    return TemporalModelState(layers=tuple(layers), grus=tuple(grus),
                              feature_spec=feature_spec, rng_seed=seed)


def normalize_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization D^(-1/2) A D^(-1/2). The input is
    expected to carry self-loops already (unit diagonal networks do)."""
    a = np.asarray(adjacency, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"adjacency must be square, got {a.shape}")
    if a.size and np.abs(a - a.T).max() > 1e-9:
        raise InvalidInput("adjacency must be symmetric")
    if np.any(a < 0):
        raise InvalidInput("adjacency must be non-negative")
    deg = a.sum(axis=1)
    if np.any(deg <= 0):
        bad = int(np.argmin(deg))
        raise ZeroDegreeNode(f"node {bad} has non-positive degree")
    inv_sqrt = 1.0 / np.sqrt(deg)
    return a * inv_sqrt[:, None] * inv_sqrt[None, :]


def gcn_forward(norm_adj: np.ndarray, features: np.ndarray,
                layers: Sequence[GcnLayerParams]) -> np.ndarray:
    """Sequential sigma(Ahat @ H @ W) through the layer stack."""
    h = np.asarray(features, dtype=float)
    if h.ndim != 2 or h.shape[0] != norm_adj.shape[0]:
        raise DimensionMismatch(
            f"features {h.shape} do not match adjacency {norm_adj.shape}")
    for layer in layers:
        if layer.weight.shape[0] != h.shape[1]:
            raise DimensionMismatch(
                f"layer expects {layer.weight.shape[0]} columns, got "
                f"{h.shape[1]}")
        h = _apply_activation(norm_adj @ h @ layer.weight, layer.activation)
    return h


def _gru_forward(cell: GruCellParams, h_prev: np.ndarray, cache: bool = False):
    """Hidden state and input are both the previous weight matrix."""
    x = h_prev
    az = cell.wz @ x + cell.uz @ h_prev + cell.bz[:, None]
    ar = cell.wr @ x + cell.ur @ h_prev + cell.br[:, None]
    z = _sigmoid(az)
    r = _sigmoid(ar)
    rh = r * h_prev
    ac = cell.wh @ x + cell.uh @ rh + cell.bh[:, None]
    c = np.tanh(ac)
    h_new = (1.0 - z) * h_prev + z * c
    if not cache:
        return h_new
    return h_new, (x, h_prev, z, r, rh, c)


def evolve_weights(gru: GruCellParams, prev_weight: np.ndarray) -> np.ndarray:
    """One GRU step on the weight matrix, column-wise. At update gate 0 the
    previous weight passes through unchanged; at gate 1 the candidate
    replaces it."""
    w = np.asarray(prev_weight, dtype=float)
    k = gru.wz.shape[0]
    if w.ndim != 2 or w.shape[0] != k:
        raise DimensionMismatch(
            f"weight rows {w.shape} incompatible with cell size {k}")
    return _gru_forward(gru, w)


def _gru_backward(cell: GruCellParams, grad_h_new: np.ndarray, cache,
                  grads: Dict[str, np.ndarray]) -> np.ndarray:
    """Returns the gradient w.r.t. the previous weight matrix, combining the
    hidden-state path and the input path (they are the same array)."""
    x, h_prev, z, r, rh, c = cache
    dz = grad_h_new * (c - h_prev)
    dc = grad_h_new * z
    dh = grad_h_new * (1.0 - z)

    dac = dc * (1.0 - c * c)
    grads["wh"] += dac @ x.T
    grads["uh"] += dac @ rh.T
    grads["bh"] += dac.sum(axis=1)
    dx = cell.wh.T @ dac
    drh = cell.uh.T @ dac
    dr = drh * h_prev
    dh += drh * r

    dar = dr * r * (1.0 - r)
    grads["wr"] += dar @ x.T
    grads["ur"] += dar @ h_prev.T
    grads["br"] += dar.sum(axis=1)
    dx += cell.wr.T @ dar
    dh += cell.ur.T @ dar

    daz = dz * z * (1.0 - z)
    grads["wz"] += daz @ x.T
    grads["uz"] += daz @ h_prev.T
    grads["bz"] += daz.sum(axis=1)
    dx += cell.wz.T @ daz
    dh += cell.uz.T @ daz
    return dh + dx


GRU_FIELDS = ("wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh")


def build_features(dynet: DynamicNetwork, panel: Optional[BankPanel] = None,
                   spec: FeatureSpec = FeatureSpec()) -> List[np.ndarray]:
    """One (n_banks, dim) array per network year, in year order."""
    spec.validate()
    if spec.components and panel is None:
        raise InvalidInput(
            "feature spec uses panel components but no panel was given")
    roster = dynet.roster
    if panel is not None and spec.components:
        covered = {b for b in roster
                   if any(panel.get(b, y) is not None for y in dynet.years)}
        missing = sorted(set(roster) - covered)
        if missing:
            raise RosterMismatch(
                f"panel has no records in the network years for: "
                f"{', '.join(missing)}")
    out = []
    for net in dynet.networks:
        cols = []
        for name in spec.components:
            raw = []
            for b in roster:
                rec = panel.get(b, net.year)
                raw.append(None if rec is None else getattr(rec, name))
            present = np.array([v for v in raw if v is not None], dtype=float)
            col = np.zeros(len(roster))
            if present.size:
                mean = present.mean()
                std = present.std()
                if std > 0:
                    for i, v in enumerate(raw):
                        if v is not None:
                            col[i] = (v - mean) / std
            cols.append(col)
        if spec.include_degree:
            adj = net.adjacency
            cols.append(adj.sum(axis=1) - np.diag(adj))
        if spec.include_identity:
            cols.append(np.eye(len(roster)))
        out.append(np.column_stack(cols))
    return out


def _forward_backward(layers: List[np.ndarray],
                      activations: List[Activation],
                      grus: List[Dict[str, np.ndarray]],
                      ahats: List[np.ndarray],
                      targets: List[np.ndarray],
                      feats: List[np.ndarray],
                      want_grad: bool):
    """Loss over all one-step-ahead transitions; optionally its gradient
    w.r.t. every parameter, via backprop through the full unrolled GRU
    chain and the per-year GCN stacks."""
    n_layers = len(layers)
    n_trans = len(targets)
    cells = [GruCellParams(**g) for g in grus]

    # forward: evolve weights through years, run the GCN per year
    w_prev = [layers[l] for l in range(n_layers)]
    gru_caches = [[] for _ in range(n_layers)]
    gcn_caches = []
    embeddings = []
    for t in range(n_trans):
        w_t = []
        for l in range(n_layers):
            h_new, cache = _gru_forward(cells[l], w_prev[l], cache=True)
            gru_caches[l].append(cache)
            w_t.append(h_new)
        h = feats[t]
        layer_cache = []
        for l in range(n_layers):
            m = ahats[t] @ h
            u = m @ w_t[l]
            h_next = _apply_activation(u, activations[l])
            layer_cache.append((h, m, u, h_next))
            h = h_next
        gcn_caches.append((w_t, layer_cache))
        embeddings.append(h)
        w_prev = w_t

    loss = 0.0
    decoder_caches = []
    for t in range(n_trans):
        z = embeddings[t]
        p = _sigmoid(z @ z.T)
        e = p - targets[t]
        loss += float(np.mean(e * e))
        decoder_caches.append((z, p, e))
    loss /= n_trans

    if not want_grad:
        return loss, None

    grad_layers = [np.zeros_like(w) for w in layers]
    grad_grus = [{k: np.zeros_like(v) for k, v in g.items()} for g in grus]
    # per-year weight gradients accumulated from the GCN, then pushed
    # backwards through the GRU chain
    dw_by_year = [[np.zeros_like(layers[l]) for l in range(n_layers)]
                  for _ in range(n_trans)]

    for t in range(n_trans):
        z, p, e = decoder_caches[t]
        n = z.shape[0]
        dp = (2.0 / (n * n * n_trans)) * e
        ds = dp * p * (1.0 - p)
        dz = (ds + ds.T) @ z
        w_t, layer_cache = gcn_caches[t]
        dh = dz
        for l in range(n_layers - 1, -1, -1):
            h_in, m, u, h_out = layer_cache[l]
            du = dh * _activation_grad(u, h_out, activations[l])
            dw_by_year[t][l] += m.T @ du
            dh = ahats[t] @ (du @ w_t[l].T)

    for l in range(n_layers):
        carry = np.zeros_like(layers[l])
        for t in range(n_trans - 1, -1, -1):
            carry = carry + dw_by_year[t][l]
            carry = _gru_backward(cells[l], carry, gru_caches[l][t],
                                  grad_grus[l])
        grad_layers[l] += carry

    return loss, (grad_layers, grad_grus)


def _prepare(model: TemporalModelState, dynet: DynamicNetwork,
             panel: Optional[BankPanel]):
    if len(dynet.networks) < 2:
        raise InvalidInput("dynamic network needs at least 2 years")
    feats = build_features(dynet, panel, model.feature_spec)
    if feats[0].shape[1] != model.in_dim:
        raise DimensionMismatch(
            f"features have {feats[0].shape[1]} columns but the model "
            f"input layer expects {model.in_dim}")
    n_trans = len(dynet.networks) - 1
    ahats = [normalize_adjacency(dynet.networks[t].adjacency)
             for t in range(n_trans)]
    targets = [np.asarray(dynet.networks[t + 1].adjacency, dtype=float)
               for t in range(n_trans)]
    return ahats, targets, feats[:n_trans]


def _unpack(model: TemporalModelState):
    layers = [layer.weight.copy() for layer in model.layers]
    activations = [layer.activation for layer in model.layers]
    grus = [{k: getattr(g, k).copy() for k in GRU_FIELDS} for g in model.grus]
    return layers, activations, grus


def _repack(model: TemporalModelState, layers, grus) -> TemporalModelState:
    new_layers = tuple(GcnLayerParams(weight=w, activation=layer.activation)
                       for w, layer in zip(layers, model.layers))
    new_grus = tuple(GruCellParams(**g) for g in grus)
    return replace(model, layers=new_layers, grus=new_grus)


def compute_loss(model: TemporalModelState, dynet: DynamicNetwork,
                 panel: Optional[BankPanel] = None) -> float:
    ahats, targets, feats = _prepare(model, dynet, panel)
    layers, activations, grus = _unpack(model)
    loss, _ = _forward_backward(layers, activations, grus, ahats, targets,
                                feats, want_grad=False)
    return loss


def compute_gradients(model: TemporalModelState, dynet: DynamicNetwork,
                      panel: Optional[BankPanel] = None):
    """(loss, layer-weight gradients, GRU-parameter gradients); used by
    training and by the finite-difference fidelity check."""
    ahats, targets, feats = _prepare(model, dynet, panel)
    layers, activations, grus = _unpack(model)
    loss, grads = _forward_backward(layers, activations, grus, ahats,
                                    targets, feats, want_grad=True)
    return loss, grads[0], grads[1]


def train(model: TemporalModelState, dynet: DynamicNetwork,
          epochs: int = 200, learning_rate: float = 0.01,
          panel: Optional[BankPanel] = None,
          ) -> Tuple[TemporalModelState, List[float]]:
    """Full-batch gradient descent on the reconstruction loss.

    The loss trace has epochs + 1 entries; entry 0 is the starting loss and
    the last entry is the loss at the returned parameters.
    """
    if epochs < 0:
        raise InvalidInput("epochs must be non-negative")
    if learning_rate <= 0:
        raise InvalidInput("learning_rate must be positive")
    ahats, targets, feats = _prepare(model, dynet, panel)
    layers, activations, grus = _unpack(model)
    trace = []
    for _ in range(epochs):
        loss, grads = _forward_backward(layers, activations, grus, ahats,
                                        targets, feats, want_grad=True)
        if not math.isfinite(loss):
            raise NonFiniteLoss(
                "training diverged; lower learning_rate or epochs")
        trace.append(loss)
        grad_layers, grad_grus = grads
        for l in range(len(layers)):
            layers[l] -= learning_rate * grad_layers[l]
            for k in GRU_FIELDS:
                grus[l][k] -= learning_rate * grad_grus[l][k]
    final, _ = _forward_backward(layers, activations, grus, ahats, targets,
                                 feats, want_grad=False)
    if not math.isfinite(final):
        raise NonFiniteLoss("training diverged; lower learning_rate")
    trace.append(final)
    return _repack(model, layers, grus), trace


class Method(enum.Enum):
    TGNN = "TGNN"
    BASELINE = "Baseline"


@dataclass(frozen=True)
class AnomalyRow:
    year: int
    bank_id: str
    method: Method
    score: float
    rank: int


@dataclass(frozen=True)
class AnomalyReport:
    rows: Tuple[AnomalyRow, ...]
    excluded: Tuple[Tuple[int, str], ...] = ()

    def __post_init__(self):
        groups: Dict[Tuple[int, Method], List[AnomalyRow]] = {}
        for row in self.rows:
            groups.setdefault((row.year, row.method), []).append(row)
        for (year, method), rows in groups.items():
            ordered = sorted(rows, key=lambda r: (-r.score, r.bank_id))
            ranks = [r.rank for r in ordered]
            if ranks != list(range(1, len(rows) + 1)):
                raise InvalidInput(
                    f"ranks for year {year} ({method.value}) are not "
                    f"1..{len(rows)} in score order")

    def for_year(self, year: int) -> Tuple[AnomalyRow, ...]:
        return tuple(sorted((r for r in self.rows if r.year == year),
                            key=lambda r: r.rank))


def _ranked_rows(year: int, scored: List[Tuple[str, float]],
                 method: Method) -> List[AnomalyRow]:
    ordered = sorted(scored, key=lambda bs: (-bs[1], bs[0]))
    return [AnomalyRow(year=year, bank_id=b, method=method, score=s,
                       rank=i + 1)
            for i, (b, s) in enumerate(ordered)]


def anomaly_scores(model: TemporalModelState, dynet: DynamicNetwork,
                   panel: Optional[BankPanel] = None) -> AnomalyReport:
    """Per (year, bank): reconstruction error of the bank's adjacency row
    against next year's observed network, z-scored within the year.
    Scores can be negative; a below-average error is simply unremarkable.
    Rank 1 is the most anomalous bank of the year."""
    ahats, targets, feats = _prepare(model, dynet, panel)
    layers = list(model.layers)
    cells = list(model.grus)
    roster = dynet.roster
    rows: List[AnomalyRow] = []
    w_prev = [layer.weight for layer in layers]
    for t in range(len(targets)):
        w_t = [_gru_forward(cells[l], w_prev[l]) for l in range(len(cells))]
        h = feats[t]
        for l, layer in enumerate(layers):
            h = _apply_activation(ahats[t] @ h @ w_t[l], layer.activation)
        p = _sigmoid(h @ h.T)
        err = np.mean((p - targets[t]) ** 2, axis=1)
        std = err.std()
        z = (err - err.mean()) / std if std > 0 else np.zeros_like(err)
        year = dynet.networks[t].year
        rows.extend(_ranked_rows(year, list(zip(roster, map(float, z))),
                                 Method.TGNN))
        w_prev = w_t
    return AnomalyReport(rows=tuple(rows))


_BASELINE_RATIOS = ("npl_ratio", "cet1_ratio", "roa", "leverage")
_MAD_SCALE = 1.4826


def baseline_anomaly(panel: BankPanel, year: int) -> AnomalyReport:
    """Static single-year detector: max absolute robust z-score
    (median/MAD) over the four risk ratios. Banks with every ratio missing
    are excluded and listed in the report footnote. A zero MAD disables a
    ratio for the year (no robust scale to measure against)."""
    recs = panel.for_year(year)
    if len(recs) < 3:
        raise DegenerateYear(
            f"baseline needs at least 3 banks in {year}, found {len(recs)}")
    robust: Dict[str, Dict[str, float]] = {}
    for name in _BASELINE_RATIOS:
        vals = [(r.bank_id, getattr(r, name)) for r in recs]
        present = np.array([v for _, v in vals if v is not None])
        if present.size == 0:
            continue
        med = float(np.median(present))
        mad = float(np.median(np.abs(present - med)))
        scale = _MAD_SCALE * mad
        for bank_id, v in vals:
            if v is None:
                continue
            z = (v - med) / scale if scale > 0 else 0.0
            robust.setdefault(bank_id, {})[name] = z

    scored = []
    excluded = []
    for r in recs:
        zs = robust.get(r.bank_id)
        if zs:
            scored.append((r.bank_id, max(abs(z) for z in zs.values())))
        else:
            excluded.append((year, r.bank_id))
    return AnomalyReport(rows=tuple(_ranked_rows(year, scored,
                                                 Method.BASELINE)),
                         excluded=tuple(sorted(excluded)))


def top_k(report: AnomalyReport, year: int, k: int) -> Tuple[str, ...]:
    if k < 1:
        raise InvalidInput("k must be at least 1")
    rows = report.for_year(year)
    if len(rows) < k:
        raise InsufficientBanks(
            f"requested top {k} but year {year} has {len(rows)} ranked banks")
    return tuple(r.bank_id for r in rows[:k])


def max_displacement_permutation(adjacency: np.ndarray,
                                 index: int) -> np.ndarray:
    """Permute one node's off-diagonal weights to maximize the squared
    displacement of its row.

    By the rearrangement inequality the sum of (new - old)^2 over slots is
    maximized by assigning values in descending order to slots whose old
    values ascend, so the strongest tie lands where the weakest was. The
    result is symmetrized and keeps the unit diagonal, so it remains a
    valid similarity matrix.
    """
    n = adjacency.shape[0]
    if not 0 <= index < n:
        raise InvalidInput(f"index {index} outside 0..{n - 1}")
    out = np.array(adjacency, dtype=float)
    others = [j for j in range(n) if j != index]
    vals = np.array([out[index, j] for j in others])
    order = np.argsort(vals, kind="stable")
    for i, slot in enumerate(order):
        v = vals[order[len(order) - 1 - i]]
        j = others[slot]
        out[index, j] = v
        out[j, index] = v
    return out


def planted_anomaly_network(seed: int,
                            n_banks: int = 20,
                            n_years: int = 6,
                            planted_index: int = 6,
                            first_year: int = 2010,
                            within: float = 0.85,
                            across: float = 0.15,
                            jitter: float = 0.05,
                            ) -> Tuple[DynamicNetwork, str]:
    """Synthetic dynamic network with one structurally anomalous bank.

    Banks split into two equal communities with strong within-community
    and weak cross-community ties, plus fresh symmetric uniform jitter
    each year. In the final year the planted bank's edges are rearranged
    by max_displacement_permutation, which effectively swaps its
    community profile. A one-step-ahead reconstruction model trained on
    the sequence should flag that bank in the preceding year, where the
     'prediction' for the final year is scored.

    Returns the network and the planted bank's id.
    """
    if n_banks < 4:
        raise InvalidInput("need at least 4 banks for two communities")
    if n_years < 2:
        raise InvalidInput("need at least 2 years for one transition")
    if not 0 <= planted_index < n_banks:
        raise InvalidInput(
            f"planted_index {planted_index} outside 0..{n_banks - 1}")
    if not 0.0 < across < within <= 1.0:
        raise InvalidInput("need 0 < across < within <= 1")
    if jitter < 0:
        raise InvalidInput("jitter must be non-negative")
    rng = np.random.default_rng(seed)
    half = n_banks // 2
    base = np.where(
        (np.arange(n_banks)[:, None] < half)
        == (np.arange(n_banks)[None, :] < half),
        within, across)
    roster = tuple(f"B{i:02d}" for i in range(n_banks))
    nets = []
    for k in range(n_years):
        noise = rng.uniform(-jitter, jitter, size=(n_banks, n_banks))
        adj = np.clip(base + (noise + noise.T) / 2.0, 0.01, 1.0)
        np.fill_diagonal(adj, 1.0)
        if k == n_years - 1:
            adj = max_displacement_permutation(adj, planted_index)
        nets.append(YearNetwork(year=first_year + k, roster=roster,
                                adjacency=adj, gamma=1.0))
    return (DynamicNetwork(networks=tuple(nets), window=n_years),
            roster[planted_index])


MODEL_FORMAT_VERSION = 1


def save_model(model: TemporalModelState, path) -> None:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "rng_seed": model.rng_seed,
        "feature_spec": {
            "components": list(model.feature_spec.components),
            "include_degree": model.feature_spec.include_degree,
            "include_identity": model.feature_spec.include_identity,
        },
        "layers": [{
            "activation": layer.activation.value,
            "weight": layer.weight.tolist(),
        } for layer in model.layers],
        "grus": [{k: getattr(g, k).tolist() for k in GRU_FIELDS}
                 for g in model.grus],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_model(path) -> TemporalModelState:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise InvalidInput(
            f"unsupported model format: {doc.get('format_version')}")
    layers = tuple(GcnLayerParams(weight=np.array(d["weight"], dtype=float),
                                  activation=Activation(d["activation"]))
                   for d in doc["layers"])
    grus = tuple(GruCellParams(**{k: np.array(d[k], dtype=float)
                                  for k in GRU_FIELDS})
                 for d in doc["grus"])
    spec = FeatureSpec(
        components=tuple(doc["feature_spec"]["components"]),
        include_degree=doc["feature_spec"]["include_degree"],
        include_identity=doc["feature_spec"].get("include_identity", False))
    return TemporalModelState(layers=layers, grus=grus, feature_spec=spec,
                              rng_seed=doc["rng_seed"])
