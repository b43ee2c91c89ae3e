"""Numeric forward pass and analytic gradients for the graph network.

Everything is plain float64 numpy: shared-MLP blocks for edge and node
features, a stack of edge-aware attention layers, mean pooling over nodes,
a parallel frame-feature branch, and the two prediction heads (frame-wise
and sequential via a bidirectional LSTM, forward-only).

Analytic parameter gradients cover the feed-forward and attention parts
(everything except the recurrent cell) and are verified against central
finite differences by ``grad_check``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import ModelShape, PipelineConfig
from .errors import (
    DimensionMismatch,
    EmptyGraph,
    HeadShapeMismatch,
    ManifestMismatch,
    MissingRecurrentParams,
)
from .rng import SplitMix64
from .types import PointGraph, Skeleton

# -- parameter containers ----------------------------------------------------


@dataclass
class AffineLayer:
    W: np.ndarray
    b: np.ndarray


@dataclass
class FcnBlock:
    """Stack of affine layers with a rectifier placement policy."""

    layers: List[AffineLayer]
    policy: str  # "all", "all_but_first", "all_but_last"


@dataclass
class GatLayer:
    """Single-head attention layer with an optional edge transform."""

    theta: np.ndarray  # d_in x d_out node transform
    theta_e: Optional[np.ndarray]  # d_edge x d_out edge transform
    attn: np.ndarray  # length 3 * d_out attention vector
    leaky_slope: float = 0.2
    dropout_rate: float = 0.5


@dataclass
class LstmDirection:
    Wx: np.ndarray  # D x 4H, gate order (input, forget, cell, output)
    Wh: np.ndarray  # H x 4H
    b: np.ndarray  # 4H


@dataclass
class LstmParams:
    fwd: LstmDirection
    bwd: LstmDirection


@dataclass
class ModelParams:
    shape: ModelShape
    h_node: FcnBlock
    h_pred: FcnBlock
    gat_layers: List[GatLayer]
    h_edge: Optional[FcnBlock] = None
    h_frame: Optional[FcnBlock] = None
    lstm: Optional[LstmParams] = None


def _act_at(policy: str, i: int, total: int) -> bool:
    if policy == "all":
        return True
    if policy == "all_but_first":
        return i > 0
    if policy == "all_but_last":
        return i < total - 1
    raise ValueError(f"unknown activation policy {policy!r}")


# -- named tensor manifest ---------------------------------------------------


def named_tensors(params: ModelParams) -> Dict[str, np.ndarray]:
    """Stable name -> array mapping over every learnable tensor."""
    out: Dict[str, np.ndarray] = {}

    def add_block(prefix, block):
        if block is None:
            return
        for i, layer in enumerate(block.layers):
            out[f"{prefix}.{i}.W"] = layer.W
            out[f"{prefix}.{i}.b"] = layer.b

    add_block("h_edge", params.h_edge)
    add_block("h_node", params.h_node)
    for l, g in enumerate(params.gat_layers):
        out[f"gat.{l}.theta"] = g.theta
        if g.theta_e is not None:
            out[f"gat.{l}.theta_e"] = g.theta_e
        out[f"gat.{l}.attn"] = g.attn
    add_block("h_frame", params.h_frame)
    add_block("h_pred", params.h_pred)
    if params.lstm is not None:
        for tag, d in (("fwd", params.lstm.fwd), ("bwd", params.lstm.bwd)):
            out[f"lstm.{tag}.Wx"] = d.Wx
            out[f"lstm.{tag}.Wh"] = d.Wh
            out[f"lstm.{tag}.b"] = d.b
    return out


def zero_grads(params: ModelParams) -> Dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in named_tensors(params).items()}


# -- initialization ----------------------------------------------------------


def _uniform_matrix(rng: SplitMix64, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    flat = np.array([rng.next_double() for _ in range(int(np.prod(shape)))])
    return ((flat * 2.0 - 1.0) * bound).reshape(shape)


def _init_block(rng, widths: Sequence[int], policy: str) -> FcnBlock:
    layers = [
        AffineLayer(
            W=_uniform_matrix(rng, (din, dout), din), b=np.zeros(dout)
        )
        for din, dout in zip(widths, widths[1:])
    ]
    return FcnBlock(layers=layers, policy=policy)


def representation_dim(shape: ModelShape, config: PipelineConfig) -> int:
    # an empty attention stack pools the processed node features directly
    d = shape.gat_units[-1] if shape.gat_units else shape.node_units[-1]
    if config.enable_frame_features:
        d += shape.frame_units[-1]
    return d


def head_output_dim(shape: ModelShape) -> int:
    return 3 * shape.output_size if shape.head == "pose" else shape.output_size


def init_params(shape: ModelShape, config: PipelineConfig, rng: SplitMix64) -> ModelParams:
    """Seeded symmetric-uniform, fan-in-scaled initialization.

    The mode flags of ``config`` decide which blocks exist and the input
    widths (19D vs raw 5D node features, presence of edge and frame
    branches).
    """
    d_node_in = 19 if config.enable_node_features else 5
    h_edge = None
    if config.enable_edge_features:
        h_edge = _init_block(rng, (6, *shape.edge_units), shape.edge_relu_policy)
    h_node = _init_block(rng, (d_node_in, *shape.node_units), "all")
    gat_layers = []
    d_in = shape.node_units[-1]
    for d_out in shape.gat_units:
        theta = _uniform_matrix(rng, (d_in, d_out), d_in)
        theta_e = (
            _uniform_matrix(rng, (shape.edge_units[-1], d_out), shape.edge_units[-1])
            if config.enable_edge_features
            else None
        )
        attn = _uniform_matrix(rng, (3 * d_out,), d_out)
        gat_layers.append(
            GatLayer(
                theta=theta,
                theta_e=theta_e,
                attn=attn,
                leaky_slope=shape.leaky_slope,
                dropout_rate=shape.dropout_rate,
            )
        )
        d_in = d_out
    h_frame = None
    if config.enable_frame_features:
        d_frame_in = 10 * 2 * d_node_in
        h_frame = _init_block(rng, (d_frame_in, *shape.frame_units), "all")
    pred_in = (
        2 * shape.lstm_hidden if shape.sequential else representation_dim(shape, config)
    )
    h_pred = _init_block(
        rng, (pred_in, *shape.pred_units, head_output_dim(shape)), "all_but_last"
    )
    lstm = None
    if shape.sequential:
        D = representation_dim(shape, config)
        H = shape.lstm_hidden
        lstm = LstmParams(
            fwd=LstmDirection(
                Wx=_uniform_matrix(rng, (D, 4 * H), D),
                Wh=_uniform_matrix(rng, (H, 4 * H), H),
                b=np.zeros(4 * H),
            ),
            bwd=LstmDirection(
                Wx=_uniform_matrix(rng, (D, 4 * H), D),
                Wh=_uniform_matrix(rng, (H, 4 * H), H),
                b=np.zeros(4 * H),
            ),
        )
    return ModelParams(
        shape=shape,
        h_edge=h_edge,
        h_node=h_node,
        gat_layers=gat_layers,
        h_frame=h_frame,
        h_pred=h_pred,
        lstm=lstm,
    )


# -- feed-forward blocks -----------------------------------------------------


def _fcn_forward(block: FcnBlock, X: np.ndarray, cache=None, signs=None) -> np.ndarray:
    total = len(block.layers)
    for i, layer in enumerate(block.layers):
        if X.shape[1] != layer.W.shape[0]:
            raise DimensionMismatch(
                f"input width {X.shape[1]} does not match layer weight {layer.W.shape}"
            )
        Z = X @ layer.W + layer.b
        use_relu = _act_at(block.policy, i, total)
        if signs is not None and use_relu:
            signs.append(Z > 0)
        if cache is not None:
            cache.append((X, Z, use_relu))
        X = np.maximum(Z, 0.0) if use_relu else Z
    return X


def _fcn_backward(block: FcnBlock, cache, dY, grads, prefix) -> np.ndarray:
    for i in reversed(range(len(block.layers))):
        Xin, Z, use_relu = cache[i]
        dZ = dY * (Z > 0) if use_relu else dY
        grads[f"{prefix}.{i}.W"] += Xin.T @ dZ
        grads[f"{prefix}.{i}.b"] += dZ.sum(axis=0)
        dY = dZ @ block.layers[i].W.T
    return dY


def fcn_forward(block: FcnBlock, x) -> np.ndarray:
    """Row-wise shared-MLP application; accepts one vector or a matrix of rows."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        return _fcn_forward(block, arr[None, :])[0]
    return _fcn_forward(block, arr)


# -- attention layer ---------------------------------------------------------


def _gat_forward(
    layer: GatLayer,
    X: np.ndarray,
    edges: np.ndarray,
    Xe: Optional[np.ndarray],
    cache=None,
    signs=None,
    training: bool = False,
    rng: Optional[SplitMix64] = None,
):
    if X.shape[1] != layer.theta.shape[0]:
        raise DimensionMismatch(
            f"node state width {X.shape[1]} does not match theta {layer.theta.shape}"
        )
    n = X.shape[0]
    d = layer.theta.shape[1]
    Q = X @ layer.theta
    w1 = layer.attn[:d]
    w2 = layer.attn[d : 2 * d]
    w3 = layer.attn[2 * d :]
    qw1 = Q @ w1
    qw2 = Q @ w2
    z_self = qw1 + qw2  # self logit uses the zero edge-feature vector
    E = edges.shape[0]
    if E:
        tgt = edges[:, 0]
        src = edges[:, 1]
        if layer.theta_e is not None:
            if Xe is None or Xe.shape[1] != layer.theta_e.shape[0]:
                raise DimensionMismatch("processed edge features do not match theta_e")
            U = Xe @ layer.theta_e
            z_e = qw1[tgt] + qw2[src] + U @ w3
        else:
            U = None
            z_e = qw1[tgt] + qw2[src]
    else:
        tgt = src = np.zeros(0, dtype=np.int64)
        U = None
        z_e = np.zeros(0)
    slope = layer.leaky_slope
    l_self = np.where(z_self > 0, z_self, slope * z_self)
    l_e = np.where(z_e > 0, z_e, slope * z_e)
    if signs is not None:
        signs.append(z_self > 0)
        signs.append(z_e > 0)
    # softmax per target over {self} + neighbors, max-subtracted
    mx = l_self.copy()
    if E:
        np.maximum.at(mx, tgt, l_e)
    exp_self = np.exp(l_self - mx)
    exp_e = np.exp(l_e - mx[tgt]) if E else np.zeros(0)
    denom = exp_self.copy()
    if E:
        np.add.at(denom, tgt, exp_e)
    a_self = exp_self / denom
    a_e = exp_e / denom[tgt] if E else np.zeros(0)
    if training and layer.dropout_rate > 0:
        if rng is None:
            raise ValueError("training-mode dropout requires an rng")
        keep = 1.0 - layer.dropout_rate
        mask_s = np.array([rng.next_double() < keep for _ in range(n)]) / keep
        mask_e = np.array([rng.next_double() < keep for _ in range(E)]) / keep
        a_self = a_self * mask_s
        a_e = a_e * mask_e
    out = a_self[:, None] * Q
    if E:
        np.add.at(out, tgt, a_e[:, None] * Q[src])
    if cache is not None:
        cache.append(
            dict(X=X, Xe=Xe, Q=Q, U=U, z_self=z_self, z_e=z_e, a_self=a_self, a_e=a_e,
                 tgt=tgt, src=src)
        )
    return out


def _gat_backward(layer: GatLayer, c: dict, G: np.ndarray, grads, prefix):
    d = layer.theta.shape[1]
    w1 = layer.attn[:d]
    w2 = layer.attn[d : 2 * d]
    w3 = layer.attn[2 * d :]
    Q, U = c["Q"], c["U"]
    tgt, src = c["tgt"], c["src"]
    a_self, a_e = c["a_self"], c["a_e"]
    E = tgt.shape[0]
    slope = layer.leaky_slope

    dQ = a_self[:, None] * G
    da_self = (G * Q).sum(axis=1)
    if E:
        Gt = G[tgt]
        da_e = (Gt * Q[src]).sum(axis=1)
        np.add.at(dQ, src, a_e[:, None] * Gt)
    else:
        da_e = np.zeros(0)
    dot = a_self * da_self
    if E:
        np.add.at(dot, tgt, a_e * da_e)
    dl_self = a_self * (da_self - dot)
    dl_e = a_e * (da_e - dot[tgt]) if E else np.zeros(0)
    dz_self = dl_self * np.where(c["z_self"] > 0, 1.0, slope)
    dz_e = dl_e * np.where(c["z_e"] > 0, 1.0, slope) if E else np.zeros(0)

    dw1 = dz_self @ Q
    dw2 = dz_self @ Q
    dw3 = np.zeros(d)
    dQ += dz_self[:, None] * (w1 + w2)
    dXe = None
    if E:
        dw1 = dw1 + dz_e @ Q[tgt]
        dw2 = dw2 + dz_e @ Q[src]
        np.add.at(dQ, tgt, dz_e[:, None] * w1)
        np.add.at(dQ, src, dz_e[:, None] * w2)
        if U is not None:
            dw3 = dz_e @ U
            dU = dz_e[:, None] * w3
            grads[f"{prefix}.theta_e"] += c["Xe"].T @ dU
            dXe = dU @ layer.theta_e.T
    grads[f"{prefix}.attn"] += np.concatenate([dw1, dw2, dw3])
    grads[f"{prefix}.theta"] += c["X"].T @ dQ
    dX = dQ @ layer.theta.T
    return dX, dXe


def gat_forward(layer: GatLayer, node_feats, edges, processed_edge_feats=None) -> np.ndarray:
    """One attention layer: softmax-normalized neighbor weighting with a
    self term (zero edge-feature vector) included in the softmax."""
    X = np.asarray(node_feats, dtype=np.float64)
    ed = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    Xe = (
        np.asarray(processed_edge_feats, dtype=np.float64)
        if processed_edge_feats is not None
        else None
    )
    return _gat_forward(layer, X, ed, Xe)


# -- frame representation ----------------------------------------------------


def _check_graph_matches(params: ModelParams, graph: PointGraph):
    if graph.node_features.shape[1] != params.h_node.layers[0].W.shape[0]:
        raise DimensionMismatch(
            f"graph node width {graph.node_features.shape[1]} does not match model"
        )
    if params.h_edge is not None and graph.edge_features.shape[1] != params.h_edge.layers[0].W.shape[0]:
        raise DimensionMismatch("graph edge features do not match the edge block")
    if params.h_frame is not None and graph.frame_features.shape[0] != params.h_frame.layers[0].W.shape[0]:
        raise DimensionMismatch("graph frame features do not match the frame block")


def _rep_forward_batch(
    params: ModelParams,
    graphs: Sequence[PointGraph],
    cache=None,
    signs=None,
    training: bool = False,
    rng: Optional[SplitMix64] = None,
) -> np.ndarray:
    """Mini-batched evaluation: node/edge arrays of all graphs concatenated
    with a frame-membership index; equals per-graph evaluation."""
    if not graphs:
        raise EmptyGraph("no graphs to represent")
    for g in graphs:
        if g.num_nodes == 0:
            raise EmptyGraph("cannot represent a graph with zero nodes")
        _check_graph_matches(params, g)
    node_feats = np.concatenate([g.node_features for g in graphs])
    counts = np.array([g.num_nodes for g in graphs])
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    edges = np.concatenate(
        [g.edges + off for g, off in zip(graphs, offsets)]
    ) if any(g.num_edges for g in graphs) else np.zeros((0, 2), dtype=np.int64)
    member = np.repeat(np.arange(len(graphs)), counts)

    Xe = None
    if params.h_edge is not None:
        edge_feats = np.concatenate([g.edge_features for g in graphs]) if edges.size else np.zeros((0, params.h_edge.layers[0].W.shape[0]))
        ec = [] if cache is not None else None
        Xe = _fcn_forward(params.h_edge, edge_feats, ec, signs)
        if cache is not None:
            cache["h_edge"] = ec
    nc = [] if cache is not None else None
    X = _fcn_forward(params.h_node, node_feats, nc, signs)
    if cache is not None:
        cache["h_node"] = nc
        cache["gat"] = []
        cache["relu_z"] = []
    n_layers = len(params.gat_layers)
    for i, layer in enumerate(params.gat_layers):
        gc = cache["gat"] if cache is not None else None
        X = _gat_forward(layer, X, edges, Xe, gc, signs, training, rng)
        if i < n_layers - 1:  # rectifier after every attention layer except the last
            if cache is not None:
                cache["relu_z"].append(X)
            if signs is not None:
                signs.append(X > 0)
            X = np.maximum(X, 0.0)
    # mean pool per graph
    m = np.zeros((len(graphs), X.shape[1]))
    np.add.at(m, member, X)
    m /= counts[:, None]
    if cache is not None:
        cache["member"] = member
        cache["counts"] = counts
        cache["pool_in"] = X
    if params.h_frame is not None:
        frame_mat = np.stack([g.frame_features for g in graphs])
        fc = [] if cache is not None else None
        Xf = _fcn_forward(params.h_frame, frame_mat, fc, signs)
        if cache is not None:
            cache["h_frame"] = fc
        rep = np.concatenate([m, Xf], axis=1)
    else:
        rep = m
    if cache is not None:
        cache["pool_dim"] = X.shape[1]
    return rep


def _rep_backward_batch(params: ModelParams, cache, dRep, grads):
    pool_dim = cache["pool_dim"]
    dm = dRep[:, :pool_dim]
    if params.h_frame is not None:
        dXf = dRep[:, pool_dim:]
        _fcn_backward(params.h_frame, cache["h_frame"], dXf, grads, "h_frame")
    member = cache["member"]
    counts = cache["counts"]
    dX = dm[member] / counts[member][:, None]
    dXe_total = None
    n_layers = len(params.gat_layers)
    for i in reversed(range(n_layers)):
        if i < n_layers - 1:
            dX = dX * (cache["relu_z"][i] > 0)
        dX, dXe = _gat_backward(
            params.gat_layers[i], cache["gat"][i], dX, grads, f"gat.{i}"
        )
        if dXe is not None:
            dXe_total = dXe if dXe_total is None else dXe_total + dXe
    _fcn_backward(params.h_node, cache["h_node"], dX, grads, "h_node")
    if params.h_edge is not None and dXe_total is not None:
        _fcn_backward(params.h_edge, cache["h_edge"], dXe_total, grads, "h_edge")


def frame_representation(params: ModelParams, graph: PointGraph) -> np.ndarray:
    """Single-frame representation: pooled node states, concatenated with
    the processed frame-feature vector when the frame branch exists."""
    return _rep_forward_batch(params, [graph])[0]


def frame_representation_batch(params: ModelParams, graphs: Sequence[PointGraph]) -> np.ndarray:
    return _rep_forward_batch(params, graphs)


# -- prediction heads --------------------------------------------------------


def _head_output(params: ModelParams, vec: np.ndarray) -> Union[Skeleton, np.ndarray]:
    shape = params.shape
    expected = head_output_dim(shape)
    if vec.shape[-1] != expected:
        raise HeadShapeMismatch(
            f"prediction width {vec.shape[-1]}, head expects {expected}"
        )
    if shape.head == "pose":
        return Skeleton(vec.reshape(shape.output_size, 3), shape.mid_hip_index)
    return vec


def predict_framewise(params: ModelParams, graph: PointGraph) -> Union[Skeleton, np.ndarray]:
    """Frame-wise head: the representation vector straight through h_pred.
    Pose output is an M x 3 skeleton; activity output is raw class scores."""
    rep = frame_representation(params, graph)
    out = _fcn_forward(params.h_pred, rep[None, :])[0]
    return _head_output(params, out)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _lstm_direction(d: LstmDirection, xs: np.ndarray) -> np.ndarray:
    H = d.Wh.shape[0]
    h = np.zeros(H)
    c = np.zeros(H)
    hs = np.zeros((xs.shape[0], H))
    for t, x in enumerate(xs):
        g = x @ d.Wx + h @ d.Wh + d.b
        i = _sigmoid(g[:H])
        f = _sigmoid(g[H : 2 * H])
        gg = np.tanh(g[2 * H : 3 * H])
        o = _sigmoid(g[3 * H :])
        c = f * c + i * gg
        h = o * np.tanh(c)
        hs[t] = h
    return hs


def predict_sequential(
    params: ModelParams, graphs: Sequence[PointGraph]
) -> Union[Skeleton, np.ndarray]:
    """Sequential head: per-frame representations through a bidirectional
    LSTM; the concatenated output at the last time index feeds h_pred."""
    if params.lstm is None:
        raise MissingRecurrentParams("model has no recurrent cell parameters")
    if not graphs:
        raise EmptyGraph("sequential prediction needs at least one graph")
    reps = _rep_forward_batch(params, graphs)
    hf = _lstm_direction(params.lstm.fwd, reps)
    hb = _lstm_direction(params.lstm.bwd, reps[::-1])
    # last time index: forward state at t = L-1, backward state at position
    # L-1 (the backward recursion's first step)
    last = np.concatenate([hf[-1], hb[0]])
    out = _fcn_forward(params.h_pred, last[None, :])[0]
    return _head_output(params, out)


# -- losses and gradients ----------------------------------------------------


def network_loss(
    params: ModelParams,
    graph: PointGraph,
    loss_kind: str,
    target,
    compute_grads: bool = True,
):
    """Frame-wise forward pass plus loss; optionally full analytic gradients.

    loss_kind is "mse" (target: flat vector matching the head width) or
    "cross_entropy" (target: integer class index).  Returns
    (loss, grads_or_None, activation_sign_pattern).
    """
    cache: dict = {}
    signs: list = []
    rep = _rep_forward_batch(params, [graph], cache, signs)
    pc: list = []
    pred = _fcn_forward(params.h_pred, rep, pc, signs)[0]
    if loss_kind == "mse":
        target = np.asarray(target, dtype=np.float64).reshape(-1)
        if target.shape != pred.shape:
            raise DimensionMismatch("mse target width does not match prediction")
        r = pred - target
        loss = float(np.mean(r * r))
        dpred = 2.0 * r / r.size
    elif loss_kind == "cross_entropy":
        label = int(target)
        shifted = pred - pred.max()
        log_z = np.log(np.exp(shifted).sum())
        loss = float(log_z - shifted[label])
        p = np.exp(shifted - log_z)
        dpred = p.copy()
        dpred[label] -= 1.0
    else:
        raise ValueError(f"unknown loss {loss_kind!r}")
    pattern = np.concatenate([s.ravel() for s in signs]) if signs else np.zeros(0, bool)
    if not compute_grads:
        return loss, None, pattern
    grads = zero_grads(params)
    dRep = _fcn_backward(params.h_pred, pc, dpred[None, :], grads, "h_pred")
    _rep_backward_batch(params, cache, dRep, grads)
    return loss, grads, pattern


def grad_check(
    params: ModelParams,
    graph: PointGraph,
    loss_selector: str,
    target,
    step: float = 1e-5,
    max_entries_per_tensor: Optional[int] = None,
    rng: Optional[SplitMix64] = None,
    denom_floor: float = 1e-6,
) -> dict:
    """Compare analytic gradients against central finite differences.

    Entries where the perturbation flips any rectifier pre-activation sign
    are kink-flagged and excluded from the per-tensor maximum (the analytic
    subgradient is not comparable across a kink).  Large tensors can be
    subsampled via max_entries_per_tensor (seeded, reproducible).
    The recurrent cell is excluded (forward-only by design).

    The relative error denominator is floored at ``denom_floor``: central
    differences at step h resolve a derivative only down to roughly
    eps_machine * |loss| / h (about 1e-11 here), so entries whose true
    gradient sits below the floor are measured against it instead of
    against pure roundoff noise.
    """
    _, grads, _ = network_loss(params, graph, loss_selector, target)
    tensors = named_tensors(params)
    report: dict = {}
    sampler = rng or SplitMix64(0)
    overall = 0.0
    for name, tensor in tensors.items():
        if name.startswith("lstm."):
            continue
        flat = tensor.reshape(-1)
        size = flat.size
        if max_entries_per_tensor is not None and size > max_entries_per_tensor:
            idx = sampler.partial_shuffle_pick(size, max_entries_per_tensor)
        else:
            idx = range(size)
        gflat = grads[name].reshape(-1)
        max_rel = 0.0
        kinks = 0
        checked = 0
        for i in idx:
            orig = flat[i]
            flat[i] = orig + step
            lp, _, sp = network_loss(params, graph, loss_selector, target, compute_grads=False)
            flat[i] = orig - step
            lm, _, sm = network_loss(params, graph, loss_selector, target, compute_grads=False)
            flat[i] = orig
            if sp.shape != sm.shape or not np.array_equal(sp, sm):
                kinks += 1
                continue
            numeric = (lp - lm) / (2.0 * step)
            analytic = gflat[i]
            denom = max(abs(numeric), abs(analytic), denom_floor)
            max_rel = max(max_rel, abs(numeric - analytic) / denom)
            checked += 1
        report[name] = {"max_rel_err": max_rel, "checked": checked, "kinks": kinks}
        overall = max(overall, max_rel)
    report["overall_max_rel_err"] = overall
    return report


# -- weights file ------------------------------------------------------------

_WEIGHTS_MAGIC = b"PCGW"
_WEIGHTS_VERSION = 1


def save_params(params: ModelParams, path) -> None:
    """Named-tensor manifest: (name, shape, little-endian float64 data)."""
    tensors = named_tensors(params)
    with open(path, "wb") as fh:
        fh.write(_WEIGHTS_MAGIC)
        fh.write(struct.pack("<II", _WEIGHTS_VERSION, len(tensors)))
        for name, arr in tensors.items():
            nb = name.encode("utf-8")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f8", copy=False).tobytes(order="C"))


def read_weights_manifest(path) -> Dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(4) != _WEIGHTS_MAGIC:
            raise ManifestMismatch(f"{path}: not a weights file")
        version, count = struct.unpack("<II", fh.read(8))
        if version != _WEIGHTS_VERSION:
            raise ManifestMismatch(f"{path}: unsupported weights version {version}")
        out: Dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", fh.read(2))
            name = fh.read(nlen).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            dims = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            n_vals = int(np.prod(dims)) if ndim else 1
            data = np.frombuffer(fh.read(8 * n_vals), dtype="<f8").reshape(dims)
            out[name] = data.astype(np.float64)
        return out


def load_params(path, shape: ModelShape, config: PipelineConfig) -> ModelParams:
    """Rebuild ModelParams from a weights file; names and shapes must match
    the manifest implied by (shape, config) exactly."""
    params = init_params(shape, config, SplitMix64(0))
    stored = read_weights_manifest(path)
    expected = named_tensors(params)
    if set(stored) != set(expected):
        missing = set(expected) - set(stored)
        extra = set(stored) - set(expected)
        raise ManifestMismatch(
            f"{path}: tensor names differ (missing={sorted(missing)}, extra={sorted(extra)})"
        )
    for name, arr in expected.items():
        if stored[name].shape != arr.shape:
            raise ManifestMismatch(
                f"{path}: tensor {name} has shape {stored[name].shape}, expected {arr.shape}"
            )
        arr[...] = stored[name]
    return params
