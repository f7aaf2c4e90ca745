"""Trainable point-set generator: encoder, message passing on a kNN graph,
decoder, squash, optimized against closed-form discrepancy losses.

Gradients are reverse-mode, derived by hand for exactly this computation
graph; there is no autodiff framework underneath.  A finite-difference
checker (:func:`grad_check`) validates the derivation on small instances.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from lowdisc.discrepancy import hickernell_l2_sq, warnock_l2_sq
from lowdisc.pointset import PointSet

__all__ = [
    "KnnGraph",
    "MpmcModel",
    "TrainConfig",
    "TrainReport",
    "DivergenceError",
    "build_knn_graph",
    "forward",
    "loss",
    "loss_grad_points",
    "grad_check",
    "train",
    "optimize_direct",
]

LOSS_KINDS = ("l2", "hickernell")

# Instance caps for the finite-difference gradient checker.
GRAD_CHECK_MAX_N = 32
GRAD_CHECK_MAX_H = 16


class DivergenceError(RuntimeError):
    """Raised when training hits a non-finite loss; carries the partial report."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# losses and their gradients with respect to the output points


def loss(ps: PointSet, kind: str) -> float:
    """Squared discrepancy of a point set: Warnock L2 or Hickernell L2."""
    kind = kind.lower()
    if kind == "l2":
        return warnock_l2_sq(ps.coords)
    if kind == "hickernell":
        return hickernell_l2_sq(ps.coords)
    raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")


def _prod_except(f: np.ndarray) -> np.ndarray:
    """Per-row product over columns excluding each column (zero-safe)."""
    left = np.ones_like(f)
    right = np.ones_like(f)
    if f.shape[1] > 1:
        left[:, 1:] = np.cumprod(f[:, :-1], axis=1)
        right[:, :-1] = np.cumprod(f[:, :0:-1], axis=1)[:, ::-1]
    return left * right


def loss_grad_points(y: np.ndarray, kind: str) -> np.ndarray:
    """d(loss)/dY for either loss kind.

    Both closed forms share the shape const - (2/N) sum_i prod_k a(Y_ik)
    + (1/N^2) sum_ij prod_k b(max(Y_ik, Y_jk)) and differ only in constants.
    The max(ical) term uses the symmetric subgradient at ties: weight 1/2 to
    each argument; on the diagonal i=j the two halves recombine to the full
    derivative.
    """
    kind = kind.lower()
    if kind == "l2":
        a_const, b_const = 1.0, 1.0
    elif kind == "hickernell":
        a_const, b_const = 3.0, 2.0
    else:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    n, d = y.shape
    fa = (a_const - y * y) / 2.0
    grad = (2.0 / n) * y * _prod_except(fa)

    # Pairwise part.  P = product of nonzero factors, nz = zero-factor count,
    # so the product excluding column k stays exact when a factor is 0
    # (possible only for the L2 loss with a coordinate exactly at 1).
    p = np.ones((n, n))
    nz = np.zeros((n, n), dtype=np.int16)
    for k in range(d):
        fb = b_const - np.maximum.outer(y[:, k], y[:, k])
        zero = fb == 0.0
        nz += zero
        p *= np.where(zero, 1.0, fb)
    for k in range(d):
        col = y[:, k]
        fb = b_const - np.maximum.outer(col, col)
        zero = fb == 0.0
        others_zero = nz - zero
        p_exc = np.where(others_zero == 0, np.where(zero, p, p / np.where(zero, 1.0, fb)), 0.0)
        ind = (col[:, None] > col[None, :]) + 0.5 * (col[:, None] == col[None, :])
        grad[:, k] -= (2.0 / (n * n)) * (p_exc * ind).sum(axis=1)
    return grad


# ---------------------------------------------------------------------------
# graph


@dataclass(frozen=True)
class KnnGraph:
    """Neighbor structure fixed for a whole run, built from input positions.

    ``knn`` holds each node's k nearest others; the directed edge arrays are
    its symmetric closure (edge kept if either endpoint selected it), so
    every node has in-degree >= k.
    """

    knn: np.ndarray
    edge_src: np.ndarray
    edge_dst: np.ndarray
    degree: np.ndarray
    symmetric: bool = True

    def __post_init__(self):
        if (self.edge_src == self.edge_dst).any():
            raise ValueError("graph has a self-loop")
        if (self.degree < 1).any():
            raise ValueError("every node needs at least one incoming edge")

    @property
    def n(self) -> int:
        return self.knn.shape[0]

    @property
    def k(self) -> int:
        return self.knn.shape[1]


def build_knn_graph(inputs: PointSet, k: int) -> KnnGraph:
    """k nearest others per node (Euclidean in input coordinates), then
    symmetric closure.  Distance ties break toward the lower index."""
    n = inputs.n
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    x = inputs.coords
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    idx = np.broadcast_to(np.arange(n), (n, n))
    order = np.lexsort((idx, d2), axis=1)
    knn = order[:, :k]
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), k), knn.ravel()] = True
    adj |= adj.T
    dst, src = np.nonzero(adj)  # edge src -> dst for every adjacent pair
    degree = adj.sum(axis=1)
    return KnnGraph(knn=knn, edge_src=src, edge_dst=dst, degree=degree)


# ---------------------------------------------------------------------------
# model


def _init_params(d: int, h: int, layers: int, rng: np.random.Generator) -> dict:
    def glorot(fan_in, fan_out):
        lim = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=(fan_in, fan_out))

    params = {"we": glorot(d, h), "be": np.zeros(h)}
    for l in range(layers):
        params[f"wm{l}"] = glorot(h + d, h)
        params[f"bm{l}"] = np.zeros(h)
        params[f"wu{l}"] = glorot(2 * h, h)
        params[f"bu{l}"] = np.zeros(h)
    params["wd"] = glorot(h, d)
    params["bd"] = np.zeros(d)
    return params


@dataclass
class MpmcModel:
    """Weights of encoder, message/update transforms per layer, and decoder.

    ``params`` maps names to float64 arrays: ``we, be`` (encoder), per layer
    ``wm{l}, bm{l}`` (message) and ``wu{l}, bu{l}`` (update), ``wd, bd``
    (decoder).  ``squash`` selects the output clamp: ``sigmoid`` (smooth,
    default) or ``clamp`` (hard clip, kept for comparison).
    """

    d: int
    h: int
    layers: int
    params: dict
    squash: str = "sigmoid"

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError(f"need at least one message-passing layer, got {self.layers}")
        if self.h < self.d:
            raise ValueError(f"hidden width {self.h} must be >= dimension {self.d}")
        if self.squash not in ("sigmoid", "clamp"):
            raise ValueError(f"unknown squash mode {self.squash!r}")
        for name, arr in self.params.items():
            if not np.isfinite(arr).all():
                raise ValueError(f"parameter {name} contains non-finite values")

    @classmethod
    def init(cls, d: int, h: int, layers: int, seed: int, squash: str = "sigmoid") -> "MpmcModel":
        """Uniform fan-balanced init, deterministic for a fixed seed."""
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        params = _init_params(d, h, layers, rng)
        return cls(d=d, h=h, layers=layers, params=params, squash=squash)


def _forward_cache(model: MpmcModel, x: np.ndarray, graph: KnnGraph) -> dict:
    """Run the pipeline keeping every intermediate needed by backprop."""
    p = model.params
    src, dst, deg = graph.edge_src, graph.edge_dst, graph.degree
    cache = {"x": x}
    h_cur = np.tanh(x @ p["we"] + p["be"])
    cache["h0"] = h_cur
    rel = x[dst] - x[src]
    cache["rel"] = rel
    for l in range(model.layers):
        msg_in = np.concatenate([h_cur[src], rel], axis=1)
        m = np.tanh(msg_in @ p[f"wm{l}"] + p[f"bm{l}"])
        agg = np.zeros_like(h_cur)
        np.add.at(agg, dst, m)
        agg /= deg[:, None]
        u_in = np.concatenate([h_cur, agg], axis=1)
        h_cur = np.tanh(u_in @ p[f"wu{l}"] + p[f"bu{l}"])
        cache[f"msg_in{l}"] = msg_in
        cache[f"m{l}"] = m
        cache[f"u_in{l}"] = u_in
        cache[f"h{l + 1}"] = h_cur
    y_raw = h_cur @ p["wd"] + p["bd"]
    if model.squash == "sigmoid":
        y = 1.0 / (1.0 + np.exp(-y_raw))
    else:
        y = np.clip(y_raw, 0.0, 1.0)
    if not np.isfinite(y).all():
        raise ValueError("forward pass produced non-finite outputs")
    cache["y_raw"] = y_raw
    cache["y"] = y
    return cache


def forward(model: MpmcModel, inputs: PointSet, graph: KnnGraph) -> PointSet:
    """Map input points through the network; output lives in the unit cube."""
    if inputs.d != model.d:
        raise ValueError(f"input dimension {inputs.d} != model dimension {model.d}")
    if graph.n != inputs.n:
        raise ValueError(f"graph has {graph.n} nodes for {inputs.n} inputs")
    y = _forward_cache(model, inputs.coords, graph)["y"]
    return PointSet(y, provenance=f"mpmc d={model.d} h={model.h} layers={model.layers}")


def _backprop(model: MpmcModel, cache: dict, graph: KnnGraph, dy: np.ndarray) -> dict:
    """Parameter gradients for the cached forward pass, given d(loss)/dY."""
    p = model.params
    src, dst, deg = graph.edge_src, graph.edge_dst, graph.degree
    grads = {}
    y, y_raw = cache["y"], cache["y_raw"]
    if model.squash == "sigmoid":
        dy_raw = dy * y * (1.0 - y)
    else:
        dy_raw = dy * ((y_raw > 0.0) & (y_raw < 1.0))
    h_last = cache[f"h{model.layers}"]
    grads["wd"] = h_last.T @ dy_raw
    grads["bd"] = dy_raw.sum(axis=0)
    dh = dy_raw @ p["wd"].T
    for l in range(model.layers - 1, -1, -1):
        h_out = cache[f"h{l + 1}"]
        du_pre = dh * (1.0 - h_out * h_out)
        u_in = cache[f"u_in{l}"]
        grads[f"wu{l}"] = u_in.T @ du_pre
        grads[f"bu{l}"] = du_pre.sum(axis=0)
        du_in = du_pre @ p[f"wu{l}"].T
        dh_prev = du_in[:, : model.h].copy()
        dagg = du_in[:, model.h :]
        m = cache[f"m{l}"]
        dm = dagg[dst] / deg[dst, None]
        dm_pre = dm * (1.0 - m * m)
        msg_in = cache[f"msg_in{l}"]
        grads[f"wm{l}"] = msg_in.T @ dm_pre
        grads[f"bm{l}"] = dm_pre.sum(axis=0)
        dmsg_in = dm_pre @ p[f"wm{l}"].T
        np.add.at(dh_prev, src, dmsg_in[:, : model.h])
        dh = dh_prev
    h0 = cache["h0"]
    dh0_pre = dh * (1.0 - h0 * h0)
    grads["we"] = cache["x"].T @ dh0_pre
    grads["be"] = dh0_pre.sum(axis=0)
    return grads


def grad_check(
    model: MpmcModel,
    inputs: PointSet,
    graph: KnnGraph,
    kind: str,
    subsample: int = 48,
    seed: int = 0,
    step: float = 1e-5,
) -> float:
    """Worst relative error of analytic vs central-difference gradients.

    Samples parameters at random; a parameter whose perturbation flips the
    within-column order of any two output coordinates straddles a kink of
    the max(., .) terms, where finite differences are meaningless, and is
    skipped.  Guarded to small instances (n <= 32, h <= 16).
    """
    if inputs.n > GRAD_CHECK_MAX_N or model.h > GRAD_CHECK_MAX_H:
        raise ValueError(
            f"grad_check guarded to n <= {GRAD_CHECK_MAX_N}, h <= {GRAD_CHECK_MAX_H}; "
            f"got n={inputs.n}, h={model.h}"
        )
    x = inputs.coords
    cache = _forward_cache(model, x, graph)
    dy = loss_grad_points(cache["y"], kind)
    grads = _backprop(model, cache, graph, dy)
    if not all(np.isfinite(g).all() for g in grads.values()):
        raise ValueError("analytic gradient is non-finite")

    names = sorted(model.params)
    sizes = [model.params[nm].size for nm in names]
    total = sum(sizes)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    picks = rng.choice(total, size=min(subsample, total), replace=False)

    def column_orders(y):
        return [np.lexsort((np.arange(y.shape[0]), y[:, k])) for k in range(y.shape[1])]

    worst = 0.0
    for flat in picks:
        acc = int(flat)
        for nm, sz in zip(names, sizes):
            if acc < sz:
                break
            acc -= sz
        arr = model.params[nm]
        orig = arr.flat[acc]
        arr.flat[acc] = orig + step
        y_plus = _forward_cache(model, x, graph)["y"]
        arr.flat[acc] = orig - step
        y_minus = _forward_cache(model, x, graph)["y"]
        arr.flat[acc] = orig
        crossed = any(
            not np.array_equal(op, om)
            for op, om in zip(column_orders(y_plus), column_orders(y_minus))
        )
        if crossed:
            continue
        lp = loss(PointSet(np.clip(y_plus, 0.0, 1.0)), kind)
        lm = loss(PointSet(np.clip(y_minus, 0.0, 1.0)), kind)
        fd = (lp - lm) / (2.0 * step)
        ana = grads[nm].flat[acc]
        rel = abs(ana - fd) / max(abs(ana), abs(fd), 1e-10)
        worst = max(worst, rel)
    return worst


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    """Hyperparameters for :func:`train` and :func:`optimize_direct`.

    Defaults (h=64, layers=3, k=8, lr=1e-3, moment decay 0.9/0.999) are
    package choices, overridable per run.
    """

    n: int
    d: int
    epochs: int
    seed: int = 0
    batch: int = 8
    k: int = 8
    h: int = 64
    layers: int = 3
    lr: float = 1e-3
    loss_kind: str = "hickernell"
    squash: str = "sigmoid"
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.n < 2 or self.d < 1:
            raise ValueError(f"need n >= 2 and d >= 1, got n={self.n}, d={self.d}")
        if self.epochs < 1:
            raise ValueError(f"need epochs >= 1, got {self.epochs}")
        if self.batch < 1:
            raise ValueError(f"need batch >= 1, got {self.batch}")
        if not 1 <= self.k < self.n:
            raise ValueError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if self.loss_kind.lower() not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")


@dataclass
class TrainReport:
    """Loss trace and bookkeeping from one training run."""

    trace: list[float] = field(default_factory=list)
    best_trace: list[float] = field(default_factory=list)
    best_loss: float = math.inf
    best_epoch: int = -1
    grad_check_error: float | None = None
    wall_time_s: float = 0.0
    note: str = ""


class _Adam:
    """Adaptive-moment step over a dict of named parameter arrays."""

    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * (g * g)
            params[k] -= self.lr * (self.m[k] / b1c) / (np.sqrt(self.v[k] / b2c) + self.eps)


def train(cfg: TrainConfig, on_checkpoint=None) -> tuple[MpmcModel, list[PointSet], TrainReport]:
    """Gradient-train shared weights on ``batch`` independent point sets.

    The loss is the sum of the per-member squared discrepancies; the best
    output of each member across all epochs is retained.  Deterministic for
    a fixed seed in single-threaded execution.  ``on_checkpoint(epoch,
    sets)`` fires every ``cfg.checkpoint_every`` epochs when configured.
    Raises :class:`DivergenceError` on a non-finite loss.
    """
    t_start = time.perf_counter()
    root = np.random.SeedSequence(cfg.seed)
    # substream 0 -> weights, substreams 1..batch -> member inputs
    children = root.spawn(cfg.batch + 1)
    model = _init_from_rng(cfg, np.random.Generator(np.random.Philox(children[0])))

    members = []
    for b in range(cfg.batch):
        rng = np.random.Generator(np.random.Philox(children[b + 1]))
        x = PointSet(rng.random((cfg.n, cfg.d)), provenance=f"mpmc-input member={b}")
        members.append((x, build_knn_graph(x, cfg.k)))

    report = TrainReport()
    if cfg.n <= GRAD_CHECK_MAX_N and cfg.h <= GRAD_CHECK_MAX_H:
        x0, g0 = members[0]
        report.grad_check_error = grad_check(model, x0, g0, cfg.loss_kind, seed=cfg.seed)
    else:
        report.note = "gradient check skipped: instance above the small-instance guard"

    opt = _Adam(model.params, cfg.lr)
    best_member_loss = [math.inf] * cfg.batch
    best_member_set: list[PointSet | None] = [None] * cfg.batch
    kind = cfg.loss_kind.lower()

    for epoch in range(cfg.epochs):
        total = 0.0
        grads_sum = {k: np.zeros_like(v) for k, v in model.params.items()}
        snapshots = []
        for b, (x, graph) in enumerate(members):
            cache = _forward_cache(model, x.coords, graph)
            y = cache["y"]
            member_loss = loss(PointSet(y), kind)
            total += member_loss
            dy = loss_grad_points(y, kind)
            g = _backprop(model, cache, graph, dy)
            for k in grads_sum:
                grads_sum[k] += g[k]
            if member_loss < best_member_loss[b]:
                best_member_loss[b] = member_loss
                best_member_set[b] = PointSet(
                    y.copy(), provenance=f"mpmc member={b} epoch={epoch} loss={member_loss:.6g}"
                )
            snapshots.append(y)
        if not math.isfinite(total):
            report.wall_time_s = time.perf_counter() - t_start
            report.note = (report.note + " " if report.note else "") + (
                f"diverged at epoch {epoch}"
            )
            raise DivergenceError(f"non-finite loss at epoch {epoch}", report)
        report.trace.append(total)
        if total < report.best_loss:
            report.best_loss = total
            report.best_epoch = epoch
        report.best_trace.append(report.best_loss)
        if on_checkpoint is not None and cfg.checkpoint_every > 0 and (
            (epoch + 1) % cfg.checkpoint_every == 0
        ):
            on_checkpoint(epoch, [PointSet(s.copy()) for s in snapshots])
        opt.step(model.params, grads_sum)

    report.wall_time_s = time.perf_counter() - t_start
    sets = [s for s in best_member_set if s is not None]
    return model, sets, report


def _init_from_rng(cfg: TrainConfig, rng: np.random.Generator) -> MpmcModel:
    params = _init_params(cfg.d, cfg.h, cfg.layers, rng)
    return MpmcModel(d=cfg.d, h=cfg.h, layers=cfg.layers, params=params, squash=cfg.squash)


def optimize_direct(cfg: TrainConfig) -> PointSet:
    """Network-free ablation: optimize pre-squash coordinates directly.

    Same loss, optimizer, and determinism contracts as :func:`train`; the
    batch setting is ignored (a single set is optimized).
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed)))
    z = {"z": rng.normal(0.0, 1.0, size=(cfg.n, cfg.d))}
    opt = _Adam(z, cfg.lr)
    kind = cfg.loss_kind.lower()
    best_loss = math.inf
    best = None
    for epoch in range(cfg.epochs):
        y = 1.0 / (1.0 + np.exp(-z["z"]))
        cur = loss(PointSet(y), kind)
        if not math.isfinite(cur):
            raise DivergenceError(f"non-finite loss at epoch {epoch}", None)
        if cur < best_loss:
            best_loss = cur
            best = y.copy()
        dy = loss_grad_points(y, kind)
        opt.step(z, {"z": dy * y * (1.0 - y)})
    return PointSet(best, provenance=f"direct-opt n={cfg.n} d={cfg.d} loss={best_loss:.6g}")
