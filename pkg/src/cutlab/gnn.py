"""Bipartite message-passing cut scorer with hand-written reverse-mode gradients.

Every cut of one instance shares the constraint matrix, so the network runs on
a stack of ``k`` graphs at once: variable features have shape ``(k, n, 3)``
and the weighted adjacency ``(m, n)`` is broadcast over the stack.

Per round, constraints then variables are updated as
``h <- h + relu(sum_w(neighbours) @ W + b)``; the readout is a linear map of
the mean variable embedding.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .bnc import ScoredCutSet
from .instance import Cut, IlpInstance

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training loss became NaN in epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class CutGraph:
    """Bipartite encoding of an (instance, cut) pair.

    ``edges`` holds ``(constraint, variable, weight)`` triples, one per nonzero
    of ``A``.
    """

    var_features: np.ndarray  # (n, 3): objective entry, cut coefficient, cut rhs
    con_features: np.ndarray  # (m, 3): all ones
    edges: tuple[tuple[int, int, float], ...]

    @property
    def n(self) -> int:
        return len(self.var_features)

    @property
    def m(self) -> int:
        return len(self.con_features)

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.m, self.n))
        for i, j, w in self.edges:
            adj[i, j] += w
        return adj


def encode(inst: IlpInstance, cut: Cut) -> CutGraph:
    if len(cut.coeffs) != inst.n:
        raise ValueError(f"cut has {len(cut.coeffs)} coefficients, expected {inst.n}")
    beta = float(cut.rhs)
    var = np.array([[float(cj), float(a), beta] for cj, a in zip(inst.c, cut.coeffs)])
    edges = tuple(
        (i, j, float(a)) for i, row in enumerate(inst.A) for j, a in enumerate(row) if a != 0
    )
    return CutGraph(var, np.ones((inst.m, 3)), edges)


@dataclass
class CutStack:
    """All cuts of one instance, ready for a batched forward pass."""

    adjacency: np.ndarray  # (m, n)
    var_features: np.ndarray  # (k, n, 3)

    @property
    def k(self) -> int:
        return self.var_features.shape[0]

    @classmethod
    def from_instance(cls, inst: IlpInstance, cuts: Sequence[Cut]) -> "CutStack":
        if not cuts:
            raise ValueError("need at least one cut")
        adj = np.array([[float(a) for a in row] for row in inst.A])
        c = np.array([float(v) for v in inst.c])
        feats = np.empty((len(cuts), inst.n, 3))
        feats[:, :, 0] = c
        for q, cut in enumerate(cuts):
            feats[q, :, 1] = [float(a) for a in cut.coeffs]
            feats[q, :, 2] = float(cut.rhs)
        return cls(adj, feats)

    @classmethod
    def from_graphs(cls, graphs: Sequence[CutGraph]) -> "CutStack":
        adj = graphs[0].adjacency()
        return cls(adj, np.stack([g.var_features for g in graphs]))


# --------------------------------------------------------------------- model


def _param_shapes(rounds: int, hidden: int) -> dict[str, tuple[int, ...]]:
    shapes = {"embed.W": (3, hidden), "embed.b": (hidden,)}
    for t in range(rounds):
        shapes[f"round{t}.v2c.W"] = (hidden, hidden)
        shapes[f"round{t}.v2c.b"] = (hidden,)
        shapes[f"round{t}.c2v.W"] = (hidden, hidden)
        shapes[f"round{t}.c2v.b"] = (hidden,)
    shapes["readout.W"] = (hidden,)
    shapes["readout.b"] = (1,)
    return shapes


@dataclass
class GnnModel:
    rounds: int = 2
    hidden: int = 64
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.rounds < 1 or self.hidden < 1:
            raise ValueError("rounds and hidden must be positive")
        shapes = _param_shapes(self.rounds, self.hidden)
        if not self.params:
            self.params = {k: np.zeros(s) for k, s in shapes.items()}
        if set(self.params) != set(shapes):
            raise ValueError("parameter names do not match the architecture")
        for k, s in shapes.items():
            self.params[k] = np.asarray(self.params[k], dtype=np.float64).reshape(s)

    @classmethod
    def initialize(cls, rounds: int = 2, hidden: int = 64, seed: int = 0) -> "GnnModel":
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in _param_shapes(rounds, hidden).items():
            if name.endswith(".b"):
                params[name] = np.zeros(shape)
            else:
                fan_in, fan_out = (shape[0], shape[1]) if len(shape) == 2 else (shape[0], 1)
                lim = math.sqrt(6.0 / (fan_in + fan_out))
                params[name] = rng.uniform(-lim, lim, size=shape)
        return cls(rounds, hidden, params)

    @property
    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> "GnnModel":
        return GnnModel(self.rounds, self.hidden, {k: v.copy() for k, v in self.params.items()})

    def to_json(self, manifest: dict | None = None) -> dict:
        return {
            "architecture": {"rounds": self.rounds, "hidden": self.hidden},
            "params": {k: self.params[k].tolist() for k in sorted(self.params)},
            "manifest": manifest or {},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GnnModel":
        arch = obj["architecture"]
        return cls(arch["rounds"], arch["hidden"], {k: np.array(v) for k, v in obj["params"].items()})

    def save(self, path, manifest: dict | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(manifest), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "GnnModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def digest(self) -> str:
        h = hashlib.sha256()
        for k in sorted(self.params):
            h.update(k.encode())
            h.update(np.ascontiguousarray(self.params[k]).tobytes())
        return h.hexdigest()


# ------------------------------------------------------------------- forward


def _relu(x):
    return np.maximum(x, 0.0)


def forward_stack(model: GnnModel, stack: CutStack, keep: bool = False):
    """Scores for every graph of ``stack``; with ``keep`` also return the tape."""
    P = model.params
    A = stack.adjacency
    Xv = stack.var_features
    k, n, _ = Xv.shape
    m = A.shape[0]
    Zv = Xv @ P["embed.W"] + P["embed.b"]
    Hv = _relu(Zv)
    Zc = np.ones(3) @ P["embed.W"] + P["embed.b"]  # constraint features are all ones
    Hc = np.broadcast_to(_relu(Zc), (k, m, model.hidden))
    tape = []
    for t in range(model.rounds):
        Mc = np.matmul(A, Hv)
        Pc = Mc @ P[f"round{t}.v2c.W"] + P[f"round{t}.v2c.b"]
        Hc = Hc + _relu(Pc)
        Mv = np.matmul(A.T, Hc)
        Pv = Mv @ P[f"round{t}.c2v.W"] + P[f"round{t}.c2v.b"]
        Hv = Hv + _relu(Pv)
        tape.append((Mc, Pc, Mv, Pv))
    g = Hv.mean(axis=1)
    out = g @ P["readout.W"] + P["readout.b"][0]
    if keep:
        return out, (Xv, Zv, Zc, tape, g, n, m, k)
    return out


def forward(model: GnnModel, g: CutGraph) -> float:
    return float(forward_stack(model, CutStack.from_graphs([g]))[0])


def backward_stack(model: GnnModel, stack: CutStack, dout: np.ndarray, tape) -> dict[str, np.ndarray]:
    """Reverse pass: gradients of ``sum(dout * scores)`` with respect to every parameter."""
    P = model.params
    A = stack.adjacency
    Xv, Zv, Zc, rounds, g, n, m, k = tape
    h = model.hidden
    grads = {}
    grads["readout.W"] = g.T @ dout
    grads["readout.b"] = np.array([dout.sum()])
    dHv = np.broadcast_to((dout[:, None] * P["readout.W"][None, :] / n)[:, None, :], (k, n, h)).copy()
    dHc = np.zeros((k, m, h))
    for t in reversed(range(model.rounds)):
        Mc, Pc, Mv, Pv = rounds[t]
        dPv = dHv * (Pv > 0)
        grads[f"round{t}.c2v.W"] = Mv.reshape(-1, h).T @ dPv.reshape(-1, h)
        grads[f"round{t}.c2v.b"] = dPv.sum(axis=(0, 1))
        dHc = dHc + np.matmul(A, dPv @ P[f"round{t}.c2v.W"].T)
        dPc = dHc * (Pc > 0)
        grads[f"round{t}.v2c.W"] = Mc.reshape(-1, h).T @ dPc.reshape(-1, h)
        grads[f"round{t}.v2c.b"] = dPc.sum(axis=(0, 1))
        dHv = dHv + np.matmul(A.T, dPc @ P[f"round{t}.v2c.W"].T)
    dZv = dHv * (Zv > 0)
    dZc = dHc.sum(axis=0) * (Zc > 0)
    grads["embed.W"] = Xv.reshape(-1, 3).T @ dZv.reshape(-1, h) + np.ones((m, 3)).T @ dZc
    grads["embed.b"] = dZv.sum(axis=(0, 1)) + dZc.sum(axis=0)
    return grads


# ---------------------------------------------------------------------- loss


def _log_softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max()
    return z - np.log(np.exp(z).sum())


def _check_targets(y: np.ndarray) -> None:
    if y.ndim != 1 or y.size == 0:
        raise ValueError("targets must be a nonempty vector")
    if (y < 0).any() or not math.isclose(float(y.sum()), 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError("targets must be a probability vector")


def loss(x, y) -> float:
    """Cross-entropy ``-(1/k) sum_k y_k log softmax(x)_k``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("scores and targets differ in length")
    _check_targets(y)
    return float(-(y * _log_softmax(x)).sum() / x.size)


def _loss_and_grad(x: np.ndarray, y: np.ndarray, exact: bool = False) -> tuple[float, np.ndarray]:
    ls = _log_softmax(x)
    k = x.size
    val = -(y * ls).sum() / k
    return (val if exact else float(val)), (np.exp(ls) * y.sum() - y) / k


class Target(str, enum.Enum):
    GAP_CLOSED = "gap"
    TREE_REDUCTION = "tree"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    learning_rate: float = 1e-3
    batch_size: int = 32
    temperature: float = 1.0
    target: Target = Target.GAP_CLOSED
    seed: int = 0
    rounds: int = 2
    hidden: int = 64
    validation_fraction: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "target", Target(self.target))
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")

    def to_json(self) -> dict:
        out = asdict(self)
        out["target"] = self.target.value
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown training option(s): {', '.join(sorted(unknown))}")
        return cls(**obj)


def benefit_scores(scored: ScoredCutSet, target: Target | str) -> np.ndarray:
    """Per-cut scores where larger is better."""
    if Target(target) is Target.GAP_CLOSED:
        return np.array([float(e.gap_closed) for e in scored.entries])
    return np.array([float(e.relative_reduction) for e in scored.entries])


def make_targets(scored: ScoredCutSet, cfg: TrainConfig) -> np.ndarray:
    """``softmax(benefit / temperature)`` over the instance's cuts."""
    if not scored.entries:
        raise ValueError(f"{scored.instance_id!r} has no cuts")
    s = benefit_scores(scored, cfg.target) / cfg.temperature
    return np.exp(_log_softmax(s))


# ------------------------------------------------------------------ training


def backward(model: GnnModel, batch: Sequence[tuple[CutStack, np.ndarray]]) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss over ``batch`` and its gradient; contributions are summed in batch order.

    Targets are used as given (no probability check), so scaling them scales
    the loss and every gradient entry by the same factor.
    """
    total = 0.0
    grads = {k: np.zeros_like(v) for k, v in model.params.items()}
    for stack, y in batch:
        out, tape = forward_stack(model, stack, keep=True)
        val, dout = _loss_and_grad(out, np.asarray(y, dtype=float))
        total += val
        for name, g in backward_stack(model, stack, dout, tape).items():
            grads[name] += g
    scale = 1.0 / len(batch)
    for g in grads.values():
        g *= scale
    return total * scale, grads


def grad_check(model: GnnModel, graphs: CutStack | Sequence[CutGraph], targets, step: float = 1e-6,
               floor: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error is ``|a - f| / max(|a|, |f|, floor)``.  The differences are
    taken in extended precision so that gradients which are exactly zero do
    not drown in float64 roundoff.
    """
    stack = graphs if isinstance(graphs, CutStack) else CutStack.from_graphs(list(graphs))
    y = np.asarray(targets, dtype=float)
    _, grads = backward(model, [(stack, y)])
    wide = GnnModel(model.rounds, model.hidden, {})
    wide.params = {k: v.astype(np.longdouble) for k, v in model.params.items()}
    wide_stack = CutStack(stack.adjacency.astype(np.longdouble), stack.var_features.astype(np.longdouble))
    y_wide = y.astype(np.longdouble)
    h = np.longdouble(step)

    def f():
        return _loss_and_grad(forward_stack(wide, wide_stack), y_wide, exact=True)[0]

    worst = 0.0
    for name, p in wide.params.items():
        flat = p.reshape(-1)
        gflat = grads[name].reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = f()
            flat[idx] = orig - h
            down = f()
            flat[idx] = orig
            fd = float((up - down) / (2 * h))
            a = float(gflat[idx])
            worst = max(worst, abs(a - fd) / max(abs(a), abs(fd), floor))
    return worst


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for name in sorted(params):
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainResult:
    model: GnnModel
    train_losses: list[float]
    val_losses: list[float]
    best_epoch: int
    n_train: int
    n_val: int


def _canonical_order(dataset: Sequence[ScoredCutSet]) -> list[ScoredCutSet]:
    def key(s: ScoredCutSet):
        blob = json.dumps(s.to_json(), sort_keys=True).encode()
        return (s.instance_id, hashlib.sha256(blob).hexdigest())

    return sorted(dataset, key=key)


def train_detailed(dataset: Sequence[ScoredCutSet], cfg: TrainConfig) -> TrainResult:
    usable = [s for s in _canonical_order(dataset) if s.entries]
    if not usable:
        raise ValueError("no labelled instance with at least one cut")
    if any(s.instance is None for s in usable):
        raise ValueError("training needs the instance attached to every scored cut set")
    rng = np.random.default_rng(cfg.seed)
    examples = [
        (CutStack.from_instance(s.instance, [e.cut for e in s.entries]), make_targets(s, cfg))
        for s in usable
    ]
    order = rng.permutation(len(examples))
    n_val = int(round(cfg.validation_fraction * len(examples))) if len(examples) >= 10 else 0
    val = [examples[i] for i in order[:n_val]]
    tr = [examples[i] for i in order[n_val:]]
    model = GnnModel.initialize(cfg.rounds, cfg.hidden, int(rng.integers(2**63)))
    opt = Adam(lr=cfg.learning_rate)
    best, best_loss, best_epoch = model.copy(), math.inf, -1
    train_losses, val_losses = [], []
    for epoch in range(cfg.epochs):
        perm = rng.permutation(len(tr))
        epoch_loss = 0.0
        for start in range(0, len(tr), cfg.batch_size):
            batch = [tr[i] for i in perm[start : start + cfg.batch_size]]
            val_b, grads = backward(model, batch)
            if not math.isfinite(val_b):
                raise TrainingDivergedError(epoch)
            epoch_loss += val_b * len(batch)
            opt.step(model.params, grads)
        train_losses.append(epoch_loss / len(tr))
        monitor = val if val else tr
        v = sum(_loss_and_grad(forward_stack(model, s), y)[0] for s, y in monitor) / len(monitor)
        if not math.isfinite(v):
            raise TrainingDivergedError(epoch)
        val_losses.append(v)
        if v < best_loss:
            best, best_loss, best_epoch = model.copy(), v, epoch
        log.debug("epoch %d train %.6f val %.6f", epoch, train_losses[-1], v)
    return TrainResult(best, train_losses, val_losses, best_epoch, len(tr), len(val))


def train(dataset: Sequence[ScoredCutSet], cfg: TrainConfig) -> GnnModel:
    """Minibatch Adam on the per-instance cross-entropy; returns the best-validation model."""
    return train_detailed(dataset, cfg).model


def select_cut(model: GnnModel, inst: IlpInstance, cuts: Sequence[Cut], seed: int) -> int:
    """Index of the highest-scoring cut; exact ties are broken uniformly at random."""
    if not cuts:
        raise ValueError("no cuts to choose from")
    scores = forward_stack(model, CutStack.from_instance(inst, cuts))
    ties = np.flatnonzero(scores == scores.max())
    if len(ties) == 1:
        return int(ties[0])
    return int(ties[np.random.default_rng(seed).integers(len(ties))])
