"""Small float64 numerical core: kernels, losses with analytic gradients, Adam.

Dense matrices are plain ``float64`` numpy arrays; the sparse propagation
operator is a sorted-index CSR matrix. There is no autodiff tape: every
model in the package writes its own backward pass and checks it with
:func:`grad_check`.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {x.shape}")
    return x


def dense_matmul(a, b) -> np.ndarray:
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def spmm(adj: sp.csr_matrix, h) -> np.ndarray:
    """Sparse-dense product ``adj @ h``."""
    h = _as_matrix(h)
    if adj.shape[0] != adj.shape[1] or adj.shape[1] != h.shape[0]:
        raise ValueError(f"shape mismatch: {adj.shape} x {h.shape}")
    return np.asarray(adj @ h)


def relu(x) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x, grad_out) -> np.ndarray:
    """Gradient of relu at ``x``; the subgradient at 0 is taken as 0."""
    # a multiply by the mask is several times faster than np.where with a scalar
    return grad_out * (np.asarray(x) > 0)


def softmax(logits) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(logits) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def balanced_class_weights(labels, mask) -> tuple[float, float]:
    """Weights inversely proportional to class frequency on ``mask``.

    A class absent from ``mask`` gets weight 1 (it contributes no terms).
    """
    y = np.asarray(labels)[np.asarray(mask)]
    n = y.size
    counts = np.bincount(y, minlength=2)
    return tuple(n / (2.0 * c) if c else 1.0 for c in counts)


def softmax_ce_loss(logits, labels, mask, class_weights=(1.0, 1.0)):
    """Class-weighted softmax cross-entropy averaged over the masked rows.

    Returns ``(loss, grad)`` where ``grad`` has the shape of ``logits`` and
    is zero outside ``mask``.
    """
    logits = _as_matrix(logits)
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=np.int64).ravel()
    if mask.size == 0:
        raise ValueError("empty mask")
    if not np.all(np.isfinite(logits[mask])):
        raise ValueError("non-finite logits")
    w = np.asarray(class_weights, dtype=np.float64)[labels[mask]]
    sub = logits[mask]
    y = labels[mask]
    logp = log_softmax(sub)
    per_node = -logp[np.arange(mask.size), y]
    loss = float(np.sum(w * per_node) / mask.size)

    delta = np.exp(logp)
    delta[np.arange(mask.size), y] -= 1.0
    grad = np.zeros_like(logits)
    grad[mask] = delta * (w / mask.size)[:, None]
    return loss, grad


def mse_loss(pred, target):
    pred, target = _as_matrix(pred), _as_matrix(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / diff.size


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class ParamStore:
    """Named parameter matrices with same-shaped gradient accumulators.

    Iteration order is insertion order and is the order Adam updates in.
    """

    def __init__(self, params=None):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        for name, value in (params or {}).items():
            self.add(name, value)

    def add(self, name: str, value) -> None:
        if name in self.params:
            raise KeyError(f"duplicate parameter name {name!r}")
        value = np.array(value, dtype=np.float64)
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def __iter__(self):
        return iter(self.params)

    def __len__(self):
        return len(self.params)

    def names(self) -> list[str]:
        return list(self.params)

    def set_grad(self, name: str, grad) -> None:
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.params[name].shape:
            raise ValueError(
                f"gradient shape {grad.shape} != parameter shape {self.params[name].shape} for {name!r}"
            )
        self.grads[name][...] = grad

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def copy(self) -> "ParamStore":
        return ParamStore({k: v.copy() for k, v in self.params.items()})

    def load(self, other: "ParamStore") -> None:
        for name in self.params:
            self.params[name][...] = other.params[name]

    def size(self) -> int:
        return sum(v.size for v in self.params.values())


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: ParamStore, state: AdamState) -> None:
    """Bias-corrected Adam update, in place; gradients are zeroed afterwards."""
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name in params:
        p, g = params.params[name], params.grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    params.zero_grad()


def grad_check(
    loss_and_grad: Callable[[], float],
    params: ParamStore,
    perturbation: float = 1e-6,
    max_entries: int = 2000,
    seed: int = 0,
) -> float:
    """Compare analytic gradients against central finite differences.

    ``loss_and_grad`` evaluates the loss at the current values of ``params``
    and writes the analytic gradient into ``params.grads``. Every entry is
    checked when the store has at most ``max_entries`` entries, otherwise a
    random subsample of ``max_entries`` (at least 100) entries.

    Returns the maximum of ``|analytic - numeric| / max(1, |analytic|, |numeric|)``.
    """
    if not 1e-7 <= perturbation <= 1e-3:
        raise ValueError("perturbation must lie in [1e-7, 1e-3]")
    params.zero_grad()
    loss = loss_and_grad()
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite loss")
    analytic = {k: g.copy() for k, g in params.grads.items()}

    entries = [(name, idx) for name in params for idx in range(params[name].size)]
    if len(entries) > max_entries:
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(entries), size=max(100, max_entries), replace=False)
        entries = [entries[i] for i in sorted(pick)]

    worst = 0.0
    for name, idx in entries:
        flat = params[name].reshape(-1)
        orig = flat[idx]
        flat[idx] = orig + perturbation
        up = loss_and_grad()
        flat[idx] = orig - perturbation
        down = loss_and_grad()
        flat[idx] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise FloatingPointError("non-finite loss")
        numeric = (up - down) / (2.0 * perturbation)
        a = analytic[name].reshape(-1)[idx]
        worst = max(worst, abs(a - numeric) / max(1.0, abs(a), abs(numeric)))
    params.zero_grad()
    for name, g in analytic.items():
        params.grads[name][...] = g
    return worst
