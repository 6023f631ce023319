"""Adam-family optimizers over named parameter tensors.

Two variants behind one class: plain Adam, and AdamW with decoupled
weight decay. State is keyed by parameter name so it survives a
checkpoint round trip exactly.
"""

import numpy as np

from .autodiff import DTYPE, Tensor


def clip_global_norm(tensors: list[Tensor], max_norm: float) -> float:
    """Scale all gradients in place so their joint L2 norm is <= max_norm.

    Returns the pre-clip norm. Tensors without gradients are skipped.
    """
    grads = [t.grad for t in tensors if t.grad is not None]
    if not grads:
        return 0.0
    total = 0.0
    for g in grads:
        total += float(np.sum(g * g))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for t in tensors:
            if t.grad is not None:
                t.grad = t.grad * scale
    return norm


class AdamOptimizer:
    """Adam with optional decoupled weight decay (AdamW when decoupled=True).

    param_groups: list of (tensors, learning_rate) pairs. Every tensor must
    carry a unique name; state is stored per name.
    """

    def __init__(self, param_groups, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.0, decoupled=False):
        self.groups = []
        seen = set()
        for tensors, lr in param_groups:
            for t in tensors:
                if t.name is None:
                    raise ValueError("optimizer parameters must be named")
                if t.name in seen:
                    raise ValueError(f"parameter appears twice: {t.name}")
                seen.add(t.name)
            self.groups.append((list(tensors), float(lr)))
        self.beta1, self.beta2 = betas
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.decoupled = bool(decoupled)
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for tensors, lr in self.groups:
            for p in tensors:
                if p.grad is None:
                    continue
                g = p.grad
                if self.weight_decay != 0.0 and not self.decoupled:
                    g = g + self.weight_decay * p.data
                m = self._m.get(p.name)
                v = self._v.get(p.name)
                if m is None:
                    m = np.zeros_like(p.data)
                    v = np.zeros_like(p.data)
                m = self.beta1 * m + (1.0 - self.beta1) * g
                v = self.beta2 * v + (1.0 - self.beta2) * (g * g)
                self._m[p.name] = m
                self._v[p.name] = v
                update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
                if self.weight_decay != 0.0 and self.decoupled:
                    update = update + self.weight_decay * p.data
                p.data = p.data - lr * update

    def zero_grad(self):
        for tensors, _ in self.groups:
            for p in tensors:
                p.grad = None

    # -- checkpoint support ------------------------------------------------

    def state(self) -> dict:
        arrays = {}
        for name, m in self._m.items():
            arrays[f"m/{name}"] = m.copy()
            arrays[f"v/{name}"] = self._v[name].copy()
        return {"step_count": self.step_count, "arrays": arrays}

    def load_state(self, state: dict):
        self.step_count = int(state["step_count"])
        self._m.clear()
        self._v.clear()
        for key, arr in state["arrays"].items():
            kind, name = key.split("/", 1)
            arr = np.asarray(arr, dtype=DTYPE)
            if kind == "m":
                self._m[name] = arr.copy()
            elif kind == "v":
                self._v[name] = arr.copy()
            else:
                raise ValueError(f"unknown optimizer state key: {key}")
