"""Dense ReLU networks with hand-written backprop, Adam, and soft target updates.

Every network keeps all weights and biases in one flat vector; the per-layer
matrices are views into it, so optimizer steps and target blending are single
vector operations.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

CHECKPOINT_FORMAT = "macnoma-checkpoint"
CHECKPOINT_VERSION = 1

_OUTPUT_ACTIVATIONS = ("identity", "tanh")


@dataclass(frozen=True)
class NetSpec:
    input_dim: int
    output_dim: int
    hidden: tuple[int, ...] = (128, 128)
    output_activation: str = "identity"

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden):
            raise ValueError(f"layer widths must be >= 1: {self}")
        if self.output_activation not in _OUTPUT_ACTIVATIONS:
            raise ValueError(f"output_activation must be one of {_OUTPUT_ACTIVATIONS}")

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden, self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    @property
    def n_params(self) -> int:
        return sum(i * o + o for i, o in self.layer_shapes)


class MLP:
    """Feed-forward network ``x @ W + b`` with ReLU hidden layers.

    Holds the flat parameter vector plus Adam's first/second moments and step
    counter.
    """

    def __init__(self, spec: NetSpec, rng: np.random.Generator | None = None,
                 final_scale: float = 1.0, params: np.ndarray | None = None):
        self.spec = spec
        self.params = np.zeros(spec.n_params)
        self.m = np.zeros(spec.n_params)
        self.v = np.zeros(spec.n_params)
        self.step = 0
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        offset = 0
        for fan_in, fan_out in spec.layer_shapes:
            self.weights.append(self.params[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out))
            offset += fan_in * fan_out
            self.biases.append(self.params[offset:offset + fan_out])
            offset += fan_out
        if params is not None:
            self.params[:] = params
        elif rng is not None:
            n_layers = len(self.weights)
            for k, (w, b) in enumerate(zip(self.weights, self.biases)):
                bound = 1.0 / np.sqrt(w.shape[0])
                if k == n_layers - 1:
                    bound *= final_scale
                w[:] = rng.uniform(-bound, bound, w.shape)
                b[:] = rng.uniform(-bound, bound, b.shape)

    def copy(self) -> "MLP":
        net = MLP(self.spec, params=self.params)
        net.m[:] = self.m
        net.v[:] = self.v
        net.step = self.step
        return net

    def forward(self, x):
        """Return ``(output, cache)``; a 1-D input gives a 1-D output."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[-1] != self.spec.input_dim:
            raise ValueError(f"expected input width {self.spec.input_dim}, got {h.shape[-1]}")
        inputs, pre = [], []
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ w + b
            pre.append(z)
            if k < last:
                h = np.maximum(z, 0.0)
            elif self.spec.output_activation == "tanh":
                h = np.tanh(z)
            else:
                h = z
        cache = (inputs, pre, h, single)
        return (h[0] if single else h), cache

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, grad_output):
        """Gradients of ``sum(output * grad_output)``.

        Returns ``(flat parameter gradient, input gradient)``; parameter
        gradients are summed over the batch.
        """
        inputs, pre, out, single = cache
        g = np.asarray(grad_output, dtype=float)
        g = g[None, :] if single else g
        if g.shape != out.shape:
            raise ValueError(f"grad_output shape {g.shape} does not match output {out.shape}")
        grads = np.zeros_like(self.params)
        grad_w = []
        offset = 0
        for w in self.weights:
            grad_w.append(offset)
            offset += w.size + w.shape[1]
        if self.spec.output_activation == "tanh":
            g = g * (1.0 - out ** 2)
        for k in range(len(self.weights) - 1, -1, -1):
            w = self.weights[k]
            start = grad_w[k]
            grads[start:start + w.size] = (inputs[k].T @ g).ravel()
            grads[start + w.size:start + w.size + w.shape[1]] = g.sum(axis=0)
            g = g @ w.T
            if k > 0:
                g = g * (pre[k - 1] > 0)
        return grads, (g[0] if single else g)


def forward(net: MLP, x):
    return net.forward(x)


def backward(net: MLP, cache, grad_output):
    return net.backward(cache, grad_output)


def adam_step(net: MLP, grads: np.ndarray, lr: float, betas=(0.9, 0.999), eps: float = 1e-8) -> MLP:
    """One bias-corrected Adam descent step, in place."""
    b1, b2 = betas
    net.step += 1
    net.m *= b1
    net.m += (1.0 - b1) * grads
    net.v *= b2
    net.v += (1.0 - b2) * grads * grads
    m_hat = net.m / (1.0 - b1 ** net.step)
    v_hat = net.v / (1.0 - b2 ** net.step)
    net.params -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return net


def soft_update(target: MLP, source: MLP, tau: float) -> MLP:
    """``target <- tau * source + (1 - tau) * target``, in place."""
    if target.spec != source.spec:
        raise ValueError("soft_update needs networks of identical shape")
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    target.params[:] = tau * source.params + (1.0 - tau) * target.params
    return target


def save_checkpoint(path, nets: dict[str, MLP], metadata: dict | None = None):
    """Write networks to an ``.npz`` archive.

    Layout: a ``header`` entry holding JSON ``{"format", "version", "nets":
    {name: NetSpec fields}, "metadata"}`` and one ``<name>.params`` float64
    array per network in the flat order of :class:`MLP`.
    """
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "nets": {name: asdict(net.spec) for name, net in nets.items()},
        "metadata": metadata or {},
    }
    arrays = {f"{name}.params": net.params for name, net in nets.items()}
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), **arrays)


def load_checkpoint(path) -> tuple[dict[str, MLP], dict]:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} file")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        nets = {}
        for name, fields in header["nets"].items():
            fields["hidden"] = tuple(fields["hidden"])
            nets[name] = MLP(NetSpec(**fields), params=data[f"{name}.params"])
    return nets, header["metadata"]
