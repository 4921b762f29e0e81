"""Minimal reverse-mode engine for the MaNet stack.

Only what the model needs: valid 3x3 convolution, flatten, dense, all with
identity activation, plus Adam.  Arrays are channels-last float64 and may carry
a leading batch axis.  All parameters of a :class:`Model` live in one flat
buffer; layers expose views into it, which keeps the Adam update to a handful
of vectorised operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import NonFiniteGradientError, ShapeError, TapeError

INPUT_SIDE = 8
KERNEL = 3
FILTERS = 6
CONV_LAYERS = 3


@lru_cache(maxsize=None)
def _layout(dimension: int) -> tuple[tuple[str, tuple[int, ...], int, int], ...]:
    """(name, shape, start, stop) of every tensor in the flat buffer."""
    side = INPUT_SIDE - CONV_LAYERS * (KERNEL - 1)
    flat = side * side * FILTERS
    shapes = [
        ("conv1.weight", (KERNEL, KERNEL, 1, FILTERS)),
        ("conv1.bias", (FILTERS,)),
        ("conv2.weight", (KERNEL, KERNEL, FILTERS, FILTERS)),
        ("conv2.bias", (FILTERS,)),
        ("conv3.weight", (KERNEL, KERNEL, FILTERS, FILTERS)),
        ("conv3.bias", (FILTERS,)),
        ("dense.weight", (flat, dimension)),
        ("dense.bias", (dimension,)),
    ]
    out, offset = [], 0
    for name, shape in shapes:
        size = int(np.prod(shape))
        out.append((name, shape, offset, offset + size))
        offset += size
    return tuple(out)


def parameter_count(dimension: int) -> int:
    return _layout(dimension)[-1][3]


@dataclass
class ConvLayer:
    weight: np.ndarray  # (3, 3, C_in, 6)
    bias: np.ndarray  # (6,)


@dataclass
class DenseLayer:
    weight: np.ndarray  # (F_in, D)
    bias: np.ndarray  # (D,)


class Model:
    """Three conv layers and a dense head over a single flat parameter buffer.

    Gradients are returned as a ``Model`` too, so they share names and shapes
    with the parameters they belong to.
    """

    def __init__(self, dimension: int, flat: np.ndarray | None = None):
        self.dimension = dimension
        n = parameter_count(dimension)
        if flat is None:
            flat = np.zeros(n)
        elif flat.shape != (n,):
            raise ShapeError(f"expected {n} parameters, got {flat.shape}")
        self.flat = flat
        self.params: dict[str, np.ndarray] = {
            name: flat[start:stop].reshape(shape) for name, shape, start, stop in _layout(dimension)
        }
        p = self.params
        self.conv1 = ConvLayer(p["conv1.weight"], p["conv1.bias"])
        self.conv2 = ConvLayer(p["conv2.weight"], p["conv2.bias"])
        self.conv3 = ConvLayer(p["conv3.weight"], p["conv3.bias"])
        self.dense = DenseLayer(p["dense.weight"], p["dense.bias"])

    @property
    def size(self) -> int:
        return self.flat.size

    def copy(self) -> "Model":
        return Model(self.dimension, self.flat.copy())

    def zeros_like(self) -> "Model":
        return Model(self.dimension)

    def layers(self):
        return [self.conv1, self.conv2, self.conv3]


def init_model(D: int, seed: int) -> Model:
    """Glorot-uniform weights, zero biases."""
    if D < 1:
        raise ShapeError("D must be >= 1")
    rng = np.random.default_rng(seed)
    model = Model(D)
    for name, shape, _, _ in _layout(D):
        if not name.endswith("weight"):
            continue
        if len(shape) == 4:
            receptive = shape[0] * shape[1]
            fan_in, fan_out = receptive * shape[2], receptive * shape[3]
        else:
            fan_in, fan_out = shape
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        model.params[name][...] = rng.uniform(-bound, bound, size=shape)
    return model


class Tape:
    """Records the backward closures of one forward pass.

    The network is a chain, so reverse recording order is a valid reverse
    topological order.
    """

    def __init__(self):
        self.nodes: list = []
        self.model: Model | None = None
        self.batched = False
        self.consumed = False

    def push(self, fn, owner: str | None = None) -> None:
        self.nodes.append((owner, fn))


@lru_cache(maxsize=None)
def _im2col(H: int, W: int, C: int, k: int = KERNEL):
    """Gather indices (H'W', k*k*C) into a flattened HxWxC input."""
    ho, wo = H - k + 1, W - k + 1
    p, q, i, j, c = np.meshgrid(
        np.arange(ho), np.arange(wo), np.arange(k), np.arange(k), np.arange(C), indexing="ij"
    )
    idx = ((p + i) * W * C + (q + j) * C + c).reshape(ho * wo, k * k * C)
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=None)
def _col2im(H: int, W: int, C: int, B: int):
    """Flat scatter targets for summing column gradients back into a batch of inputs."""
    idx = _im2col(H, W, C)
    return (idx.ravel()[None, :] + H * W * C * np.arange(B)[:, None]).ravel()


def _conv_flat(xf, H, W, C, layer: ConvLayer, tape, need_input_grad, owner=None):
    idx = _im2col(H, W, C)
    B = xf.shape[0]
    F = layer.weight.shape[3]
    wmat = layer.weight.reshape(-1, F)
    cols = xf[:, idx]  # (B, H'W', 9C)
    out = cols @ wmat
    out += layer.bias
    if tape is not None:

        def backward(dout):
            d2 = dout.reshape(-1, F)
            dw = (cols.reshape(-1, wmat.shape[0]).T @ d2).reshape(layer.weight.shape)
            db = d2.sum(axis=0)
            dx = None
            if need_input_grad:
                dcols = d2 @ wmat.T
                dx = np.bincount(_col2im(H, W, C, B), dcols.ravel(), B * H * W * C).reshape(B, -1)
            return dx, (dw, db)

        tape.push(backward, owner)
    return out.reshape(B, -1)


def conv2d_valid(x: np.ndarray, layer: ConvLayer, tape: Tape | None = None, need_input_grad: bool = True):
    """Valid, stride-1 cross-correlation plus per-filter bias.

    ``x`` is ``(H, W, C)`` or ``(B, H, W, C)``; the result has shape
    ``(H-2, W-2, 6)`` with the same batch convention.
    """
    batched = x.ndim == 4
    xb = x if batched else x[None]
    if xb.ndim != 4:
        raise ShapeError(f"conv input must be HxWxC, got shape {x.shape}")
    B, H, W, C = xb.shape
    kh, kw, c_in, F = layer.weight.shape
    if H < kh or W < kw:
        raise ShapeError(f"spatial size {H}x{W} is smaller than the {kh}x{kw} kernel")
    if C != c_in:
        raise ShapeError(f"layer expects {c_in} channels, got {C}")
    out = _conv_flat(xb.reshape(B, -1), H, W, C, layer, tape, need_input_grad)
    out = out.reshape(B, H - kh + 1, W - kw + 1, F)
    return out if batched else out[0]


def _dense(x: np.ndarray, layer: DenseLayer, tape: Tape | None):
    if x.shape[1] != layer.weight.shape[0]:
        raise ShapeError(f"dense expects {layer.weight.shape[0]} features, got {x.shape[1]}")
    out = x @ layer.weight + layer.bias
    if tape is not None:
        weight = layer.weight

        def backward(dout):
            return dout @ weight.T, (x.T @ dout, dout.sum(axis=0))

        tape.push(backward, "dense")
    return out


def forward(model: Model, sample: np.ndarray, tape: Tape | None = None) -> np.ndarray:
    """``dense(flatten(conv3(conv2(conv1(sample)))))`` for one sample or a batch."""
    sample = np.asarray(sample, dtype=np.float64)
    batched = sample.ndim == 4
    x = sample if batched else sample[None]
    if x.ndim != 4 or x.shape[1:] != (INPUT_SIDE, INPUT_SIDE, 1):
        raise ShapeError(f"sample must be {INPUT_SIDE}x{INPUT_SIDE}x1, got {sample.shape}")
    if tape is not None:
        tape.nodes.clear()
        tape.model = model
        tape.batched = batched
        tape.consumed = False
    side = INPUT_SIDE
    xf = x.reshape(x.shape[0], -1)
    for i, layer in enumerate(model.layers()):
        channels = layer.weight.shape[2]
        xf = _conv_flat(xf, side, side, channels, layer, tape, i > 0, f"conv{i + 1}")
        side -= KERNEL - 1
    if tape is not None:
        tape.push(lambda dout: (dout, None))  # flatten is a no-op on the flat layout
    out = _dense(xf, model.dense, tape)
    return out if batched else out[0]


_PARAM_ORDER = ("conv1", "conv2", "conv3", "dense")


def backward(tape: Tape, upstream: np.ndarray) -> Model:
    """Gradients of ``sum(upstream * output)`` w.r.t. every model parameter."""
    if tape.model is None or not tape.nodes:
        raise TapeError("backward called before forward")
    if tape.consumed:
        raise TapeError("tape already consumed by a previous backward")
    model = tape.model
    g = np.asarray(upstream, dtype=np.float64)
    if not tape.batched:
        g = g[None]
    if g.shape[-1] != model.dimension:
        raise ShapeError(f"upstream must have length {model.dimension}, got {g.shape}")
    pieces = {}
    for owner, fn in reversed(tape.nodes):
        g, pgrads = fn(g)
        if owner is not None:
            pieces[owner + ".weight"], pieces[owner + ".bias"] = pgrads
    tape.consumed = True
    flat = np.concatenate([pieces[name].ravel() for name, _, _, _ in _layout(model.dimension)])
    return Model(model.dimension, flat)


@dataclass
class AdamState:
    size: int
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)

    @classmethod
    def for_model(cls, model: Model, lr: float = 0.001) -> "AdamState":
        return cls(model.size, lr=lr)


def adam_step(model: Model, grads: Model, state: AdamState) -> None:
    """One in-place Adam update of ``model`` (and ``state``)."""
    g = grads.flat
    if g.shape != model.flat.shape:
        raise ShapeError("gradient shape does not match the model")
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradientError("non-finite gradient component; step rejected")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * g
    state.v *= b2
    state.v += (1.0 - b2) * (g * g)
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    # bias corrections folded into scalars: lr * (m/c1) / (sqrt(v/c2) + eps)
    denom = np.sqrt(state.v)
    denom += state.eps * np.sqrt(c2)
    model.flat -= (state.lr * np.sqrt(c2) / c1) * state.m / denom


def save_model(model: Model, path) -> None:
    """Plain-text parameter blob: one header line per tensor, then its values row-major."""
    lines = [f"manetlab-model dimension={model.dimension} parameters={model.size}"]
    for name, arr in model.params.items():
        lines.append(f"{name} {','.join(map(str, arr.shape))}")
        lines.append(" ".join(repr(float(v)) for v in arr.ravel()))
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> Model:
    lines = Path(path).read_text().splitlines()
    header = dict(item.split("=") for item in lines[0].split()[1:])
    model = Model(int(header["dimension"]))
    for i in range(1, len(lines), 2):
        name, shape = lines[i].split()
        expected = tuple(int(s) for s in shape.split(","))
        if name not in model.params or model.params[name].shape != expected:
            raise ShapeError(f"unexpected tensor {name} with shape {expected}")
        values = np.array([float(v) for v in lines[i + 1].split()])
        model.params[name][...] = values.reshape(expected)
    return model
