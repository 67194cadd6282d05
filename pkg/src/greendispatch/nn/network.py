"""Policy/value function approximator with exact analytic gradients.

Architecture over a W x F observation window: 1-D convolutions along the
time axis (SAME zero padding), a gated recurrent layer whose single update
gate scales the recurrent path (zero recurrent weights reduce it to a
feed-forward map of the last element), dense layers, a softmax policy head
and a linear scalar value head.

Forward and backward support batches; the single-observation entry points
wrap a batch of one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import GradientSet, Layout, ParameterSet, glorot_init


@dataclass(frozen=True)
class ConvSpec:
    filters: int
    width: int
    stride: int = 1

    def __post_init__(self) -> None:
        if self.filters < 1 or self.width < 1 or self.stride < 1:
            raise ValueError("conv filters, width and stride must be >= 1")


@dataclass(frozen=True)
class NetworkConfig:
    window: int
    features: int
    actions: int
    conv: tuple[ConvSpec, ...] = (ConvSpec(8, 3, 1), ConvSpec(16, 3, 2))
    recurrent_units: int = 16
    dense: tuple[int, ...] = (32, 16)
    dense_activation: str = "relu"

    def __post_init__(self) -> None:
        if self.window < 1 or self.features < 1:
            raise ValueError("window and features must be >= 1")
        if self.actions < 2:
            raise ValueError("need at least two actions")
        if not self.conv and self.recurrent_units == 0 and not self.dense:
            raise ValueError("need at least one hidden layer")
        if self.dense_activation not in ("relu", "tanh"):
            raise ValueError(f"unsupported activation {self.dense_activation!r}")
        if self.recurrent_units < 0:
            raise ValueError("recurrent_units must be >= 0")


def _conv_out_len(length: int, stride: int) -> int:
    return -(-length // stride)  # ceil division (SAME padding)


def layout(config: NetworkConfig) -> Layout:
    entries: Layout = []
    channels = config.features
    length = config.window
    for i, spec in enumerate(config.conv):
        entries.append((f"conv{i}_w", (spec.filters, spec.width, channels)))
        entries.append((f"conv{i}_b", (spec.filters,)))
        channels = spec.filters
        length = _conv_out_len(length, spec.stride)
    if config.recurrent_units > 0:
        u = config.recurrent_units
        entries.append(("rec_wx", (u, channels)))
        entries.append(("rec_uh", (u, u)))
        entries.append(("rec_b", (u,)))
        entries.append(("rec_wz", (u, channels)))
        entries.append(("rec_uz", (u, u)))
        entries.append(("rec_bz", (u,)))
        width = u
    else:
        width = channels * length
    for i, units in enumerate(config.dense):
        entries.append((f"dense{i}_w", (units, width)))
        entries.append((f"dense{i}_b", (units,)))
        width = units
    entries.append(("policy_w", (config.actions, width)))
    entries.append(("policy_b", (config.actions,)))
    entries.append(("value_w", (1, width)))
    entries.append(("value_b", (1,)))
    return entries


def param_count(config: NetworkConfig) -> int:
    return sum(int(np.prod(shape)) for _, shape in layout(config))


def init_params(config: NetworkConfig, seed: int) -> ParameterSet:
    return glorot_init(layout(config), seed)


def _same_padding(length: int, width: int, stride: int) -> tuple[int, int]:
    out = _conv_out_len(length, stride)
    total = max((out - 1) * stride + width - length, 0)
    left = total // 2
    return left, total - left


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


@dataclass
class _Cache:
    obs: np.ndarray
    conv: list[dict] = field(default_factory=list)
    rec: dict | None = None
    flat_shape: tuple[int, ...] | None = None
    dense: list[dict] = field(default_factory=list)
    trunk: np.ndarray | None = None
    logits: np.ndarray | None = None
    value: np.ndarray | None = None
    probs: np.ndarray | None = None


def forward_batch(
    params: ParameterSet, config: NetworkConfig, obs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, _Cache]:
    """Batched forward pass: (N, W, F) -> probs (N, K), values (N,), cache."""
    x = np.asarray(obs, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    n, w, f = x.shape
    if (w, f) != (config.window, config.features):
        raise ValueError(
            f"observation shape {(w, f)} does not match config {(config.window, config.features)}"
        )
    cache = _Cache(obs=x)

    for i, spec in enumerate(config.conv):
        weight = params.view(f"conv{i}_w")  # (filters, width, in)
        bias = params.view(f"conv{i}_b")
        left, right = _same_padding(x.shape[1], spec.width, spec.stride)
        padded = np.pad(x, ((0, 0), (left, right), (0, 0)))
        out_len = _conv_out_len(x.shape[1], spec.stride)
        w2 = weight.reshape(spec.filters, -1).T  # (width*in, filters)
        pre = np.empty((n, out_len, spec.filters))
        for j in range(out_len):
            window = padded[:, j * spec.stride : j * spec.stride + spec.width, :]
            pre[:, j, :] = window.reshape(n, -1) @ w2 + bias
        act = np.maximum(pre, 0.0)
        cache.conv.append({"in": x, "padded": padded, "pre": pre, "left": left})
        x = act

    if config.recurrent_units > 0:
        wx, uh, b = params.view("rec_wx"), params.view("rec_uh"), params.view("rec_b")
        wz, uz, bz = params.view("rec_wz"), params.view("rec_uz"), params.view("rec_bz")
        h = np.zeros((n, config.recurrent_units))
        steps = []
        for t in range(x.shape[1]):
            xt = x[:, t, :]
            r = h @ uh.T
            z = _sigmoid(xt @ wz.T + h @ uz.T + bz)
            h_new = np.tanh(xt @ wx.T + z * r + b)
            steps.append({"x": xt, "h_prev": h, "r": r, "z": z, "h": h_new})
            h = h_new
        cache.rec = {"steps": steps, "seq": x}
        trunk = h
    else:
        cache.flat_shape = x.shape
        trunk = x.reshape(n, -1)

    for i in range(len(config.dense)):
        weight, bias = params.view(f"dense{i}_w"), params.view(f"dense{i}_b")
        pre = trunk @ weight.T + bias
        if config.dense_activation == "relu":
            act = np.maximum(pre, 0.0)
        else:
            act = np.tanh(pre)
        cache.dense.append({"in": trunk, "pre": pre, "act": act})
        trunk = act

    cache.trunk = trunk
    logits = trunk @ params.view("policy_w").T + params.view("policy_b")
    value = (trunk @ params.view("value_w").T + params.view("value_b"))[:, 0]
    cache.logits = logits
    cache.value = value
    cache.probs = softmax(logits)
    return cache.probs, value, cache


def forward(
    params: ParameterSet, config: NetworkConfig, obs: np.ndarray
) -> tuple[np.ndarray, float]:
    """Single observation -> (action probabilities, value estimate)."""
    probs, values, _ = forward_batch(params, config, obs)
    return probs[0], float(values[0])


def backward_batch(
    params: ParameterSet,
    config: NetworkConfig,
    cache: _Cache,
    d_logits: np.ndarray,
    d_value: np.ndarray,
) -> GradientSet:
    """Gradients of sum_n (d_logits[n] . logits[n] + d_value[n] * value[n])."""
    grads = GradientSet(params.layout)
    trunk = cache.trunk
    d_logits = np.atleast_2d(np.asarray(d_logits, dtype=np.float64))
    d_value = np.atleast_1d(np.asarray(d_value, dtype=np.float64))

    grads.view("policy_w")[...] = d_logits.T @ trunk
    grads.view("policy_b")[...] = d_logits.sum(axis=0)
    grads.view("value_w")[...] = d_value[None, :] @ trunk
    grads.view("value_b")[...] = d_value.sum(keepdims=True)
    d_trunk = d_logits @ params.view("policy_w") + d_value[:, None] * params.view("value_w")

    for i in range(len(config.dense) - 1, -1, -1):
        entry = cache.dense[i]
        if config.dense_activation == "relu":
            d_pre = d_trunk * (entry["pre"] > 0.0)
        else:
            d_pre = d_trunk * (1.0 - entry["act"] ** 2)
        grads.view(f"dense{i}_w")[...] = d_pre.T @ entry["in"]
        grads.view(f"dense{i}_b")[...] = d_pre.sum(axis=0)
        d_trunk = d_pre @ params.view(f"dense{i}_w")

    if config.recurrent_units > 0:
        steps = cache.rec["steps"]
        seq = cache.rec["seq"]
        wx, uh = params.view("rec_wx"), params.view("rec_uh")
        wz, uz = params.view("rec_wz"), params.view("rec_uz")
        d_seq = np.zeros_like(seq)
        d_h = d_trunk
        for t in range(len(steps) - 1, -1, -1):
            s = steps[t]
            d_a = d_h * (1.0 - s["h"] ** 2)
            grads.view("rec_wx")[...] += d_a.T @ s["x"]
            grads.view("rec_b")[...] += d_a.sum(axis=0)
            d_x = d_a @ wx
            d_z = d_a * s["r"]
            d_r = d_a * s["z"]
            grads.view("rec_uh")[...] += d_r.T @ s["h_prev"]
            d_h = d_r @ uh
            d_zpre = d_z * s["z"] * (1.0 - s["z"])
            grads.view("rec_wz")[...] += d_zpre.T @ s["x"]
            grads.view("rec_bz")[...] += d_zpre.sum(axis=0)
            grads.view("rec_uz")[...] += d_zpre.T @ s["h_prev"]
            d_x += d_zpre @ wz
            d_h += d_zpre @ uz
            d_seq[:, t, :] = d_x
        d_x_full = d_seq
    else:
        d_x_full = d_trunk.reshape(cache.flat_shape)

    for i in range(len(config.conv) - 1, -1, -1):
        spec = config.conv[i]
        entry = cache.conv[i]
        d_act = d_x_full
        d_pre = d_act * (entry["pre"] > 0.0)
        padded = entry["padded"]
        n = padded.shape[0]
        w2_grad = np.zeros((spec.width * padded.shape[2], spec.filters))
        d_padded = np.zeros_like(padded)
        weight = params.view(f"conv{i}_w")
        w2 = weight.reshape(spec.filters, -1)  # (filters, width*in)
        for j in range(d_pre.shape[1]):
            window = padded[:, j * spec.stride : j * spec.stride + spec.width, :]
            w2_grad += window.reshape(n, -1).T @ d_pre[:, j, :]
            back = d_pre[:, j, :] @ w2  # (n, width*in)
            d_padded[:, j * spec.stride : j * spec.stride + spec.width, :] += back.reshape(
                n, spec.width, -1
            )
        grads.view(f"conv{i}_w")[...] = w2_grad.T.reshape(weight.shape)
        grads.view(f"conv{i}_b")[...] = d_pre.sum(axis=(0, 1))
        left = entry["left"]
        in_len = entry["in"].shape[1]
        d_x_full = d_padded[:, left : left + in_len, :]

    return grads


def backward(
    params: ParameterSet,
    config: NetworkConfig,
    obs: np.ndarray,
    d_logits: np.ndarray,
    d_value: float | np.ndarray,
) -> GradientSet:
    """Single-observation gradients given upstream grads on logits and value."""
    _, _, cache = forward_batch(params, config, obs)
    return backward_batch(
        params, config, cache, np.atleast_2d(d_logits), np.atleast_1d(d_value)
    )
