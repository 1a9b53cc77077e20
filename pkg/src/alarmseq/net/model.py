"""Classifier: conv1d -> BiLSTM -> self-attention -> dropout -> dense softmax."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..config import overrides_for
from ..core import DEFAULT_SCENARIOS
from ..errors import ConfigError, NumericError, ShapeError
from . import layers

TENSOR_NAMES = (
    "conv.w", "conv.b",
    "fwd.W", "fwd.U", "fwd.b",
    "bwd.W", "bwd.U", "bwd.b",
    "attn.Wg", "attn.Wg_prime", "attn.bg", "attn.Walpha", "attn.balpha",
    "dense.W", "dense.b",
)

LAYER_GROUPS = {
    "conv": ("conv.w", "conv.b"),
    "fwd_lstm": ("fwd.W", "fwd.U", "fwd.b"),
    "bwd_lstm": ("bwd.W", "bwd.U", "bwd.b"),
    "attention": ("attn.Wg", "attn.Wg_prime", "attn.bg", "attn.Walpha", "attn.balpha"),
    "dense": ("dense.W", "dense.b"),
}


@dataclass(frozen=True)
class NetConfig:
    v: int = 5
    d: int = 10
    filters: int = 128
    kernel: int = 3
    lstm_units: int = 128
    attn_dim: int = 64
    classes: int = 10
    dropout_p: float = 0.1
    lr: float = 1e-5
    epochs: int = 100
    batch: int = 100
    seed: int = 0
    scenarios: tuple = field(default=DEFAULT_SCENARIOS)

    def __post_init__(self):
        counts = (self.v, self.d, self.filters, self.kernel, self.lstm_units, self.attn_dim, self.classes, self.batch)
        if min(counts) < 1 or self.epochs < 0:
            raise ConfigError("all NetConfig counts must be >= 1 (epochs >= 0)")
        if self.kernel > self.v:
            raise ConfigError(f"kernel {self.kernel} longer than window {self.v}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if len(self.scenarios) != self.classes or len(set(self.scenarios)) != self.classes:
            raise ConfigError(f"{self.classes} classes but scenario set {self.scenarios}")
        object.__setattr__(self, "scenarios", tuple(sorted(int(s) for s in self.scenarios)))

    @property
    def t_out(self) -> int:
        return self.v - self.kernel + 1

    @classmethod
    def for_scenarios(cls, scenarios, **kwargs) -> "NetConfig":
        scenarios = tuple(sorted(scenarios))
        return cls(classes=len(scenarios), scenarios=scenarios, **kwargs)


NET_KEYS = {"filters", "kernel", "lstm_units", "attn_dim", "dropout_p", "lr", "epochs", "batch", "seed"}


def net_overrides_from_kv(mapping) -> dict:
    return overrides_for(NetConfig, mapping, allowed=NET_KEYS)


def tensor_shapes(cfg: NetConfig) -> dict:
    H, A, D = cfg.lstm_units, cfg.attn_dim, 2 * cfg.lstm_units
    shapes = {
        "conv.w": (cfg.filters, cfg.kernel, cfg.d), "conv.b": (cfg.filters,),
        "attn.Wg": (A, D), "attn.Wg_prime": (A, D), "attn.bg": (A,),
        "attn.Walpha": (1, A), "attn.balpha": (1,),
        "dense.W": (cfg.classes, cfg.t_out * D), "dense.b": (cfg.classes,),
    }
    for side in ("fwd", "bwd"):
        shapes[f"{side}.W"] = (4 * H, cfg.filters)
        shapes[f"{side}.U"] = (4 * H, H)
        shapes[f"{side}.b"] = (4 * H,)
    return shapes


def glorot_limit(name: str, cfg: NetConfig) -> float:
    """Uniform Glorot bound sqrt(6 / (fan_in + fan_out)) for a weight tensor.

    LSTM matrices are bounded per gate block; convolution fans count the kernel.
    """
    H = cfg.lstm_units
    fans = {
        "conv.w": (cfg.kernel * cfg.d, cfg.kernel * cfg.filters),
        "fwd.W": (cfg.filters, H), "bwd.W": (cfg.filters, H),
        "fwd.U": (H, H), "bwd.U": (H, H),
        "attn.Wg": (2 * H, cfg.attn_dim), "attn.Wg_prime": (2 * H, cfg.attn_dim),
        "attn.Walpha": (cfg.attn_dim, 1),
        "dense.W": (cfg.t_out * 2 * H, cfg.classes),
    }
    fan_in, fan_out = fans[name]
    return math.sqrt(6.0 / (fan_in + fan_out))


@dataclass
class ModelParams:
    cfg: NetConfig
    tensors: dict

    def __post_init__(self):
        shapes = tensor_shapes(self.cfg)
        if set(self.tensors) != set(shapes):
            raise ShapeError(f"tensor names {sorted(self.tensors)} do not match the architecture")
        for name, shape in shapes.items():
            if self.tensors[name].shape != shape:
                raise ShapeError(f"{name}: shape {self.tensors[name].shape}, expected {shape}")

    def __getitem__(self, name):
        return self.tensors[name]

    def copy(self) -> "ModelParams":
        return ModelParams(self.cfg, {k: v.copy() for k, v in self.tensors.items()})

    def lstm(self, side):
        return self.tensors[f"{side}.W"], self.tensors[f"{side}.U"], self.tensors[f"{side}.b"]

    def attention(self):
        t = self.tensors
        return t["attn.Wg"], t["attn.Wg_prime"], t["attn.bg"], t["attn.Walpha"], t["attn.balpha"]


def init_params(cfg: NetConfig) -> ModelParams:
    rng = np.random.default_rng(cfg.seed)
    H = cfg.lstm_units
    tensors = {}
    for name, shape in tensor_shapes(cfg).items():
        if name.endswith((".b", ".bg", ".balpha")):
            tensors[name] = np.zeros(shape)
        elif name.endswith((".W", ".U")) and name.split(".")[0] in ("fwd", "bwd"):
            lim = glorot_limit(name, cfg)
            tensors[name] = np.concatenate([rng.uniform(-lim, lim, (H, shape[1])) for _ in range(4)])
        else:
            lim = glorot_limit(name, cfg)
            tensors[name] = rng.uniform(-lim, lim, shape)
    for side in ("fwd", "bwd"):
        tensors[f"{side}.b"][H:2 * H] = 1.0
    return ModelParams(cfg, tensors)


def _as_batch(samples):
    if isinstance(samples, tuple) and len(samples) == 2 and isinstance(samples[0], np.ndarray):
        return samples
    X = np.stack([s.window for s in samples])
    Y = np.stack([s.target for s in samples])
    return X, Y


def forward(params: ModelParams, X, masks=None, check=False):
    """Full forward pass on a (B, v, d) batch; returns (probs, logits, caches)."""
    cfg = params.cfg
    if X.ndim != 3 or X.shape[1:] != (cfg.v, cfg.d):
        raise ShapeError(f"expected windows of shape (B, {cfg.v}, {cfg.d}), got {X.shape}")
    s, c_conv = layers.conv1d_forward(X, params["conv.w"], params["conv.b"])
    h, c_lstm = layers.bilstm_forward(s, params.lstm("fwd"), params.lstm("bwd"))
    l, c_attn = layers.attention_forward(h, *params.attention(), check=check)
    probs, logits, c_head = layers.head_forward(l, params["dense.W"], params["dense.b"], masks, cfg.dropout_p)
    return probs, logits, (c_conv, c_lstm, c_attn, c_head)


def dropout_masks(rng, batch: int, cfg: NetConfig):
    if cfg.dropout_p == 0.0:
        return None
    width = cfg.t_out * 2 * cfg.lstm_units
    return (rng.random((batch, width)) >= cfg.dropout_p).astype(np.float64)


def loss_and_backward(samples, params: ModelParams, training: bool = False, rng=None):
    """Mean categorical cross-entropy over the batch and its exact gradients.

    ``samples`` is a list of ``Sample`` or an ``(X, Y)`` pair. In training mode
    one dropout mask per sample is drawn from ``rng``.
    """
    X, Y = _as_batch(samples)
    if len(X) == 0:
        raise ShapeError("empty batch")
    masks = None
    if training:
        masks = dropout_masks(rng if rng is not None else np.random.default_rng(params.cfg.seed), len(X), params.cfg)
    probs, logits, (c_conv, c_lstm, c_attn, c_head) = forward(params, X, masks)
    per_sample = -np.sum(Y * layers.log_softmax(logits), axis=1)
    bad = np.flatnonzero(~np.isfinite(per_sample))
    if bad.size:
        raise NumericError(f"non-finite loss for sample {int(bad[0])} of the batch")
    B = len(X)
    loss = float(per_sample.mean())

    dlogits = (probs - Y) / B
    dl, g_head = layers.head_backward(dlogits, c_head)
    dh, g_attn = layers.attention_backward(dl, c_attn)
    ds, g_fwd, g_bwd = layers.bilstm_backward(dh, c_lstm)
    g_conv = layers.conv1d_backward(ds, c_conv)

    grads = {f"conv.{k}": v for k, v in g_conv.items()}
    grads.update({f"fwd.{k}": v for k, v in g_fwd.items()})
    grads.update({f"bwd.{k}": v for k, v in g_bwd.items()})
    grads.update({f"attn.{k}": v for k, v in g_attn.items()})
    grads.update({f"dense.{k}": v for k, v in g_head.items()})
    return loss, grads


def loss_only(samples, params: ModelParams) -> float:
    X, Y = _as_batch(samples)
    _, logits, _ = forward(params, X)
    return float(np.mean(-np.sum(Y * layers.log_softmax(logits), axis=1)))


def predict_proba(X, params: ModelParams, chunk: int = 512) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    out = [forward(params, X[i:i + chunk])[0] for i in range(0, len(X), chunk)]
    return np.concatenate(out) if out else np.zeros((0, params.cfg.classes))


def predict(window, params: ModelParams):
    """Class probabilities and argmax class index for one (v, d) window (no dropout)."""
    probs = predict_proba(np.asarray(window, dtype=np.float64)[None], params)[0]
    return probs, int(np.argmax(probs))


def tiny_config(seed: int = 0, **kwargs) -> NetConfig:
    base = dict(v=5, d=3, filters=4, kernel=3, lstm_units=3, attn_dim=2, classes=3,
                scenarios=(1, 2, 3), dropout_p=0.0, seed=seed)
    base.update(kwargs)
    return NetConfig(**base)


def gradcheck(cfg: NetConfig | None = None, seed: int = 0, eps: float = 1e-5, batch: int = 4, names=None) -> dict:
    """Central-difference check of every requested tensor's gradient.

    Parameters are the Glorot initialisation plus a small random perturbation
    (so biases are non-zero). Returns ``{tensor_name: max_rel_error}``, where the
    error is ``max|analytic - numeric|`` scaled by the larger of the two
    gradients' max magnitudes.
    """
    cfg = replace(cfg or tiny_config(seed), dropout_p=0.0, seed=seed)
    rng = np.random.default_rng(seed + 1000)
    params = init_params(cfg)
    for t in params.tensors.values():
        t += 0.1 * rng.standard_normal(t.shape)
    X = rng.standard_normal((batch, cfg.v, cfg.d))
    Y = np.eye(cfg.classes)[rng.integers(0, cfg.classes, batch)]
    _, grads = loss_and_backward((X, Y), params)
    report = {}
    for name in names or TENSOR_NAMES:
        tensor = params.tensors[name]
        numeric = np.zeros_like(tensor)
        for idx in np.ndindex(tensor.shape):
            orig = tensor[idx]
            tensor[idx] = orig + eps
            up = loss_only((X, Y), params)
            tensor[idx] = orig - eps
            down = loss_only((X, Y), params)
            tensor[idx] = orig
            numeric[idx] = (up - down) / (2.0 * eps)
        analytic = grads[name]
        scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-300)
        report[name] = float(np.max(np.abs(analytic - numeric)) / scale)
    return report


def layer_report(report: dict) -> dict:
    """Per-layer maximum of a per-tensor gradcheck report."""
    out = {}
    for layer, names in LAYER_GROUPS.items():
        errs = [report[n] for n in names if n in report]
        if errs:
            out[layer] = max(errs)
    return out
