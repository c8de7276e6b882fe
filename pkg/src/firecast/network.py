"""The stacked forecasting model: LSTM -> GRU -> Dense(ReLU) -> Dense(1, linear).

Layers chain per timestep (the LSTM output at step t feeds the GRU at
step t); the dense head reads only the final GRU output, producing one
scalar prediction per input window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .cells import GruParams, LstmParams
from .errors import ShapeError, StateError
from .linalg import Activation, apply, apply_deriv

# Identity of the PRNG used for weight draws, recorded in checkpoints.
RNG_NAME = "numpy-pcg64"

ModelGrads = dict[str, np.ndarray]


@dataclass
class DenseParams:
    """Fully connected layer: W (in x out), b (1 x out)."""

    W: np.ndarray
    b: np.ndarray
    activation: Activation

    def __post_init__(self):
        self.W = np.ascontiguousarray(self.W, dtype=np.float64)
        self.b = np.ascontiguousarray(self.b, dtype=np.float64)
        if self.W.ndim != 2:
            raise ShapeError(f"dense W must be 2-D, got {self.W.ndim}-D")
        if self.b.shape != (1, self.W.shape[1]):
            raise ShapeError(f"dense bias must be (1, {self.W.shape[1]}), got {self.b.shape}")


@dataclass
class StackedModel:
    lstm: LstmParams
    gru: GruParams
    dense1: DenseParams
    dense2: DenseParams
    window: int
    hidden: int

    def __post_init__(self):
        n = self.hidden
        if self.lstm.input_size != 1:
            raise ShapeError("model takes a univariate series; lstm input width must be 1")
        if self.lstm.hidden_size != n or self.gru.hidden_size != n:
            raise ShapeError("lstm/gru width must equal the model's hidden size")
        if self.gru.input_size != n:
            raise ShapeError("gru input width must equal the lstm output width")
        if self.dense1.W.shape[0] != n:
            raise ShapeError("dense1 input width must equal the gru output width")
        if self.dense2.W.shape != (self.dense1.W.shape[1], 1):
            raise ShapeError("dense2 must map dense1's output to a single unit")

    def named_params(self) -> dict[str, np.ndarray]:
        """All parameter tensors in the canonical (serialization) order."""
        out: dict[str, np.ndarray] = {}
        for g in "zifo":
            out[f"lstm.W_{g}"] = getattr(self.lstm, f"W_{g}")
        for g in "zifo":
            out[f"lstm.R_{g}"] = getattr(self.lstm, f"R_{g}")
        for g in "zifo":
            out[f"lstm.b_{g}"] = getattr(self.lstm, f"b_{g}")
        for g in "zrh":
            out[f"gru.W_{g}"] = getattr(self.gru, f"W_{g}")
        for g in "zrh":
            out[f"gru.R_{g}"] = getattr(self.gru, f"R_{g}")
        for g in "zrh":
            out[f"gru.b_{g}"] = getattr(self.gru, f"b_{g}")
        out["dense1.W"] = self.dense1.W
        out["dense1.b"] = self.dense1.b
        out["dense2.W"] = self.dense2.W
        out["dense2.b"] = self.dense2.b
        return out

    def param_count(self) -> int:
        return sum(a.size for a in self.named_params().values())

    def copy(self) -> "StackedModel":
        params = {k: v.copy() for k, v in self.named_params().items()}
        return build_model(params, self.window, self.hidden,
                           self.dense1.activation, self.dense2.activation)


def build_model(params: dict[str, np.ndarray], window: int, hidden: int,
                act1: Activation = Activation.RELU,
                act2: Activation = Activation.LINEAR) -> StackedModel:
    """Assemble a StackedModel from a canonical name -> tensor mapping."""
    lstm = LstmParams(**{k.split(".")[1]: params[k] for k in params if k.startswith("lstm.")})
    gru = GruParams(**{k.split(".")[1]: params[k] for k in params if k.startswith("gru.")})
    dense1 = DenseParams(params["dense1.W"], params["dense1.b"], act1)
    dense2 = DenseParams(params["dense2.W"], params["dense2.b"], act2)
    return StackedModel(lstm, gru, dense1, dense2, window, hidden)


def he_normal_init(shape: tuple, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    """He-normal draw: i.i.d. normal, mean 0, stddev sqrt(2/fan_in).

    Entries are drawn in row-major order from the given generator.
    """
    if fan_in < 1:
        raise ValueError(f"fan_in must be >= 1, got {fan_in}")
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


def init_model(hidden: int, window: int, seed: int) -> StackedModel:
    """Build a seeded He-normal model with zero biases.

    Draw order is fixed: lstm W_z,W_i,W_f,W_o then R_z..R_o; gru
    W_z,W_r,W_h then R_z..R_h; dense1 W; dense2 W.  fan_in is each
    matrix's input width.  Biases start at zero.
    """
    if hidden < 1 or window < 1:
        raise ValueError("hidden and window must be >= 1")
    rng = np.random.default_rng(seed)
    n = hidden
    p: dict[str, np.ndarray] = {}
    for g in "zifo":
        p[f"lstm.W_{g}"] = he_normal_init((1, n), 1, rng)
    for g in "zifo":
        p[f"lstm.R_{g}"] = he_normal_init((n, n), n, rng)
    for g in "zifo":
        p[f"lstm.b_{g}"] = np.zeros((1, n))
    for g in "zrh":
        p[f"gru.W_{g}"] = he_normal_init((n, n), n, rng)
    for g in "zrh":
        p[f"gru.R_{g}"] = he_normal_init((n, n), n, rng)
    for g in "zrh":
        p[f"gru.b_{g}"] = np.zeros((1, n))
    p["dense1.W"] = he_normal_init((n, n), n, rng)
    p["dense1.b"] = np.zeros((1, n))
    p["dense2.W"] = he_normal_init((n, 1), n, rng)
    p["dense2.b"] = np.zeros((1, 1))
    return build_model(p, window, hidden)


def forward_batch(m: StackedModel, windows: np.ndarray):
    """Run B windows through the stack; returns (predictions (B,), trace)."""
    X = np.ascontiguousarray(windows, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.window:
        raise ShapeError(f"windows must be (B, {m.window}), got {X.shape}")
    Xl = X[:, :, None]
    Yl, lstm_cache = backend.lstm_forward(m.lstm, Xl)
    Yg, gru_cache = backend.gru_forward(m.gru, Yl)
    h = Yg[:, -1]
    z1 = h @ m.dense1.W + m.dense1.b[0]
    a1 = apply(z1, m.dense1.activation)
    z2 = a1 @ m.dense2.W + m.dense2.b[0]
    out = apply(z2, m.dense2.activation)
    trace = {
        "x": Xl, "yl": Yl, "lstm_cache": lstm_cache, "gru_cache": gru_cache,
        "h": h, "z1": z1, "a1": a1, "z2": z2,
    }
    return out[:, 0], trace


def backward_batch(m: StackedModel, trace: dict, d_pred: np.ndarray) -> ModelGrads:
    """Gradients of sum(d_pred * prediction) w.r.t. every parameter."""
    for key in ("x", "yl", "lstm_cache", "gru_cache", "h", "z1", "a1", "z2"):
        if key not in trace:
            raise StateError(f"trace is missing entry {key!r}")
    B = trace["x"].shape[0]
    if d_pred.shape != (B,):
        raise ShapeError(f"d_pred must be ({B},), got {d_pred.shape}")
    dz2 = d_pred[:, None] * apply_deriv(trace["z2"], m.dense2.activation)
    dW2 = trace["a1"].T @ dz2
    db2 = dz2.sum(axis=0)[None, :]
    dz1 = (dz2 @ m.dense2.W.T) * apply_deriv(trace["z1"], m.dense1.activation)
    dW1 = trace["h"].T @ dz1
    db1 = dz1.sum(axis=0)[None, :]
    dh = dz1 @ m.dense1.W.T

    dYg = np.zeros_like(trace["yl"])
    dYg[:, -1] = dh
    gru_grads, dYl = backend.gru_backward(m.gru, trace["yl"], dYg, trace["gru_cache"])
    lstm_grads, _ = backend.lstm_backward(m.lstm, trace["x"], dYl, trace["lstm_cache"])

    grads: ModelGrads = {}
    for k, v in lstm_grads.items():
        grads["lstm." + k] = v
    for k, v in gru_grads.items():
        grads["gru." + k] = v
    grads["dense1.W"] = dW1
    grads["dense1.b"] = db1
    grads["dense2.W"] = dW2
    grads["dense2.b"] = db2
    return {k: grads[k] for k in m.named_params()}


def forward_window(m: StackedModel, window_values) -> tuple[float, dict]:
    """Predict the next value from one window of model.window reals."""
    values = np.asarray(window_values, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] != m.window:
        raise ShapeError(f"window must hold {m.window} values, got shape {values.shape}")
    preds, trace = forward_batch(m, values[None, :])
    return float(preds[0]), trace


def backward_window(m: StackedModel, trace: dict, d_prediction: float) -> ModelGrads:
    return backward_batch(m, trace, np.array([float(d_prediction)]))
