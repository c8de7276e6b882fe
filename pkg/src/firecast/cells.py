"""Recurrent cell forward steps and backward-through-time reference passes.

Conventions (row vectors, f64):
    x_t     1xM input at step t
    y_t     1xN block output (also the recurrent input of the next step)
    c_t     1xN LSTM cell state

LSTM step (block input z uses tanh, gates use sigmoid):
    zbar = x W_z + y_prev R_z + b_z      z = tanh(zbar)
    ibar = x W_i + y_prev R_i + b_i      i = sigmoid(ibar)
    fbar = x W_f + y_prev R_f + b_f      f = sigmoid(fbar)
    c    = z*i + c_prev*f
    obar = x W_o + y_prev R_o + b_o      o = sigmoid(obar)
    y    = tanh(c)*o

GRU step (update gate z keeps the previous output, reset gate r scales
the previous output before the recurrent product):
    z    = sigmoid(x W_z + y_prev R_z + b_z)
    r    = sigmoid(x W_r + y_prev R_r + b_r)
    hbar = x W_h + (r*y_prev) R_h + b_h  htil = tanh(hbar)
    h    = z*y_prev + (1 - z)*htil

The backward passes here walk one step at a time and exist as the
readable reference; training uses the batched kernels in `backend`,
which are checked against these.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ShapeError, StateError


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ShapeError(msg)


def _coerce(obj, names: tuple) -> None:
    """Force every named field to contiguous float64 (kernels rely on it)."""
    for name in names:
        arr = np.ascontiguousarray(getattr(obj, name), dtype=np.float64)
        _check(arr.ndim == 2, f"{name} must be 2-D, got {arr.ndim}-D")
        object.__setattr__(obj, name, arr)


@dataclass
class LstmParams:
    """Per-gate weight set for one LSTM layer: W (MxN), R (NxN), b (1xN)."""

    W_z: np.ndarray
    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    R_z: np.ndarray
    R_i: np.ndarray
    R_f: np.ndarray
    R_o: np.ndarray
    b_z: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        _coerce(self, ("W_z", "W_i", "W_f", "W_o", "R_z", "R_i", "R_f", "R_o",
                       "b_z", "b_i", "b_f", "b_o"))
        m, n = self.W_z.shape
        for name in ("W_i", "W_f", "W_o"):
            _check(getattr(self, name).shape == (m, n), f"lstm {name} must be {(m, n)}")
        for name in ("R_z", "R_i", "R_f", "R_o"):
            _check(getattr(self, name).shape == (n, n), f"lstm {name} must be {(n, n)}")
        for name in ("b_z", "b_i", "b_f", "b_o"):
            _check(getattr(self, name).shape == (1, n), f"lstm {name} must be {(1, n)}")

    @property
    def input_size(self) -> int:
        return self.W_z.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.W_z.shape[1]


@dataclass
class GruParams:
    """Weight set for one GRU layer: W (MxN), R (NxN), b (1xN)."""

    W_z: np.ndarray
    W_r: np.ndarray
    W_h: np.ndarray
    R_z: np.ndarray
    R_r: np.ndarray
    R_h: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray
    b_h: np.ndarray

    def __post_init__(self):
        _coerce(self, ("W_z", "W_r", "W_h", "R_z", "R_r", "R_h", "b_z", "b_r", "b_h"))
        m, n = self.W_z.shape
        for name in ("W_r", "W_h"):
            _check(getattr(self, name).shape == (m, n), f"gru {name} must be {(m, n)}")
        for name in ("R_z", "R_r", "R_h"):
            _check(getattr(self, name).shape == (n, n), f"gru {name} must be {(n, n)}")
        for name in ("b_z", "b_r", "b_h"):
            _check(getattr(self, name).shape == (1, n), f"gru {name} must be {(1, n)}")

    @property
    def input_size(self) -> int:
        return self.W_z.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.W_z.shape[1]


@dataclass
class RnnParams:
    """Plain recurrent unit: h = tanh(x W_xh + h_prev W_hh + b_h), y = h W_yi + b_y."""

    W_xh: np.ndarray
    W_hh: np.ndarray
    b_h: np.ndarray
    W_yi: np.ndarray
    b_y: np.ndarray

    def __post_init__(self):
        _coerce(self, ("W_xh", "W_hh", "b_h", "W_yi", "b_y"))
        m, n = self.W_xh.shape
        _check(self.W_hh.shape == (n, n), f"rnn W_hh must be {(n, n)}")
        _check(self.b_h.shape == (1, n), f"rnn b_h must be {(1, n)}")
        _check(self.W_yi.shape[0] == n, f"rnn W_yi must have {n} rows")
        k = self.W_yi.shape[1]
        _check(self.b_y.shape == (1, k), f"rnn b_y must be {(1, k)}")


@dataclass
class LstmStepTrace:
    """Values cached by one LSTM step, consumed by the backward pass."""

    x: np.ndarray
    y_prev: np.ndarray
    c_prev: np.ndarray
    z: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray


@dataclass
class GruStepTrace:
    x: np.ndarray
    y_prev: np.ndarray
    z: np.ndarray
    r: np.ndarray
    htil: np.ndarray


@dataclass
class RnnStepTrace:
    x: np.ndarray
    h_prev: np.ndarray
    h: np.ndarray


def _step_shapes(p, x_t: np.ndarray, y_prev: np.ndarray, kind: str) -> None:
    m, n = p.input_size, p.hidden_size
    _check(x_t.shape == (1, m), f"{kind} step input must be (1, {m}), got {x_t.shape}")
    _check(y_prev.shape == (1, n), f"{kind} recurrent input must be (1, {n}), got {y_prev.shape}")


def lstm_step(p: LstmParams, x_t: np.ndarray, y_prev: np.ndarray, c_prev: np.ndarray):
    """One LSTM timestep; returns (y_t, c_t, trace)."""
    _step_shapes(p, x_t, y_prev, "lstm")
    _check(c_prev.shape == y_prev.shape, f"lstm cell state must be {y_prev.shape}, got {c_prev.shape}")
    z = np.tanh(x_t @ p.W_z + y_prev @ p.R_z + p.b_z)
    i = expit(x_t @ p.W_i + y_prev @ p.R_i + p.b_i)
    f = expit(x_t @ p.W_f + y_prev @ p.R_f + p.b_f)
    c = z * i + c_prev * f
    o = expit(x_t @ p.W_o + y_prev @ p.R_o + p.b_o)
    tanh_c = np.tanh(c)
    y = tanh_c * o
    return y, c, LstmStepTrace(x_t, y_prev, c_prev, z, i, f, o, c, tanh_c)


def gru_step(p: GruParams, x_t: np.ndarray, y_prev: np.ndarray):
    """One GRU timestep; returns (h_t, trace)."""
    _step_shapes(p, x_t, y_prev, "gru")
    z = expit(x_t @ p.W_z + y_prev @ p.R_z + p.b_z)
    r = expit(x_t @ p.W_r + y_prev @ p.R_r + p.b_r)
    htil = np.tanh(x_t @ p.W_h + (r * y_prev) @ p.R_h + p.b_h)
    h = z * y_prev + (1.0 - z) * htil
    return h, GruStepTrace(x_t, y_prev, z, r, htil)


def rnn_step(p: RnnParams, x_t: np.ndarray, h_prev: np.ndarray):
    """One plain-RNN timestep; returns (h_t, y_t, trace). Output has no activation."""
    m, n = p.W_xh.shape
    _check(x_t.shape == (1, m), f"rnn step input must be (1, {m}), got {x_t.shape}")
    _check(h_prev.shape == (1, n), f"rnn hidden state must be (1, {n}), got {h_prev.shape}")
    h = np.tanh(x_t @ p.W_xh + h_prev @ p.W_hh + p.b_h)
    y = h @ p.W_yi + p.b_y
    return h, y, RnnStepTrace(x_t, h_prev, h)


def lstm_forward(p: LstmParams, xs: list[np.ndarray]):
    """Run a full window from zero state; returns (ys, traces)."""
    n = p.hidden_size
    y = np.zeros((1, n))
    c = np.zeros((1, n))
    ys, traces = [], []
    for x_t in xs:
        y, c, tr = lstm_step(p, x_t, y, c)
        ys.append(y)
        traces.append(tr)
    return ys, traces


def gru_forward(p: GruParams, xs: list[np.ndarray]):
    """Run a full window from zero state; returns (hs, traces)."""
    y = np.zeros((1, p.hidden_size))
    hs, traces = [], []
    for x_t in xs:
        y, tr = gru_step(p, x_t, y)
        hs.append(y)
        traces.append(tr)
    return hs, traces


def lstm_backward(p: LstmParams, traces: list[LstmStepTrace], d_y_sequence: list[np.ndarray]):
    """Reverse accumulation through all timesteps of one window.

    `d_y_sequence[t]` is the upstream gradient on y_t.  Returns a dict of
    gradients keyed by LstmParams field name and the per-step input
    gradients dx_t.  Both recurrent paths (through y and through c) are
    accumulated.
    """
    if len(traces) != len(d_y_sequence):
        raise StateError(
            f"trace length {len(traces)} does not match gradient sequence {len(d_y_sequence)}"
        )
    grads = {
        name: np.zeros_like(getattr(p, name))
        for name in ("W_z", "W_i", "W_f", "W_o", "R_z", "R_i", "R_f", "R_o",
                     "b_z", "b_i", "b_f", "b_o")
    }
    n = p.hidden_size
    dy_next = np.zeros((1, n))
    dc_next = np.zeros((1, n))
    dxs: list[np.ndarray] = [None] * len(traces)
    for t in range(len(traces) - 1, -1, -1):
        tr = traces[t]
        dy = d_y_sequence[t] + dy_next
        do = dy * tr.tanh_c
        dc = dy * tr.o * (1.0 - tr.tanh_c * tr.tanh_c) + dc_next
        dz = dc * tr.i
        di = dc * tr.z
        df = dc * tr.c_prev
        dc_next = dc * tr.f
        dzbar = dz * (1.0 - tr.z * tr.z)
        dibar = di * tr.i * (1.0 - tr.i)
        dfbar = df * tr.f * (1.0 - tr.f)
        dobar = do * tr.o * (1.0 - tr.o)
        for gate, dbar in (("z", dzbar), ("i", dibar), ("f", dfbar), ("o", dobar)):
            grads["W_" + gate] += tr.x.T @ dbar
            grads["R_" + gate] += tr.y_prev.T @ dbar
            grads["b_" + gate] += dbar
        dxs[t] = dzbar @ p.W_z.T + dibar @ p.W_i.T + dfbar @ p.W_f.T + dobar @ p.W_o.T
        dy_next = dzbar @ p.R_z.T + dibar @ p.R_i.T + dfbar @ p.R_f.T + dobar @ p.R_o.T
    return grads, dxs


def gru_backward(p: GruParams, traces: list[GruStepTrace], d_y_sequence: list[np.ndarray]):
    """Reverse accumulation for a GRU window; mirrors `lstm_backward`.

    Includes the product rule for the reset-scaled recurrent term
    (r*y_prev enters the candidate's recurrent matmul).
    """
    if len(traces) != len(d_y_sequence):
        raise StateError(
            f"trace length {len(traces)} does not match gradient sequence {len(d_y_sequence)}"
        )
    grads = {
        name: np.zeros_like(getattr(p, name))
        for name in ("W_z", "W_r", "W_h", "R_z", "R_r", "R_h", "b_z", "b_r", "b_h")
    }
    n = p.hidden_size
    dy_next = np.zeros((1, n))
    dxs: list[np.ndarray] = [None] * len(traces)
    for t in range(len(traces) - 1, -1, -1):
        tr = traces[t]
        dh = d_y_sequence[t] + dy_next
        dz = dh * (tr.y_prev - tr.htil)
        dhtil = dh * (1.0 - tr.z)
        dhbar = dhtil * (1.0 - tr.htil * tr.htil)
        dry = dhbar @ p.R_h.T
        dr = dry * tr.y_prev
        dzbar = dz * tr.z * (1.0 - tr.z)
        drbar = dr * tr.r * (1.0 - tr.r)
        grads["W_z"] += tr.x.T @ dzbar
        grads["R_z"] += tr.y_prev.T @ dzbar
        grads["b_z"] += dzbar
        grads["W_r"] += tr.x.T @ drbar
        grads["R_r"] += tr.y_prev.T @ drbar
        grads["b_r"] += drbar
        grads["W_h"] += tr.x.T @ dhbar
        grads["R_h"] += (tr.r * tr.y_prev).T @ dhbar
        grads["b_h"] += dhbar
        dxs[t] = dzbar @ p.W_z.T + drbar @ p.W_r.T + dhbar @ p.W_h.T
        dy_next = dh * tr.z + dry * tr.r + dzbar @ p.R_z.T + drbar @ p.R_r.T
    return grads, dxs
