"""Batched window kernels, numpy implementation.

This is the fallback backend: identical math to the compiled extension
in `_kernels.pyx`, processing B independent windows of T timesteps at
once.  Every window starts from zero state.  Shapes:

    X       (B, T, M)   inputs
    Y       (B, T, N)   per-step block outputs
    dY      (B, T, N)   upstream gradients on Y
    dX      (B, T, M)   gradients on X

Caches are dicts of (B, T, N) arrays; backward consumes the cache of
the forward pass it belongs to.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .errors import StateError

BACKEND_NAME = "python"


def _check_cache(cache: dict, keys: tuple, shape: tuple) -> None:
    for k in keys:
        if k not in cache or cache[k].shape != shape:
            raise StateError(f"cache entry {k!r} missing or not of shape {shape}")


def lstm_forward(p, X: np.ndarray):
    B, T, M = X.shape
    N = p.hidden_size
    flat = X.reshape(B * T, M)
    xz = (flat @ p.W_z).reshape(B, T, N) + p.b_z[0]
    xi = (flat @ p.W_i).reshape(B, T, N) + p.b_i[0]
    xf = (flat @ p.W_f).reshape(B, T, N) + p.b_f[0]
    xo = (flat @ p.W_o).reshape(B, T, N) + p.b_o[0]

    Y = np.empty((B, T, N))
    cache = {k: np.empty((B, T, N))
             for k in ("y_prev", "c_prev", "z", "i", "f", "o", "tanh_c")}
    y = np.zeros((B, N))
    c = np.zeros((B, N))
    for t in range(T):
        cache["y_prev"][:, t] = y
        cache["c_prev"][:, t] = c
        z = np.tanh(xz[:, t] + y @ p.R_z)
        i = expit(xi[:, t] + y @ p.R_i)
        f = expit(xf[:, t] + y @ p.R_f)
        c = z * i + c * f
        o = expit(xo[:, t] + y @ p.R_o)
        tc = np.tanh(c)
        y = tc * o
        cache["z"][:, t] = z
        cache["i"][:, t] = i
        cache["f"][:, t] = f
        cache["o"][:, t] = o
        cache["tanh_c"][:, t] = tc
        Y[:, t] = y
    return Y, cache


def lstm_backward(p, X: np.ndarray, dY: np.ndarray, cache: dict):
    B, T, M = X.shape
    N = p.hidden_size
    if dY.shape != (B, T, N):
        raise StateError(f"dY must be {(B, T, N)}, got {dY.shape}")
    _check_cache(cache, ("y_prev", "c_prev", "z", "i", "f", "o", "tanh_c"), (B, T, N))
    Z, I, F, O = cache["z"], cache["i"], cache["f"], cache["o"]
    TC, Cprev, Yprev = cache["tanh_c"], cache["c_prev"], cache["y_prev"]

    dZb = np.empty((B, T, N))
    dIb = np.empty((B, T, N))
    dFb = np.empty((B, T, N))
    dOb = np.empty((B, T, N))
    dy_next = np.zeros((B, N))
    dc_next = np.zeros((B, N))
    for t in range(T - 1, -1, -1):
        dy = dY[:, t] + dy_next
        do = dy * TC[:, t]
        dc = dy * O[:, t] * (1.0 - TC[:, t] * TC[:, t]) + dc_next
        dzbar = dc * I[:, t] * (1.0 - Z[:, t] * Z[:, t])
        dibar = dc * Z[:, t] * I[:, t] * (1.0 - I[:, t])
        dfbar = dc * Cprev[:, t] * F[:, t] * (1.0 - F[:, t])
        dobar = do * O[:, t] * (1.0 - O[:, t])
        dc_next = dc * F[:, t]
        dy_next = dzbar @ p.R_z.T + dibar @ p.R_i.T + dfbar @ p.R_f.T + dobar @ p.R_o.T
        dZb[:, t] = dzbar
        dIb[:, t] = dibar
        dFb[:, t] = dfbar
        dOb[:, t] = dobar

    flatX = X.reshape(B * T, M)
    flatY = Yprev.reshape(B * T, N)
    grads = {}
    dX = np.zeros((B * T, M))
    for gate, dG in (("z", dZb), ("i", dIb), ("f", dFb), ("o", dOb)):
        g = dG.reshape(B * T, N)
        grads["W_" + gate] = flatX.T @ g
        grads["R_" + gate] = flatY.T @ g
        grads["b_" + gate] = g.sum(axis=0)[None, :]
        dX += g @ getattr(p, "W_" + gate).T
    return grads, dX.reshape(B, T, M)


def gru_forward(p, X: np.ndarray):
    B, T, M = X.shape
    N = p.hidden_size
    flat = X.reshape(B * T, M)
    xz = (flat @ p.W_z).reshape(B, T, N) + p.b_z[0]
    xr = (flat @ p.W_r).reshape(B, T, N) + p.b_r[0]
    xh = (flat @ p.W_h).reshape(B, T, N) + p.b_h[0]

    Y = np.empty((B, T, N))
    cache = {k: np.empty((B, T, N)) for k in ("y_prev", "z", "r", "htil", "ry")}
    y = np.zeros((B, N))
    for t in range(T):
        cache["y_prev"][:, t] = y
        z = expit(xz[:, t] + y @ p.R_z)
        r = expit(xr[:, t] + y @ p.R_r)
        ry = r * y
        htil = np.tanh(xh[:, t] + ry @ p.R_h)
        y = z * y + (1.0 - z) * htil
        cache["z"][:, t] = z
        cache["r"][:, t] = r
        cache["ry"][:, t] = ry
        cache["htil"][:, t] = htil
        Y[:, t] = y
    return Y, cache


def gru_backward(p, X: np.ndarray, dY: np.ndarray, cache: dict):
    B, T, M = X.shape
    N = p.hidden_size
    if dY.shape != (B, T, N):
        raise StateError(f"dY must be {(B, T, N)}, got {dY.shape}")
    _check_cache(cache, ("y_prev", "z", "r", "htil", "ry"), (B, T, N))
    Z, R, HT, RY, Yprev = cache["z"], cache["r"], cache["htil"], cache["ry"], cache["y_prev"]

    dZb = np.empty((B, T, N))
    dRb = np.empty((B, T, N))
    dHb = np.empty((B, T, N))
    dy_next = np.zeros((B, N))
    for t in range(T - 1, -1, -1):
        dh = dY[:, t] + dy_next
        z, r, htil, yprev = Z[:, t], R[:, t], HT[:, t], Yprev[:, t]
        dhbar = dh * (1.0 - z) * (1.0 - htil * htil)
        dry = dhbar @ p.R_h.T
        dzbar = dh * (yprev - htil) * z * (1.0 - z)
        drbar = dry * yprev * r * (1.0 - r)
        dy_next = dh * z + dry * r + dzbar @ p.R_z.T + drbar @ p.R_r.T
        dZb[:, t] = dzbar
        dRb[:, t] = drbar
        dHb[:, t] = dhbar

    flatX = X.reshape(B * T, M)
    flatY = Yprev.reshape(B * T, N)
    gz = dZb.reshape(B * T, N)
    gr = dRb.reshape(B * T, N)
    gh = dHb.reshape(B * T, N)
    grads = {
        "W_z": flatX.T @ gz,
        "W_r": flatX.T @ gr,
        "W_h": flatX.T @ gh,
        "R_z": flatY.T @ gz,
        "R_r": flatY.T @ gr,
        "R_h": RY.reshape(B * T, N).T @ gh,
        "b_z": gz.sum(axis=0)[None, :],
        "b_r": gr.sum(axis=0)[None, :],
        "b_h": gh.sum(axis=0)[None, :],
    }
    dX = gz @ p.W_z.T + gr @ p.W_r.T + gh @ p.W_h.T
    return grads, dX.reshape(B, T, M)
