# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Batched window kernels, compiled implementation.

Same API, cache layout, and math as `_kernels_np`; the per-timestep
recursion runs as C loops with BLAS dgemm over contiguous (B, N)
scratch buffers, avoiding interpreter overhead and temporary arrays.
"""
import numpy as np

from libc.math cimport exp, tanh
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm

from .errors import StateError

BACKEND_NAME = "cython"


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef void _gemm(bint ta, bint tb, int m, int n, int k, double alpha,
                double* a, int lda, double* b, int ldb,
                double beta, double* c, int ldc) noexcept nogil:
    """Row-major C(m,n) = alpha*op(A)@op(B) + beta*C.

    Implemented as the column-major product C^T = op(B)^T op(A)^T, so
    the BLAS operand order is swapped.
    """
    cdef char fa = 84 if tb else 78  # 'T' / 'N'
    cdef char fb = 84 if ta else 78
    dgemm(&fa, &fb, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


def _projection(X, W, b):
    """Flat input projection plus bias as one contiguous (B, T, N) buffer."""
    B, T, M = X.shape
    return np.ascontiguousarray((X.reshape(B * T, M) @ W).reshape(B, T, W.shape[1]) + b[0])


def lstm_forward(p, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    cdef int B = X.shape[0], T = X.shape[1]
    cdef int N = p.hidden_size
    az = _projection(X, p.W_z, p.b_z)
    ai = _projection(X, p.W_i, p.b_i)
    af = _projection(X, p.W_f, p.b_f)
    ao = _projection(X, p.W_o, p.b_o)
    Y = np.empty((B, T, N))
    cache = {k: np.empty((B, T, N))
             for k in ("y_prev", "c_prev", "z", "i", "f", "o", "tanh_c")}

    cdef double[:, :, ::1] y3 = Y
    cdef double[:, :, ::1] vz = az, vi = ai, vf = af, vo = ao
    cdef double[:, :, ::1] yp = cache["y_prev"], cp = cache["c_prev"]
    cdef double[:, :, ::1] cz = cache["z"], ci = cache["i"]
    cdef double[:, :, ::1] cf = cache["f"], co = cache["o"]
    cdef double[:, :, ::1] tc3 = cache["tanh_c"]
    cdef double[:, ::1] Rz = p.R_z, Ri = p.R_i, Rf = p.R_f, Ro = p.R_o
    scratch = np.zeros((6, B, N))
    cdef double[:, :, ::1] s = scratch
    cdef double[:, ::1] yps = s[0], cs = s[1], azs = s[2], ais = s[3], afs = s[4], aos = s[5]
    cdef int t, b, j
    cdef size_t row = N * sizeof(double)
    cdef double zv, iv, fv, ov, cv, tcv
    with nogil:
        for t in range(T):
            for b in range(B):
                if t > 0:
                    memcpy(&yps[b, 0], &y3[b, t - 1, 0], row)
                memcpy(&yp[b, t, 0], &yps[b, 0], row)
                memcpy(&cp[b, t, 0], &cs[b, 0], row)
                memcpy(&azs[b, 0], &vz[b, t, 0], row)
                memcpy(&ais[b, 0], &vi[b, t, 0], row)
                memcpy(&afs[b, 0], &vf[b, t, 0], row)
                memcpy(&aos[b, 0], &vo[b, t, 0], row)
            _gemm(0, 0, B, N, N, 1.0, &yps[0, 0], N, &Rz[0, 0], N, 1.0, &azs[0, 0], N)
            _gemm(0, 0, B, N, N, 1.0, &yps[0, 0], N, &Ri[0, 0], N, 1.0, &ais[0, 0], N)
            _gemm(0, 0, B, N, N, 1.0, &yps[0, 0], N, &Rf[0, 0], N, 1.0, &afs[0, 0], N)
            _gemm(0, 0, B, N, N, 1.0, &yps[0, 0], N, &Ro[0, 0], N, 1.0, &aos[0, 0], N)
            for b in range(B):
                for j in range(N):
                    zv = tanh(azs[b, j])
                    iv = _sigmoid(ais[b, j])
                    fv = _sigmoid(afs[b, j])
                    ov = _sigmoid(aos[b, j])
                    cv = zv * iv + cs[b, j] * fv
                    cs[b, j] = cv
                    tcv = tanh(cv)
                    cz[b, t, j] = zv
                    ci[b, t, j] = iv
                    cf[b, t, j] = fv
                    co[b, t, j] = ov
                    tc3[b, t, j] = tcv
                    y3[b, t, j] = tcv * ov
    return Y, cache


def lstm_backward(p, X, dY, cache):
    X = np.ascontiguousarray(X, dtype=np.float64)
    cdef int B = X.shape[0], T = X.shape[1], M = X.shape[2]
    cdef int N = p.hidden_size
    if tuple(dY.shape) != (B, T, N):
        raise StateError(f"dY must be {(B, T, N)}, got {tuple(dY.shape)}")
    for k in ("y_prev", "c_prev", "z", "i", "f", "o", "tanh_c"):
        if k not in cache or cache[k].shape != (B, T, N):
            raise StateError(f"cache entry {k!r} missing or not of shape {(B, T, N)}")
    dY = np.ascontiguousarray(dY, dtype=np.float64)

    dZb = np.empty((B, T, N))
    dIb = np.empty((B, T, N))
    dFb = np.empty((B, T, N))
    dOb = np.empty((B, T, N))
    cdef double[:, :, ::1] gz = dZb, gi = dIb, gf = dFb, go = dOb
    cdef double[:, :, ::1] dy3 = dY
    cdef double[:, :, ::1] cz = cache["z"], ci = cache["i"]
    cdef double[:, :, ::1] cf = cache["f"], co = cache["o"]
    cdef double[:, :, ::1] tc3 = cache["tanh_c"], cp = cache["c_prev"]
    cdef double[:, ::1] Rz = p.R_z, Ri = p.R_i, Rf = p.R_f, Ro = p.R_o
    scratch = np.zeros((6, B, N))
    cdef double[:, :, ::1] s = scratch
    cdef double[:, ::1] dyn = s[0], dcn = s[1], gzs = s[2], gis = s[3], gfs = s[4], gos = s[5]
    cdef int t, b, j
    cdef double dy, dc, zv, iv, fv, ov, tcv, g
    with nogil:
        for t in range(T - 1, -1, -1):
            for b in range(B):
                for j in range(N):
                    dy = dy3[b, t, j] + dyn[b, j]
                    zv = cz[b, t, j]
                    iv = ci[b, t, j]
                    fv = cf[b, t, j]
                    ov = co[b, t, j]
                    tcv = tc3[b, t, j]
                    dc = dy * ov * (1.0 - tcv * tcv) + dcn[b, j]
                    g = dc * iv * (1.0 - zv * zv)
                    gz[b, t, j] = g
                    gzs[b, j] = g
                    g = dc * zv * iv * (1.0 - iv)
                    gi[b, t, j] = g
                    gis[b, j] = g
                    g = dc * cp[b, t, j] * fv * (1.0 - fv)
                    gf[b, t, j] = g
                    gfs[b, j] = g
                    g = dy * tcv * ov * (1.0 - ov)
                    go[b, t, j] = g
                    gos[b, j] = g
                    dcn[b, j] = dc * fv
            _gemm(0, 1, B, N, N, 1.0, &gzs[0, 0], N, &Rz[0, 0], N, 0.0, &dyn[0, 0], N)
            _gemm(0, 1, B, N, N, 1.0, &gis[0, 0], N, &Ri[0, 0], N, 1.0, &dyn[0, 0], N)
            _gemm(0, 1, B, N, N, 1.0, &gfs[0, 0], N, &Rf[0, 0], N, 1.0, &dyn[0, 0], N)
            _gemm(0, 1, B, N, N, 1.0, &gos[0, 0], N, &Ro[0, 0], N, 1.0, &dyn[0, 0], N)

    flatX = X.reshape(B * T, M)
    flatY = cache["y_prev"].reshape(B * T, N)
    grads = {}
    dX = np.zeros((B * T, M))
    for gate, dG in (("z", dZb), ("i", dIb), ("f", dFb), ("o", dOb)):
        g2 = dG.reshape(B * T, N)
        grads["W_" + gate] = flatX.T @ g2
        grads["R_" + gate] = flatY.T @ g2
        grads["b_" + gate] = g2.sum(axis=0)[None, :]
        dX += g2 @ getattr(p, "W_" + gate).T
    return grads, dX.reshape(B, T, M)


def gru_forward(p, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    cdef int B = X.shape[0], T = X.shape[1]
    cdef int N = p.hidden_size
    az = _projection(X, p.W_z, p.b_z)
    ar = _projection(X, p.W_r, p.b_r)
    ah = _projection(X, p.W_h, p.b_h)
    Y = np.empty((B, T, N))
    cache = {k: np.empty((B, T, N)) for k in ("y_prev", "z", "r", "htil", "ry")}

    cdef double[:, :, ::1] y3 = Y
    cdef double[:, :, ::1] vz = az, vr = ar, vh = ah
    cdef double[:, :, ::1] yp = cache["y_prev"], cz = cache["z"]
    cdef double[:, :, ::1] cr = cache["r"], ch = cache["htil"], cry = cache["ry"]
    cdef double[:, ::1] Rz = p.R_z, Rr = p.R_r, Rh = p.R_h
    scratch = np.zeros((5, B, N))
    cdef double[:, :, ::1] s = scratch
    cdef double[:, ::1] yps = s[0], azs = s[1], ars = s[2], ahs = s[3], rys = s[4]
    cdef int t, b, j
    cdef size_t row = N * sizeof(double)
    cdef double zv, rv, hv
    with nogil:
        for t in range(T):
            for b in range(B):
                if t > 0:
                    memcpy(&yps[b, 0], &y3[b, t - 1, 0], row)
                memcpy(&yp[b, t, 0], &yps[b, 0], row)
                memcpy(&azs[b, 0], &vz[b, t, 0], row)
                memcpy(&ars[b, 0], &vr[b, t, 0], row)
                memcpy(&ahs[b, 0], &vh[b, t, 0], row)
            _gemm(0, 0, B, N, N, 1.0, &yps[0, 0], N, &Rz[0, 0], N, 1.0, &azs[0, 0], N)
            _gemm(0, 0, B, N, N, 1.0, &yps[0, 0], N, &Rr[0, 0], N, 1.0, &ars[0, 0], N)
            for b in range(B):
                for j in range(N):
                    zv = _sigmoid(azs[b, j])
                    rv = _sigmoid(ars[b, j])
                    cz[b, t, j] = zv
                    cr[b, t, j] = rv
                    rv = rv * yps[b, j]
                    cry[b, t, j] = rv
                    rys[b, j] = rv
            _gemm(0, 0, B, N, N, 1.0, &rys[0, 0], N, &Rh[0, 0], N, 1.0, &ahs[0, 0], N)
            for b in range(B):
                for j in range(N):
                    hv = tanh(ahs[b, j])
                    ch[b, t, j] = hv
                    zv = cz[b, t, j]
                    y3[b, t, j] = zv * yps[b, j] + (1.0 - zv) * hv
    return Y, cache


def gru_backward(p, X, dY, cache):
    X = np.ascontiguousarray(X, dtype=np.float64)
    cdef int B = X.shape[0], T = X.shape[1], M = X.shape[2]
    cdef int N = p.hidden_size
    if tuple(dY.shape) != (B, T, N):
        raise StateError(f"dY must be {(B, T, N)}, got {tuple(dY.shape)}")
    for k in ("y_prev", "z", "r", "htil", "ry"):
        if k not in cache or cache[k].shape != (B, T, N):
            raise StateError(f"cache entry {k!r} missing or not of shape {(B, T, N)}")
    dY = np.ascontiguousarray(dY, dtype=np.float64)

    dZb = np.empty((B, T, N))
    dRb = np.empty((B, T, N))
    dHb = np.empty((B, T, N))
    cdef double[:, :, ::1] gz = dZb, gr = dRb, gh = dHb
    cdef double[:, :, ::1] dy3 = dY
    cdef double[:, :, ::1] cz = cache["z"], cr = cache["r"]
    cdef double[:, :, ::1] ch = cache["htil"], yp = cache["y_prev"]
    cdef double[:, ::1] Rz = p.R_z, Rr = p.R_r, Rh = p.R_h
    scratch = np.zeros((6, B, N))
    cdef double[:, :, ::1] s = scratch
    cdef double[:, ::1] dyn = s[0], dh2 = s[1], dry2 = s[2], gzs = s[3], grs = s[4], ghs = s[5]
    cdef int t, b, j
    cdef double dh, zv, rv, hv, ypv, dryv, g
    with nogil:
        for t in range(T - 1, -1, -1):
            for b in range(B):
                for j in range(N):
                    dh = dy3[b, t, j] + dyn[b, j]
                    dh2[b, j] = dh
                    zv = cz[b, t, j]
                    hv = ch[b, t, j]
                    ypv = yp[b, t, j]
                    g = dh * (ypv - hv) * zv * (1.0 - zv)
                    gz[b, t, j] = g
                    gzs[b, j] = g
                    g = dh * (1.0 - zv) * (1.0 - hv * hv)
                    gh[b, t, j] = g
                    ghs[b, j] = g
            _gemm(0, 1, B, N, N, 1.0, &ghs[0, 0], N, &Rh[0, 0], N, 0.0, &dry2[0, 0], N)
            for b in range(B):
                for j in range(N):
                    dryv = dry2[b, j]
                    rv = cr[b, t, j]
                    g = dryv * yp[b, t, j] * rv * (1.0 - rv)
                    gr[b, t, j] = g
                    grs[b, j] = g
                    dyn[b, j] = dh2[b, j] * cz[b, t, j] + dryv * rv
            _gemm(0, 1, B, N, N, 1.0, &gzs[0, 0], N, &Rz[0, 0], N, 1.0, &dyn[0, 0], N)
            _gemm(0, 1, B, N, N, 1.0, &grs[0, 0], N, &Rr[0, 0], N, 1.0, &dyn[0, 0], N)

    flatX = X.reshape(B * T, M)
    flatY = cache["y_prev"].reshape(B * T, N)
    gz2 = dZb.reshape(B * T, N)
    gr2 = dRb.reshape(B * T, N)
    gh2 = dHb.reshape(B * T, N)
    grads = {
        "W_z": flatX.T @ gz2,
        "W_r": flatX.T @ gr2,
        "W_h": flatX.T @ gh2,
        "R_z": flatY.T @ gz2,
        "R_r": flatY.T @ gr2,
        "R_h": cache["ry"].reshape(B * T, N).T @ gh2,
        "b_z": gz2.sum(axis=0)[None, :],
        "b_r": gr2.sum(axis=0)[None, :],
        "b_h": gh2.sum(axis=0)[None, :],
    }
    dX = gz2 @ p.W_z.T + gr2 @ p.W_r.T + gh2 @ p.W_h.T
    return grads, dX.reshape(B, T, M)
