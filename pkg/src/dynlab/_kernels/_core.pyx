# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Horner evaluation, orbit cocycles, branch lifting,
iterated Newton and Green-function sweeps.  Mirrors pyfallback.py."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, log

cnp.import_array()

BACKEND = "cython"

cdef enum:
    _LIFT_OK = 0
    _LIFT_BISECT_EXHAUSTED = 1
    _LIFT_DERIV_VANISHED = 2

LIFT_OK = _LIFT_OK
LIFT_BISECT_EXHAUSTED = _LIFT_BISECT_EXHAUSTED
LIFT_DERIV_VANISHED = _LIFT_DERIV_VANISHED


cdef inline void _horner2(double complex[::1] c, double complex z,
                          double complex *f, double complex *df) noexcept nogil:
    cdef Py_ssize_t k
    cdef double complex fv = c[c.shape[0] - 1]
    cdef double complex dv = 0
    for k in range(c.shape[0] - 2, -1, -1):
        dv = dv * z + fv
        fv = fv * z + c[k]
    f[0] = fv
    df[0] = dv


cdef double complex[::1] _as_carr(object coeffs):
    return np.ascontiguousarray(coeffs, dtype=np.complex128)


def horner2(coeffs, z):
    cdef double complex[::1] c = _as_carr(coeffs)
    cdef double complex f, df
    _horner2(c, z, &f, &df)
    return f, df


def horner2_many(coeffs, zs):
    cdef double complex[::1] c = _as_carr(coeffs)
    zs = np.ascontiguousarray(zs, dtype=np.complex128)
    cdef double complex[::1] zv = zs.ravel()
    out_f = np.empty(zv.shape[0], dtype=np.complex128)
    out_df = np.empty(zv.shape[0], dtype=np.complex128)
    cdef double complex[::1] fv = out_f
    cdef double complex[::1] dv = out_df
    cdef Py_ssize_t i
    cdef double complex f, df
    for i in range(zv.shape[0]):
        _horner2(c, zv[i], &f, &df)
        fv[i] = f
        dv[i] = df
    shape = np.shape(zs)
    return out_f.reshape(shape), out_df.reshape(shape)


def orbit_cocycle(coeffs, z, n, escape_radius):
    cdef double complex[::1] c = _as_carr(coeffs)
    cdef double complex w = z
    cdef double R = escape_radius
    cdef Py_ssize_t nn = n
    pts_arr = np.empty(nn + 1, dtype=np.complex128)
    ld_arr = np.empty(nn + 1, dtype=np.float64)
    cdef double complex[::1] pts = pts_arr
    cdef double[::1] ld = ld_arr
    cdef Py_ssize_t k, used = 1
    cdef long escaped_at = -1
    cdef double complex f, df
    cdef double ad
    pts[0] = w
    ld[0] = 0.0
    if abs(w) > R:
        return pts_arr[:1], ld_arr[:1], 0
    for k in range(nn):
        _horner2(c, w, &f, &df)
        ad = abs(df)
        ld[used] = ld[used - 1] + (log(ad) if ad > 0.0 else -INFINITY)
        w = f
        pts[used] = w
        used += 1
        if abs(w) > R:
            escaped_at = used - 1
            break
    return pts_arr[:used], ld_arr[:used], escaped_at


cdef int _newton_once(double complex[::1] c, double complex w,
                      double complex *z, double tol, int max_newton) noexcept nogil:
    cdef int i
    cdef double complex f, df, r
    for i in range(max_newton):
        _horner2(c, z[0], &f, &df)
        r = f - w
        if abs(r) <= tol:
            return 1
        if df == 0:
            return 0
        z[0] = z[0] - r / df
    _horner2(c, z[0], &f, &df)
    return abs(f - w) <= tol


cdef int _advance(double complex[::1] c, double complex *z,
                  double complex w_from, double complex w_to,
                  double jump_cap, double rel_jump, double newton_tol,
                  int max_newton, int depth) noexcept nogil:
    cdef double tol = newton_tol * (1.0 + abs(w_to))
    cdef double complex znew = z[0]
    cdef double complex mid, f0, df0
    cdef double allowed = jump_cap
    cdef int code
    _horner2(c, z[0], &f0, &df0)
    if df0 != 0:
        allowed = min(allowed, rel_jump * abs(w_to - w_from) / abs(df0))
    if _newton_once(c, w_to, &znew, tol, max_newton) and abs(znew - z[0]) <= allowed:
        z[0] = znew
        return _LIFT_OK
    if depth <= 0:
        return _LIFT_BISECT_EXHAUSTED
    mid = 0.5 * (w_from + w_to)
    code = _advance(c, z, w_from, mid, jump_cap, rel_jump, newton_tol,
                    max_newton, depth - 1)
    if code != _LIFT_OK:
        return code
    return _advance(c, z, mid, w_to, jump_cap, rel_jump, newton_tol,
                    max_newton, depth - 1)


def lift_path(coeffs, targets, z0, jump_cap, newton_tol=1e-13, max_newton=8,
              max_bisect=48, rel_jump=4.0):
    cdef double complex[::1] c = _as_carr(coeffs)
    targets = np.ascontiguousarray(targets, dtype=np.complex128)
    cdef double complex[::1] tv = targets
    cdef Py_ssize_t m = tv.shape[0]
    lifted_arr = np.empty(m, dtype=np.complex128)
    cdef double complex[::1] lifted = lifted_arr
    cdef double complex z = z0
    cdef double tol0 = newton_tol * (1.0 + abs(tv[0]))
    cdef double jc = jump_cap
    cdef double rj = rel_jump
    cdef double nt = newton_tol
    cdef int mn = max_newton
    cdef int mb = max_bisect
    cdef Py_ssize_t k
    cdef int code
    if not _newton_once(c, tv[0], &z, tol0, 4 * mn):
        return lifted_arr, LIFT_DERIV_VANISHED, 0
    lifted[0] = z
    for k in range(1, m):
        code = _advance(c, &z, tv[k - 1], tv[k], jc, rj, nt, mn, mb)
        if code != _LIFT_OK:
            return lifted_arr, code, k
        lifted[k] = z
    return lifted_arr, LIFT_OK, -1


cdef void _iterate_eval(double complex[::1] c, double complex z, int n,
                        double complex *w, double complex *dw) noexcept nogil:
    cdef int k
    cdef double complex f, df
    w[0] = z
    dw[0] = 1
    for k in range(n):
        _horner2(c, w[0], &f, &df)
        dw[0] = dw[0] * df
        w[0] = f


def iterate_eval(coeffs, z, n):
    cdef double complex[::1] c = _as_carr(coeffs)
    cdef double complex w, dw
    _iterate_eval(c, z, n, &w, &dw)
    return w, dw


def newton_iterate_solve(coeffs, n, target, z0, tol=1e-13, maxit=60):
    cdef double complex[::1] c = _as_carr(coeffs)
    cdef double complex z = z0, w, dw, r
    cdef double complex t = target
    cdef double atol = tol * (1.0 + abs(t))
    cdef int i, nn = n
    for i in range(maxit):
        _iterate_eval(c, z, nn, &w, &dw)
        r = w - t
        if abs(r) <= atol:
            return z, True
        if dw == 0 or not (abs(dw) < INFINITY):
            return z, False
        z = z - r / dw
    _iterate_eval(c, z, nn, &w, &dw)
    return z, abs(w - t) <= atol


def green_many(coeffs, zs, max_depth, escape_radius):
    cdef double complex[::1] c = _as_carr(coeffs)
    zs_arr = np.ascontiguousarray(zs, dtype=np.complex128)
    shape = np.shape(zs_arr)
    cdef double complex[::1] zv = zs_arr.ravel()
    cdef Py_ssize_t m = zv.shape[0]
    g_arr = np.zeros(m, dtype=np.float64)
    grad_arr = np.zeros(m, dtype=np.complex128)
    depth_arr = np.full(m, -1, dtype=np.int64)
    cdef double[::1] g = g_arr
    cdef double complex[::1] grad = grad_arr
    cdef long[::1] depth = depth_arr
    cdef double R = escape_radius
    cdef int d = c.shape[0] - 1
    cdef int N = max_depth
    cdef Py_ssize_t i
    cdef int k
    cdef double complex w, dw, f, df
    cdef double scale
    for i in range(m):
        w = zv[i]
        dw = 1
        if abs(w) > R:
            g[i] = log(abs(w))
            grad[i] = (1.0 / w).conjugate()
            depth[i] = 0
            continue
        for k in range(1, N + 1):
            _horner2(c, w, &f, &df)
            dw = dw * df
            w = f
            if abs(w) > R:
                scale = float(d) ** (-k)
                g[i] = scale * log(abs(w))
                grad[i] = scale * (dw / w).conjugate()
                depth[i] = k
                break
    return g_arr.reshape(shape), grad_arr.reshape(shape), depth_arr.reshape(shape)
