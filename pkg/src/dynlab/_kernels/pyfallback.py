"""Pure-Python/numpy implementations of the hot kernels.

Slow but dependency-free; selected at import time when the compiled core is
unavailable or DYNLAB_PURE_PYTHON is set.  Must stay algorithmically identical
to _core.pyx: same operation order, same guards, same failure codes.
"""

import cmath
import math

import numpy as np

BACKEND = "python"

# lift_path failure codes
LIFT_OK = 0
LIFT_BISECT_EXHAUSTED = 1
LIFT_DERIV_VANISHED = 2


def horner2(coeffs, z):
    """Evaluate f(z) and Df(z) by a fused Horner recurrence."""
    f = coeffs[-1]
    df = 0.0 + 0.0j
    for k in range(len(coeffs) - 2, -1, -1):
        df = df * z + f
        f = f * z + coeffs[k]
    return f, df


def horner2_many(coeffs, zs):
    zs = np.asarray(zs, dtype=complex)
    f = np.full_like(zs, coeffs[-1])
    df = np.zeros_like(zs)
    for k in range(len(coeffs) - 2, -1, -1):
        df = df * zs + f
        f = f * zs + coeffs[k]
    return f, df


def orbit_cocycle(coeffs, z, n, escape_radius):
    """Iterate f for up to n steps, accumulating log|Df| along the way.

    Returns (points, logder, escaped_at) where logder[k] = sum_{j<k}
    log|Df(points[j])| and escaped_at is the first index whose point exceeds
    the escape radius (-1 if none).  The orbit is truncated at escape.
    """
    pts = [complex(z)]
    logder = [0.0]
    escaped_at = -1
    w = complex(z)
    if abs(w) > escape_radius:
        return np.array(pts), np.array(logder), 0
    for _ in range(n):
        f, df = horner2(coeffs, w)
        ad = abs(df)
        logder.append(logder[-1] + (math.log(ad) if ad > 0.0 else -math.inf))
        w = f
        pts.append(w)
        if abs(w) > escape_radius:
            escaped_at = len(pts) - 1
            break
    return np.array(pts), np.array(logder), escaped_at


def _newton_once(coeffs, w, z, tol, max_newton):
    """Newton for f(z)=w from seed z.  Returns (z, ok)."""
    for _ in range(max_newton):
        f, df = horner2(coeffs, z)
        r = f - w
        if abs(r) <= tol:
            return z, True
        if df == 0.0:
            return z, False
        z = z - r / df
    f, _ = horner2(coeffs, z)
    return z, abs(f - w) <= tol


def lift_path(coeffs, targets, z0, jump_cap, newton_tol=1e-13, max_newton=8,
              max_bisect=48, rel_jump=4.0):
    """Analytically continue a branch of f^{-1} along a path of targets.

    z0 must satisfy f(z0) = targets[0] (it is Newton-polished first).  Each
    subsequent target is reached by predictor-corrector: predictor is the
    previous lifted point, corrector is Newton on f(z)=target.  A step is
    rejected and the target arc bisected when Newton fails to converge in
    max_newton iterations or the lifted point jumps further than both the
    absolute cap and rel_jump * |dw| / |Df| (the first-order step estimate);
    this is the guard against silent branch switching.

    Returns (lifted, status, fail_index); lifted is aligned with targets.
    """
    targets = np.asarray(targets, dtype=complex)
    m = len(targets)
    lifted = np.empty(m, dtype=complex)
    tol0 = newton_tol * (1.0 + abs(targets[0]))
    z, ok = _newton_once(coeffs, targets[0], complex(z0), tol0, 4 * max_newton)
    if not ok:
        return lifted, LIFT_DERIV_VANISHED, 0
    lifted[0] = z
    for k in range(1, m):
        z, code = _advance(coeffs, z, targets[k - 1], targets[k], jump_cap,
                           rel_jump, newton_tol, max_newton, max_bisect)
        if code != LIFT_OK:
            return lifted, code, k
        lifted[k] = z
    return lifted, LIFT_OK, -1


def _advance(coeffs, z, w_from, w_to, jump_cap, rel_jump, newton_tol,
             max_newton, depth):
    tol = newton_tol * (1.0 + abs(w_to))
    _, df0 = horner2(coeffs, z)
    allowed = jump_cap
    if df0 != 0.0:
        allowed = min(allowed, rel_jump * abs(w_to - w_from) / abs(df0))
    znew, ok = _newton_once(coeffs, w_to, z, tol, max_newton)
    if ok and abs(znew - z) <= allowed:
        return znew, LIFT_OK
    if depth <= 0:
        return z, LIFT_BISECT_EXHAUSTED
    mid = 0.5 * (w_from + w_to)
    z1, code = _advance(coeffs, z, w_from, mid, jump_cap, rel_jump,
                        newton_tol, max_newton, depth - 1)
    if code != LIFT_OK:
        return z1, code
    return _advance(coeffs, z1, mid, w_to, jump_cap, rel_jump, newton_tol,
                    max_newton, depth - 1)


def iterate_eval(coeffs, z, n):
    """Evaluate f^n(z) and D(f^n)(z) by the chain rule."""
    w = complex(z)
    dw = 1.0 + 0.0j
    for _ in range(n):
        f, df = horner2(coeffs, w)
        dw = dw * df
        w = f
    return w, dw


def newton_iterate_solve(coeffs, n, target, z0, tol=1e-13, maxit=60):
    """Newton for f^n(z) = target.  Returns (z, ok)."""
    z = complex(z0)
    atol = tol * (1.0 + abs(target))
    for _ in range(maxit):
        w, dw = iterate_eval(coeffs, z, n)
        r = w - target
        if abs(r) <= atol:
            return z, True
        if dw == 0.0 or not (abs(dw) < math.inf):
            return z, False
        z = z - r / dw
    w, _ = iterate_eval(coeffs, z, n)
    return z, abs(w - target) <= atol


def green_many(coeffs, zs, max_depth, escape_radius):
    """Green function values/gradients on an array of points.

    G = d^-N log|f^N| at the first escaping N; 0 where the orbit stays
    bounded for the whole budget (depth reported as -1 there).  The gradient
    is conj(D(f^N)/f^N) * d^-N at escaping points.
    """
    zs = np.asarray(zs, dtype=complex)
    d = len(coeffs) - 1
    w = zs.copy()
    dw = np.ones_like(zs)
    g = np.zeros(zs.shape, dtype=float)
    grad = np.zeros(zs.shape, dtype=complex)
    depth = np.full(zs.shape, -1, dtype=np.int64)
    active = np.ones(zs.shape, dtype=bool)
    esc = np.abs(w) > escape_radius
    if esc.any():
        g[esc] = np.log(np.abs(w[esc]))
        grad[esc] = np.conj(1.0 / w[esc])
        depth[esc] = 0
        active &= ~esc
    for k in range(1, max_depth + 1):
        if not active.any():
            break
        f, df = horner2_many(coeffs, w[active])
        dw[active] = dw[active] * df
        w[active] = f
        esc = np.zeros(zs.shape, dtype=bool)
        esc[active] = np.abs(f) > escape_radius
        if esc.any():
            scale = float(d) ** (-k)
            g[esc] = scale * np.log(np.abs(w[esc]))
            grad[esc] = scale * np.conj(dw[esc] / w[esc])
            depth[esc] = k
            active &= ~esc
    return g, grad, depth
