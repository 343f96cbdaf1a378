"""Dense-tableau simplex kernels.

Each kernel exists twice: a loop version (``*_loops``) that numba compiles,
and a vectorised numpy version (``*_np``).  ``hubplan._accel.USE_NUMBA``
selects which pair is exported under the public names.

Nonbasic status codes used throughout::

    BASIC = 0, AT_LOWER = 1, AT_UPPER = 2, AT_ZERO = 3 (free, nonbasic at 0)
"""

from __future__ import annotations

import numpy as np

from .._accel import USE_NUMBA, compile_always

BASIC = 0
AT_LOWER = 1
AT_UPPER = 2
AT_ZERO = 3


# --------------------------------------------------------------------------
# loop versions (numba targets)
# --------------------------------------------------------------------------


def pivot_loops(T, d, r, q):
    m, n = T.shape
    inv = 1.0 / T[r, q]
    for j in range(n):
        T[r, j] *= inv
    T[r, q] = 1.0
    for i in range(m):
        if i == r:
            continue
        f = T[i, q]
        if f != 0.0:
            for j in range(n):
                T[i, j] -= f * T[r, j]
            T[i, q] = 0.0
    f = d[q]
    if f != 0.0:
        for j in range(n):
            d[j] -= f * T[r, j]
        d[q] = 0.0


def choose_entering_loops(d, status, lo, hi, allowed, tol, bland):
    best = -1
    best_dir = 0
    best_score = 0.0
    for j in range(d.shape[0]):
        s = status[j]
        if s == 0 or not allowed[j]:
            continue
        dj = d[j]
        score = 0.0
        direction = 0
        if s == 1:
            if dj < -tol and hi[j] > lo[j]:
                score = -dj
                direction = 1
        elif s == 2:
            if dj > tol and hi[j] > lo[j]:
                score = dj
                direction = -1
        else:
            if dj > tol:
                score = dj
                direction = -1
            elif dj < -tol:
                score = -dj
                direction = 1
        if direction == 0:
            continue
        if bland:
            return j, direction
        if score > best_score:
            best_score = score
            best = j
            best_dir = direction
    return best, best_dir


def primal_ratio_loops(xB, loB, hiB, dxB, basis, ptol, ftol, bland):
    """Ratio test along ``dxB``; returns (row, step) or (-1, inf)."""
    m = xB.shape[0]
    inf = np.inf
    if bland:
        tmin = inf
        row = -1
        for i in range(m):
            a = dxB[i]
            if a < -ptol:
                if loB[i] == -inf:
                    continue
                lim = (xB[i] - loB[i]) / (-a)
            elif a > ptol:
                if hiB[i] == inf:
                    continue
                lim = (hiB[i] - xB[i]) / a
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim < tmin - 1e-12:
                tmin = lim
                row = i
            elif lim <= tmin + 1e-12 and basis[i] < basis[row]:
                row = i
        return row, tmin
    # Harris two-pass: relaxed bound, then largest pivot among candidates
    tmax = inf
    for i in range(m):
        a = dxB[i]
        if a < -ptol:
            if loB[i] == -inf:
                continue
            lim = (xB[i] - loB[i] + ftol) / (-a)
        elif a > ptol:
            if hiB[i] == inf:
                continue
            lim = (hiB[i] - xB[i] + ftol) / a
        else:
            continue
        if lim < tmax:
            tmax = lim
    if tmax == inf:
        return -1, inf
    row = -1
    best_a = 0.0
    step = inf
    for i in range(m):
        a = dxB[i]
        if a < -ptol:
            if loB[i] == -inf:
                continue
            lim = (xB[i] - loB[i]) / (-a)
        elif a > ptol:
            if hiB[i] == inf:
                continue
            lim = (hiB[i] - xB[i]) / a
        else:
            continue
        if lim <= tmax and abs(a) > best_a:
            best_a = abs(a)
            row = i
            step = lim
    if step < 0.0:
        step = 0.0
    return row, step


def choose_leaving_loops(xB, loB, hiB, basis, ftol, bland):
    row = -1
    worst = 0.0
    for i in range(xB.shape[0]):
        v = 0.0
        if xB[i] < loB[i] - ftol:
            v = loB[i] - xB[i]
        elif xB[i] > hiB[i] + ftol:
            v = xB[i] - hiB[i]
        else:
            continue
        if bland:
            if row < 0 or basis[i] < basis[row]:
                row = i
        elif v > worst:
            worst = v
            row = i
    return row


def dual_ratio_loops(alpha, d, status, lo, hi, allowed, sign, ptol):
    """Entering column for the dual simplex; ``sign`` = +1 if x_r must rise."""
    best = -1
    best_ratio = np.inf
    best_a = 0.0
    for j in range(alpha.shape[0]):
        s = status[j]
        if s == 0 or not allowed[j] or hi[j] == lo[j]:
            continue
        a = sign * alpha[j]
        ok = False
        if s == 1:
            ok = a < -ptol
        elif s == 2:
            ok = a > ptol
        else:
            ok = abs(a) > ptol
        if not ok:
            continue
        ratio = abs(d[j]) / abs(a)
        if ratio < best_ratio - 1e-12 or (ratio <= best_ratio + 1e-12 and abs(a) > best_a):
            if ratio < best_ratio:
                best_ratio = ratio
            best_a = abs(a)
            best = j
    return best


# --------------------------------------------------------------------------
# numpy versions
# --------------------------------------------------------------------------


def pivot_np(T, d, r, q):
    prow = T[r] / T[r, q]
    prow[q] = 1.0
    T[r] = prow
    col = T[:, q].copy()
    col[r] = 0.0
    T -= np.outer(col, prow)
    T[:, q] = 0.0
    T[r, q] = 1.0
    d -= d[q] * prow
    d[q] = 0.0


def choose_entering_np(d, status, lo, hi, allowed, tol, bland):
    movable = allowed & (status != BASIC)
    open_box = hi > lo
    up = movable & (((status == AT_LOWER) & open_box) | (status == AT_ZERO)) & (d < -tol)
    down = movable & (((status == AT_UPPER) & open_box) | (status == AT_ZERO)) & (d > tol)
    cand = up | down
    if not cand.any():
        return -1, 0
    if bland:
        j = int(np.flatnonzero(cand)[0])
    else:
        score = np.where(cand, np.abs(d), -1.0)
        j = int(np.argmax(score))
    return j, (1 if up[j] else -1)


def primal_ratio_np(xB, loB, hiB, dxB, basis, ptol, ftol, bland):
    neg = (dxB < -ptol) & np.isfinite(loB)
    pos = (dxB > ptol) & np.isfinite(hiB)
    if not (neg.any() or pos.any()):
        return -1, np.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        lim = np.full(xB.shape[0], np.inf)
        lim[neg] = (xB[neg] - loB[neg]) / (-dxB[neg])
        lim[pos] = (hiB[pos] - xB[pos]) / dxB[pos]
    lim = np.maximum(lim, 0.0)
    if bland:
        tmin = lim.min()
        ties = np.flatnonzero(lim <= tmin + 1e-12)
        i = int(ties[np.argmin(basis[ties])])
        return i, float(tmin)
    relaxed = np.full(xB.shape[0], np.inf)
    relaxed[neg] = (xB[neg] - loB[neg] + ftol) / (-dxB[neg])
    relaxed[pos] = (hiB[pos] - xB[pos] + ftol) / dxB[pos]
    tmax = relaxed.min()
    ok = lim <= tmax
    score = np.where(ok, np.abs(dxB), -1.0)
    i = int(np.argmax(score))
    return i, float(lim[i])


def choose_leaving_np(xB, loB, hiB, basis, ftol, bland):
    below = loB - xB
    above = xB - hiB
    viol = np.maximum(below, above)
    bad = viol > ftol
    if not bad.any():
        return -1
    if bland:
        idx = np.flatnonzero(bad)
        return int(idx[np.argmin(basis[idx])])
    return int(np.argmax(np.where(bad, viol, -1.0)))


def dual_ratio_np(alpha, d, status, lo, hi, allowed, sign, ptol):
    a = sign * alpha
    usable = allowed & (status != BASIC) & (hi != lo)
    ok = usable & (
        ((status == AT_LOWER) & (a < -ptol))
        | ((status == AT_UPPER) & (a > ptol))
        | ((status == AT_ZERO) & (np.abs(a) > ptol))
    )
    if not ok.any():
        return -1
    idx = np.flatnonzero(ok)
    ratio = np.abs(d[idx]) / np.abs(a[idx])
    rmin = ratio.min()
    ties = idx[ratio <= rmin + 1e-12]
    return int(ties[np.argmax(np.abs(a[ties]))])


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

pivot_nb = compile_always(pivot_loops)
choose_entering_nb = compile_always(choose_entering_loops)
primal_ratio_nb = compile_always(primal_ratio_loops)
choose_leaving_nb = compile_always(choose_leaving_loops)
dual_ratio_nb = compile_always(dual_ratio_loops)

if USE_NUMBA:
    pivot = pivot_nb
    choose_entering = choose_entering_nb
    primal_ratio = primal_ratio_nb
    choose_leaving = choose_leaving_nb
    dual_ratio = dual_ratio_nb
else:
    pivot = pivot_np
    choose_entering = choose_entering_np
    primal_ratio = primal_ratio_np
    choose_leaving = choose_leaving_np
    dual_ratio = dual_ratio_np

BACKEND = "numba" if USE_NUMBA else "numpy"
