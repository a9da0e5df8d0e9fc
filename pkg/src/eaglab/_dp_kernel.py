"""Row-sweep minimization kernel for 2D torus ground states.

Row states are L-bit integers (bit i = column i, bit 0 -> spin +1,
bit 1 -> spin -1). The vertical wrap is closed by conditioning on the
first-row state; the sweep over the remaining rows reduces the min-plus
transition one bit at a time, so the per-state tables (2^L doubles) stay
cache resident. Ties are broken toward the smaller state integer, i.e.
toward +1 spins, deterministically.

Cost contract per transition row k >= 1:
    cost(p -> s) = -sum_i Jv[k,i]*sp(p,i)*sp(s,i) - sum_i Jh[k,i]*sp(s,i)*sp(s,i+1)
with Jv[0] closing the wrap between the last row and the first.
"""

import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def _hcosts(L, Jh):
    """hc[k, s] = horizontal energy of row k in state s (periodic in-row)."""
    n = 1 << L
    hc = np.empty((L, n))
    for k in range(L):
        for s in range(n):
            acc = 0.0
            for i in range(L):
                a = 1.0 - 2.0 * ((s >> i) & 1)
                b = 1.0 - 2.0 * ((s >> ((i + 1) % L)) & 1)
                acc -= Jh[k, i] * a * b
            hc[k, s] = acc
    return hc


@njit(cache=True)
def _subset_sums(L, row):
    """W[x] = sum of row[i] over set bits of x."""
    n = 1 << L
    W = np.zeros(n)
    for x in range(1, n):
        low = x & (-x)
        i = 0
        while (1 << i) != low:
            i += 1
        W[x] = W[x & (x - 1)] + row[i]
    return W


@njit(cache=True)
def _sweep_rows(L, Jv, hc, mask, W1, S1, r0, f, g):
    """Fill f[s] with the min path cost r0 -> ... -> row L-1 state s."""
    n = 1 << L
    base = hc[0, r0]
    for s in range(n):
        f[s] = base - S1 + 2.0 * W1[s ^ r0] + hc[1, s] + mask[1, s]
    for k in range(2, L):
        for i in range(L):
            c = Jv[k, i]
            step = 1 << i
            for blk in range(0, n, step << 1):
                for j in range(blk, blk + step):
                    a = f[j]
                    b = f[j + step]
                    x = a - c
                    y = b + c
                    g[j] = x if x <= y else y
                    x = a + c
                    y = b - c
                    g[j + step] = x if x <= y else y
            tmp = f
            f = g
            g = tmp
        for s in range(n):
            f[s] += hc[k, s] + mask[k, s]
    return f, g


@njit(cache=True)
def _scan_first_rows(L, Jv, hc, mask, W0, S0, W1, S1):
    """Best and second-best closed-path cost over admissible first rows.

    Returns (e1, e2_cross, r0_star) where e2_cross is the runner-up over
    per-first-row minima (the within-r0_star runner-up is found separately).
    """
    n = 1 << L
    f = np.empty(n)
    g = np.empty(n)
    e1 = INF
    e2 = INF
    r0_star = -1
    for r0 in range(n):
        if mask[0, r0] == INF:
            continue
        ff, _ = _sweep_rows(L, Jv, hc, mask, W1, S1, r0, f, g)
        best = INF
        for s in range(n):
            v = ff[s] - S0 + 2.0 * W0[s ^ r0]
            if v < best:
                best = v
        if best < e1:
            e2 = e1
            e1 = best
            r0_star = r0
        elif best < e2:
            e2 = best
    return e1, e2, r0_star


@njit(cache=True)
def _second_within(L, Jv, hc, mask, W0, S0, W1, S1, r0):
    """Second-smallest cost among distinct paths sharing the first row r0."""
    n = 1 << L
    f1 = np.empty(n)
    f2 = np.empty(n)
    g1 = np.empty(n)
    g2 = np.empty(n)
    base = hc[0, r0]
    for s in range(n):
        f1[s] = base - S1 + 2.0 * W1[s ^ r0] + hc[1, s] + mask[1, s]
        f2[s] = INF
    for k in range(2, L):
        for i in range(L):
            c = Jv[k, i]
            step = 1 << i
            for blk in range(0, n, step << 1):
                for j in range(blk, blk + step):
                    a1 = f1[j]
                    a2 = f2[j]
                    b1 = f1[j + step]
                    b2 = f2[j + step]
                    # s-bit 0: branch costs -c (same) / +c (flip)
                    x1 = a1 - c
                    x2 = a2 - c
                    y1 = b1 + c
                    y2 = b2 + c
                    if x1 <= y1:
                        g1[j] = x1
                        g2[j] = x2 if x2 <= y1 else y1
                    else:
                        g1[j] = y1
                        g2[j] = y2 if y2 <= x1 else x1
                    # s-bit 1: signs swap
                    x1 = a1 + c
                    x2 = a2 + c
                    y1 = b1 - c
                    y2 = b2 - c
                    if x1 <= y1:
                        g1[j + step] = x1
                        g2[j + step] = x2 if x2 <= y1 else y1
                    else:
                        g1[j + step] = y1
                        g2[j + step] = y2 if y2 <= x1 else x1
            tmp = f1
            f1 = g1
            g1 = tmp
            tmp = f2
            f2 = g2
            g2 = tmp
        for s in range(n):
            add = hc[k, s] + mask[k, s]
            f1[s] += add
            f2[s] += add
    e1 = INF
    e2 = INF
    for s in range(n):
        w = -S0 + 2.0 * W0[s ^ r0]
        v1 = f1[s] + w
        v2 = f2[s] + w
        if v1 < e1:
            e2 = e1
            e1 = v1
        elif v1 < e2:
            e2 = v1
        if v2 < e2:
            e2 = v2
    return e1, e2


@njit(cache=True)
def _backtrack(L, Jv, hc, mask, W0, S0, W1, S1, r0):
    """Re-run the sweep for the winning first row, recording per-bit argmin
    choices, then unwind them into the optimal row states."""
    n = 1 << L
    f = np.empty(n)
    g = np.empty(n)
    choice = np.zeros((L, L, n), dtype=np.uint8)
    base = hc[0, r0]
    for s in range(n):
        f[s] = base - S1 + 2.0 * W1[s ^ r0] + hc[1, s] + mask[1, s]
    for k in range(2, L):
        for i in range(L):
            c = Jv[k, i]
            step = 1 << i
            for blk in range(0, n, step << 1):
                for j in range(blk, blk + step):
                    a = f[j]
                    b = f[j + step]
                    x = a - c
                    y = b + c
                    if x <= y:
                        g[j] = x
                        choice[k, i, j] = 0
                    else:
                        g[j] = y
                        choice[k, i, j] = 1
                    x = a + c
                    y = b - c
                    if x <= y:
                        g[j + step] = x
                        choice[k, i, j + step] = 0
                    else:
                        g[j + step] = y
                        choice[k, i, j + step] = 1
            tmp = f
            f = g
            g = tmp
        for s in range(n):
            f[s] += hc[k, s] + mask[k, s]

    best = INF
    s_star = 0
    for s in range(n):
        v = f[s] - S0 + 2.0 * W0[s ^ r0]
        if v < best:
            best = v
            s_star = s

    rows = np.empty(L, dtype=np.int64)
    rows[0] = r0
    rows[L - 1] = s_star
    idx = s_star
    for k in range(L - 1, 1, -1):
        for i in range(L - 1, -1, -1):
            b = choice[k, i, idx]
            idx = (idx & ~(1 << i)) | (int(b) << i)
        rows[k - 1] = idx
    return rows


@njit(cache=True)
def dp_solve(L, Jv, Jh, mask):
    """Full solve: returns (best energy, second-best energy, row states).

    Jv[k, i]: vertical coupling between rows k-1 and k at column i (k=0 is
    the wrap row). Jh[k, i]: horizontal coupling in row k between columns
    i and i+1. mask[k, s] is 0 for admissible row states, inf otherwise.
    """
    hc = _hcosts(L, Jh)
    W0 = _subset_sums(L, Jv[0])
    W1 = _subset_sums(L, Jv[1])
    S0 = 0.0
    S1 = 0.0
    for i in range(L):
        S0 += Jv[0, i]
        S1 += Jv[1, i]
    e1, e2_cross, r0_star = _scan_first_rows(L, Jv, hc, mask, W0, S0, W1, S1)
    if r0_star < 0:
        return INF, INF, np.zeros(L, dtype=np.int64)
    _, e2_within = _second_within(L, Jv, hc, mask, W0, S0, W1, S1, r0_star)
    e2 = e2_cross if e2_cross <= e2_within else e2_within
    rows = _backtrack(L, Jv, hc, mask, W0, S0, W1, S1, r0_star)
    return e1, e2, rows
