"""Fused compiled loop for NB-BP; mirrors the step functions in nbbp.py."""

import math

import numpy as np
from numba import njit

_LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def _refresh_moments(v, s, e1, ev, i, j):
    S = s.size
    m1 = 0.0
    m2 = 0.0
    for k in range(S):
        m1 += v[i, j, k] * s[k]
        m2 += v[i, j, k] * s[k] * s[k]
    e1[i, j] = m1
    d = m2 - m1 * m1
    ev[i, j] = d if d > 0.0 else 0.0


@njit(cache=True)
def nbbp_batch(h, y, nv, s, iterations, damping, normalize, log_prior, has_prior,
               extrinsic, log_tiny, var_floor):
    """Return unnormalized log posteriors (B, 2K, S) and the clamp count."""
    B, N2, K2 = h.shape
    S = s.size
    out = np.empty((B, K2, S))
    v = np.empty((N2, K2, S))
    la = np.empty((N2, K2, S))
    e1 = np.empty((N2, K2))
    ev = np.empty((N2, K2))
    mu = np.empty(N2)
    var = np.empty(N2)
    tot = np.empty((K2, S))
    pre = np.empty((N2 + 1, S))
    suf = np.empty((N2 + 1, S))
    p0 = np.empty(S)
    lv = np.empty(S)
    clamps = 0
    rounds = iterations if iterations > 0 else 1

    for b in range(B):
        floor = nv[b] if nv[b] > var_floor else var_floor
        for j in range(K2):
            if has_prior:
                mx = log_prior[b, j, 0]
                for k in range(1, S):
                    if log_prior[b, j, k] > mx:
                        mx = log_prior[b, j, k]
                z = 0.0
                for k in range(S):
                    p0[k] = math.exp(log_prior[b, j, k] - mx)
                    z += p0[k]
                for k in range(S):
                    p0[k] /= z
            else:
                for k in range(S):
                    p0[k] = 1.0 / S
            for i in range(N2):
                for k in range(S):
                    v[i, j, k] = p0[k]
                _refresh_moments(v, s, e1, ev, i, j)

        for it in range(rounds):
            for i in range(N2):
                a = 0.0
                c = 0.0
                for j in range(K2):
                    hij = h[b, i, j]
                    a += hij * e1[i, j]
                    c += hij * hij * ev[i, j]
                mu[i] = a
                var[i] = c + nv[b]

            for j in range(K2):
                for k in range(S):
                    tot[j, k] = log_prior[b, j, k] if has_prior else 0.0
            for i in range(N2):
                for j in range(K2):
                    hij = h[b, i, j]
                    mij = mu[i] - hij * e1[i, j]
                    vij = var[i] - hij * hij * ev[i, j]
                    if vij < floor:
                        vij = floor
                        clamps += 1
                    r = y[b, i] - mij
                    cst = -0.5 * (_LOG_2PI + math.log(vij))
                    inv2 = 0.5 / vij
                    for k in range(S):
                        d = r - hij * s[k]
                        val = cst - d * d * inv2
                        la[i, j, k] = val
                        tot[j, k] += val

            if it >= iterations:
                break
            for j in range(K2):
                column_tiny = False
                for i in range(N2):
                    for k in range(S):
                        if la[i, j, k] < log_tiny:
                            column_tiny = True
                if column_tiny:
                    for k in range(S):
                        pre[0, k] = 0.0
                        suf[N2, k] = 0.0
                    for i in range(N2):
                        for k in range(S):
                            pre[i + 1, k] = pre[i, k] + la[i, j, k]
                    for i in range(N2 - 1, -1, -1):
                        for k in range(S):
                            suf[i, k] = suf[i + 1, k] + la[i, j, k]
                for i in range(N2):
                    direct = False
                    if column_tiny:
                        for k in range(S):
                            if la[i, j, k] < log_tiny:
                                direct = True
                    for k in range(S):
                        if direct:
                            lv[k] = pre[i, k] + suf[i + 1, k]
                            if has_prior:
                                lv[k] += log_prior[b, j, k]
                        else:
                            lv[k] = tot[j, k] - la[i, j, k]
                    mx = lv[0]
                    for k in range(1, S):
                        if lv[k] > mx:
                            mx = lv[k]
                    z = 0.0
                    for k in range(S):
                        lv[k] = math.exp(lv[k] - mx)
                        z += lv[k]
                    for k in range(S):
                        lv[k] /= z
                    if damping > 0.0:
                        z = 0.0
                        for k in range(S):
                            lv[k] = (1.0 - damping) * lv[k] + damping * v[i, j, k]
                            z += lv[k]
                        if normalize:
                            for k in range(S):
                                lv[k] /= z
                    for k in range(S):
                        v[i, j, k] = lv[k]
                    _refresh_moments(v, s, e1, ev, i, j)

        for j in range(K2):
            for k in range(S):
                if has_prior and extrinsic:
                    out[b, j, k] = tot[j, k] - log_prior[b, j, k]
                else:
                    out[b, j, k] = tot[j, k]
    return out, clamps


def run(h, y, nv, s, iterations, damping, normalize, log_prior, extrinsic, log_tiny, var_floor):
    h = np.ascontiguousarray(h, dtype=np.float64)
    squeeze = h.ndim == 2
    if squeeze:
        h = h[None]
        y = np.asarray(y, dtype=np.float64)[None]
    y = np.ascontiguousarray(y, dtype=np.float64)
    B = h.shape[0]
    nv = np.ascontiguousarray(np.broadcast_to(np.asarray(nv, dtype=np.float64), (B,)))
    has_prior = log_prior is not None
    if has_prior:
        lp = np.asarray(log_prior, dtype=np.float64)
        lp = np.ascontiguousarray(np.broadcast_to(lp[None] if squeeze else lp,
                                                  (B, h.shape[2], s.size)))
    else:
        lp = np.zeros((1, 1, 1))
    out, clamps = nbbp_batch(h, y, nv, np.ascontiguousarray(s, dtype=np.float64),
                             int(iterations), float(damping), bool(normalize), lp, has_prior,
                             bool(extrinsic), float(log_tiny), float(var_floor))
    return (out[0] if squeeze else out), int(clamps)
