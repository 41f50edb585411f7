"""Pure numpy versions of the compiled loops, used when the extension is unavailable."""

from __future__ import annotations

import numpy as np

ALG, INDICATOR, ABSDIFF = 0, 1, 2


def var_distances(A, B, kinds, theta, delta, symmetric=False):
    na, nv = A.shape
    nb = B.shape[0]
    out = np.zeros((nv, na, nb))
    for v in range(nv):
        a = A[:, v][:, None]
        b = B[:, v][None, :]
        kind = kinds[v]
        with np.errstate(invalid="ignore"):
            if kind == ALG:
                d = theta[v] * (np.abs(a - b) / (np.sqrt(a * a + 1.0) * np.sqrt(b * b + 1.0)))
            elif kind == INDICATOR:
                d = np.where(a == b, 0.0, theta[v]) * np.ones_like(b)
            else:
                d = theta[v] * np.abs(a - b)
        a_exc = np.isnan(a)
        b_exc = np.isnan(b)
        d = np.where(a_exc | b_exc, np.where(a_exc & b_exc, 0.0, delta[v]), d)
        out[v] = d
    if symmetric:
        iu, ju = np.triu_indices(na, 1)
        out[:, ju, iu] = out[:, iu, ju]
    return out


def weighted_sum(T, weights, squared=False):
    acc = np.zeros(T.shape[1:])
    for k in range(T.shape[0]):
        t = T[k]
        if squared:
            t = t * t
        acc += weights[k] * t
    return acc


def minkowski(D, p):
    acc = np.zeros(D.shape[1:])
    for k in range(D.shape[0]):
        t = D[k]
        if p == 1.0:
            acc += t
        elif p == 2.0:
            acc += t * t
        else:
            acc += np.power(t, p)
    if p == 1.0:
        return acc
    if p == 2.0:
        return np.sqrt(acc)
    return np.power(acc, 1.0 / p)


def forward_reduce(L, Kc, alpha):
    n, m = Kc.shape
    mean = np.zeros(m)
    for j in range(n):
        mean += alpha[j] * Kc[j]
    v = np.empty((n, m))
    sq = np.zeros(m)
    for i in range(n):
        s = Kc[i].copy()
        for j in range(i):
            s -= L[i, j] * v[j]
        v[i] = s / L[i, i]
        sq += v[i] * v[i]
    return mean, sq
