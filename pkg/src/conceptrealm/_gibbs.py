"""Numba kernels for collapsed Gibbs sampling.

Randomness is passed in as pre-drawn uniforms so the kernels stay pure and
deterministic.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def init_counts(tokens, doc_of, z, ndk, nkw, nk):
    for i in range(tokens.shape[0]):
        k = z[i]
        ndk[doc_of[i], k] += 1
        nkw[k, tokens[i]] += 1
        nk[k] += 1


@njit(cache=True)
def sweep(tokens, doc_of, z, ndk, nkw, nk, u, alpha, beta, vbeta):
    K = nk.shape[0]
    p = np.empty(K)
    for i in range(tokens.shape[0]):
        w = tokens[i]
        d = doc_of[i]
        k = z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for j in range(K):
            total += (ndk[d, j] + alpha) * (nkw[j, w] + beta) / (nk[j] + vbeta)
            p[j] = total
        r = u[i] * total
        k = K - 1
        for j in range(K):
            if r < p[j]:
                k = j
                break
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


@njit(cache=True)
def fold_in(tokens, phi, alpha, u, keep_from):
    """Sample one document with ``phi`` frozen.

    ``u`` has shape (iterations + 1, n_tokens); row 0 seeds the initial
    assignment. Returns topic counts averaged over sweeps >= ``keep_from``.
    """
    K = phi.shape[0]
    n = tokens.shape[0]
    iterations = u.shape[0] - 1
    z = np.empty(n, dtype=np.int64)
    ndk = np.zeros(K)
    for i in range(n):
        k = int(u[0, i] * K)
        if k >= K:
            k = K - 1
        z[i] = k
        ndk[k] += 1.0
    acc = np.zeros(K)
    kept = 0
    p = np.empty(K)
    for it in range(iterations):
        for i in range(n):
            w = tokens[i]
            ndk[z[i]] -= 1.0
            total = 0.0
            for j in range(K):
                total += phi[j, w] * (ndk[j] + alpha)
                p[j] = total
            r = u[it + 1, i] * total
            k = K - 1
            for j in range(K):
                if r < p[j]:
                    k = j
                    break
            z[i] = k
            ndk[k] += 1.0
        if it >= keep_from:
            for j in range(K):
                acc[j] += ndk[j]
            kept += 1
    if kept == 0:
        return ndk
    return acc / kept
