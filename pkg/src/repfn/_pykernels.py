"""Pure-Python implementations of the hot loops.

These mirror the compiled kernels in ``_ckernels.pyx`` exactly, including
output order, and are used when the extension is unavailable or when
``REPFN_PURE_PYTHON=1`` is set.  The innermost two variables are handled
with numpy so that the common ``l = 2`` case stays vectorized.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np


def _suffix_gcd(coeffs):
    g = [0] * (len(coeffs) + 1)
    for i in range(len(coeffs) - 1, -1, -1):
        g[i] = math.gcd(g[i + 1], int(coeffs[i]))
    return g


def _last_two(b1, b2, rem, cap1, cap2, member):
    """All (k1, k2) with b1 k1 + b2 k2 = rem, k1 <= cap1, k2 <= cap2, in k1 order."""
    hi = min(cap1, rem // b1)
    if hi < 0:
        return np.empty((0, 2), dtype=np.int64)
    k1 = np.arange(hi + 1, dtype=np.int64)
    r = rem - b1 * k1
    ok = r % b2 == 0
    k1, k2 = k1[ok], r[ok] // b2
    ok = k2 <= cap2
    k1, k2 = k1[ok], k2[ok]
    if member is not None:
        ok = (member[k1] != 0) & (member[k2] != 0)
        k1, k2 = k1[ok], k2[ok]
    return np.stack([k1, k2], axis=1)


def enumerate_tuples(coeffs, n, member=None, caps=None):
    coeffs = [int(b) for b in coeffs]
    ell = len(coeffs)
    if caps is None:
        caps = [n // b for b in coeffs]
    caps = [int(c) for c in caps]
    if member is not None:
        member = np.asarray(member)
    if ell == 1:
        b = coeffs[0]
        if n % b or n // b > caps[0] or (member is not None and not member[n // b]):
            return np.empty((0, 1), dtype=np.int64)
        return np.array([[n // b]], dtype=np.int64)
    sg = _suffix_gcd(coeffs)
    out = []
    prefix = []

    def rec(i, rem):
        if rem % sg[i]:
            return
        if i == ell - 2:
            block = _last_two(coeffs[i], coeffs[i + 1], rem, caps[i], caps[i + 1], member)
            if len(block):
                if prefix:
                    head = np.broadcast_to(np.array(prefix, dtype=np.int64), (len(block), len(prefix)))
                    block = np.concatenate([head, block], axis=1)
                out.append(block)
            return
        b = coeffs[i]
        for k in range(min(caps[i], rem // b) + 1):
            if member is not None and not member[k]:
                continue
            prefix.append(k)
            rec(i + 1, rem - b * k)
            prefix.pop()

    rec(0, n)
    if not out:
        return np.empty((0, ell), dtype=np.int64)
    return np.concatenate(out, axis=0).astype(np.int64, copy=False)


def _distinct_products(T, p):
    """Row-wise product of ``p`` over the distinct entries of each row."""
    ell = T.shape[1]
    w = np.ones(len(T))
    for j in range(ell):
        fresh = np.ones(len(T), dtype=bool)
        for i in range(j):
            fresh &= T[:, i] != T[:, j]
        w *= np.where(fresh, p[T[:, j]], 1.0)
    return w


def tuple_weight_sums(coeffs, n, p, threshold):
    T = enumerate_tuples(coeffs, n)
    if len(T) == 0:
        return 0.0, 0.0, 0.0
    p = np.asarray(p, dtype=float)
    w = _distinct_products(T, p)
    ell = T.shape[1]
    exact = np.ones(len(T), dtype=bool)
    for j in range(ell):
        for i in range(j):
            exact &= T[:, i] != T[:, j]
    small = T.min(axis=1) < threshold
    return math.fsum(w), math.fsum(w[small]), math.fsum(w[exact])


def _union_prob(R, S, p):
    prob = 1.0
    for v in set(R) | set(S):
        prob *= p[v]
    return prob


def _within(sols, p):
    index = defaultdict(set)
    for i, R in enumerate(sols):
        for v in R:
            index[v].add(i)
    terms = []
    for i, R in enumerate(sols):
        partners = set()
        for v in set(R):
            partners |= index[v]
        partners.discard(i)
        for j in sorted(partners):
            terms.append(_union_prob(R, sols[j], p))
    return math.fsum(terms)


def delta_sums(sols_n, sols_m, p):
    p = np.asarray(p, dtype=float).tolist()
    A = [tuple(int(v) for v in row) for row in np.asarray(sols_n)]
    B = [tuple(int(v) for v in row) for row in np.asarray(sols_m)]
    index_b = defaultdict(set)
    for j, S in enumerate(B):
        for v in S:
            index_b[v].add(j)
    cross = []
    for R in A:
        partners = set()
        for v in set(R):
            partners |= index_b.get(v, set())
        for j in sorted(partners):
            cross.append(_union_prob(R, B[j], p))
    return _within(A, p), math.fsum(cross), _within(B, p)
