"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the package's numeric code; each function recomputes
its quantity from the definition.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


# ---------------------------------------------------------------- changepoint


def rbf_segment_cost(y, a, b, gamma):
    """Direct double sum over the segment ``y[a:b]``."""
    seg = np.asarray(y, dtype=float)[a:b]
    L = len(seg)
    total = 0.0
    for s in range(L):
        for t in range(L):
            total += math.exp(-gamma * (seg[s] - seg[t]) ** 2)
    return L - total / L


def median_bandwidth(y):
    y = np.asarray(y, dtype=float)
    diffs = [(y[i] - y[j]) ** 2 for i in range(len(y)) for j in range(i + 1, len(y))]
    med = float(np.median(diffs)) if diffs else 0.0
    return 1.0 / med if med > 0 else 1.0


def admissible_partitions(n, m):
    """All breakpoint tuples splitting ``range(n)`` into segments of length >= m."""

    def rec(start):
        if n - start >= m:
            yield ()
        for b in range(start + m, n - m + 1):
            for rest in rec(b):
                yield (b,) + rest

    return list(rec(0))


def exhaustive_segmentation(y, m, penalty, gamma):
    """Minimum of sum(cost) + penalty * k over every admissible partition."""
    n = len(y)
    cache = {}

    def c(a, b):
        if (a, b) not in cache:
            cache[(a, b)] = rbf_segment_cost(y, a, b, gamma)
        return cache[(a, b)]

    best, arg = math.inf, None
    for bps in admissible_partitions(n, m):
        bounds = (0, *bps, n)
        v = sum(c(a, b) for a, b in zip(bounds[:-1], bounds[1:])) + penalty * len(bps)
        if v < best:
            best, arg = v, bps
    return best, arg


def optimal_partitioning_direct(y, m, penalty, gamma):
    """Unpruned dynamic program with directly summed segment costs."""
    n = len(y)
    F = [math.inf] * (n + 1)
    F[0] = -penalty
    for t in range(m, n + 1):
        for s in [0] + list(range(m, t - m + 1)):
            F[t] = min(F[t], F[s] + rbf_segment_cost(y, s, t, gamma) + penalty)
    return F[n]


# ---------------------------------------------------------------- dtw


@lru_cache(maxsize=None)
def monotone_paths(n, m):
    """Index arrays of every warping path from (0,0) to (n-1,m-1), padded with -1."""
    paths = []

    def rec(i, j, acc):
        if i == n - 1 and j == m - 1:
            paths.append(acc)
            return
        if i + 1 < n:
            rec(i + 1, j, acc + [(i + 1, j)])
        if j + 1 < m:
            rec(i, j + 1, acc + [(i, j + 1)])
        if i + 1 < n and j + 1 < m:
            rec(i + 1, j + 1, acc + [(i + 1, j + 1)])

    rec(0, 0, [(0, 0)])
    width = n + m - 1
    I = np.full((len(paths), width), -1)
    J = np.full((len(paths), width), -1)
    for k, p in enumerate(paths):
        I[k, : len(p)] = [q[0] for q in p]
        J[k, : len(p)] = [q[1] for q in p]
    return I, J


def exhaustive_dtw(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    I, J = monotone_paths(len(a), len(b))
    valid = I >= 0
    cost = np.where(valid, np.abs(a[np.maximum(I, 0)] - b[np.maximum(J, 0)]), 0.0)
    return float(cost.sum(axis=1).min())


# ---------------------------------------------------------------- metrics


def brute_purity(clusters, classes):
    n = len(clusters)
    total = 0
    for c in set(clusters):
        members = [classes[i] for i in range(n) if clusters[i] == c]
        total += max(members.count(k) for k in set(members))
    return total / n


def brute_ari(x, y):
    """ARI from raw pair agreement counts (no contingency table)."""
    n = len(x)
    both = only_x = only_y = neither = 0
    for i, j in itertools.combinations(range(n), 2):
        sx, sy = x[i] == x[j], y[i] == y[j]
        if sx and sy:
            both += 1
        elif sx:
            only_x += 1
        elif sy:
            only_y += 1
        else:
            neither += 1
    pairs = both + only_x + only_y + neither
    a, b = both + only_x, both + only_y
    expected = a * b / pairs
    mx = (a + b) / 2
    if mx == expected:
        return 1.0
    return (both - expected) / (mx - expected)


def brute_regression(y, yhat):
    n = len(y)
    errs = [float(y[i]) - float(yhat[i]) for i in range(n)]
    mae = math.fsum(abs(e) for e in errs) / n
    mse = math.fsum(e * e for e in errs) / n
    mean = math.fsum(float(v) for v in y) / n
    sst = math.fsum((float(v) - mean) ** 2 for v in y)
    r2 = 1 - math.fsum(e * e for e in errs) / sst if sst else float("nan")
    return mae, mse, math.sqrt(mse), r2


# ---------------------------------------------------------------- spanning trees


def prufer_trees(n):
    """Every labelled tree on ``n`` nodes, as edge lists (Cayley: n^(n-2) trees)."""
    if n == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        degree = [1] * n
        for v in seq:
            degree[v] += 1
        edges = []
        for v in seq:
            leaf = min(i for i in range(n) if degree[i] == 1)
            edges.append((leaf, v))
            degree[leaf] -= 1
            degree[v] -= 1
        u, w = [i for i in range(n) if degree[i] == 1]
        edges.append((u, w))
        yield edges


def brute_mst_weight(W):
    n = len(W)
    return min(sum(W[i][j] for i, j in t) for t in prufer_trees(n))


# ---------------------------------------------------------------- forecasting


def piecewise_linear_fit(x, y, knots):
    """Least-squares continuous piecewise-linear fit, solved in exact rationals.

    Basis: x, 1, (x - k)_+ per knot. Returns fitted values as floats.
    """
    from fractions import Fraction

    X = [[Fraction(v), Fraction(1)] + [max(Fraction(v) - Fraction(k), Fraction(0)) for k in knots] for v in x]
    Y = [Fraction(v) for v in y]
    p = len(X[0])
    # normal equations, Gauss-Jordan with exact pivots
    A = [[sum(r[i] * r[j] for r in X) for j in range(p)] + [sum(r[i] * yv for r, yv in zip(X, Y))] for i in range(p)]
    for c in range(p):
        piv = next(r for r in range(c, p) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        A[c] = [v / A[c][c] for v in A[c]]
        for r in range(p):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    beta = [A[i][p] for i in range(p)]
    return [float(sum(b * v for b, v in zip(beta, row))) for row in X]
