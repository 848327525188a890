"""Hot numeric kernels, compiled with numba when available.

Every kernel exists twice: a loop version decorated with ``@njit`` and a
vectorised numpy version. Both must return identical results. Set
``FRAUDADV_DISABLE_NUMBA=1`` in the environment (before import) to force the
numpy path, e.g. on platforms without numba or for debugging.
"""

from __future__ import annotations

import os

import numpy as np

# Column kind codes, shared with ``schema.FeatureType.code``.
FLOAT, POSFLOAT, INT, POSINT, BOOL, ONEHOT = range(6)

_DISABLED = os.environ.get("FRAUDADV_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag in CI
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda fn: fn


BACKEND = "numba" if HAVE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# ensemble prediction


@njit(cache=True)
def _sum_leaves_jit(feature, threshold, left, right, value, roots, X):
    n = X.shape[0]
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for t in range(roots.shape[0]):
            node = roots[t]
            while feature[node] >= 0:
                if X[i, feature[node]] < threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            acc += value[node]
        out[i] = acc
    return out


def _sum_leaves_np(feature, threshold, left, right, value, roots, X):
    n = X.shape[0]
    out = np.zeros(n)
    rows = np.arange(n)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        feat = feature[node]
        active = feat >= 0
        while active.any():
            idx = rows[active]
            nd = node[idx]
            go_left = X[idx, feat[idx]] < threshold[nd]
            node[idx] = np.where(go_left, left[nd], right[nd])
            feat = feature[node]
            active = feat >= 0
        out += value[node]
    return out


def sum_leaves(feature, threshold, left, right, value, roots, X):
    """Sum of leaf values reached by each row of ``X`` over all trees.

    Arrays describe a flat node table; a node is a leaf iff ``feature < 0``.
    A row goes left when ``x[feature] < threshold``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if roots.shape[0] == 0:
        return np.zeros(X.shape[0])
    if HAVE_NUMBA:
        return _sum_leaves_jit(feature, threshold, left, right, value, roots, X)
    return _sum_leaves_np(feature, threshold, left, right, value, roots, X)


# --------------------------------------------------------------------------
# exact greedy split search


@njit(cache=True)
def _best_split_jit(Xn, g, h, lam, min_child_weight):
    n, m = Xn.shape
    G = 0.0
    H = 0.0
    for i in range(n):
        G += g[i]
        H += h[i]
    parent = G * G / (H + lam)
    best_gain = 0.0
    best_feat = -1
    best_thr = 0.0
    for j in range(m):
        order = np.argsort(Xn[:, j], kind="mergesort")
        gl = 0.0
        hl = 0.0
        for k in range(n - 1):
            r = order[k]
            gl += g[r]
            hl += h[r]
            a = Xn[r, j]
            b = Xn[order[k + 1], j]
            if a == b:
                continue
            hr = H - hl
            if hl < min_child_weight or hr < min_child_weight:
                continue
            gr = G - gl
            gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
            if gain > best_gain:
                best_gain = gain
                best_feat = j
                best_thr = 0.5 * (a + b)
    return best_feat, best_thr, best_gain


def _best_split_np(Xn, g, h, lam, min_child_weight):
    n, m = Xn.shape
    G = 0.0
    H = 0.0
    for i in range(n):
        G += g[i]
        H += h[i]
    parent = G * G / (H + lam)
    order = np.argsort(Xn, axis=0, kind="mergesort")
    xs = np.take_along_axis(Xn, order, axis=0)
    GL = np.cumsum(g[order], axis=0)[:-1]
    HL = np.cumsum(h[order], axis=0)[:-1]
    HR = H - HL
    GR = G - GL
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent)
    ok = (xs[:-1] != xs[1:]) & (HL >= min_child_weight) & (HR >= min_child_weight)
    gain = np.where(ok, gain, 0.0)
    # column-major scan order matches the loop kernel's tie-breaking
    flat = gain.T.ravel()
    pos = int(np.argmax(flat))
    if not flat[pos] > 0.0:
        return -1, 0.0, 0.0
    j, k = divmod(pos, n - 1)
    return j, 0.5 * (xs[k, j] + xs[k + 1, j]), float(flat[pos])


def best_split(Xn, g, h, lam, min_child_weight):
    """Best (feature, threshold, gain) for one node, or feature -1 if none.

    Gain is the second-order logistic-loss reduction with L2 leaf penalty
    ``lam``; ties keep the lowest feature, then the lowest threshold.
    """
    Xn = np.ascontiguousarray(Xn, dtype=np.float64)
    if Xn.shape[0] < 2:
        return -1, 0.0, 0.0
    fn = _best_split_jit if HAVE_NUMBA else _best_split_np
    j, thr, gain = fn(Xn, np.ascontiguousarray(g), np.ascontiguousarray(h),
                      float(lam), float(min_child_weight))
    return int(j), float(thr), float(gain)


# --------------------------------------------------------------------------
# realistic projection


@njit(cache=True)
def _project_jit(X, kind, group_start, group_size):
    n, m = X.shape
    out = X.copy()
    changed = np.zeros(n, dtype=np.int64)
    for i in range(n):
        c = 0
        for j in range(m):
            k = kind[j]
            x = X[i, j]
            if k == BOOL:
                y = 0.0 if x <= 0.5 else 1.0
            elif k == INT:
                y = np.rint(x)
            elif k == POSINT:
                y = np.rint(x) if x >= 0.0 else 0.0
                if y < 0.0:
                    y = 0.0
            elif k == POSFLOAT:
                y = 0.0 if x < 0.0 else x
            else:
                continue
            if y != x:
                c += 1
            out[i, j] = y
        for gi in range(group_start.shape[0]):
            s = group_start[gi]
            e = s + group_size[gi]
            arg = s
            for j in range(s + 1, e):
                if X[i, j] > X[i, arg]:
                    arg = j
            for j in range(s, e):
                y = 1.0 if j == arg else 0.0
                if y != X[i, j]:
                    c += 1
                out[i, j] = y
        changed[i] = c
    return out, changed


def _project_np(X, kind, group_start, group_size):
    out = X.copy()
    b = kind == BOOL
    out[:, b] = np.where(X[:, b] <= 0.5, 0.0, 1.0)
    k = kind == INT
    out[:, k] = np.rint(X[:, k])
    k = kind == POSINT
    out[:, k] = np.where(X[:, k] >= 0.0, np.maximum(np.rint(X[:, k]), 0.0), 0.0)
    k = kind == POSFLOAT
    out[:, k] = np.where(X[:, k] < 0.0, 0.0, X[:, k])
    for s, size in zip(group_start, group_size):
        block = X[:, s:s + size]
        hot = np.zeros_like(block)
        hot[np.arange(X.shape[0]), np.argmax(block, axis=1)] = 1.0
        out[:, s:s + size] = hot
    changed = np.count_nonzero(out != X, axis=1).astype(np.int64)
    return out, changed


def project_rows(X, kind, group_start, group_size):
    """Project every row onto its per-column realistic domain.

    Returns the projected copy and the number of changed components per row.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    fn = _project_jit if HAVE_NUMBA else _project_np
    return fn(X, kind, group_start, group_size)


@njit(cache=True)
def _violations_jit(X, kind, group_start, group_size):
    n, m = X.shape
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        c = 0
        for j in range(m):
            k = kind[j]
            x = X[i, j]
            if k == BOOL:
                if x != 0.0 and x != 1.0:
                    c += 1
            elif k == INT:
                if x != np.rint(x):
                    c += 1
            elif k == POSINT:
                if x != np.rint(x) or x < 0.0:
                    c += 1
            elif k == POSFLOAT:
                if not x >= 0.0:
                    c += 1
        for gi in range(group_start.shape[0]):
            s = group_start[gi]
            ones = 0
            bad = False
            for j in range(s, s + group_size[gi]):
                if X[i, j] == 1.0:
                    ones += 1
                elif X[i, j] != 0.0:
                    bad = True
            if bad or ones != 1:
                c += 1
        out[i] = c
    return out


def _violations_np(X, kind, group_start, group_size):
    bad = np.zeros(X.shape, dtype=bool)
    k = kind == BOOL
    bad[:, k] = (X[:, k] != 0.0) & (X[:, k] != 1.0)
    k = kind == INT
    bad[:, k] = X[:, k] != np.rint(X[:, k])
    k = kind == POSINT
    bad[:, k] = (X[:, k] != np.rint(X[:, k])) | (X[:, k] < 0.0)
    k = kind == POSFLOAT
    bad[:, k] = ~(X[:, k] >= 0.0)
    out = np.count_nonzero(bad, axis=1).astype(np.int64)
    for s, size in zip(group_start, group_size):
        block = X[:, s:s + size]
        ok = (np.count_nonzero(block == 1.0, axis=1) == 1) & np.all((block == 0.0) | (block == 1.0), axis=1)
        out += ~ok
    return out


def count_violations_rows(X, kind, group_start, group_size):
    """Per-row count of domain violations; a broken one-hot group counts once."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    fn = _violations_jit if HAVE_NUMBA else _violations_np
    return fn(X, kind, group_start, group_size)
