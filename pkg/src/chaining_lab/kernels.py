"""Hot numerical kernels, each with a numba and a pure-numpy implementation.

The public wrappers dispatch on :data:`chaining_lab._accel.USE_NUMBA` at call
time. Both paths return identical results up to float summation order (the
partition search and triangle scan are exact and agree bit for bit).
"""
from functools import lru_cache

import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------------------
# triangle inequality scan
# ---------------------------------------------------------------------------


@njit(cache=True)
def _worst_triangle_nb(dist):
    n = dist.shape[0]
    best_rel = 0.0
    bi = -1
    bj = -1
    bk = -1
    for i in range(n):
        for j in range(n):
            dij = dist[i, j]
            for k in range(n):
                dik = dist[i, k]
                if dik <= 0.0:
                    continue
                rel = (dik - dij - dist[j, k]) / dik
                if rel > best_rel:
                    best_rel = rel
                    bi = i
                    bj = j
                    bk = k
    return bi, bj, bk, best_rel


def _worst_triangle_np(dist):
    n = dist.shape[0]
    best = (0.0, -1, -1, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j in range(n):
            excess = dist - dist[:, j][:, None] - dist[j, :][None, :]
            rel = np.where(dist > 0.0, excess / dist, -np.inf)
            top = rel.max()
            if top > best[0]:
                # lowest (i, k) among ties within this middle point
                i, k = np.argwhere(rel == top)[0]
                best = (top, int(i), j, int(k))
            elif top == best[0] and top > 0.0:
                i, k = np.argwhere(rel == top)[0]
                if (i, j, k) < (best[1], best[2], best[3]):
                    best = (top, int(i), j, int(k))
    rel, i, j, k = best
    return i, j, k, float(rel)


def worst_triangle(dist):
    """Largest relative triangle violation ``(d[i,k] - d[i,j] - d[j,k]) / d[i,k]``.

    Returns ``(i, j, k, rel)``; ``(-1, -1, -1, 0.0)`` when no triple violates.
    Ties go to the lexicographically smallest ``(i, j, k)``.
    """
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    if _accel.USE_NUMBA:
        i, j, k, rel = _worst_triangle_nb(dist)
        return int(i), int(j), int(k), float(rel)
    return _worst_triangle_np(dist)


# ---------------------------------------------------------------------------
# min-max block diameter over partitions into at most K blocks
# ---------------------------------------------------------------------------


@njit(cache=True)
def _minmax_partition_nb(dist, max_blocks):
    n = dist.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    best_labels = np.zeros(n, dtype=np.int64)
    if n <= 1:
        return 0.0, best_labels
    members = np.zeros((max_blocks, n), dtype=np.int64)
    counts = np.zeros(max_blocks, dtype=np.int64)
    placed = np.zeros(n + 1, dtype=np.bool_)
    next_label = np.zeros(n + 1, dtype=np.int64)
    used = np.zeros(n + 1, dtype=np.int64)
    cur = np.zeros(n + 1, dtype=np.float64)

    members[0, 0] = 0
    counts[0] = 1
    used[1] = 1
    best = np.inf
    pos = 1
    while pos >= 1:
        if pos == n:
            if cur[n] < best:
                best = cur[n]
                best_labels[:] = labels
            pos -= 1
            continue
        if placed[pos]:
            counts[labels[pos]] -= 1
            placed[pos] = False
        lab = next_label[pos]
        limit = used[pos]
        if limit > max_blocks - 1:
            limit = max_blocks - 1
        if lab > limit:
            next_label[pos] = 0
            pos -= 1
            continue
        next_label[pos] = lab + 1
        m = cur[pos]
        for q in range(counts[lab]):
            d = dist[pos, members[lab, q]]
            if d > m:
                m = d
        if m >= best:
            continue
        labels[pos] = lab
        members[lab, counts[lab]] = pos
        counts[lab] += 1
        placed[pos] = True
        used[pos + 1] = used[pos] if used[pos] > lab + 1 else lab + 1
        cur[pos + 1] = m
        pos += 1
        next_label[pos] = 0
    return best, best_labels


def _extend_rgs(table, running_max, steps, max_blocks):
    """Append ``steps`` positions to each row, preserving lexicographic order."""
    for _ in range(steps):
        choices = np.minimum(running_max + 1, max_blocks - 1) + 1
        rows = np.repeat(np.arange(table.shape[0]), choices)
        starts = np.repeat(np.cumsum(choices) - choices, choices)
        new_label = (np.arange(rows.shape[0]) - starts).astype(np.int8)
        table = np.concatenate([table[rows], new_label[:, None]], axis=1)
        running_max = np.maximum(running_max[rows], new_label)
    return table, running_max


@lru_cache(maxsize=32)
def restricted_growth_strings(n, max_blocks):
    """All labelings of ``n`` points into at most ``max_blocks`` blocks, in lex order.

    Row ``r`` assigns point ``i`` to block ``table[r, i]``; each partition appears
    exactly once (canonical first-occurrence labeling).
    """
    table = np.zeros((1, 1), dtype=np.int8)
    running_max = np.zeros(1, dtype=np.int8)
    table, running_max = _extend_rgs(table, running_max, n - 1, max_blocks)
    table.setflags(write=False)
    running_max.setflags(write=False)
    return table, running_max


@lru_cache(maxsize=32)
def _continuations(start_max, steps, max_blocks):
    table = np.zeros((1, 0), dtype=np.int8)
    running_max = np.array([start_max], dtype=np.int8)
    table, _ = _extend_rgs(table, running_max, steps, max_blocks)
    table.setflags(write=False)
    return table


def _max_block_diameter(table, dist, pairs):
    acc = np.zeros(table.shape[0])
    for i, j in pairs:
        d = dist[i, j]
        if d > 0.0:
            same = table[:, i] == table[:, j]
            np.maximum(acc, np.where(same, d, 0.0), out=acc)
    return acc


# full enumeration up to this size; beyond it, enumerate by prefix chunks
_FULL_TABLE_MAX = 12
_SUFFIX_LEN = 8


def _minmax_partition_np(dist, max_blocks):
    n = dist.shape[0]
    if n <= 1:
        return 0.0, np.zeros(n, dtype=np.int64)
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if n <= _FULL_TABLE_MAX:
        table, _ = restricted_growth_strings(n, max_blocks)
        values = _max_block_diameter(table, dist, all_pairs)
        r = int(np.argmin(values))
        return float(values[r]), table[r].astype(np.int64)

    split = n - _SUFFIX_LEN
    prefixes, prefix_max = restricted_growth_strings(split, max_blocks)
    prefix_vals = _max_block_diameter(prefixes, dist, [(i, j) for i, j in all_pairs if j < split])
    tail_pairs = [(i, j) for i, j in all_pairs if j >= split]
    best = np.inf
    best_labels = None
    for r in range(prefixes.shape[0]):
        if prefix_vals[r] >= best:
            continue
        suffix = _continuations(int(prefix_max[r]), _SUFFIX_LEN, max_blocks)
        chunk = np.concatenate([np.broadcast_to(prefixes[r], (suffix.shape[0], split)), suffix], axis=1)
        values = np.maximum(_max_block_diameter(chunk, dist, tail_pairs), prefix_vals[r])
        q = int(np.argmin(values))
        if values[q] < best:
            best = float(values[q])
            best_labels = chunk[q].astype(np.int64)
    return best, best_labels


def minmax_partition(dist, max_blocks=4):
    """Minimise the largest block diameter over partitions into ``<= max_blocks`` blocks.

    Returns ``(value, labels)``. ``labels`` is the lexicographically first optimal
    restricted-growth labeling, so both backends return the same partition.
    """
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    if max_blocks < 1:
        raise ValueError("max_blocks must be >= 1")
    if _accel.USE_NUMBA:
        value, labels = _minmax_partition_nb(dist, max_blocks)
        return float(value), labels
    return _minmax_partition_np(dist, max_blocks)


# ---------------------------------------------------------------------------
# Luxemburg psi_alpha norm by bisection
# ---------------------------------------------------------------------------


@njit(cache=True)
def _orlicz_criterion_nb(u, alpha, c):
    n = u.shape[0]
    limit = 2.0 * n
    total = 0.0
    for i in range(n):
        r = u[i] / c
        # integer exponents avoid the general pow call
        if alpha == 2.0:
            r = r * r
        elif alpha != 1.0:
            r = r ** alpha
        total += np.exp(r)
        if total > limit:
            return np.inf
    return total / n


@njit(cache=True)
def _orlicz_bisect_nb(u, alpha, lo, hi, tol):
    while hi - lo > tol * lo:
        mid = 0.5 * (lo + hi)
        if _orlicz_criterion_nb(u, alpha, mid) <= 2.0:
            hi = mid
        else:
            lo = mid
    return hi


def _orlicz_criterion_np(u, alpha, c):
    with np.errstate(over="ignore"):
        return float(np.mean(np.exp((u / c) ** alpha)))


def _orlicz_bisect_np(u, alpha, lo, hi, tol):
    while hi - lo > tol * lo:
        mid = 0.5 * (lo + hi)
        if _orlicz_criterion_np(u, alpha, mid) <= 2.0:
            hi = mid
        else:
            lo = mid
    return hi


def orlicz_criterion(u, alpha, c):
    """Empirical ``mean(exp((u / c) ** alpha))``."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    if _accel.USE_NUMBA:
        return float(_orlicz_criterion_nb(u, float(alpha), float(c)))
    return _orlicz_criterion_np(u, float(alpha), float(c))


def orlicz_bisect(u, alpha, lo, hi, tol):
    """Smallest ``c`` in ``[lo, hi]`` (to relative ``tol``) with criterion ``<= 2``.

    Requires ``criterion(lo) > 2 >= criterion(hi)``; returns the upper end of the
    final bracket so the returned value always satisfies the constraint.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    if _accel.USE_NUMBA:
        return float(_orlicz_bisect_nb(u, float(alpha), float(lo), float(hi), float(tol)))
    return _orlicz_bisect_np(u, float(alpha), float(lo), float(hi), float(tol))
