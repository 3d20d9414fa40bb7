"""Hot permutation kernels.

Each kernel exists twice: a loop version compiled with ``numba.njit`` and a
vectorised pure-numpy version. The public names at the bottom of the module
dispatch to one of them, chosen once at import time:

* numba path: default whenever numba imports cleanly;
* numpy path: when numba is missing or ``ORDERSUP_DISABLE_NUMBA`` is set to a
  truthy value (``1``, ``true``, ``yes``).

All kernels take 0-indexed permutations stored row-wise in int64 arrays.
Both paths must return identical integers; ``tests/test_kernels.py`` checks it.
"""

import os

import numpy as np

_FLAG = "ORDERSUP_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()


# --------------------------------------------------------------------------
# pure numpy
# --------------------------------------------------------------------------


def inversion_counts_np(perms):
    perms = np.asarray(perms, dtype=np.int64)
    n = perms.shape[1]
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    greater = perms[:, :, None] > perms[:, None, :]
    return (greater & upper).sum(axis=(1, 2)).astype(np.int64)


def lehmer_codes_np(perms):
    perms = np.asarray(perms, dtype=np.int64)
    n = perms.shape[1]
    # earlier[i, j]: position j precedes position i
    earlier = np.tril(np.ones((n, n), dtype=bool), k=-1)
    bigger_before = perms[:, None, :] > perms[:, :, None]
    return (bigger_before & earlier).sum(axis=2).astype(np.int64)


def distances_to_set_np(pool, chosen):
    pool = np.asarray(pool, dtype=np.int64)
    chosen = np.asarray(chosen, dtype=np.int64)
    d = (pool[:, None, :] != chosen[None, :, :]).sum(axis=2)
    return d.min(axis=1).astype(np.int64), d.sum(axis=1).astype(np.int64)


def pick_best_np(min_d, sum_d, taken):
    """Index maximising (min distance, sum distance), lowest index on ties."""
    score_min = np.where(taken, -1, min_d)
    best_min = score_min.max()
    tied = score_min == best_min
    score_sum = np.where(tied, sum_d, -1)
    return int(np.argmax(score_sum))


def greedy_select_np(pool, first, set_size):
    pool = np.asarray(pool, dtype=np.int64)
    n_pool = pool.shape[0]
    min_d = np.full(n_pool, np.iinfo(np.int64).max, dtype=np.int64)
    sum_d = np.zeros(n_pool, dtype=np.int64)
    taken = np.zeros(n_pool, dtype=bool)
    picked = np.empty(set_size, dtype=np.int64)
    picked[0] = first
    taken[first] = True
    for k in range(1, set_size):
        d = (pool != pool[picked[k - 1]]).sum(axis=1)
        np.minimum(min_d, d, out=min_d)
        sum_d += d
        best = pick_best_np(min_d, sum_d, taken)
        picked[k] = best
        taken[best] = True
    return picked


# --------------------------------------------------------------------------
# numba loops
# --------------------------------------------------------------------------


def _inversion_counts_loop(perms):
    m, n = perms.shape
    out = np.zeros(m, dtype=np.int64)
    for r in range(m):
        c = 0
        for i in range(n):
            for j in range(i + 1, n):
                if perms[r, i] > perms[r, j]:
                    c += 1
        out[r] = c
    return out


def _lehmer_codes_loop(perms):
    m, n = perms.shape
    out = np.zeros((m, n), dtype=np.int64)
    for r in range(m):
        for i in range(n):
            c = 0
            for j in range(i):
                if perms[r, j] > perms[r, i]:
                    c += 1
            out[r, i] = c
    return out


def _distances_to_set_loop(pool, chosen):
    n_pool, n = pool.shape
    k = chosen.shape[0]
    min_d = np.empty(n_pool, dtype=np.int64)
    sum_d = np.zeros(n_pool, dtype=np.int64)
    for c in range(n_pool):
        lo = n + 1
        for s in range(k):
            d = 0
            for i in range(n):
                if pool[c, i] != chosen[s, i]:
                    d += 1
            sum_d[c] += d
            if d < lo:
                lo = d
        min_d[c] = lo
    return min_d, sum_d


def _greedy_select_loop(pool, first, set_size):
    n_pool, n = pool.shape
    min_d = np.full(n_pool, n + 1, dtype=np.int64)
    sum_d = np.zeros(n_pool, dtype=np.int64)
    taken = np.zeros(n_pool, dtype=np.bool_)
    picked = np.empty(set_size, dtype=np.int64)
    picked[0] = first
    taken[first] = True
    for k in range(1, set_size):
        last = picked[k - 1]
        best = -1
        best_min = -1
        best_sum = -1
        for c in range(n_pool):
            d = 0
            for i in range(n):
                if pool[c, i] != pool[last, i]:
                    d += 1
            if d < min_d[c]:
                min_d[c] = d
            sum_d[c] += d
            if taken[c]:
                continue
            # strict comparisons keep the lowest index on ties
            if min_d[c] > best_min or (min_d[c] == best_min and sum_d[c] > best_sum):
                best = c
                best_min = min_d[c]
                best_sum = sum_d[c]
        picked[k] = best
        taken[best] = True
    return picked


if HAVE_NUMBA:
    inversion_counts_nb = numba.njit(cache=True)(_inversion_counts_loop)
    lehmer_codes_nb = numba.njit(cache=True)(_lehmer_codes_loop)
    distances_to_set_nb = numba.njit(cache=True)(_distances_to_set_loop)
    greedy_select_nb = numba.njit(cache=True)(_greedy_select_loop)
else:  # pragma: no cover
    inversion_counts_nb = _inversion_counts_loop
    lehmer_codes_nb = _lehmer_codes_loop
    distances_to_set_nb = _distances_to_set_loop
    greedy_select_nb = _greedy_select_loop


def _as_rows(perms):
    return np.ascontiguousarray(np.atleast_2d(np.asarray(perms, dtype=np.int64)))


if USE_NUMBA:

    def inversion_counts(perms):
        return inversion_counts_nb(_as_rows(perms))

    def lehmer_codes(perms):
        return lehmer_codes_nb(_as_rows(perms))

    def distances_to_set(pool, chosen):
        return distances_to_set_nb(_as_rows(pool), _as_rows(chosen))

    def greedy_select(pool, first, set_size):
        return greedy_select_nb(_as_rows(pool), np.int64(first), np.int64(set_size))

else:
    inversion_counts = inversion_counts_np
    lehmer_codes = lehmer_codes_np
    distances_to_set = distances_to_set_np
    greedy_select = greedy_select_np


def backend():
    """Name of the active kernel path, ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"
