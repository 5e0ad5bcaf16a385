"""Compiled peeling loops.  Callers pass an (m, r) incidence array; a vertex
listed twice in a row holds two copies of that edge."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def build_adjacency(inc, n):
    """CSR over slots (slot = e * r + j) grouped by vertex, plus each slot's position."""
    m, r = inc.shape
    deg = np.zeros(n, dtype=np.int64)
    for e in range(m):
        for j in range(r):
            deg[inc[e, j]] += 1
    start = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        start[v + 1] = start[v] + deg[v]
    fill = start[:-1].copy()
    adj = np.empty(m * r, dtype=np.int64)
    pos = np.empty(m * r, dtype=np.int64)
    for e in range(m):
        for j in range(r):
            v = inc[e, j]
            s = e * r + j
            adj[fill[v]] = s
            pos[s] = fill[v]
            fill[v] += 1
    return deg, start, adj, pos


@njit(cache=True, nogil=True)
def parallel_rounds(inc, n, k):
    """Simultaneous removal of all vertices of degree < k, round by round.

    Returns (vround, eround, rounds); 0 marks core vertices and core edges.
    """
    m, r = inc.shape
    deg, start, adj, _ = build_adjacency(inc, n)
    vround = np.zeros(n, dtype=np.int64)
    eround = np.zeros(m, dtype=np.int64)
    frontier = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    size = 0
    for v in range(n):
        if deg[v] < k:
            vround[v] = 1
            frontier[size] = v
            size += 1
    rounds = 0
    while size > 0:
        rounds += 1
        nsize = 0
        for q in range(size):
            v = frontier[q]
            for p in range(start[v], start[v + 1]):
                e = adj[p] // r
                if eround[e] != 0:
                    continue
                eround[e] = rounds
                for j in range(r):
                    u = inc[e, j]
                    deg[u] -= 1
                    if vround[u] == 0 and deg[u] < k:
                        vround[u] = rounds + 1
                        nxt[nsize] = u
                        nsize += 1
        frontier, nxt = nxt, frontier
        size = nsize
    return vround, eround, rounds


@njit(cache=True, nogil=True)
def _drop_slot(s, u, start, adj, pos, cnt):
    # swap-remove slot s from u's live prefix
    p = pos[s]
    last_p = start[u] + cnt[u] - 1
    last = adj[last_p]
    adj[p] = last
    pos[last] = p
    adj[last_p] = s
    pos[s] = last_p
    cnt[u] -= 1


@njit(cache=True, nogil=True)
def slow_strip_kernel(inc, n, k, init_queue, uniforms):
    """One edge per step, always incident to the queue head.

    ``init_queue`` is the shuffled list of initially light vertices and
    ``uniforms[t]`` drives the copy chosen at step t.
    """
    m, r = inc.shape
    cnt, start, adj, pos = build_adjacency(inc, n)
    queued = np.zeros(n, dtype=np.bool_)
    vround = np.zeros(n, dtype=np.int64)
    eround = np.zeros(m, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    L = 0
    N = 0
    D = 0
    for v in range(n):
        if cnt[v] >= k:
            N += 1
            D += cnt[v]
    for q in range(init_queue.shape[0]):
        v = init_queue[q]
        queue[tail] = v
        tail += 1
        queued[v] = True
        vround[v] = 1
        L += cnt[v]

    L_t = np.empty(m + 1, dtype=np.int64)
    N_t = np.empty(m + 1, dtype=np.int64)
    D_t = np.empty(m + 1, dtype=np.int64)
    starts = np.empty(n + 1, dtype=np.int64)
    removed_v = np.empty(n, dtype=np.int64)
    removed_at = np.empty(n, dtype=np.int64)
    nrounds = 0
    nremoved = 0
    step = 0
    L_t[0] = L
    N_t[0] = N
    D_t[0] = D
    while head < tail:
        v = queue[head]
        if vround[v] > nrounds:
            starts[nrounds] = step
            nrounds += 1
        if cnt[v] == 0:
            removed_v[nremoved] = v
            removed_at[nremoved] = step
            nremoved += 1
            head += 1
            continue
        idx = int(uniforms[step] * cnt[v])
        if idx >= cnt[v]:
            idx = cnt[v] - 1
        e = adj[start[v] + idx] // r
        eround[e] = nrounds
        for j in range(r):
            u = inc[e, j]
            _drop_slot(e * r + j, u, start, adj, pos, cnt)
            if queued[u]:
                L -= 1
            else:
                D -= 1
                if cnt[u] < k:
                    N -= 1
                    D -= cnt[u]
                    L += cnt[u]
                    queued[u] = True
                    vround[u] = nrounds + 1
                    queue[tail] = u
                    tail += 1
        step += 1
        L_t[step] = L
        N_t[step] = N
        D_t[step] = D
    return (L_t[:step + 1], N_t[:step + 1], D_t[:step + 1], starts[:nrounds],
            vround, eround, removed_v[:nremoved], removed_at[:nremoved], step)
