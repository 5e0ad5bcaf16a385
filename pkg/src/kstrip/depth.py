"""Depth certificates: the layered set R(v), stripping sequences extracted from
it, and an exhaustive shortest-sequence search for tiny instances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ._kernels import build_adjacency
from .stripping import ParallelStrip, _incidence, parallel_strip

DEFAULT_BUDGET = 10_000_000


class CoreVertexError(ValueError):
    """Depth is only defined for vertices outside the k-core."""


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class DepthCertificate:
    v: int
    level: int
    layers: dict            # round j -> sorted vertex array R_j, for j = level..1
    seeds: dict             # round j -> R'_j, the vertices whose components make up R_j
    union_R: np.ndarray
    sequence: list
    lower_bound: int
    upper_bound: int


@dataclass(frozen=True)
class SequenceCheck:
    ok: bool
    sequence: list
    violation_index: int | None = None
    reason: str = ""


class DepthIndex:
    """Read-only structures shared by every certificate on one (g, k)."""

    def __init__(self, g, k: int, strip: ParallelStrip | None = None):
        self.g = g
        self.k = k
        self.inc = _incidence(g)
        self.r = self.inc.shape[1]
        self.strip = strip if strip is not None else parallel_strip(g, k)
        self.vround = self.strip.vround
        self.eround = self.strip.eround
        _, self.adj_start, self.adj, _ = build_adjacency(self.inc, g.n)
        self._components()

    def _components(self):
        n, inc, vr, er = self.g.n, self.inc, self.vround, self.eround
        own = (vr[inc] == er[:, None]) & (er > 0)[:, None]
        # tie every own-round copy of an edge to the first one
        first = np.where(own.any(axis=1), inc[np.arange(len(inc)), own.argmax(axis=1)], -1)
        src = inc[own]
        dst = np.repeat(first, own.sum(axis=1))
        adj = coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
        _, labels = connected_components(adj, directed=False)
        self.labels = labels
        order = np.argsort(labels, kind="stable")
        self._comp_order = order
        self._comp_bounds = np.concatenate([[0], np.cumsum(np.bincount(labels))])

    def component(self, label: int) -> np.ndarray:
        return self._comp_order[self._comp_bounds[label]:self._comp_bounds[label + 1]]

    def edges_of(self, vertices) -> np.ndarray:
        vertices = np.asarray(vertices, dtype=np.int64)
        if len(vertices) == 0:
            return np.empty(0, dtype=np.int64)
        slots = np.concatenate([self.adj[self.adj_start[u]:self.adj_start[u + 1]]
                                for u in vertices.tolist()])
        return np.unique(slots // self.r)

    def level(self, v: int) -> int:
        lv = int(self.vround[v])
        if lv == 0:
            raise CoreVertexError(f"vertex {v} is in the {self.k}-core")
        return lv

    def children(self, w: int) -> list[int]:
        """Earlier-round vertices whose removal takes an edge away from w."""
        j = int(self.vround[w])
        out = set()
        for e in self.edges_of([w]).tolist():
            je = int(self.eround[e])
            if 0 < je < j:
                out.update(u for u in self.inc[e].tolist() if self.vround[u] == je)
        return sorted(out)


def build_R(index: DepthIndex, v: int) -> DepthCertificate:
    level = index.level(v)
    vr, er, inc = index.vround, index.eround, index.inc
    in_union = set()
    pending: dict[int, list[np.ndarray]] = {}   # round -> edges incident to the union removed then
    layers: dict[int, np.ndarray] = {}
    seeds: dict[int, np.ndarray] = {}
    r_prime = np.array([v], dtype=np.int64)
    for j in range(level, 0, -1):
        seeds[j] = r_prime
        labels = np.unique(index.labels[r_prime])
        R_j = np.unique(np.concatenate([index.component(int(c)) for c in labels]))
        layers[j] = R_j
        new = [u for u in R_j.tolist() if u not in in_union]
        in_union.update(new)
        edges = index.edges_of(new)
        if len(edges):
            rounds = er[edges]
            keep = (rounds > 0) & (rounds < j)
            for jj in np.unique(rounds[keep]).tolist():
                pending.setdefault(jj, []).append(edges[rounds == jj])
        if j == 1:
            break
        bucket = pending.pop(j - 1, [])
        if bucket:
            members = inc[np.unique(np.concatenate(bucket))].ravel()
            r_prime = np.unique(members[vr[members] == j - 1])
        else:
            r_prime = np.empty(0, dtype=np.int64)
        if len(r_prime) == 0:
            for jj in range(j - 1, 0, -1):
                layers[jj] = seeds[jj] = np.empty(0, dtype=np.int64)
            break
    union = np.array(sorted(in_union), dtype=np.int64)
    seq = _proof_sequence(index, v)
    return DepthCertificate(v=v, level=level, layers=layers, seeds=seeds, union_R=union,
                            sequence=seq, lower_bound=level, upper_bound=len(union))


def _proof_sequence(index: DepthIndex, v: int) -> list[int]:
    """Post-order concatenation: each vertex follows sequences for all its children."""
    seen = {v}
    out: list[int] = []
    stack = [(v, iter(index.children(v)))]
    while stack:
        w, it = stack[-1]
        for u in it:
            if u not in seen:
                seen.add(u)
                stack.append((u, iter(index.children(u))))
                break
        else:
            stack.pop()
            out.append(w)
    return out


def replay_sequence(g, k: int, sequence) -> SequenceCheck:
    """Remove vertices in order, requiring degree < k at each removal."""
    inc = _incidence(g)
    deg = np.bincount(inc.ravel(), minlength=g.n)
    _, start, adj, _ = build_adjacency(inc, g.n)
    r = inc.shape[1]
    alive = np.ones(len(inc), dtype=bool)
    removed = np.zeros(g.n, dtype=bool)
    for idx, u in enumerate(sequence):
        if removed[u]:
            return SequenceCheck(False, list(sequence), idx, "repeated vertex")
        if deg[u] >= k:
            return SequenceCheck(False, list(sequence), idx, f"degree {int(deg[u])} >= {k}")
        removed[u] = True
        for s in adj[start[u]:start[u + 1]].tolist():
            e = s // r
            if alive[e]:
                alive[e] = False
                np.subtract.at(deg, inc[e], 1)
    return SequenceCheck(True, list(sequence))


def extract_and_validate_sequence(index: DepthIndex, cert: DepthCertificate) -> SequenceCheck:
    seq = _proof_sequence(index, cert.v)
    members = set(cert.union_R.tolist())
    for idx, u in enumerate(seq):
        if u not in members:
            return SequenceCheck(False, seq, idx, "vertex outside R(v)")
    if not seq or seq[-1] != cert.v:
        return SequenceCheck(False, seq, max(len(seq) - 1, 0), "does not end with v")
    return replay_sequence(index.g, index.k, seq)


def _bfs_depths(g, k: int, targets: set[int], budget: int) -> dict[int, int]:
    """Breadth-first search over removed sets; a vertex's depth is one more than
    the size of the smallest reachable removed set in which it is light."""
    inc = _incidence(g)
    edge_masks = [sum(1 << u for u in set(row)) for row in inc.tolist()]
    rows = inc.tolist()
    n = g.n
    depth: dict[int, int] = {}
    frontier = {0}
    states = 0
    level = 0
    while frontier and not targets <= depth.keys():
        nxt = set()
        for mask in frontier:
            states += 1
            if states > budget:
                raise BudgetExceeded(f"more than {budget} states explored")
            deg = [0] * n
            for em, row in zip(edge_masks, rows):
                if not em & mask:
                    for u in row:
                        deg[u] += 1
            for u in range(n):
                if deg[u] < k and not (mask >> u) & 1:
                    depth.setdefault(u, level + 1)
                    nxt.add(mask | (1 << u))
        frontier = nxt
        level += 1
    return {u: depth[u] for u in targets}


def exact_depth(g, k: int, v: int, budget: int = DEFAULT_BUDGET) -> int:
    """Length of a shortest stripping sequence ending with v."""
    if parallel_strip(g, k).vround[v] == 0:
        raise CoreVertexError(f"vertex {v} is in the {k}-core")
    return _bfs_depths(g, k, {int(v)}, budget)[int(v)]


def exact_depths(g, k: int, budget: int = DEFAULT_BUDGET) -> dict[int, int]:
    """Exact depth of every non-core vertex from one search."""
    targets = set(np.flatnonzero(parallel_strip(g, k).vround > 0).tolist())
    return _bfs_depths(g, k, targets, budget) if targets else {}
