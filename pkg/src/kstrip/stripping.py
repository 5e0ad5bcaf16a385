"""Parallel k-stripping, the one-edge-per-step queue process, and per-round
bookkeeping of the edges each round removes."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .hypergraph import Configuration, SimpleHypergraph
from .rng import make_rng


def _incidence(g) -> np.ndarray:
    inc = np.asarray(g.incidence(), dtype=np.int64)
    return np.ascontiguousarray(inc.reshape(-1, g.r))


def _strata(vround: np.ndarray, rounds: int) -> list[np.ndarray]:
    order = np.argsort(vround, kind="stable")
    counts = np.bincount(vround, minlength=rounds + 1)
    bounds = np.cumsum(counts)
    return [order[bounds[i - 1]:bounds[i]] for i in range(1, rounds + 1)]


@dataclass(frozen=True, eq=False)
class ParallelStrip:
    k: int
    rounds: int
    vround: np.ndarray   # round in which each vertex is removed, 0 for core vertices
    eround: np.ndarray   # round in which each edge is removed, 0 for core edges

    @property
    def strata(self) -> list[np.ndarray]:
        return _strata(self.vround, self.rounds)

    @property
    def core_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.vround == 0)

    @property
    def core_edges(self) -> np.ndarray:
        return np.flatnonzero(self.eround == 0)


@dataclass(frozen=True, eq=False)
class StripTrace:
    k: int
    L: np.ndarray             # total degree of queued (light) vertices after each step
    N: np.ndarray             # heavy vertex count after each step
    D: np.ndarray             # total heavy degree after each step
    round_starts: np.ndarray  # step at which the first vertex of each round reaches the head
    tau: int
    rounds: int
    vround: np.ndarray
    eround: np.ndarray
    removal_vertices: np.ndarray
    removal_steps: np.ndarray

    @property
    def zeta(self) -> np.ndarray:
        """Mean heavy degree per step (nan once no heavy vertex remains)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.N > 0, self.D / np.maximum(self.N, 1), np.nan)

    @property
    def strata(self) -> list[np.ndarray]:
        return _strata(self.vround, self.rounds)

    @property
    def core_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.vround == 0)

    @property
    def core_edges(self) -> np.ndarray:
        return np.flatnonzero(self.eround == 0)

    @property
    def removal_order(self) -> list[tuple[int, int]]:
        return list(zip(self.removal_vertices.tolist(), self.removal_steps.tolist()))

    def round_bounds(self) -> np.ndarray:
        """t(1), ..., t(s), tau."""
        return np.append(self.round_starts, self.tau)


def parallel_strip(g, k: int) -> ParallelStrip:
    inc = _incidence(g)
    vround, eround, rounds = _kernels.parallel_rounds(inc, g.n, k)
    return ParallelStrip(k, int(rounds), vround, eround)


def slow_strip(g, k: int, seed=None) -> StripTrace:
    if k < 2:
        raise ValueError(f"slow_strip needs k >= 2, got {k}")
    rng = make_rng(seed)
    inc = _incidence(g)
    deg = np.bincount(inc.ravel(), minlength=g.n)
    init = rng.permutation(np.flatnonzero(deg < k)).astype(np.int64)
    uniforms = rng.random(len(inc))
    L, N, D, starts, vround, eround, rv, rs, tau = _kernels.slow_strip_kernel(
        inc, g.n, k, init, uniforms)
    return StripTrace(k, L, N, D, starts, int(tau), len(starts), vround, eround, rv, rs)


def naive_core(g, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference core by repeated full scans.  Returns (vertices, edge indices)."""
    rows = [list(map(int, row)) for row in _incidence(g)]
    alive_v = [True] * g.n
    alive_e = [True] * len(rows)
    changed = True
    while changed:
        changed = False
        deg = [0] * g.n
        for e, row in enumerate(rows):
            if alive_e[e]:
                for u in row:
                    deg[u] += 1
        for v in range(g.n):
            if alive_v[v] and deg[v] < k:
                alive_v[v] = False
                changed = True
        for e, row in enumerate(rows):
            if alive_e[e] and not all(alive_v[u] for u in row):
                alive_e[e] = False
    return (np.array([v for v in range(g.n) if alive_v[v]], dtype=np.int64),
            np.array([e for e in range(len(rows)) if alive_e[e]], dtype=np.int64))


@dataclass(frozen=True, eq=False)
class RoundStats:
    """Edges removed in one round, classified by how many copies they hold in
    this stratum (a) and in the next one (b)."""
    round: int
    vertices: np.ndarray       # S_i
    d_plus: np.ndarray         # copies of each S_i vertex removed during round i
    next_vertices: np.ndarray  # S_{i+1}
    d_minus: np.ndarray        # copies of each S_{i+1} vertex removed during round i
    M: dict = field(default_factory=dict)  # (a, b) -> number of edges
    edge_ids: np.ndarray = None  # edges removed in round i; their S_i parts form the round hypergraph

    def si_edges(self, g) -> list[tuple[int, ...]]:
        """Hyperedges f ∩ S_i of the round hypergraph (with multiplicity)."""
        inc = _incidence(g)
        members = set(self.vertices.tolist())
        return [tuple(u for u in inc[e].tolist() if u in members) for e in self.edge_ids.tolist()]


def round_stats_from(g, strip) -> list[RoundStats]:
    """Round statistics for an existing parallel or slow run on ``g``."""
    inc = _incidence(g)
    vround, eround, rounds = strip.vround, strip.eround, strip.rounds
    removed = eround > 0
    slot_round = vround[inc]
    own = (slot_round == eround[:, None]) & removed[:, None]
    nxt = (slot_round == eround[:, None] + 1) & removed[:, None]
    d_plus_all = np.bincount(inc[own], minlength=g.n)
    d_minus_all = np.bincount(inc[nxt], minlength=g.n)
    a = own.sum(axis=1)
    b = nxt.sum(axis=1)
    keys = np.stack([eround[removed], a[removed], b[removed]], axis=1)
    uniq, counts = (np.unique(keys, axis=0, return_counts=True) if len(keys)
                    else (np.empty((0, 3), dtype=np.int64), np.empty(0, dtype=np.int64)))
    M_by_round: list[dict] = [dict() for _ in range(rounds + 1)]
    for (i, aa, bb), c in zip(uniq.tolist(), counts.tolist()):
        M_by_round[i][(aa, bb)] = c
    edge_order = np.argsort(eround, kind="stable")
    e_bounds = np.cumsum(np.bincount(eround, minlength=rounds + 1))
    strata = _strata(vround, rounds)
    out = []
    for i in range(1, rounds + 1):
        s_i = strata[i - 1]
        s_next = strata[i] if i < rounds else np.empty(0, dtype=np.int64)
        out.append(RoundStats(
            round=i,
            vertices=s_i,
            d_plus=d_plus_all[s_i],
            next_vertices=s_next,
            d_minus=d_minus_all[s_next],
            M=M_by_round[i],
            edge_ids=edge_order[e_bounds[i - 1]:e_bounds[i]],
        ))
    return out


def round_stats(g, k: int) -> list[RoundStats]:
    return round_stats_from(g, parallel_strip(g, k))


def check_round_stats(stats: list[RoundStats], r: int) -> dict[str, bool]:
    """Accounting identities that every round must satisfy exactly."""
    plus = minus = ranges = dminus = True
    for st in stats:
        plus &= sum(a * c for (a, _), c in st.M.items()) == int(st.d_plus.sum())
        minus &= sum(b * c for (_, b), c in st.M.items()) == int(st.d_minus.sum())
        ranges &= all(1 <= a <= r and 0 <= b <= r - a for a, b in st.M)
        dminus &= bool(np.all(st.d_minus >= 1))
    return {"sum_a_M_equals_dplus": bool(plus), "sum_b_M_equals_dminus": bool(minus),
            "ab_ranges": bool(ranges), "next_stratum_dminus_positive": bool(dminus)}


def check_trace(g, trace: StripTrace, stats: list[RoundStats] | None = None) -> dict[str, bool]:
    """Exact integer identities linking a queue-process trace to the parallel rounds."""
    r = g.r
    m = len(_incidence(g))
    stats = stats if stats is not None else round_stats(g, trace.k)
    bounds = trace.round_bounds()
    L_at = trace.L[trace.round_starts]
    widths = np.diff(bounds)
    out = {
        "tau_is_edges_removed": trace.tau == m - len(trace.core_edges),
        "L_tau_zero": int(trace.L[-1]) == 0,
        "L_positive_before_tau": bool(np.all(trace.L[:-1] > 0)),
        "round_length_lower": bool(np.all(L_at <= r * widths)),
        "round_length_upper": bool(np.all(widths <= L_at)),
        "rounds_match_parallel": trace.rounds == len(stats),
        "L_at_round_start_is_dplus": (len(stats) == trace.rounds and all(
            int(L_at[i]) == int(st.d_plus.sum()) for i, st in enumerate(stats))),
    }
    out.update(check_round_stats(stats, r))
    return out


def write_trace(path, g, trace: StripTrace, stats: list[RoundStats] | None = None,
                stride: int = 1) -> None:
    """JSON lines: header, strided step records, then one record per round."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    stats = stats if stats is not None else round_stats_from(g, trace)
    starts = trace.round_starts.tolist()
    with Path(path).open("w") as fh:
        header = {"kind": "header", "n": g.n, "m": int(len(_incidence(g))), "r": g.r,
                  "k": trace.k, "tau": trace.tau, "rounds": trace.rounds,
                  "core_vertices": int(len(trace.core_vertices)),
                  "core_edges": int(len(trace.core_edges)), "stride": stride}
        fh.write(json.dumps(header) + "\n")
        steps = list(range(0, trace.tau + 1, stride))
        if steps[-1] != trace.tau:
            steps.append(trace.tau)
        L, N, D = trace.L.tolist(), trace.N.tolist(), trace.D.tolist()
        for t in steps:
            fh.write(json.dumps({"t": t, "L": L[t], "N": N[t], "D": D[t]}) + "\n")
        for st, t_i in zip(stats, starts):
            fh.write(json.dumps({
                "i": st.round, "t_i": t_i, "size_Si": int(len(st.vertices)),
                "M": {f"{a},{b}": c for (a, b), c in sorted(st.M.items())},
                "sum_dplus": int(st.d_plus.sum()), "sum_dminus": int(st.d_minus.sum()),
            }) + "\n")
