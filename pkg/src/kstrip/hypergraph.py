"""Random r-uniform hypergraphs, allocation-partition configurations and
truncated-multinomial degree sequences."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .numeric import lambda_of, poisson_tail, truncated_poisson_pmf
from .rng import make_rng

# C(n, r) up to this size may be enumerated when the density is too high for rejection
_ENUMERATE_LIMIT = 2_000_000


class InfeasibleError(ValueError):
    pass


class DensityError(ValueError):
    """Requested edge density is too high for duplicate-rejection sampling."""


class RejectionBudgetError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SimpleHypergraph:
    n: int
    r: int
    edges: np.ndarray  # (m, r) int64, each row strictly increasing

    @property
    def m(self) -> int:
        return len(self.edges)

    def incidence(self) -> np.ndarray:
        return self.edges

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def validate(self) -> None:
        e = self.edges
        if e.ndim != 2 or e.shape[1] != self.r:
            raise ValueError("edges must have shape (m, r)")
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise ValueError("vertex id out of range")
        if self.r > 1 and np.any(np.diff(np.sort(e, axis=1), axis=1) == 0):
            raise ValueError("edge with a repeated vertex")
        if len(np.unique(_row_keys(np.sort(e, axis=1)))) != len(e):
            raise ValueError("duplicate edge")


@dataclass(frozen=True, eq=False)
class Configuration:
    n: int
    r: int
    m: int
    parts: np.ndarray       # flat, length r*m; parts[e*r:(e+1)*r] are the copies of edge e
    allocation: np.ndarray  # copy id -> bin

    def incidence(self) -> np.ndarray:
        return self.allocation[self.parts].reshape(self.m, self.r)

    def bin_sizes(self) -> np.ndarray:
        return np.bincount(self.allocation, minlength=self.n)

    degrees = bin_sizes


@dataclass(frozen=True)
class NotSimple:
    reason: str   # "repeated-vertex" or "duplicate-edge"
    edge: int     # index of the first offending part


@dataclass(frozen=True, eq=False)
class HeavyDegreeSeq:
    N: int
    D: int
    k: int
    degrees: np.ndarray
    attempts: int = field(default=1, compare=False)


def _row_keys(rows: np.ndarray) -> np.ndarray:
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    return rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()


def _first_occurrences(rows: np.ndarray) -> np.ndarray:
    """Indices of first occurrences of each distinct row, in original order."""
    _, idx = np.unique(_row_keys(rows), return_index=True)
    return np.sort(idx)


def sample_simple(n: int, m: int, r: int, seed=None) -> SimpleHypergraph:
    """Uniform hypergraph with exactly m distinct r-edges on n vertices."""
    if r < 1 or r > n:
        raise InfeasibleError(f"need 1 <= r <= n, got r={r}, n={n}")
    total = math.comb(n, r)
    if m > total:
        raise InfeasibleError(f"m={m} exceeds C({n},{r})={total}")
    rng = make_rng(seed)
    if m > 0.5 * total:
        if total > _ENUMERATE_LIMIT:
            raise DensityError(f"m={m} > C(n,r)/2 with C(n,r)={total} too large to enumerate")
        from itertools import combinations
        allrows = np.array(list(combinations(range(n), r)), dtype=np.int64).reshape(-1, r)
        pick = rng.choice(total, size=m, replace=False)
        return SimpleHypergraph(n, r, allrows[pick])

    edges = np.empty((0, r), dtype=np.int64)
    while len(edges) < m:
        need = m - len(edges)
        batch = rng.integers(0, n, size=(int(need * 1.1) + 16, r), dtype=np.int64)
        batch.sort(axis=1)
        if r > 1:
            batch = batch[np.all(np.diff(batch, axis=1) > 0, axis=1)]
        combined = np.concatenate([edges, batch])
        edges = combined[_first_occurrences(combined)]
    return SimpleHypergraph(n, r, edges[:m])


def sample_ap(n: int, m: int, r: int, seed=None) -> Configuration:
    """Allocation-partition model: uniform r-partition of rm copies, i.i.d. uniform bins."""
    if n < 1 or m < 0 or r < 1:
        raise ValueError("need n >= 1, m >= 0, r >= 1")
    rng = make_rng(seed)
    parts = rng.permutation(r * m).astype(np.int64)
    allocation = rng.integers(0, n, size=r * m, dtype=np.int64)
    return Configuration(n, r, m, parts, allocation)


def sample_ap_many(n: int, m: int, r: int, count: int, seed=None) -> np.ndarray:
    """Incidence arrays (count, m, r) of ``count`` independent AP configurations.

    Same law as :func:`sample_ap` followed by contraction; vectorised for
    Monte Carlo on tiny instances.
    """
    rng = make_rng(seed)
    parts = np.argsort(rng.random((count, r * m)), axis=1)
    allocation = rng.integers(0, n, size=(count, r * m), dtype=np.int64)
    inc = np.take_along_axis(allocation, parts, axis=1)
    return inc.reshape(count, m, r)


def project_and_check(cfg: Configuration) -> SimpleHypergraph | NotSimple:
    inc = np.sort(cfg.incidence(), axis=1)
    first_bad = cfg.m
    reason = ""
    if cfg.r > 1 and cfg.m:
        rep = np.flatnonzero(np.any(np.diff(inc, axis=1) == 0, axis=1))
        if len(rep):
            first_bad, reason = int(rep[0]), "repeated-vertex"
    if cfg.m:
        firsts = _first_occurrences(inc)
        if len(firsts) < cfg.m:
            mask = np.ones(cfg.m, dtype=bool)
            mask[firsts] = False
            dup = int(np.flatnonzero(mask)[0])
            if dup < first_bad:
                first_bad, reason = dup, "duplicate-edge"
    if reason:
        return NotSimple(reason, first_bad)
    return SimpleHypergraph(cfg.n, cfg.r, inc)


def sample_simple_via_ap(n: int, m: int, r: int, seed=None, max_attempts: int = 10_000):
    """Rejection-resample AP configurations until the projection is simple.

    Returns the hypergraph and the number of attempts used.
    """
    rng = make_rng(seed)
    for attempt in range(1, max_attempts + 1):
        g = project_and_check(sample_ap(n, m, r, rng))
        if isinstance(g, SimpleHypergraph):
            return g, attempt
    raise RejectionBudgetError(f"no simple projection in {max_attempts} attempts")


def _truncated_poisson_table(k: int, lam: float):
    hi = k + int(math.ceil(lam + 12 * math.sqrt(lam) + 40))
    support = np.arange(k, hi + 1)
    return support, truncated_poisson_pmf(k, lam, support)


def truncated_poisson(k: int, lam: float, size: int, rng) -> np.ndarray:
    """i.i.d. draws of Po(lam) conditioned on >= k."""
    rng = make_rng(rng)
    if lam > 30 and lam >= k:
        out = np.empty(0, dtype=np.int64)
        while len(out) < size:
            x = rng.poisson(lam, size=int((size - len(out)) * 1.2) + 8)
            out = np.concatenate([out, x[x >= k]])
        return out[:size]
    support, pmf = _truncated_poisson_table(k, lam)
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return support[np.minimum(idx, len(support) - 1)]


@lru_cache(maxsize=256)
def _histogram_law(k: int, mean: float):
    """Truncated-Poisson value probabilities on k..top plus one overflow class."""
    lam = float(lambda_of(k, mean))
    support, pmf = _truncated_poisson_table(k, lam)
    overflow = float(poisson_tail(int(support[-1]) + 1, lam) / poisson_tail(k, lam))
    probs = np.clip(np.append(pmf, overflow), 0, None)
    probs /= probs.sum()
    support.setflags(write=False)
    probs.setflags(write=False)
    return lam, support, probs


def sample_truncated_multinomial(N: int, D: int, k: int, seed=None,
                                 max_attempts: int = 1_000_000) -> HeavyDegreeSeq:
    """Exact draw from Multi(N, D, k).

    i.i.d. k-truncated Poissons with mean D/N, conditioned on summing to D.
    The conditioning is done on the histogram: bins are exchangeable, so the
    vector of value counts is multinomial and a whole attempt costs
    O(support) instead of O(N).
    """
    if N < 1:
        raise InfeasibleError("N must be >= 1")
    if D < k * N:
        raise InfeasibleError(f"D={D} < kN={k * N}")
    rng = make_rng(seed)
    if D == k * N:
        return HeavyDegreeSeq(N, D, k, np.full(N, k, dtype=np.int64))
    lam, support, probs = _histogram_law(k, D / N)
    top = int(support[-1])
    values = np.append(support, 0)
    for attempt in range(1, max_attempts + 1):
        counts = rng.multinomial(N, probs)
        total = int(counts[:-1] @ support)
        extra = np.empty(0, dtype=np.int64)
        if counts[-1]:
            extra = truncated_poisson(top + 1, lam, int(counts[-1]), rng)
            total += int(extra.sum())
        if total != D:
            continue
        degrees = np.concatenate([np.repeat(values[:-1], counts[:-1]), extra])
        return HeavyDegreeSeq(N, D, k, rng.permutation(degrees).astype(np.int64), attempt)
    raise RejectionBudgetError(f"sum condition not met in {max_attempts} attempts")


def write_hypergraph(path, g) -> None:
    path = Path(path)
    if isinstance(g, Configuration):
        lines = [f"{g.n} {g.m} {g.r}",
                 " ".join(map(str, g.allocation.tolist())),
                 " ".join(map(str, g.parts.tolist()))]
    else:
        lines = [f"{g.n} {g.m} {g.r}"] + [" ".join(map(str, row)) for row in g.edges.tolist()]
    path.write_text("\n".join(lines) + "\n")


def read_hypergraph(path) -> SimpleHypergraph | Configuration:
    """Read either file layout; a configuration is recognised by its single
    allocation line of r*m ids followed by a parts line."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 3:
        raise ValueError(f"{path}: header must be 'n m r'")
    n, m, r = map(int, lines[0])
    body = lines[1:]
    # an m-edge file has m lines of r ids; a configuration has two lines of r*m ids
    if m > 0 and len(body) == 2 and len(body[0]) == len(body[1]) == r * m:
        allocation = np.array(body[0], dtype=np.int64)
        parts = np.array(body[1], dtype=np.int64)
        return Configuration(n, r, m, parts, allocation)
    if len(body) != m:
        raise ValueError(f"{path}: expected {m} edge lines, found {len(body)}")
    edges = np.array(body, dtype=np.int64).reshape(m, r)
    g = SimpleHypergraph(n, r, np.sort(edges, axis=1))
    g.validate()
    return g
