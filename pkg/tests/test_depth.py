import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kstrip.depth import (
    BudgetExceeded,
    CoreVertexError,
    DepthIndex,
    build_R,
    exact_depth,
    exact_depths,
    extract_and_validate_sequence,
    replay_sequence,
)
from kstrip.hypergraph import sample_simple
from kstrip.stripping import parallel_strip
from conftest import critical_density, graph, small_instance


def test_path_certificate(path3):
    index = DepthIndex(path3, 2)
    cert = build_R(index, 1)
    assert cert.level == 2 and cert.lower_bound == 2
    assert cert.layers[2].tolist() == [1] and cert.layers[1].tolist() == [0, 2]
    assert cert.upper_bound == 3
    check = extract_and_validate_sequence(index, cert)
    assert check.ok and check.sequence[-1] == 1
    assert exact_depth(path3, 2, 1) == 2


def test_first_stratum_vertex():
    # vertex 3 hangs off a triangle; vertex 5 is isolated
    g = graph(6, [[0, 1], [1, 2], [0, 2], [2, 3], [3, 4]])
    index = DepthIndex(g, 2)
    cert = build_R(index, 4)
    assert cert.level == 1 and cert.union_R.tolist() == [4]
    assert extract_and_validate_sequence(index, cert).sequence == [4]
    assert exact_depth(g, 2, 4) == 1
    assert exact_depth(g, 2, 5) == 1
    with pytest.raises(CoreVertexError):
        build_R(index, 0)
    with pytest.raises(CoreVertexError):
        exact_depth(g, 2, 0)


def test_first_stratum_component():
    # 3-uniform edge {0,1,2} with k=2: all three in S_1 and joined by one 3-edge
    g = graph(3, [[0, 1, 2]])
    index = DepthIndex(g, 2)
    cert = build_R(index, 0)
    assert cert.union_R.tolist() == [0, 1, 2]
    assert extract_and_validate_sequence(index, cert).sequence == [0]


def test_replay_rejects_invalid_order(path3):
    bad = replay_sequence(path3, 2, [1, 0])
    assert not bad.ok and bad.violation_index == 0
    assert not replay_sequence(path3, 2, [0, 0]).ok
    assert replay_sequence(path3, 2, [2, 1]).ok


def _brute_force_depth(g, k, v):
    """Iterative deepening over ordered removal sequences, no memo."""
    rows = [list(map(int, r)) for r in g.incidence()]

    def light(removed):
        deg = [0] * g.n
        for row in rows:
            if not any(u in removed for u in row):
                for u in row:
                    deg[u] += 1
        return [u for u in range(g.n) if u not in removed and deg[u] < k]

    def reachable(removed, budget):
        cand = light(removed)
        if v in cand:
            return True
        if budget == 0:
            return False
        return any(reachable(removed | {u}, budget - 1) for u in cand)

    for length in range(1, g.n + 1):
        if reachable(frozenset(), length - 1):
            return length
    return None


@given(seed=st.integers(0, 10**6))
@settings(max_examples=80, deadline=None)
def test_exact_depth_matches_brute_force(seed):
    g, k = small_instance(seed, n_min=3, n_max=7)
    depths = exact_depths(g, k)
    for v, d in depths.items():
        assert d == _brute_force_depth(g, k, v)


@given(seed=st.integers(0, 10**6))
@settings(max_examples=150, deadline=None)
def test_sandwich_and_layer_structure(seed):
    g, k = small_instance(seed, n_max=10)
    index = DepthIndex(g, k)
    exact = exact_depths(g, k)
    vr = index.vround
    for v, d in exact.items():
        cert = build_R(index, v)
        assert cert.lower_bound <= d <= cert.upper_bound
        union = set(cert.union_R.tolist())
        for j, layer in cert.layers.items():
            assert set(cert.seeds[j].tolist()) <= set(layer.tolist())
            assert np.all(vr[layer] == j)
        assert all(vr[u] > 0 for u in union)
        assert set(cert.sequence) <= union and cert.sequence[-1] == v
        assert extract_and_validate_sequence(index, cert).ok


def test_sequences_replay_on_many_instances():
    violations = 0
    for seed in range(1000):
        g, k = small_instance(seed, n_min=5, n_max=30)
        index = DepthIndex(g, k)
        for v in np.flatnonzero(index.vround > 0).tolist():
            violations += not extract_and_validate_sequence(index, build_R(index, v)).ok
    assert violations == 0


def test_max_lower_bound_is_round_count_and_deterministic():
    g, k = small_instance(12345, n_min=25, n_max=30)
    index = DepthIndex(g, k)
    non_core = np.flatnonzero(index.vround > 0).tolist()
    certs = [build_R(index, v) for v in non_core]
    assert max(c.lower_bound for c in certs) == parallel_strip(g, k).rounds
    again = DepthIndex(g, k)
    for c in certs[:5]:
        d = build_R(again, c.v)
        assert np.array_equal(d.union_R, c.union_R) and d.sequence == c.sequence


def test_certificates_span_all_rounds_near_threshold():
    n = 10_000
    c = critical_density(3, 2) + n ** -0.4
    g = sample_simple(n, math.floor(c * n + 0.5), 3, seed=9)
    index = DepthIndex(g, 2)
    rounds = index.strip.rounds
    sizes = [build_R(index, v).upper_bound for v in np.flatnonzero(index.vround > 0).tolist()]
    assert max(sizes) >= rounds


def test_budget_cap():
    g = graph(8, [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 6], [6, 7]])
    with pytest.raises(BudgetExceeded):
        exact_depth(g, 2, 4, budget=3)
    assert exact_depth(g, 2, 4) == 4
