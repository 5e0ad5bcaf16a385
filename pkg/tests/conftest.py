import math

import numpy as np
import pytest

from kstrip.hypergraph import SimpleHypergraph, sample_simple
from kstrip.thresholds import ParamsRK, solve_critical

_CRIT_CACHE = {}


def critical_density(r, k):
    if (r, k) == (2, 2):
        return 1.0
    if (r, k) not in _CRIT_CACHE:
        _CRIT_CACHE[(r, k)] = solve_critical(ParamsRK(r, k)).c_rk
    return _CRIT_CACHE[(r, k)]


def small_instance(seed, n_min=3, n_max=12, rs=(2, 3), ks=(2, 3)):
    """Random tiny (g, k) with density spread around the core threshold."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    r = int(rng.choice([x for x in rs if x <= n]))
    k = int(rng.choice(ks))
    m = int(round(critical_density(r, k) * n * rng.uniform(0.6, 1.6)))
    m = min(max(m, 1), math.comb(n, r))
    return sample_simple(n, m, r, seed), k


def graph(n, edges):
    e = np.sort(np.array(edges, dtype=np.int64).reshape(len(edges), -1), axis=1)
    return SimpleHypergraph(n, e.shape[1], e)


@pytest.fixture
def path3():
    # u1 - v - u2 with v = 1
    return graph(3, [[0, 1], [1, 2]])


@pytest.fixture
def triangle():
    return graph(3, [[0, 1], [1, 2], [0, 2]])


# acceptance criteria append (label, passed, detail) here; printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in sorted(ACCEPTANCE, key=lambda x: int(x[0].split()[1])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
