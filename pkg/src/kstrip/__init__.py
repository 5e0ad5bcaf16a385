"""Simulation and numerics for k-core stripping of random r-uniform hypergraphs."""
from .hypergraph import (
    Configuration,
    SimpleHypergraph,
    sample_ap,
    sample_simple,
    sample_truncated_multinomial,
)
from .numeric import g_k, h_rk, lambda_of, poisson_tail, psi, rho_bar
from .stripping import naive_core, parallel_strip, round_stats, slow_strip
from .thresholds import ParamsRK, solve_critical, solve_supercritical, verify_identities

__all__ = [
    "Configuration", "SimpleHypergraph", "sample_ap", "sample_simple",
    "sample_truncated_multinomial", "g_k", "h_rk", "lambda_of", "poisson_tail", "psi",
    "rho_bar", "naive_core", "parallel_strip", "round_stats", "slow_strip", "ParamsRK",
    "solve_critical", "solve_supercritical", "verify_identities",
]
