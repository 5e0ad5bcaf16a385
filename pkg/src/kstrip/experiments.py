"""Seeded Monte Carlo harness: trials near the core threshold, scaling fits of
the round count, and per-round diagnostics."""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .depth import DepthIndex, build_R
from .hypergraph import sample_simple, sample_simple_via_ap
from .numeric import psi
from .rng import child_sequence, make_rng
from .stripping import check_round_stats, round_stats_from, slow_strip
from .thresholds import CriticalPoint, ParamsRK, solve_critical

C_MODES = ("critical_plus_ndelta", "critical_minus_ndelta", "absolute")
TRIAL_COLUMNS = ["n", "m", "seed", "trial", "rounds", "tau", "core_v", "core_e",
                 "max_lower_depth", "wall_ms"]
BOOTSTRAP_RESAMPLES = 200
# spawn-key tag for the bootstrap stream, kept apart from trial streams keyed by (n, trial)
_BOOTSTRAP_KEY = 0xB00757


class ConfigError(ValueError):
    pass


class InsufficientGridError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    params: ParamsRK
    n_grid: tuple
    trials_per_n: int
    seed: int
    c_mode: str = "critical_plus_ndelta"
    delta: float | None = None
    c: float | None = None           # only for c_mode == "absolute"
    output_dir: str | None = None
    trace_stride: int = 1
    sampler: str = "simple"          # or "ap_rejection"
    diagnostics_trials: int = 1      # trials per n that also emit per-round diagnostics
    diagnostics_B: int = 20
    fit_depth: bool = False
    record_max_R: bool = False
    record_timing: bool = False      # wall_ms stays 0 unless set, keeping outputs reproducible
    threads: int | None = None
    assert_thresholds: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.n_grid:
            raise ConfigError("n_grid must be nonempty")
        if list(self.n_grid) != sorted(self.n_grid) or min(self.n_grid) < 1:
            raise ConfigError("n_grid must be sorted positive integers")
        if self.trials_per_n < 1:
            raise ConfigError("trials_per_n must be >= 1")
        if self.c_mode not in C_MODES:
            raise ConfigError(f"c_mode must be one of {C_MODES}")
        if self.c_mode == "absolute":
            if self.c is None or self.c <= 0:
                raise ConfigError("absolute c_mode needs a positive c")
        elif self.delta is None or not 0 < self.delta < 0.5:
            raise ConfigError("delta must lie in (0, 0.5) for relative c modes")
        if self.sampler not in ("simple", "ap_rejection"):
            raise ConfigError("sampler must be 'simple' or 'ap_rejection'")
        if self.trace_stride < 1:
            raise ConfigError("trace_stride must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        p = d.pop("params", None)
        if p is None:
            p = {"r": d.pop("r"), "k": d.pop("k")}
        mode = d.pop("c_mode", "critical_plus_ndelta")
        if isinstance(mode, dict):
            # {"absolute": 1.2}
            (mode, c), = mode.items()
            d["c"] = c
        outputs = d.pop("outputs", None)
        if isinstance(outputs, dict):
            d["output_dir"] = outputs.get("dir")
        elif isinstance(outputs, str):
            d["output_dir"] = outputs
        if "assert" in d:
            d["assert_thresholds"] = d.pop("assert")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d["n_grid"] = tuple(int(x) for x in d["n_grid"])
        return cls(params=ParamsRK(int(p["r"]), int(p["k"])), c_mode=mode, **d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def density(self, n: int, crit: CriticalPoint) -> float:
        if self.c_mode == "absolute":
            return float(self.c)
        shift = n ** (-self.delta)
        return crit.c_rk + shift if self.c_mode == "critical_plus_ndelta" else crit.c_rk - shift

    def target_exponent(self) -> float:
        return 0.0 if self.c_mode == "absolute" else self.delta / 2


@dataclass(frozen=True)
class TrialRecord:
    n: int
    m: int
    seed: int
    trial: int
    rounds: int
    tau: int
    core_v: int
    core_e: int
    max_lower_depth: int
    wall_ms: int = 0
    max_R_size: int | None = None
    strata_sizes: tuple | None = None

    def csv_row(self) -> list:
        return [getattr(self, c) for c in TRIAL_COLUMNS]


@dataclass(frozen=True)
class ScalingFit:
    quantity: str
    exponent_estimate: float
    intercept: float
    r_squared: float
    n_min: int
    n_max: int
    points: int
    target_exponent: float
    ci_low: float
    ci_high: float

    def to_dict(self) -> dict:
        return asdict(self)


def _critical(cfg: ExperimentConfig) -> CriticalPoint:
    return solve_critical(cfg.params)


def _sample(cfg: ExperimentConfig, n: int, m: int, rng):
    if cfg.sampler == "ap_rejection":
        g, _ = sample_simple_via_ap(n, m, cfg.params.r, rng)
        return g
    return sample_simple(n, m, cfg.params.r, rng)


def _run_cell(cfg: ExperimentConfig, crit: CriticalPoint, n: int, trial: int,
              diagnostics: bool = False):
    t0 = time.perf_counter()
    rng = make_rng(child_sequence(cfg.seed, n, trial))
    c = cfg.density(n, crit)
    m = math.floor(c * n + 0.5)
    g = _sample(cfg, n, m, rng)
    trace = slow_strip(g, cfg.params.k, rng)
    sizes = tuple(int(x) for x in np.bincount(trace.vround, minlength=trace.rounds + 1)[1:])
    max_R = None
    if cfg.record_max_R and trace.rounds:
        index = DepthIndex(g, cfg.params.k)
        last = np.flatnonzero(trace.vround == trace.rounds)
        max_R = max(build_R(index, int(v)).upper_bound for v in last)
    rows = None
    if diagnostics:
        stats = round_stats_from(g, trace)
        report = lsi_diagnostics(trace, stats, crit, cfg.delta, n, B=cfg.diagnostics_B)
        rows = [dict(row, n=n, trial=trial) for row in report.rows]
    wall = round(1000 * (time.perf_counter() - t0)) if cfg.record_timing else 0
    record = TrialRecord(n=n, m=m, seed=cfg.seed, trial=trial, rounds=trace.rounds,
                         tau=trace.tau, core_v=int(len(trace.core_vertices)),
                         core_e=int(len(trace.core_edges)), max_lower_depth=trace.rounds,
                         wall_ms=wall, max_R_size=max_R, strata_sizes=sizes)
    return record, rows


def run_trial(cfg: ExperimentConfig, n: int, trial_index: int,
              crit: CriticalPoint | None = None) -> TrialRecord:
    """One sampled graph and one queue-process run; deterministic in (seed, n, trial_index)."""
    return _run_cell(cfg, crit or _critical(cfg), n, trial_index)[0]


@dataclass
class DiagnosticsReport:
    rows: list
    qualifying_rounds: int
    contraction_in_band: float      # share of qualifying rounds with normalized contraction in [0.1, 10]
    identities_hold: bool
    br_at_B: float | None


def lsi_diagnostics(trace, stats, crit: CriticalPoint, delta: float | None, n: int,
                    B: int = 20) -> DiagnosticsReport:
    """Per-round contraction, tail and degree diagnostics for one run."""
    r, k = crit.params.r, crit.params.k
    sizes = [int(len(st.vertices)) for st in stats]
    tails = np.cumsum(sizes[::-1])[::-1] if sizes else np.array([])
    log_n = math.log(n)
    qual_threshold = (n ** delta) * log_n ** 2 if delta else math.inf
    shift = n ** (-delta / 2) if delta else 0.0
    ident = check_round_stats(stats, r)
    identities_hold = all(ident.values())
    rows, in_band, qualifying = [], 0, 0
    br_at_B = None
    for idx, st in enumerate(stats):
        i = st.round
        size = sizes[idx]
        nxt = sizes[idx + 1] if idx + 1 < len(sizes) else 0
        t_i = int(trace.round_starts[idx])
        N_t, D_t = int(trace.N[t_i]), int(trace.D[t_i])
        zeta = D_t / N_t if N_t else None
        if zeta is None:
            br = None
        elif zeta <= k * (1 + 1e-12):
            br = -1.0 + (r - 1) * (k - 1)   # every heavy vertex has degree k: psi = 1
        else:
            br = -1.0 + (r - 1) * (k - 1) * psi(k, zeta)
        if i == B:
            br_at_B = br
        qualifies = size >= qual_threshold
        row = {
            "i": i, "t_i": t_i, "size_Si": size, "size_next": nxt,
            "ratio": nxt / size if size else None,
            "qualifies": bool(qualifies),
            "tail_ratio": float(tails[idx]) / (size * n ** (delta / 2)) if size and delta else None,
            "sum_dplus": int(st.d_plus.sum()), "sum_dminus": int(st.d_minus.sum()),
            "max_dminus": int(st.d_minus.max()) if len(st.d_minus) else 0,
            "log_n": log_n, "zeta_t": zeta, "br_t": br,
            "br_negative": None if br is None else bool(br < 0),
        }
        if size:
            norm = max(shift, math.sqrt(size / n))
            row["normalized_contraction"] = (1 - nxt / size) / norm if norm > 0 else None
        else:
            row["normalized_contraction"] = None
        pair = sum(a * b * c for (a, b), c in st.M.items() if a >= 2)
        row["pair_copies"] = pair
        row["pair_ratio"] = pair / (size * size / n + log_n ** 2)
        row["identities_hold"] = identities_hold
        if qualifies and row["normalized_contraction"] is not None:
            qualifying += 1
            in_band += 0.1 <= row["normalized_contraction"] <= 10
        rows.append(row)
    share = in_band / qualifying if qualifying else math.nan
    return DiagnosticsReport(rows, qualifying, share, identities_hold, br_at_B)


def _ols(x: np.ndarray, y: np.ndarray):
    res = sps.linregress(x, y)
    return float(res.slope), float(res.intercept), float(res.rvalue ** 2)


def fit_scaling(records: list[TrialRecord], quantity: str = "rounds", target: float = 0.0,
                seed: int = 0, resamples: int = BOOTSTRAP_RESAMPLES,
                per_log_n: bool = True) -> ScalingFit:
    """Regress log(mean quantity / log n) on log n; bootstrap trials for a 95% interval.

    With ``per_log_n=False`` the response is log(mean quantity), a plain power law.
    """
    by_n: dict[int, np.ndarray] = {}
    for rec in records:
        by_n.setdefault(rec.n, []).append(getattr(rec, quantity))
    ns = np.array(sorted(by_n), dtype=float)
    if len(ns) < 4:
        raise InsufficientGridError(f"need at least 4 grid points, got {len(ns)}")
    values = [np.asarray(by_n[int(n)], dtype=float) for n in ns]
    x = np.log(ns)

    def response(samples):
        means = np.maximum(np.array([s.mean() for s in samples]), 1e-300)
        return np.log(means / np.log(ns)) if per_log_n else np.log(means)

    slope, intercept, r2 = _ols(x, response(values))
    rng = make_rng(child_sequence(seed, _BOOTSTRAP_KEY))
    slopes = []
    for _ in range(resamples):
        boot = [v[rng.integers(0, len(v), size=len(v))] for v in values]
        slopes.append(_ols(x, response(boot))[0])
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    label = quantity if per_log_n else f"{quantity}_power"
    return ScalingFit(label, slope, intercept, r2, int(ns[0]), int(ns[-1]), len(ns),
                      target, float(lo), float(hi))


def _pool_size(cfg: ExperimentConfig) -> int:
    cap = os.environ.get("KCORE_THREADS")
    size = cfg.threads or os.cpu_count() or 1
    if cap:
        size = min(size, max(1, int(cap)))
    return max(1, size)


def run_cells(cfg: ExperimentConfig, crit: CriticalPoint | None = None):
    """All (n, trial) cells; results come back in grid order whatever the completion order."""
    crit = crit or _critical(cfg)
    cells = [(n, t) for n in cfg.n_grid for t in range(cfg.trials_per_n)]
    work = lambda cell: _run_cell(cfg, crit, cell[0], cell[1],
                                  diagnostics=cell[1] < cfg.diagnostics_trials)
    with ThreadPoolExecutor(max_workers=_pool_size(cfg)) as pool:
        results = list(pool.map(work, cells))
    records = [rec for rec, _ in results]
    diag = [row for _, rows in results if rows for row in rows]
    return records, diag


def _check_grid(cfg: ExperimentConfig):
    if len(cfg.n_grid) < 4:
        raise InsufficientGridError("a scaling fit needs at least 4 grid points")
    if math.log10(cfg.n_grid[-1] / cfg.n_grid[0]) < 1.5 - 1e-9:
        raise InsufficientGridError("n_grid must span at least 1.5 decades")


def run_scaling(cfg: ExperimentConfig):
    """Returns (records, fits, diagnostics rows); fits maps quantity -> ScalingFit."""
    _check_grid(cfg)
    records, diag = run_cells(cfg)
    target = cfg.target_exponent()
    fits = {"rounds": fit_scaling(records, "rounds", target, cfg.seed),
            "rounds_power": fit_scaling(records, "rounds", target, cfg.seed, per_log_n=False)}
    if cfg.fit_depth:
        fits["max_lower_depth"] = fit_scaling(records, "max_lower_depth", target, cfg.seed)
    return records, fits, diag


def default_thresholds(cfg: ExperimentConfig) -> dict:
    if cfg.c_mode == "critical_plus_ndelta":
        t = cfg.delta / 2
        return {"exponent_min": t - 0.1, "exponent_max": t + 0.1, "ci_covers": t}
    if cfg.c_mode == "critical_minus_ndelta":
        # below threshold the round count is a plain power of n, with no log factor
        return {"fit": "rounds_power", "exponent_min": 0.10}
    return {"exponent_max": 0.05}


def evaluate_fit(fits: dict, thresholds: dict) -> dict[str, bool]:
    fit = fits[thresholds.get("fit", "rounds")]
    out = {}
    if "exponent_min" in thresholds:
        out["exponent_min"] = fit.exponent_estimate >= thresholds["exponent_min"]
    if "exponent_max" in thresholds:
        out["exponent_max"] = fit.exponent_estimate <= thresholds["exponent_max"]
    if "ci_covers" in thresholds:
        out["ci_covers"] = fit.ci_low <= thresholds["ci_covers"] <= fit.ci_high
    return out


def write_outputs(out_dir, records, fits, diag) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "trials.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for rec in records:
            w.writerow(rec.csv_row())
    payload = fits["rounds"].to_dict()
    payload["additional"] = {q: f.to_dict() for q, f in fits.items() if q != "rounds"}
    (out / "fit.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    with (out / "diagnostics.jsonl").open("w") as fh:
        for row in diag:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def run_experiment(cfg: ExperimentConfig, out_dir=None):
    """Scaling run plus file output; returns (records, fits, threshold checks)."""
    records, fits, diag = run_scaling(cfg)
    target_dir = out_dir or cfg.output_dir
    if target_dir:
        write_outputs(target_dir, records, fits, diag)
    checks = evaluate_fit(fits, cfg.assert_thresholds or default_thresholds(cfg))
    return records, fits, checks
