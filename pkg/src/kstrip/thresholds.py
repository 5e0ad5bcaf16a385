"""Critical and supercritical solutions of the k-core emergence system."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .numeric import (
    DEFAULT_TOL,
    DomainError,
    RealTol,
    critical_ratio,
    g_k,
    h_first_derivative,
    h_rk,
    h_second_derivative,
    poisson_tail,
    psi,
    rho_bar,
)

INV_PHI = (math.sqrt(5) - 1) / 2
IDENTITY_THRESHOLD = 1e-8


class BracketError(RuntimeError):
    """No interior minimum of h_rk was found."""


@dataclass(frozen=True)
class ParamsRK:
    r: int
    k: int

    def __post_init__(self):
        if self.r < 2 or self.k < 2:
            raise DomainError(f"need r, k >= 2, got r={self.r}, k={self.k}")
        if (self.r, self.k) == (2, 2):
            raise DomainError("(r, k) = (2, 2) has no interior threshold")


@dataclass(frozen=True)
class CriticalPoint:
    params: ParamsRK
    mu_rk: float
    c_rk: float
    alpha: float
    beta: float
    zeta: float
    p_star: float
    rho_bar: float
    k1: float
    # finite-difference estimates of d alpha / dc and d beta / dc scaled like k1
    k2_approx: float
    k3_approx: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = {"r": self.params.r, "k": self.params.k}
        return d


@dataclass(frozen=True)
class SupercriticalPoint:
    params: ParamsRK
    c: float
    mu_c: float
    alpha_c: float
    beta_c: float

    def predicted_core_vertices(self, n: int) -> float:
        return self.alpha_c * n

    def predicted_core_edges(self, n: int) -> float:
        return self.beta_c * n

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = {"r": self.params.r, "k": self.params.k}
        return d


def _golden_section(f, a, b, tol):
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * (abs(c) + abs(d)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b), a, b


def _stationarity(r, k, mu):
    # h'(mu) = 0  <=>  e^-mu mu^(k-1) / ((k-1)! f_{k-1}(mu)) = 1/((k-1)(r-1)); lhs is decreasing
    return critical_ratio(k, mu) - 1.0 / ((k - 1) * (r - 1))


def _polish_minimizer(r, k, lo, hi):
    """Bisection on the analytic stationarity condition inside [lo, hi]."""
    s_lo, s_hi = _stationarity(r, k, lo), _stationarity(r, k, hi)
    if not (s_lo > 0 > s_hi):
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _stationarity(r, k, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def locate_minimum(r: int, k: int, tol: RealTol = DEFAULT_TOL) -> float:
    """Interior minimiser of h_rk by golden-section search, then refined to machine precision."""
    h = lambda mu: h_rk(r, k, mu)
    a, b = 1e-6, 10.0 * r * k
    for _ in range(60):
        if h(b) > h(0.5 * (a + b)):
            break
        b *= 2
    mu0, lo, hi = _golden_section(h, a, b, 1e-10)
    if mu0 - a < 1e-4 or b - mu0 < 1e-4 or not (h(a) > h(mu0) < h(b)):
        raise BracketError(f"no interior minimum of h for r={r}, k={k}")
    # golden section only pins mu to ~sqrt(eps); widen its bracket before polishing
    width = max(hi - lo, 1e-6 * mu0)
    refined = _polish_minimizer(r, k, max(a, mu0 - 100 * width), mu0 + 100 * width)
    return mu0 if refined is None else refined


def alpha_of(k: int, mu) -> float:
    return poisson_tail(k, mu)


def beta_of(r: int, k: int, mu) -> float:
    return mu * poisson_tail(k - 1, mu) / r


def solve_critical(p: ParamsRK, tol: RealTol = DEFAULT_TOL) -> CriticalPoint:
    r, k = p.r, p.k
    mu = locate_minimum(r, k, tol)
    alpha = alpha_of(k, mu)
    beta = beta_of(r, k, mu)
    zeta = g_k(k, mu)
    # c(mu) = h(mu)/r is the density expressed through mu; K1 = sqrt(2 / c''(mu_rk))
    h2 = h_second_derivative(r, k, mu, step=min(1e-3, mu / 10), richardson=True)
    k1 = math.sqrt(2.0 * r / h2)
    step = min(1e-4, mu / 10)
    da = (alpha_of(k, mu + step) - alpha_of(k, mu - step)) / (2 * step)
    db = (beta_of(r, k, mu + step) - beta_of(r, k, mu - step)) / (2 * step)
    return CriticalPoint(
        params=p,
        mu_rk=mu,
        c_rk=h_rk(r, k, mu) / r,
        alpha=alpha,
        beta=beta,
        zeta=zeta,
        p_star=psi(k, zeta, tol),
        rho_bar=rho_bar(k, mu),
        k1=k1,
        k2_approx=da * k1,
        k3_approx=db * k1,
    )


def solve_supercritical(p: ParamsRK, c: float, tol: RealTol = DEFAULT_TOL,
                        crit: CriticalPoint | None = None) -> SupercriticalPoint:
    """Larger root mu(c) of h(mu) = r c and the predicted core fractions."""
    crit = crit or solve_critical(p, tol)
    r, k = p.r, p.k
    if c < crit.c_rk - tol.abs_tol:
        raise DomainError(f"c = {c} is below the threshold c_rk = {crit.c_rk}")
    if c <= crit.c_rk + tol.abs_tol:
        mu = crit.mu_rk
    else:
        target = r * c
        lo, hi = crit.mu_rk, 2 * crit.mu_rk + 1
        while h_rk(r, k, hi) <= target:
            hi *= 2
        for _ in range(400):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if h_rk(r, k, mid) < target:
                lo = mid
            else:
                hi = mid
        mu = 0.5 * (lo + hi)
    return SupercriticalPoint(params=p, c=c, mu_c=mu, alpha_c=alpha_of(k, mu),
                              beta_c=beta_of(r, k, mu))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float


def _edge_tail_ratio(k, x):
    # e^-x x^(k-1) / (f_{k-1}(x) (k-2)!)
    return float(np.exp(-x + (k - 1) * math.log(x) - math.lgamma(k - 1)) / poisson_tail(k - 1, x))


def x_star_margin(r: int, k: int) -> float:
    """1/(r-1) minus the edge tail ratio at x* = r(k-1) - r/(r-1); positive when it holds."""
    x_star = r * (k - 1) - r / (r - 1)
    return 1.0 / (r - 1) - _edge_tail_ratio(k, x_star)


def verify_identities(p: ParamsRK, tol: RealTol = DEFAULT_TOL,
                      crit: CriticalPoint | None = None) -> dict[str, Check]:
    """Evaluate the closed-form identities that must hold at the critical point.

    Residuals are reported for every check; inequality checks report their
    margin (positive means satisfied).
    """
    crit = crit or solve_critical(p, tol)
    r, k = p.r, p.k
    target = 1.0 / ((r - 1) * (k - 1))
    mu = crit.mu_rk
    out: dict[str, Check] = {}

    def eq(name, value, expected):
        res = abs(value - expected)
        out[name] = Check(name, bool(res <= IDENTITY_THRESHOLD), float(res))

    def ineq(name, margin):
        out[name] = Check(name, bool(margin > 0), float(margin))

    eq("degree_k_share", k * crit.rho_bar * crit.alpha / (r * crit.beta), target)
    eq("critical_ratio", critical_ratio(k, mu), target)
    eq("psi_at_zeta", crit.p_star, target)
    eq("zeta_is_g_k", crit.zeta, r * crit.beta / crit.alpha)
    eq("c_rk_is_h_over_r", crit.c_rk, h_rk(r, k, mu) / r)
    hp = h_first_derivative(r, k, mu)
    out["h_prime_zero"] = Check("h_prime_zero", bool(abs(hp) <= 1e-6), abs(hp))
    ineq("zeta_above_k", crit.zeta - k)
    ineq("zeta_below_r_km1", r * (k - 1) - crit.zeta)
    ineq("tail_ratio_at_x_star", x_star_margin(r, k))
    worst = math.inf
    for kk in range(2, 9):
        for mu_int in range(kk + 2, kk + 21):
            worst = min(worst, poisson_tail(kk, float(mu_int)) - 0.5)
    ineq("tail_above_half", worst)
    ineq("h_convex_at_min", crit.k1 > 0 and 1.0 or -1.0)
    return out
