"""Poisson-tail special functions used by the threshold and diagnostic code.

All public functions accept either a Python scalar or a numpy array for the
continuous argument and return the same kind.  Everything here is a pure
function; there is no module state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Beyond this the exp(-mu) prefactor underflows; switch to log-space terms.
_LOG_SPACE_MU = 700.0
# Up to this the rescaled series sum_j x^j/(s+j)! is finite and cheap.
_SERIES_MAX = 50.0
_MAX_TERMS = 2000


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class ConvergenceError(RuntimeError):
    """Iterative solver failed to reach the requested tolerance."""


@dataclass(frozen=True)
class RealTol:
    abs_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_TOL = RealTol()


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


def _kahan(terms_iter, shape):
    total = np.zeros(shape)
    comp = np.zeros(shape)
    for term in terms_iter:
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total


def _log_pmf(i, mu):
    with np.errstate(divide="ignore"):
        return -mu + i * np.log(mu) - math.lgamma(i + 1)


def _lower_sum(t, mu):
    """P(Po(mu) < t) for mu >= t, compensated."""
    def terms():
        if np.all(mu <= _LOG_SPACE_MU):
            p = np.exp(-mu)
            yield p
            for i in range(1, t):
                p = p * mu / i
                yield p
        else:
            for i in range(t):
                yield np.exp(_log_pmf(i, mu))
    return _kahan(terms(), mu.shape)


def _upper_sum(t, mu):
    """P(Po(mu) >= t) summed directly; only used for mu < t where it converges fast."""
    term = np.where(mu > 0, np.exp(_log_pmf(t, np.where(mu > 0, mu, 1.0))), 0.0)
    total = np.zeros(mu.shape)
    comp = np.zeros(mu.shape)
    i = t
    for _ in range(_MAX_TERMS):
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
        i += 1
        term = term * mu / i
        if np.all(term <= 1e-18 * total):
            break
    return total


def poisson_tail(t: int, mu):
    """f_t(mu) = P(Po(mu) >= t)."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    arr, scalar = _as_array(mu)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("mu must be finite and >= 0")
    if t == 0:
        return _ret(np.ones_like(arr), scalar)
    if scalar:
        x = float(arr.reshape(-1)[0])
        val = _upper_sum_scalar(t, x) if x < t else 1.0 - _lower_sum_scalar(t, x)
        return min(max(val, 0.0), 1.0)
    out = np.empty_like(arr)
    small = arr < t
    if np.any(small):
        out[small] = _upper_sum(t, arr[small])
    if np.any(~small):
        big = arr[~small]
        out[~small] = 1.0 - _lower_sum(t, big)
    return _ret(np.clip(out, 0.0, 1.0), scalar)


def _lower_sum_scalar(t: int, mu: float) -> float:
    if mu <= _LOG_SPACE_MU:
        p = math.exp(-mu)
        terms = [p]
        for i in range(1, t):
            p = p * mu / i
            terms.append(p)
    else:
        log_mu = math.log(mu)
        terms = [math.exp(-mu + i * log_mu - math.lgamma(i + 1)) for i in range(t)]
    return math.fsum(terms)


def _upper_sum_scalar(t: int, mu: float) -> float:
    if mu == 0:
        return 0.0
    term = math.exp(-mu + t * math.log(mu) - math.lgamma(t + 1))
    terms = []
    i = t
    for _ in range(_MAX_TERMS):
        terms.append(term)
        i += 1
        term = term * mu / i
        if term <= 1e-18 * terms[0]:
            break
    return math.fsum(terms)


def poisson_tail_derivative(t: int, mu):
    """d/dmu f_t(mu) = P(Po(mu) = t-1)."""
    if t < 1:
        return 0.0 * np.asarray(mu, dtype=float)
    arr, scalar = _as_array(mu)
    return _ret(np.exp(_log_pmf(t - 1, arr)), scalar)


def _scaled_series(s: int, x):
    """sum_{j>=0} x^j / (s+j)!  (= e^x f_s(x) / x^s), valid for moderate x."""
    if x.size == 1:
        return np.full(x.shape, _scaled_series_scalar(s, float(x.reshape(-1)[0])))
    term = np.full(x.shape, 1.0 / math.factorial(s))
    total = term.copy()
    comp = np.zeros(x.shape)
    xmax = x.max(initial=0.0)
    for j in range(1, _MAX_TERMS):
        term = term * x / (s + j)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if j > xmax and j % 8 == 0 and np.all(term <= 1e-18 * total):
            break
    return total


def _scaled_series_scalar(s: int, x: float) -> float:
    term = 1.0 / math.factorial(s)
    total, comp = term, 0.0
    for j in range(1, _MAX_TERMS):
        term *= x / (s + j)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if j > x and term <= 1e-18 * total:
            break
    return total


def h_rk(r: int, k: int, mu):
    """mu / f_{k-1}(mu)^(r-1); the threshold density is its minimum over mu divided by r."""
    arr, scalar = _as_array(mu)
    if np.any(arr <= 0):
        raise DomainError("h_rk requires mu > 0")
    f = poisson_tail(k - 1, arr)
    if np.any(f <= 0):
        raise OverflowError("f_{k-1}(mu) underflowed; h_rk is not representable")
    with np.errstate(over="raise"):
        out = np.exp(np.log(arr) - (r - 1) * np.log(f))
    return _ret(out, scalar)


def g_k(k: int, lam, allow_zero: bool = False):
    """Mean of a Poisson(lam) variable conditioned to be >= k.

    g_k(0+) = k; the limit is only returned for lam == 0 when ``allow_zero``.
    """
    if k < 1:
        raise DomainError(f"g_k needs k >= 1, got {k}")
    arr, scalar = _as_array(lam)
    zero = arr == 0
    if np.any(arr < 0) or (np.any(zero) and not allow_zero):
        raise DomainError("g_k requires lambda > 0")
    out = np.empty_like(arr)
    small = arr <= _SERIES_MAX
    if np.any(small):
        x = arr[small]
        out[small] = _scaled_series(k - 1, x) / _scaled_series(k, x)
    if np.any(~small):
        x = arr[~small]
        out[~small] = x * poisson_tail(k - 1, x) / poisson_tail(k, x)
    return _ret(out, scalar)


def lambda_of(k: int, x, tol: RealTol = DEFAULT_TOL):
    """Inverse of g_k on (k, inf): the lambda > 0 with g_k(lambda) = x."""
    arr, scalar = _as_array(x)
    if np.any(~(arr > k)):
        raise DomainError(f"lambda_of requires x > k = {k}")
    lo = np.full(arr.shape, 1e-12)
    hi = np.maximum(4 * arr, 4.0 * k)
    for _ in range(200):
        short = g_k(k, hi) < arr
        if not np.any(short):
            break
        hi = np.where(short, 2 * hi, hi)
    else:
        raise ConvergenceError("could not bracket the root of g_k")

    best = lo.copy()
    g_lo = g_k(k, lo)
    best_err = np.abs(g_lo - arr)
    # root below the bracket floor: the floor already satisfies the tolerance
    done = best_err <= tol.abs_tol
    # safeguarded Newton; d g_k / d lam = g_k (g_{k-1} + 1 - g_k) / lam
    cur = 0.5 * (lo + hi)
    for _ in range(tol.max_iter):
        if np.all(done):
            break
        gm = g_k(k, cur)
        err = np.abs(gm - arr)
        improve = (err < best_err) & ~done
        best = np.where(improve, cur, best)
        best_err = np.where(improve, err, best_err)
        done |= err <= tol.abs_tol
        lo = np.where(gm < arr, cur, lo)
        hi = np.where(gm >= arr, cur, hi)
        prev = g_k(k - 1, cur) if k > 1 else cur
        slope = gm * (prev + 1.0 - gm) / cur
        with np.errstate(divide="ignore", invalid="ignore"):
            step = cur - (gm - arr) / slope
        inside = np.isfinite(step) & (step > lo) & (step < hi)
        cur = np.where(inside, step, 0.5 * (lo + hi))
        # bracket collapsed to adjacent floats: nothing more to gain
        done |= (hi - lo) <= 4 * np.finfo(float).eps * hi
    if np.any(best_err > 10 * tol.abs_tol):
        raise ConvergenceError(
            f"lambda_of did not converge: max residual {best_err.max():.3e}")
    return _ret(best, scalar)


def _psi_of_lambda(k: int, lam):
    out = np.empty_like(lam)
    small = lam <= _SERIES_MAX
    if np.any(small):
        out[small] = 1.0 / (math.factorial(k - 1) * _scaled_series(k - 1, lam[small]))
    if np.any(~small):
        x = lam[~small]
        out[~small] = np.exp(_log_pmf(k - 1, x)) / poisson_tail(k - 1, x)
    return out


def psi(k: int, x, tol: RealTol = DEFAULT_TOL):
    """Share of heavy degree sitting in degree-k bins when the heavy mean degree is x.

    Depends on k only; r enters through the argument (x = zeta at criticality).
    """
    lam, scalar = _as_array(lambda_of(k, x, tol))
    return _ret(_psi_of_lambda(k, lam), scalar)


def critical_ratio(k: int, mu):
    """e^-mu mu^(k-1) / ((k-1)! f_{k-1}(mu)); equals psi(g_k(mu))."""
    arr, scalar = _as_array(mu)
    if np.any(arr <= 0):
        raise DomainError("critical_ratio requires mu > 0")
    return _ret(_psi_of_lambda(k, arr), scalar)


def rho_bar(k: int, mu):
    """Fraction of degree-k values in a Poisson(mu) law truncated at k."""
    arr, scalar = _as_array(mu)
    if np.any(arr <= 0):
        raise DomainError("rho_bar requires mu > 0")
    out = np.empty_like(arr)
    small = arr <= _SERIES_MAX
    if np.any(small):
        out[small] = 1.0 / (math.factorial(k) * _scaled_series(k, arr[small]))
    if np.any(~small):
        x = arr[~small]
        out[~small] = np.exp(_log_pmf(k, x)) / poisson_tail(k, x)
    return _ret(out, scalar)


def truncated_poisson_pmf(k: int, lam: float, j):
    """P(X = j) for X ~ Po(lam) conditioned on X >= k (zero below k)."""
    j = np.asarray(j)
    logp = -lam + j * math.log(lam) - np.vectorize(math.lgamma)(j + 1.0)
    out = np.exp(logp) / poisson_tail(k, lam)
    return np.where(j >= k, out, 0.0)


def _five_point(f, x, step):
    return (-f(x + 2 * step) + 16 * f(x + step) - 30 * f(x)
            + 16 * f(x - step) - f(x - 2 * step)) / (12 * step * step)


def h_second_derivative(r: int, k: int, mu: float, step: float = 1e-3, func=None,
                        richardson: bool = False) -> float:
    """Central five-point estimate of h_rk''(mu).

    ``func`` replaces h_rk (used to calibrate on known functions).  With
    ``richardson`` the estimates at ``step`` and ``step/2`` are combined to
    cancel the O(step^4) term.
    """
    if not mu > 0:
        raise DomainError("mu must be > 0")
    if not 0 < step <= mu / 10:
        raise DomainError(f"step must lie in (0, mu/10], got {step}")
    f = func if func is not None else (lambda x: h_rk(r, k, x))
    d1 = _five_point(f, mu, step)
    if not richardson:
        return float(d1)
    d2 = _five_point(f, mu, step / 2)
    return float((16 * d2 - d1) / 15)


def h_first_derivative(r: int, k: int, mu: float, step: float = 1e-5) -> float:
    """Symmetric difference quotient of h_rk at mu."""
    return float((h_rk(r, k, mu + step) - h_rk(r, k, mu - step)) / (2 * step))
