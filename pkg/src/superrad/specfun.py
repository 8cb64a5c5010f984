"""Special-function kernel.

Bessel functions of integer order, the scaled family
``j_n(u) = J_n(2 sqrt(u)) / u**(n/2)``, the regularized Poisson tail
``T_n(x) = exp(-x) * sum_{k>n} x**k / k!`` and the positive zeros of J_1.

Everything here is a pure function; arrays broadcast where noted.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from superrad.errors import DomainError, OutOfRangeError

#: Below this argument ``jn_scaled`` switches to its power series in ``u``.
JN_SCALED_CROSSOVER = 1e-4

#: Largest supported index for :func:`j1_zero`.
J1_ZERO_MAX_INDEX = 50

_SERIES_TERMS = 5


def bessel_jn(n, x):
    """Bessel function of the first kind J_n(x) for integer ``n >= 0``.

    ``x`` may be a scalar or an array. Non-finite arguments raise
    :class:`DomainError`.
    """
    if int(n) != n or n < 0:
        raise DomainError(f"order must be a nonnegative integer, got {n!r}")
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise DomainError("bessel_jn requires a finite argument")
    out = special.jv(int(n), x_arr)
    return float(out) if out.ndim == 0 else out


def _jn_scaled_series(n: int, u: np.ndarray) -> np.ndarray:
    # sum_k (-u)^k / (k! (n+k)!)
    term = np.full_like(u, 1.0 / math.factorial(n))
    total = term.copy()
    for k in range(1, _SERIES_TERMS):
        term = term * (-u) / (k * (n + k))
        total = total + term
    return total


def jn_scaled(n, u):
    """Scaled Bessel function ``J_n(2 sqrt(u)) / u**(n/2)``.

    Finite at ``u = 0`` where it equals ``1/n!``. Uses the ascending
    series for ``u < JN_SCALED_CROSSOVER`` so no 0/0 is ever formed.
    """
    if int(n) != n or n < 0:
        raise DomainError(f"order must be a nonnegative integer, got {n!r}")
    n = int(n)
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0) or not np.all(np.isfinite(u_arr)):
        raise DomainError("jn_scaled requires finite u >= 0")
    small = u_arr < JN_SCALED_CROSSOVER
    out = np.empty_like(u_arr)
    out[small] = _jn_scaled_series(n, u_arr[small])
    big = ~small
    if np.any(big):
        ub = u_arr[big]
        # J_n(2 sqrt u) * u^(-n/2); the power is done in log space so that
        # large n with large u underflows cleanly to 0 rather than inf/inf.
        out[big] = special.jv(n, 2.0 * np.sqrt(ub)) * np.exp(-0.5 * n * np.log(ub))
    return float(out) if out.ndim == 0 else out


def poisson_tail(n_max: int, x: float) -> np.ndarray:
    """Return ``T_n(x)`` for ``n = 0..n_max`` as an array.

    ``T_n(x) = 1 - exp(-x) sum_{k<=n} x^k/k!`` is the regularized lower
    incomplete gamma ``P(n+1, x)``, which scipy evaluates without the
    cancellation of the explicit complement.
    """
    if x < 0 or not math.isfinite(x):
        raise DomainError(f"poisson_tail needs finite x >= 0, got {x!r}")
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    if x == 0.0:
        return np.zeros(n_max + 1)
    out = special.gammainc(np.arange(1.0, n_max + 2.0), x)
    return np.clip(out, 0.0, 1.0)


def tail_coefficient(n: int, x: float) -> float:
    """Scalar ``T_n(x)``; see :func:`poisson_tail`."""
    return float(poisson_tail(int(n), float(x))[int(n)])


def fn_coeff(n, b, gamma, t):
    """Series coefficient ``f_n(b, t) = (gamma t)^n T_n(b / gamma)``.

    ``n = 0`` gives ``1 - exp(-b/gamma)``.
    """
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")
    if b < 0 or t < 0:
        raise DomainError("b and t must be nonnegative")
    n = int(n)
    if n < 0:
        raise DomainError("n must be nonnegative")
    gt = gamma * t
    power = 1.0 if n == 0 else gt**n
    return power * tail_coefficient(n, b / gamma)


def _mcmahon_j1(k: int) -> float:
    beta = (k + 0.25) * math.pi
    mu = 4.0
    return beta - (mu - 1) / (8 * beta) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * beta) ** 3)


def _j1(x: float) -> float:
    return float(special.jv(1, x))


def j1_zero(k: int, xtol: float = 1e-13) -> float:
    """k-th positive zero of J_1.

    Brackets from the McMahon estimate +-0.5, bisection down to ``1e-6``
    and a secant polish to ``xtol``.
    """
    if int(k) != k or k < 1:
        raise OutOfRangeError(f"zero index must be a positive integer, got {k!r}")
    if k > J1_ZERO_MAX_INDEX:
        raise OutOfRangeError(f"j1_zero supports k <= {J1_ZERO_MAX_INDEX}, got {k}")
    guess = _mcmahon_j1(int(k))
    lo, hi = guess - 0.5, guess + 0.5
    f_lo, f_hi = _j1(lo), _j1(hi)
    if f_lo * f_hi > 0:
        raise OutOfRangeError(f"could not bracket zero {k} of J1")
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        f_mid = _j1(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    x0, x1, f0, f1 = lo, hi, f_lo, f_hi
    for _ in range(20):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        x0, f0 = x1, f1
        x1, f1 = x2, _j1(x2)
        if abs(x1 - x0) < xtol:
            break
    return x1
