"""Log-space scalar kernels: log-sum-exp, Poisson masses and tails, and the
regularized upper incomplete gamma for integer order."""

import math

import numpy as np
from scipy.special import gammaln

LOG_ZERO = -math.inf


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


def log_sum_exp(terms):
    """Return ``log(sum(exp(terms)))`` without overflow or underflow.

    The terms are shifted by their maximum and the remaining exponentials are
    accumulated with ``math.fsum``, so the result is exact to a couple of ulp.
    ``-inf`` entries contribute nothing; an all ``-inf`` input gives ``-inf``.
    """
    x = np.asarray(terms, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("log_sum_exp needs at least one term")
    if np.isnan(x).any() or np.isposinf(x).any():
        raise DomainError("log_sum_exp terms must lie in [-inf, +inf)")
    m = x.max()
    if m == LOG_ZERO:
        return LOG_ZERO
    return float(m + math.log(math.fsum(np.exp(x - m))))


def log1mexp(a):
    """``log(1 - exp(a))`` for ``a <= 0``, accurate on both ends."""
    if a > 0:
        raise DomainError(f"log1mexp needs a <= 0, got {a}")
    if a == 0:
        return LOG_ZERO
    if a > -math.log(2):
        return math.log(-math.expm1(a))
    return math.log1p(-math.exp(a))


def log_exp_partial_sum(m, log_x):
    """``log sum_{i=0}^{m} x**i / i!`` given ``log x`` (``-inf`` means x = 0)."""
    if m < 0:
        return LOG_ZERO
    if log_x == LOG_ZERO:
        return 0.0
    i = np.arange(m + 1)
    return log_sum_exp(i * log_x - gammaln(i + 1))


def log_poisson_pmf(y, rate):
    """Log mass of a Poisson(rate) variable at ``y``."""
    if not rate > 0:
        raise DomainError(f"Poisson rate must be positive, got {rate}")
    if y < 0:
        return LOG_ZERO
    return float(y * math.log(rate) - rate - gammaln(y + 1))


def log_regularized_upper_gamma(n, x):
    """``log(Gamma(n, x) / Gamma(n))`` for integer ``n >= 1``.

    For integer order this is the Poisson(x) cdf at ``n - 1``, evaluated as a
    finite log-sum of Poisson log masses.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"order must be a positive integer, got {n}")
    if not x >= 0:
        raise DomainError(f"argument must be non-negative, got {x}")
    if x == 0:
        return 0.0
    k = np.arange(int(n))
    return min(0.0, log_sum_exp(k * math.log(x) - x - gammaln(k + 1)))


def log_poisson_cdf(y, rate):
    """``log P(X <= y)`` for X ~ Poisson(rate)."""
    if y < 0:
        return LOG_ZERO
    return log_regularized_upper_gamma(int(y) + 1, rate)


def log_poisson_sf(y, rate):
    """``log P(X >= y)`` for X ~ Poisson(rate).

    Below the mean the complement of the cdf is well conditioned. Above it the
    upper tail is summed directly; its terms fall off faster than geometrically.
    """
    if not rate > 0:
        raise DomainError(f"Poisson rate must be positive, got {rate}")
    y = int(y)
    if y <= 0:
        return 0.0
    if y <= rate:
        return log1mexp(log_poisson_cdf(y - 1, rate))
    log_rate = math.log(rate)
    head = y * log_rate - rate - gammaln(y + 1)
    width = 64
    while True:
        i = np.arange(y, y + width)
        terms = i * log_rate - rate - gammaln(i + 1)
        # remaining terms are bounded by a geometric series with ratio < 1
        ratio = rate / (y + width)
        rest = terms[-1] + math.log(ratio) - math.log1p(-ratio)
        if rest < head - 40.0:
            return log_sum_exp(terms)
        width *= 2
