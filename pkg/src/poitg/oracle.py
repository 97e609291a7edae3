"""Brute-force references for testing the optimized code paths.

Everything here is direct floating-point arithmetic on the defining sums:
no log scale, no recurrences, no shared helpers with ``dist``.
"""

import math
from dataclasses import dataclass

from .special import DomainError

# largest i with i! representable as a double
_MAX_TERMS = 170


@dataclass(frozen=True)
class OracleConfig:
    y_cap: int = _MAX_TERMS
    tol: float = 1e-12

    def __post_init__(self):
        if self.y_cap < 1:
            raise DomainError("y_cap must be at least 1")
        if not 0 < self.tol <= 1e-3:
            raise DomainError("tol must lie in (0, 1e-3]")


@dataclass(frozen=True)
class MomentCertificate:
    value: float
    y_star: int
    tail_bound: float


def _poisson(i, lam):
    return math.exp(-lam) * lam**i / math.factorial(i)


def _geometric(j, r):
    return (1 - r) * r**j


def _convolve(y, lam, r):
    return sum(_poisson(i, lam) * _geometric(y - i, r) for i in range(y + 1))


def convolution_pmf_oracle(y, p):
    """``sum_i Poisson(i; lam) * TG(y - i; q, alpha)`` summed term by term."""
    if int(y) != y or y < 0:
        raise DomainError(f"y must be a non-negative integer, got {y}")
    y = int(y)
    if y > _MAX_TERMS:
        raise DomainError(f"y = {y} overflows direct factorial arithmetic (max {_MAX_TERMS})")
    lam, q, a = p.lam, p.q, p.alpha
    if lam > 1 and y * math.log(lam) > 700:
        raise DomainError(f"lam**y overflows for y = {y}")
    total = 0.0
    for i in range(y + 1):
        tg = (1 - a) * (1 - q) * q ** (y - i) + a * (1 - q * q) * q ** (2 * (y - i))
        total += math.exp(-lam) * lam**i / math.factorial(i) * tg
    return total


def _tail_sum(y, ratio, power):
    # sum_{m>=1} (y + m)^power ratio^m, summed until the terms are negligible
    total = 0.0
    m = 1
    while True:
        term = (y + m) ** power * ratio**m
        total += term
        if m > 1 and term < 1e-18 * total and (y + m + 1) * ratio < (y + m):
            return total
        m += 1


def truncated_moment_oracle(p, order, cfg=OracleConfig()):
    """``sum_{y<=Y*} y**order pmf(y)`` with a certified bound on the rest.

    Both mixture components are log-concave, so past their modes the tail of
    each is dominated by a geometric series in its current step ratio.
    """
    if order not in (1, 2, 3, 4):
        raise DomainError("order must be 1..4")
    lam, q, a = p.lam, p.q, p.alpha
    total = 0.0
    for y in range(cfg.y_cap):
        prob = convolution_pmf_oracle(y, p)
        total += y**order * prob
        bound = 0.0
        certified = True
        for weight, r in ((1 - a, q), (a, q * q)):
            if weight == 0:
                continue
            here = weight * _convolve(y, lam, r)
            nxt = weight * _convolve(y + 1, lam, r)
            if here == 0 or nxt >= here:
                certified = False
                break
            bound += here * _tail_sum(y, nxt / here, order)
        if certified and bound <= cfg.tol:
            return MomentCertificate(total, y, bound)
    raise DomainError(f"tail bound not below {cfg.tol} by y_cap = {cfg.y_cap}")
