"""The PoiTG law: Poisson(lam) convolved with a transmuted geometric TG(q, alpha).

For ``0 <= alpha < 1`` the transmuted geometric part is the two-geometric
mixture ``(1 - alpha) Geo(q) + alpha Geo(q**2)``, so PoiTG is the mixture
``(1 - alpha) PoiG(lam, q) + alpha PoiG(lam, q**2)`` where PoiG is Poisson
convolved with a geometric. Every mass is handled on the log scale: the
incomplete-gamma form carries a factor ``exp(lam / q**k)`` that overflows long
before the mass itself underflows.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .data import CountData
from .special import (
    LOG_ZERO,
    DomainError,
    log_exp_partial_sum,
    log_poisson_cdf,
    log_poisson_sf,
    log_sum_exp,
)

LAMBDA_FLOOR = 1e-10


@dataclass(frozen=True)
class Params:
    """Parameter triple ``(lam, q, alpha)``.

    ``lam`` below ``floor`` (including 0) is raised to the floor, which stands
    in for the pure transmuted-geometric limit.
    """

    lam: float
    q: float
    alpha: float = 0.0
    floor: float = field(default=LAMBDA_FLOOR, repr=False, compare=False)

    def __post_init__(self):
        lam, q, alpha = float(self.lam), float(self.q), float(self.alpha)
        if not (math.isfinite(lam) and lam >= 0):
            raise DomainError(f"lam must be a finite non-negative number, got {self.lam}")
        if not 0 < q < 1:
            raise DomainError(f"q must lie in (0, 1), got {self.q}")
        if not 0 <= alpha < 1:
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha}")
        object.__setattr__(self, "lam", max(lam, self.floor))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "alpha", alpha)

    def as_tuple(self):
        return self.lam, self.q, self.alpha

    @property
    def log_weights(self):
        """Log mixture weights of the ``q`` and ``q**2`` components."""
        a = self.alpha
        return math.log1p(-a), (math.log(a) if a > 0 else LOG_ZERO)


@dataclass(frozen=True)
class MomentSet:
    raw: tuple
    central: tuple
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    dispersion_index: float
    cv_percent: float

    def as_dict(self):
        return {
            "mean": self.mean,
            "variance": self.variance,
            "raw_moments": list(self.raw),
            "central_moments": list(self.central),
            "skewness": self.skewness,
            "kurtosis": self.kurtosis,
            "dispersion_index": self.dispersion_index,
            "cv_percent": self.cv_percent,
        }


@dataclass(frozen=True)
class OrderPair:
    """Candidate pair for ``lower <=_lr upper``.

    The constructor enforces the hypothesis under which the ordering is
    claimed: ``lower.lam <= upper.lam``, ``upper.q <= lower.q``, equal alphas.
    """

    upper: Params
    lower: Params

    def __post_init__(self):
        if self.upper.alpha != self.lower.alpha:
            raise DomainError("ordered pair must share alpha")
        if self.lower.lam > self.upper.lam:
            raise DomainError("ordered pair needs lower.lam <= upper.lam")
        if self.upper.q > self.lower.q:
            raise DomainError("ordered pair needs upper.q <= lower.q")


def _check_q_alpha(q, alpha):
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    if not 0 <= alpha < 1:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")


def _check_y(y):
    if int(y) != y or y < 0:
        raise DomainError(f"y must be a non-negative integer, got {y}")
    return int(y)


def tgd_pmf(y, q, alpha):
    """Transmuted geometric mass ``(1-a)(1-q)q^y + a(1-q^2)q^(2y)``."""
    _check_q_alpha(q, alpha)
    y = _check_y(y)
    return (1 - alpha) * (1 - q) * q**y + alpha * (1 - q * q) * q ** (2 * y)


def _log_poig(y, lam, log_q):
    # log[(1 - q) q^y e^-lam sum_{i<=y} (lam/q)^i / i!]
    return (
        math.log(-math.expm1(log_q))
        + y * log_q
        - lam
        + log_exp_partial_sum(y, math.log(lam) - log_q)
    )


def poig_log_pmf(y, lam, q):
    """Log mass of PoiG(lam, q), Poisson(lam) plus a Geo(q) count."""
    y = _check_y(y)
    if not lam > 0:
        raise DomainError(f"lam must be positive, got {lam}")
    _check_q_alpha(q, 0.0)
    return _log_poig(y, lam, math.log(q))


def log_pmf(y, p):
    """Log mass of PoiTG at a single ``y``."""
    y = _check_y(y)
    lw1, lw2 = p.log_weights
    log_q = math.log(p.q)
    c1 = lw1 + _log_poig(y, p.lam, log_q)
    if lw2 == LOG_ZERO:
        return c1
    return log_sum_exp([c1, lw2 + _log_poig(y, p.lam, 2 * log_q)])


def pmf(y, p):
    return math.exp(log_pmf(y, p))


def _log_poig_table(lam, log_qk, y_max):
    # Partial sums s_{y+1} = s_y + r^(y+1)/(y+1)! accumulated by log-add.
    i = np.arange(y_max + 1)
    terms = i * (math.log(lam) - log_qk) - gammaln(i + 1)
    partial = np.logaddexp.accumulate(terms)
    return math.log(-math.expm1(log_qk)) + i * log_qk - lam + partial


def component_log_tables(p, y_max):
    """Weighted component log masses ``log[(1-a) w1(y)]``, ``log[a w2(y)]``.

    Returns an array of shape ``(2, y_max + 1)``; the second row is ``-inf``
    when ``alpha == 0``.
    """
    lw1, lw2 = p.log_weights
    log_q = math.log(p.q)
    out = np.empty((2, y_max + 1))
    out[0] = lw1 + _log_poig_table(p.lam, log_q, y_max)
    if lw2 == LOG_ZERO:
        out[1] = LOG_ZERO
    else:
        out[1] = lw2 + _log_poig_table(p.lam, 2 * log_q, y_max)
    return out


def log_pmf_table(p, y_max):
    """Log masses for ``y = 0..y_max`` in O(y_max)."""
    y_max = _check_y(y_max)
    comp = component_log_tables(p, y_max)
    return np.logaddexp(comp[0], comp[1])


def pmf_table(p, y_max):
    return np.exp(log_pmf_table(p, y_max))


def log_pmf_many(ys, p):
    """Log masses at arbitrary counts, through one table up to ``max(ys)``."""
    ys = np.asarray(ys, dtype=np.int64)
    if ys.size and ys.min() < 0:
        raise DomainError("counts must be non-negative")
    table = log_pmf_table(p, int(ys.max()) if ys.size else 0)
    return table[ys]


def _log_w_cap(y, p, k):
    # log W_k(y) = k(y+1) log q - lam + log sum_{i<=y} (lam/q^k)^i / i!
    log_qk = k * math.log(p.q)
    return (y + 1) * log_qk - p.lam + log_exp_partial_sum(y, math.log(p.lam) - log_qk)


def cdf(y, p):
    """``P(Y <= y)`` as the Poisson cdf minus the weighted W-terms."""
    if y < 0:
        return 0.0
    y = int(math.floor(y))
    value = math.exp(log_poisson_cdf(y, p.lam)) - (1 - p.alpha) * math.exp(_log_w_cap(y, p, 1))
    if p.alpha > 0:
        value -= p.alpha * math.exp(_log_w_cap(y, p, 2))
    return min(1.0, max(0.0, value))


def log_sf(y, p):
    """``log P(Y >= y)``; a sum of three positive terms, so no cancellation."""
    if y <= 0:
        return 0.0
    y = int(math.ceil(y))
    lw1, lw2 = p.log_weights
    terms = [log_poisson_sf(y, p.lam), lw1 + _log_w_cap(y - 1, p, 1)]
    if lw2 != LOG_ZERO:
        terms.append(lw2 + _log_w_cap(y - 1, p, 2))
    return min(0.0, log_sum_exp(terms))


def sf(y, p):
    """Survival function ``P(Y >= y)``."""
    return math.exp(log_sf(y, p))


def hazard(y, p):
    """Discrete hazard ``pmf(y) / P(Y >= y)``."""
    y = _check_y(y)
    return math.exp(log_pmf(y, p) - log_sf(y, p))


_POLYLOG_NEG = (
    lambda r: r / (1 - r),
    lambda r: r / (1 - r) ** 2,
    lambda r: r * (1 + r) / (1 - r) ** 3,
    lambda r: r * (1 + 4 * r + r * r) / (1 - r) ** 4,
    lambda r: r * (1 + 11 * r + 11 * r * r + r**3) / (1 - r) ** 5,
)


def _log_weighted_geometric_tail(y, ratio, power):
    # log sum_{m>=1} (y + m)^power ratio^m, from sum m^j r^m = Li_{-j}(r)
    total = 0.0
    for j in range(power + 1):
        total += math.comb(power, j) * float(y) ** (power - j) * _POLYLOG_NEG[j](ratio)
    return math.log(total)


def tail_cutoff(p, tol, power=0, start=0):
    """Smallest ``Y >= start`` with ``sum_{j>Y} j**power pmf(j) < tol`` certified.

    Each PoiG component is log-concave, so once its step ratio drops below one
    the rest of its tail is dominated by a geometric series with that ratio.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if power not in range(5):
        raise DomainError("power must be in 0..4")
    log_tol = math.log(tol)
    y_max = max(64, 2 * start)
    while True:
        comp = component_log_tables(p, y_max + 1)
        for y in range(start, y_max + 1):
            bounds = []
            ok = True
            for row in comp:
                if row[y] == LOG_ZERO:
                    continue
                ratio = math.exp(row[y + 1] - row[y])
                if ratio >= 1:
                    ok = False
                    break
                bounds.append(row[y] + _log_weighted_geometric_tail(y, ratio, power))
            if ok and (not bounds or log_sum_exp(bounds) < log_tol):
                return y
        y_max *= 2


def mrl(t, p, tol=1e-10):
    """Mean residual life ``E(Y - t | Y >= t)``.

    The sum is truncated once the certified remainder falls below ``tol``.
    """
    t = _check_y(t)
    if not 0 < tol <= 1e-3:
        raise DomainError("tol must lie in (0, 1e-3]")
    lsf = log_sf(t, p)
    y_star = tail_cutoff(p, math.exp(math.log(tol) + lsf), power=1, start=t + 1)
    table = log_pmf_table(p, y_star)
    y = np.arange(t + 1, y_star + 1)
    if y.size == 0:
        return 0.0
    log_num = log_sum_exp(np.log(y - t) + table[t + 1:])
    return math.exp(log_num - lsf)


def _tgd_factor(s, q, alpha):
    return (1 - q) * (1 + alpha * q * (1 - s) - q * q * s) / ((1 - q * s) * (1 - q * q * s))


def generating_function(kind, arg, p):
    """Closed-form pgf, mgf, cf or cgf.

    The transmuted geometric part has a pole at ``s = 1/q`` whenever
    ``alpha < 1``, so the pgf needs ``|q s| < 1`` and the mgf/cgf need
    ``t < -log q``. The cf is defined for every real frequency.
    """
    lam, q, alpha = p.as_tuple()
    if kind == "pgf":
        if not abs(q * arg) < 1:
            raise DomainError(f"pgf needs |q*s| < 1, i.e. |s| < {1 / q}")
        return math.exp(lam * (arg - 1)) * _tgd_factor(arg, q, alpha)
    if kind in ("mgf", "cgf"):
        bound = -math.log(q)
        if not arg < bound:
            raise DomainError(f"{kind} needs t < -log q = {bound}")
        s = math.exp(arg)
        if kind == "mgf":
            return math.exp(lam * math.expm1(arg)) * _tgd_factor(s, q, alpha)
        return lam * math.expm1(arg) + math.log(_tgd_factor(s, q, alpha))
    if kind == "cf":
        s = cmath.exp(1j * arg)
        return cmath.exp(lam * (s - 1)) * _tgd_factor(s, q, alpha)
    raise DomainError(f"unknown generating function {kind!r}")


def raw_moments(p):
    """First four raw moments ``E[Y^r]`` in closed form."""
    l, q, a = p.as_tuple()
    b = 1 - a
    d = 1 - q * q
    m1 = l + (q * b + q * q) / d
    m2 = (
        l * (1 + l)
        + q * b * (1 + 2 * l)
        + q**2 * (3 - 2 * a - 2 * l**2)
        + q**3 * b * (3 - 2 * l)
        + q**4 * (1 - l + l**2)
    ) / d**2
    m3 = (
        l * (l**2 + 3 * l + 1)
        + q * b * (3 * l**2 + 6 * l + 1)
        - q**2 * (3 * l**3 + 6 * l**2 - 9 * l + 6 * a * (l + 1) - 7)
        - 2 * q**3 * b * (3 * l**2 - 8)
        + q**4 * (3 * l**3 + 3 * l**2 - 9 * l + 6 * a * (l - 2) + 16)
        + q**5 * b * (3 * l**2 - 6 * l + 7)
        - q**6 * (l**3 + l - 1)
    ) / d**3
    m4 = (
        l * (l**3 + 6 * l**2 + 7 * l + 1)
        + q * b * (4 * l**3 + 18 * l**2 + 14 * l + 1)
        - q**2 * (4 * l**4 + 20 * l**3 - 2 * l**2 - 46 * l + 2 * a * (7 + 18 * l + 6 * l**2) - 15)
        - q**3 * b * (12 * l**3 + 30 * l**2 - 54 * l - 61)
        + q**4 * (6 * l**4 + 24 * l**3 - 24 * l**2 + 8 * a * (3 * l**2 - 13) + 115)
        # q^5 coefficient checked against the fourth derivative of the mgf
        + q**5 * b * (12 * l**3 + 6 * l**2 - 54 * l + 115)
        - q**6 * (4 * l**4 + 12 * l**3 - 14 * l**2 + 46 * l + 2 * a * (25 - 18 * l + 6 * l**2) - 61)
        - q**7 * b * (-15 + 14 * l - 6 * l**2 + 4 * l**3)
        + q**8 * (l**4 + 2 * l**3 + l**2 - l + 1)
    ) / d**4
    return m1, m2, m3, m4


def central_moments(p):
    """Central moments ``(mu1, mu2, mu3, mu4)`` in closed form; ``mu1 = 0``."""
    l, q, a = p.as_tuple()
    b = 1 - a
    d = 1 - q * q
    mu2 = l + q * (b + q * (2 + q * b - a**2)) / d**2
    mu3 = (
        l
        + q * b
        - q**2 * (3 * a**2 + 3 * l - 4)
        - 2 * q**3 * (a**3 + 2 * a - 3)
        - q**4 * (3 * a**2 - 3 * l - 4)
        + q**5 * b
        - q**6 * l
    ) / d**3
    mu4 = (
        (1 + q**8) * l * (3 * l + 1)
        + (q + q**7) * b * (6 * l + 1)
        - (q**2 + q**6) * (a**2 * (6 * l + 4) + 6 * a + 12 * l**2 - 8 * l - 11)
        + (q**3 + q**5) * b * (6 * a**2 + 12 * a - 6 * l + 35)
        # the q^4 term enters with a negative sign; checked against the mgf
        - q**4 * (3 * a**4 - 4 * a**2 * (3 * l - 7) + 12 * a - 2 * (9 * l**2 - 9 * l + 25))
    ) / d**4
    return 0.0, mu2, mu3, mu4


def central_from_raw(raw):
    """Binomial raw-to-central conversion for the first four moments."""
    m1, m2, m3, m4 = raw
    return (
        0.0,
        m2 - m1**2,
        m3 - 3 * m2 * m1 + 2 * m1**3,
        m4 - 4 * m3 * m1 + 6 * m2 * m1**2 - 3 * m1**4,
    )


def moments(p, rtol=1e-8):
    """Moments, shape summaries, dispersion index and CV.

    The closed-form central moments are cross-checked against the raw-moment
    binomial combinations; a disagreement beyond ``rtol`` raises.
    """
    raw = raw_moments(p)
    central = central_moments(p)
    combined = central_from_raw(raw)
    for r in (1, 2, 3):
        scale = rtol * abs(central[r]) + 1e-13 * raw[r]
        if abs(central[r] - combined[r]) > scale:
            raise ArithmeticError(
                f"central moment {r + 1} disagrees with raw moments: {central[r]} vs {combined[r]}"
            )
    mean, var = raw[0], central[1]
    return MomentSet(
        raw=raw,
        central=central,
        mean=mean,
        variance=var,
        skewness=central[2] / var**1.5,
        kurtosis=central[3] / var**2,
        dispersion_index=var / mean,
        cv_percent=100 * math.sqrt(var) / mean,
    )


def sample(p, n, rng=None):
    """Draw ``n`` independent counts.

    Poisson part from numpy; the transmuted geometric part picks ``q`` or
    ``q**2`` with probability ``alpha`` and inverts the geometric cdf.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    n = int(n)
    rng = np.random.default_rng(rng)
    poisson = rng.poisson(p.lam, size=n)
    second = rng.random(n) < p.alpha
    u = 1.0 - rng.random(n)  # (0, 1]
    log_qk = np.where(second, 2 * math.log(p.q), math.log(p.q))
    geometric = np.floor(np.log(u) / log_qk).astype(np.int64)
    return CountData(poisson + geometric)


def lr_order_holds(pair, y_max, tol=0.0):
    """Check that ``pmf_upper(x) / pmf_lower(x)`` is non-decreasing on ``0..y_max``.

    Returns ``(True, None)`` or ``(False, x)`` with the first ``x`` where the
    log ratio drops by more than ``tol`` between ``x`` and ``x + 1``.
    """
    if not isinstance(pair, OrderPair):
        raise DomainError("expected an OrderPair")
    y_max = _check_y(y_max)
    log_ratio = log_pmf_table(pair.upper, y_max) - log_pmf_table(pair.lower, y_max)
    bad = np.nonzero(log_ratio[:-1] > log_ratio[1:] + tol)[0]
    if bad.size:
        return False, int(bad[0])
    return True, None
