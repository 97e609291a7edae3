"""EM fitting through the latent indicator representation.

With ``Z ~ Bernoulli(alpha)`` the observation is drawn from PoiG(lam, q) when
``Z = 0`` and from PoiG(lam, q**2) when ``Z = 1``. The E-step gives posterior
responsibilities, the alpha update is their mean, and the M-step maximizes the
observed-data log-likelihood over ``(lam, q)`` with alpha held fixed.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .dist import Params, component_log_tables
from .estimate import (
    FitResult,
    as_count_data,
    attach_uncertainty,
    boundary_flags,
    default_start,
    log_likelihood,
)
from .special import DomainError

ALPHA0 = 0.5
EPS = 1e-4
MAX_ITER = 500
INNER_TOL = 1e-9
ASCENT_SLACK = 1e-9


class MStepError(RuntimeError):
    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


@dataclass
class EmState:
    params: Params
    responsibilities: np.ndarray
    loglik: float
    k: int


@dataclass
class EmTrace:
    rows: list = field(default_factory=list)  # (k, lam, q, alpha, loglik)
    final: EmState = None

    def record(self, k, p, loglik):
        self.rows.append((k, p.lam, p.q, p.alpha, loglik))

    @property
    def loglik(self):
        return np.array([r[4] for r in self.rows])

    def is_ascending(self, slack=ASCENT_SLACK):
        ll = self.loglik
        return bool(np.all(np.diff(ll) >= -slack))


def e_step(p, data):
    """Posterior probability that each observation came from the ``q**2`` part."""
    data = as_count_data(data)
    comp = component_log_tables(p, data.max)
    y = data.counts
    log_total = np.logaddexp(comp[0], comp[1])
    return np.exp(comp[1][y] - log_total[y])


def update_alpha(responsibilities):
    r = np.asarray(responsibilities, dtype=float)
    if r.size == 0:
        raise DomainError("need at least one responsibility")
    return float(np.mean(r))


def m_step(data, alpha, start, tol=INNER_TOL, max_iter=2000):
    """Maximize the log-likelihood over ``(lam, q)`` with ``alpha`` fixed.

    Warm-started at ``start`` (a ``Params`` or ``(lam, q)`` pair); never
    returns a point worse than the start.
    """
    data = as_count_data(data)
    lam0, q0 = (start.lam, start.q) if isinstance(start, Params) else start
    start_p = Params(lam0, q0, alpha)
    start_ll = log_likelihood(start_p, data)

    def objective(x):
        try:
            value = log_likelihood(Params(math.exp(x[0]), expit(x[1]), alpha), data)
        except (DomainError, OverflowError):
            return math.inf
        return -value if math.isfinite(value) else math.inf

    res = minimize(
        objective,
        np.array([math.log(start_p.lam), logit(start_p.q)]),
        method="Nelder-Mead",
        options={"xatol": tol, "fatol": tol, "maxiter": max_iter},
    )
    if not np.all(np.isfinite(res.x)):
        raise MStepError("M-step left the parameter domain", (start_p.lam, start_p.q))
    lam, q = math.exp(res.x[0]), float(expit(res.x[1]))
    try:
        ll = log_likelihood(Params(lam, q, alpha), data)
    except DomainError as exc:
        raise MStepError(str(exc), (start_p.lam, start_p.q)) from exc
    if ll < start_ll:
        return start_p.lam, start_p.q
    return lam, q


def fit_em(data, alpha0=ALPHA0, eps=EPS, max_iter=MAX_ITER, init=None, level=0.95):
    """Alternate E-step, alpha update and M-step until every parameter moves
    by less than ``eps`` in one iteration.

    Returns ``(FitResult, EmTrace)``. Intervals come from the observed
    information at the final point.
    """
    data = as_count_data(data)
    if data.n < 3:
        raise DomainError("need at least three observations to fit three parameters")
    if init is None:
        base = default_start(data)
        init = Params(base.lam, base.q, alpha0)
    p = init
    ll = log_likelihood(p, data)
    trace = EmTrace()
    trace.record(0, p, ll)
    converged = False
    resp = None
    k = 0
    for k in range(1, max_iter + 1):
        resp = e_step(p, data)
        alpha = min(update_alpha(resp), math.nextafter(1.0, 0.0))
        lam, q = m_step(data, alpha, p)
        new = Params(lam, q, alpha)
        ll = log_likelihood(new, data)
        trace.record(k, new, ll)
        deltas = np.abs(np.subtract(new.as_tuple(), p.as_tuple()))
        p = new
        if np.all(deltas < eps):
            converged = True
            break
    trace.final = EmState(p, resp, ll, k)
    fit = FitResult(
        params=p,
        loglik=ll,
        n=data.n,
        method="em",
        converged=converged,
        iterations=k,
        boundary=boundary_flags(p),
        message="parameter changes below eps" if converged else "max_iter reached",
    )
    return attach_uncertainty(fit, data, level), trace
