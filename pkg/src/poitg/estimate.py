"""Maximum likelihood for PoiTG: log-likelihood, analytic score, Nelder-Mead
fit in log/logit coordinates, observed information and Wald intervals."""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit
from scipy.stats import norm

from .data import CountData
from .dist import LAMBDA_FLOOR, Params, _log_poig_table, log_pmf_table
from .special import DomainError, log_poisson_pmf, log_regularized_upper_gamma

PARAM_NAMES = ("lambda", "q", "alpha")

_LOGIT_EDGE = 1e-8  # keeps logit finite when starting on a boundary
MAX_RESTARTS = 5


def as_count_data(data):
    return data if isinstance(data, CountData) else CountData(np.asarray(data))


def log_likelihood(p, data):
    """Sum of log masses over the sample."""
    data = as_count_data(data)
    values, freqs = data.frequencies()
    table = log_pmf_table(p, data.max)
    return float(np.dot(freqs, table[values]))


# -- PoiG building blocks ---------------------------------------------------


def poig_log_likelihood(lam, q, data):
    """PoiG log-likelihood written with the regularized incomplete gamma."""
    data = as_count_data(data)
    n, ybar = data.n, data.mean
    beta = lam / q
    values, freqs = data.frequencies()
    tail = sum(f * log_regularized_upper_gamma(int(y) + 1, beta) for y, f in zip(values, freqs))
    return n * math.log1p(-q) + n * ybar * math.log(q) + n * lam * (1 - q) / q + tail


def _alpha_beta_pow(y, lam, q, j):
    # alpha_j(y) beta^y = e^-beta beta^y / (Gamma(y+1, beta) q^j)
    beta = lam / q
    return math.exp(
        log_poisson_pmf(y, beta) - log_regularized_upper_gamma(y + 1, beta) - j * math.log(q)
    )


def poig_score(lam, q, data):
    """Gradient of the PoiG log-likelihood in ``(lam, q)``."""
    data = as_count_data(data)
    n, ybar = data.n, data.mean
    values, freqs = data.frequencies()
    a1 = sum(f * _alpha_beta_pow(int(y), lam, q, 1) for y, f in zip(values, freqs))
    a2 = sum(f * _alpha_beta_pow(int(y), lam, q, 2) for y, f in zip(values, freqs))
    s1 = n * (1 - q) / q - a1
    s2 = -n / (1 - q) - n * (lam - ybar) / q - n * lam * (1 - q) / q**2 + lam * a2
    return np.array([s1, s2])


# -- PoiTG score --------------------------------------------------------------


@dataclass(frozen=True)
class ScoreTerms:
    """Per-distinct-value score ingredients.

    ``u[j-1]`` and ``v[j-1]`` hold ``u_ij`` and ``v_ij`` divided by the mass
    ``pmf(y_i)``; the score is homogeneous of degree zero in them, and the
    scaling keeps them finite when ``lam / q**2`` is large. ``qpow[j-1, k]``
    is ``(1 - q**j) / q**k``.
    """

    y: np.ndarray
    freq: np.ndarray
    u: np.ndarray
    v: np.ndarray
    qpow: np.ndarray


def score_terms(p, data):
    data = as_count_data(data)
    lam, q, _ = p.as_tuple()
    values, freqs = data.frequencies()
    log_q = math.log(q)
    log_p = log_pmf_table(p, data.max)[values]
    log_pois = values * math.log(lam) - lam - np.array([math.lgamma(y + 1) for y in values])
    u = np.empty((2, values.size))
    v = np.empty((2, values.size))
    for j in (1, 2):
        log_1mqj = math.log1p(-(q**j))
        log_v = _log_poig_table(lam, j * log_q, data.max)[values] - log_1mqj
        log_u = log_1mqj - j * log_q + log_pois
        v[j - 1] = np.exp(log_v - log_p)
        u[j - 1] = np.exp(log_u - log_p)
    qpow = np.array([[(1 - q**j) / q**k for k in range(4)] for j in (1, 2)])
    return ScoreTerms(values, freqs, u, v, qpow)


class Score(np.ndarray):
    """Score vector; ``alpha_boundary`` marks a one-sided alpha component."""

    def __new__(cls, values, alpha_boundary=False):
        obj = np.asarray(values, dtype=float).view(cls)
        obj.alpha_boundary = alpha_boundary
        return obj

    def __array_finalize__(self, obj):
        self.alpha_boundary = getattr(obj, "alpha_boundary", False)


def score(p, data):
    """Analytic gradient of the log-likelihood in ``(lam, q, alpha)``."""
    t = score_terms(p, data)
    lam, q, a = p.as_tuple()
    (u1, u2), (v1, v2) = t.u, t.v
    Q = t.qpow
    den = a * Q[1, 0] * v2 + (1 - a) * Q[0, 0] * v1
    d_lam = a * (u1 - u2 + q**2 * Q[1, 2] ** 2 * v2 - q * Q[0, 1] ** 2 * v1) - u1 + q * Q[0, 1] ** 2 * v1
    d_q = 2 * a * (lam * u2 / q - q * v2 - lam * Q[1, 3] * v2 + Q[1, 1] * v2 * t.y) + (1 - a) * (
        lam * u1 / q - v1 - lam * Q[0, 2] * v1 + Q[0, 1] * v1 * t.y
    )
    d_alpha = Q[1, 0] * v2 - Q[0, 0] * v1
    grad = [float(np.dot(t.freq, d / den)) for d in (d_lam, d_q, d_alpha)]
    return Score(grad, alpha_boundary=(a == 0.0))


# -- observed information and intervals ----------------------------------------


@dataclass(frozen=True)
class Information:
    matrix: np.ndarray
    positive_definite: bool
    condition: float


def _steps(theta):
    return np.maximum(1e-5, 1e-4 * np.abs(theta))


def _shifted(theta, j, delta):
    t = np.array(theta, dtype=float)
    t[j] += delta
    try:
        return Params(*t)
    except DomainError:
        return None


def observed_information(p, data):
    """Negative Hessian by central differences of the analytic score.

    Falls back to a one-sided difference for a coordinate whose central
    stencil leaves the parameter domain.
    """
    data = as_count_data(data)
    theta = np.array(p.as_tuple())
    h = _steps(theta)
    base = None
    H = np.empty((3, 3))
    for j in range(3):
        plus, minus = _shifted(theta, j, h[j]), _shifted(theta, j, -h[j])
        if plus is not None and minus is not None:
            H[:, j] = (score(plus, data) - score(minus, data)) / (2 * h[j])
        else:
            if base is None:
                base = score(p, data)
            if plus is not None:
                H[:, j] = (score(plus, data) - base) / h[j]
            elif minus is not None:
                H[:, j] = (base - score(minus, data)) / h[j]
            else:
                raise DomainError("no finite-difference stencil fits inside the domain")
    info = -(H + H.T) / 2
    return info


def information_report(info):
    eig = np.linalg.eigvalsh(info)
    pd = bool(np.all(eig > 0))
    cond = float(eig.max() / eig.min()) if pd else math.inf
    return Information(info, pd, cond)


def numeric_hessian(p, data):
    """Second differences of the log-likelihood itself (independent check)."""
    data = as_count_data(data)
    theta = np.array(p.as_tuple())
    h = _steps(theta)

    def f(t):
        return log_likelihood(Params(*t), data)

    H = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            ei = np.eye(3)[i] * h[i]
            ej = np.eye(3)[j] * h[j]
            H[i, j] = H[j, i] = (
                f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej)
            ) / (4 * h[i] * h[j])
    return H


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    clipped: bool


@dataclass(frozen=True)
class FitResult:
    params: Params
    loglik: float
    n: int
    method: str
    converged: bool
    iterations: int
    covariance: np.ndarray = None
    ci: dict = None
    level: float = 0.95
    information: Information = None
    boundary: tuple = ()
    message: str = ""
    extra: dict = field(default_factory=dict, repr=False)

    @property
    def se(self):
        if self.covariance is None:
            return None
        return dict(zip(PARAM_NAMES, np.sqrt(np.clip(np.diag(self.covariance), 0, None))))


_DOMAIN = {
    "lambda": (0.0, math.inf, False),  # open at both ends
    "q": (0.0, 1.0, False),
    "alpha": (0.0, 1.0, True),  # closed below
}


def confidence_intervals(fit, level=0.95):
    """Wald intervals ``estimate +/- z * se`` clipped to the parameter domain."""
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    if fit.covariance is None or not np.all(np.isfinite(fit.covariance)):
        raise DomainError(
            "observed information is not invertible; Wald intervals are unavailable "
            "(a profile-likelihood interval is needed instead)"
        )
    z = norm.ppf(0.5 + level / 2)
    out = {}
    for j, name in enumerate(PARAM_NAMES):
        est = fit.params.as_tuple()[j]
        var = fit.covariance[j, j]
        if var < 0:
            raise DomainError(f"negative variance for {name}; information is not positive definite")
        half = z * math.sqrt(var)
        lo, hi = est - half, est + half
        dlo, dhi, closed_lo = _DOMAIN[name]
        new_lo = max(lo, dlo) if closed_lo else (lo if lo > dlo else dlo)
        new_hi = min(hi, dhi)
        out[name] = Interval(new_lo, new_hi, clipped=(new_lo != lo or new_hi != hi))
    return out


def attach_uncertainty(fit, data, level=0.95):
    """Add observed information, covariance and intervals to ``fit``."""
    try:
        info = information_report(observed_information(fit.params, data))
    except (DomainError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return replace(fit, message=f"{fit.message}; information unavailable: {exc}".strip("; "))
    if not info.positive_definite:
        return replace(fit, information=info, level=level,
                       message=f"{fit.message}; information not positive definite".strip("; "))
    cov = np.linalg.inv(info.matrix)
    cov = (cov + cov.T) / 2
    fit = replace(fit, information=info, covariance=cov, level=level)
    return replace(fit, ci=confidence_intervals(fit, level))


# -- fitting ----------------------------------------------------------------


def to_unconstrained(p):
    a = min(max(p.alpha, _LOGIT_EDGE), 1 - _LOGIT_EDGE)
    return np.array([math.log(p.lam), logit(p.q), logit(a)])


def from_unconstrained(x):
    return Params(math.exp(x[0]), expit(x[1]), expit(x[2]))


def default_start(data):
    return Params(max(LAMBDA_FLOOR, data.mean / 2), 0.5, 0.5)


def start_grid(data):
    ybar = data.mean
    return [
        Params(max(LAMBDA_FLOOR, f * ybar), q, a)
        for f in (0.25, 0.5, 1.0)
        for q in (0.2, 0.5, 0.8)
        for a in (0.25, 0.5, 0.75)
    ]


def boundary_flags(p, edge=1e-6):
    flags = []
    if p.lam <= LAMBDA_FLOOR * 10:
        flags.append("lambda")
    if p.q < edge or p.q > 1 - edge:
        flags.append("q")
    if p.alpha < edge or p.alpha > 1 - edge:
        flags.append("alpha")
    return tuple(flags)


def _negloglik(x, data):
    try:
        p = from_unconstrained(x)
    except (DomainError, OverflowError):
        return math.inf
    value = log_likelihood(p, data)
    return -value if math.isfinite(value) else math.inf


def _simplex(data, start, tol, max_iter, restarts=MAX_RESTARTS):
    x0 = to_unconstrained(start)
    opts = {"xatol": tol, "fatol": tol, "maxiter": max_iter, "maxfev": 4 * max_iter}
    res = minimize(_negloglik, x0, args=(data,), method="Nelder-Mead", options=opts)
    nit = res.nit
    # a collapsed simplex can stall on a ridge; rebuild it at the best point
    for _ in range(restarts):
        if not res.success:
            break
        again = minimize(_negloglik, res.x, args=(data,), method="Nelder-Mead", options=opts)
        nit += again.nit
        gain = res.fun - again.fun
        if gain > 0:
            res = again
        if gain <= tol:
            break
    res.nit = nit
    return res


def fit_mle(data, init=None, max_iter=2000, tol=1e-8, multistart=False, level=0.95):
    """Maximize the log-likelihood with a Nelder-Mead simplex.

    The search runs over ``(log lam, logit q, logit alpha)``. ``converged``
    means both the simplex diameter and the spread of its function values fell
    below ``tol``. With ``multistart`` the best of a 27-point start grid wins
    (ties go to the earliest start); ``init`` is tried first when given.
    """
    data = as_count_data(data)
    if data.n < 3:
        raise DomainError("need at least three observations to fit three parameters")
    starts = [init if init is not None else default_start(data)]
    if multistart:
        starts += start_grid(data)
    best = None
    for start in starts:
        res = _simplex(data, start, tol, max_iter)
        if best is None or res.fun < best.fun:
            best = res
    p = from_unconstrained(best.x)
    ll = log_likelihood(p, data)
    # never report worse than the start
    start_ll = log_likelihood(starts[0], data)
    if start_ll > ll:
        p, ll = starts[0], start_ll
    fit = FitResult(
        params=p,
        loglik=ll,
        n=data.n,
        method="mle",
        converged=bool(best.success),
        iterations=int(best.nit),
        boundary=boundary_flags(p),
        message=str(best.message),
    )
    return attach_uncertainty(fit, data, level)
