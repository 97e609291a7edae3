"""Poisson-transmuted geometric (PoiTG) count distribution."""

from .data import CountData, read_counts, write_counts
from .dist import (
    MomentSet,
    OrderPair,
    Params,
    cdf,
    generating_function,
    hazard,
    log_pmf,
    lr_order_holds,
    moments,
    mrl,
    pmf,
    pmf_table,
    poig_log_pmf,
    sample,
    sf,
    tgd_pmf,
)
from .em import EmTrace, fit_em
from .estimate import (
    FitResult,
    confidence_intervals,
    fit_mle,
    log_likelihood,
    observed_information,
    score,
)
from .special import DomainError

__version__ = "0.1.0"
