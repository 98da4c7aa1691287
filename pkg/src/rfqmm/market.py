"""Bond price dynamics and RFQ fill model.

Units: intensities are arrivals per trading day, sigma is annualized,
dt is years per trading day (1/250 by default). kappa absorbs the
day-vs-year mismatch between the two; it multiplies the per-day intensity
imbalance and dt in years.
"""

from dataclasses import dataclass

import numpy as np

from .intensity import as_generator

TRADING_DAYS_PER_YEAR = 250.0


@dataclass(frozen=True)
class PriceParams:
    kappa: float = 2.29
    sigma: float = 18.39
    s0: float = 103.593
    dt: float = 1.0 / TRADING_DAYS_PER_YEAR

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.s0 <= 0:
            raise ValueError("s0 must be > 0")


@dataclass(frozen=True)
class FillCurve:
    """Logistic win-probability curve for a quoted spread delta."""

    alpha: float = -0.7
    beta: float = 3.1
    delta0: float = 0.09

    def __post_init__(self):
        if self.delta0 <= 0:
            raise ValueError("delta0 must be > 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")


@dataclass
class StepOutcome:
    n_bid_fills: int
    n_ask_fills: int
    price_next: float


def fill_probability(curve: FillCurve, delta):
    """P(win the RFQ) at spread delta: 1 / (1 + exp(alpha + beta/delta0 * delta)).

    Strictly decreasing in delta; vectorizes over delta.
    """
    x = curve.alpha + (curve.beta / curve.delta0) * np.asarray(delta, dtype=float)
    return 1.0 / (1.0 + np.exp(x))


def price_step(params: PriceParams, s, lambda_bid, lambda_ask, gaussian_draw):
    """One-day arithmetic-Brownian price update.

    s + kappa * (lambda_ask - lambda_bid) * dt + sigma * sqrt(dt) * draw.
    All arguments vectorize.
    """
    drift = params.kappa * (np.asarray(lambda_ask) - np.asarray(lambda_bid)) * params.dt
    noise = params.sigma * np.sqrt(params.dt) * np.asarray(gaussian_draw)
    return s + drift + noise


def sample_fills(lambda_bid, lambda_ask, delta_bid, delta_ask, curve: FillCurve,
                 dt_days: float, rng, exact_arrivals: bool = False):
    """Winning bid/ask RFQ counts for one interval of dt_days trading days.

    Default mode draws thinned-Poisson counts directly at rate
    lambda * dt_days * f(delta). With exact_arrivals=True the raw arrival
    count is drawn first and each RFQ wins independently with probability
    f(delta) (distributionally identical, trace-level debugging).
    """
    if dt_days <= 0:
        raise ValueError("dt_days must be > 0")
    rng = as_generator(rng)
    f_bid = fill_probability(curve, delta_bid)
    f_ask = fill_probability(curve, delta_ask)
    if exact_arrivals:
        arr_bid = rng.poisson(np.asarray(lambda_bid) * dt_days)
        arr_ask = rng.poisson(np.asarray(lambda_ask) * dt_days)
        n_bid = rng.binomial(arr_bid, f_bid)
        n_ask = rng.binomial(arr_ask, f_ask)
    else:
        n_bid = rng.poisson(np.asarray(lambda_bid) * dt_days * f_bid)
        n_ask = rng.poisson(np.asarray(lambda_ask) * dt_days * f_ask)
    return n_bid, n_ask


def kappa_implied_price(s, lambda_bid, lambda_ask, kappa):
    """Diagnostic series s + kappa * (lambda_ask - lambda_bid).

    Taken verbatim from the figure definition (no dt factor); only the sign
    of (result - s) is meaningful, as the anticipated drift direction.
    """
    return s + kappa * (np.asarray(lambda_ask) - np.asarray(lambda_bid))
