"""Equity futures and commodity forward/futures pricing.

Equity futures combine the spot price with a dividend-yield estimate
over the generated tracks; commodity contracts add an empirically
estimated cost of carry to the mean generated terminal price.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .market_data import DividendSeries, QuoteSeries
from .options import PricingError, payoff_index


@dataclass(frozen=True)
class DividendFit:
    """OLS line through (trading-day ordinal, annual dividend per share)."""

    slope: float
    intercept: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise PricingError("dividend fit is not finite")
        if self.n_points < 1:
            raise PricingError("dividend fit needs at least 1 point")


@dataclass(frozen=True)
class EquityFuturesContract:
    underlying: str
    t0_years: float
    dividends: DividendSeries

    def __post_init__(self):
        if not (self.t0_years > 0):
            raise PricingError(f"time to delivery must be positive, got {self.t0_years}")


@dataclass(frozen=True)
class CommodityForwardContract:
    underlying: str
    t0_years: float
    quotes: QuoteSeries
    n3: int

    def __post_init__(self):
        if not (self.t0_years > 0):
            raise PricingError(f"time to delivery must be positive, got {self.t0_years}")
        if self.n3 < 0:
            raise PricingError(f"N3 must be >= 0, got {self.n3}")
        if len(self.quotes) < self.n3 + 1:
            raise PricingError(
                f"need at least N3+1={self.n3 + 1} quotes, got {len(self.quotes)}"
            )


@dataclass(frozen=True)
class CarryEstimate:
    """Average cost of carry; may be negative under backwardation."""

    value: float
    window: int

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise PricingError("carry estimate is not finite")


def fit_dividends(ds: DividendSeries) -> DividendFit:
    """Least-squares line D(t) = slope*t + intercept over the dividend history.

    Degenerate inputs (single point or all-equal indices) fall back to a
    flat line at the mean dividend.
    """
    t = np.asarray(ds.indices, dtype=float)
    d = np.asarray(ds.dps, dtype=float)
    n = t.shape[0]
    if n == 0:
        raise PricingError("empty dividend series")
    t_bar = t.mean()
    sxx = float(((t - t_bar) ** 2).sum())
    if n == 1 or sxx == 0.0:
        return DividendFit(slope=0.0, intercept=float(d.mean()), n_points=n)
    slope = float(((t - t_bar) * (d - d.mean())).sum() / sxx)
    intercept = float(d.mean() - slope * t_bar)
    return DividendFit(slope=slope, intercept=intercept, n_points=n)


def predict_dividend(fit: DividendFit, t_star: float) -> float:
    """Extrapolated annual dividend per share, clamped at zero."""
    return max(fit.slope * t_star + fit.intercept, 0.0)


def price_equity_futures(
    spot: float,
    tracks,
    dividend_forecast: float,
    r: float,
    t0_years: float,
    dt: float,
) -> float:
    """spot * exp{(r - mean dividend yield over tracks) * T0}."""
    mat = np.asarray(tracks, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 1:
        raise PricingError("need at least one track")
    if not (spot > 0):
        raise PricingError(f"spot must be positive, got {spot}")
    k = payoff_index(t0_years, dt, mat.shape[1])
    terminal = mat[:, k - 1]
    if np.any(terminal <= 0):
        raise PricingError("non-positive generated price at the delivery index")
    mean_yield = float((dividend_forecast / terminal).mean())
    return float(spot * math.exp((r - mean_yield) * t0_years))


def estimate_carry(quotes: QuoteSeries, r: float, t0_years: float, n3: int) -> CarryEstimate:
    """Mean of F/exp(r*T0) - spot over the latest n3+1 quote rows."""
    if n3 < 0:
        raise PricingError(f"N3 must be >= 0, got {n3}")
    if len(quotes) < n3 + 1:
        raise PricingError(f"insufficient history: need {n3 + 1} quotes, have {len(quotes)}")
    last = np.asarray(quotes.last[-(n3 + 1) :], dtype=float)
    spot = np.asarray(quotes.spot[-(n3 + 1) :], dtype=float)
    value = float((last / math.exp(r * t0_years) - spot).mean())
    return CarryEstimate(value=value, window=n3 + 1)


def price_commodity(
    tracks,
    carry: CarryEstimate,
    r: float,
    t0_years: float,
    dt: float,
) -> float:
    """Mean generated delivery-date price plus the compounded carry."""
    mat = np.asarray(tracks, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 1:
        raise PricingError("need at least one track")
    k = payoff_index(t0_years, dt, mat.shape[1])
    return float(mat[:, k - 1].mean() + carry.value * math.exp(r * t0_years))
