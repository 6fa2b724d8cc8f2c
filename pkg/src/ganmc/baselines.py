"""Reference pricers: Black-Scholes, GBM Monte Carlo, linear regression.

The GBM simulators use the exact lognormal daily step, so paths stay
positive regardless of the step size. The Monte Carlo option baseline
anchors the drift to the strike (log(X/s)/tau) by default;
`risk_neutral=True` switches to the risk-neutral drift r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .market_data import DEFAULT_DT, PriceSeries, QuoteSeries
from .options import PricingError, discount_factor
from .futures import estimate_carry


@dataclass(frozen=True)
class GbmParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise PricingError(f"volatility must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class LinearPricer:
    """Affine pricer over (s/X, tau) for options or (s, tau) for futures."""

    coefficients: np.ndarray  # (intercept, per-feature...)
    regime: str  # "all" | "itm" | "otm"
    kind: str  # "option" | "futures"

    def __post_init__(self):
        if self.regime not in ("all", "itm", "otm"):
            raise PricingError(f"unknown regime {self.regime!r}")
        if self.kind not in ("option", "futures"):
            raise PricingError(f"unknown pricer kind {self.kind!r}")
        if not np.all(np.isfinite(self.coefficients)):
            raise PricingError("non-finite regression coefficients")


def norm_cdf(x: float) -> float:
    """Standard normal CDF via erf; absolute error well below 1e-9."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def bs_price(side: str, spot: float, strike: float, r: float, sigma: float, tau: float) -> float:
    """Closed-form European option value."""
    if side not in ("call", "put"):
        raise PricingError(f"side must be call or put, got {side!r}")
    for name, v in (("spot", spot), ("strike", strike), ("sigma", sigma), ("tau", tau)):
        if not (v > 0):
            raise PricingError(f"{name} must be positive, got {v}")
    st = sigma * math.sqrt(tau)
    d1 = (math.log(spot / strike) + (r + 0.5 * sigma * sigma) * tau) / st
    d2 = d1 - st
    if side == "call":
        return spot * norm_cdf(d1) - strike * math.exp(-r * tau) * norm_cdf(d2)
    return strike * math.exp(-r * tau) * norm_cdf(-d2) - spot * norm_cdf(-d1)


def simulate_gbm_terminals(
    spot: float,
    mu: float,
    sigma: float,
    tau: float,
    n_paths: int,
    seed: int,
    dt: float = DEFAULT_DT,
) -> np.ndarray:
    """Terminal prices after round(tau/dt) exact lognormal daily steps."""
    if n_paths < 1:
        raise PricingError(f"need at least one path, got {n_paths}")
    steps = max(int(round(tau / dt)), 1)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((n_paths, steps))
    log_increments = (mu - 0.5 * sigma * sigma) * dt + sigma * math.sqrt(dt) * eps
    return spot * np.exp(log_increments.sum(axis=1))


def gbm_mc_option(
    side: str,
    spot: float,
    strike: float,
    r: float,
    sigma: float,
    tau: float,
    n_paths: int,
    seed: int,
    dt: float = DEFAULT_DT,
    style: str = "european",
    risk_neutral: bool = False,
) -> float:
    """GBM Monte Carlo option price with strike-anchored drift by default."""
    for name, v in (("spot", spot), ("strike", strike), ("tau", tau)):
        if not (v > 0):
            raise PricingError(f"{name} must be positive, got {v}")
    if sigma < 0:
        raise PricingError(f"sigma must be >= 0, got {sigma}")
    # the simulator subtracts sigma^2/2 itself, so the risk-neutral
    # price drift is plain r
    mu = r if risk_neutral else math.log(strike / spot) / tau
    terminal = simulate_gbm_terminals(spot, mu, sigma, tau, n_paths, seed, dt)
    if side == "call":
        mean_payoff = float(np.maximum(terminal - strike, 0.0).mean())
    elif side == "put":
        mean_payoff = float(np.maximum(strike - terminal, 0.0).mean())
    else:
        raise PricingError(f"side must be call or put, got {side!r}")
    lower = discount_factor(r, tau, dt) * mean_payoff
    if style == "european":
        return lower
    if style == "american":
        return 0.5 * (lower + mean_payoff)
    raise PricingError(f"style must be european or american, got {style!r}")


def estimate_gbm(series: PriceSeries, dt: float = DEFAULT_DT) -> GbmParams:
    """Drift from mean simple returns per unit time, volatility from log returns."""
    s = np.asarray(series.prices, dtype=float)
    if s.shape[0] < 3:
        raise PricingError(f"series too short to estimate GBM: {s.shape[0]} < 3")
    simple = np.diff(s) / s[:-1]
    mu = float(simple.mean() / dt)
    log_returns = np.diff(np.log(s))
    sigma = float(log_returns.std(ddof=1) / math.sqrt(dt))
    return GbmParams(mu=mu, sigma=sigma)


def gbm_mc_equity_futures(
    spot: float,
    r: float,
    tau: float,
    dividend_forecast: float,
    params: GbmParams,
    n_paths: int,
    seed: int,
    dt: float = DEFAULT_DT,
) -> float:
    """Equity futures price with GBM terminals in the dividend-yield term."""
    if not (spot > 0):
        raise PricingError(f"spot must be positive, got {spot}")
    if not (tau > 0):
        raise PricingError(f"tau must be positive, got {tau}")
    terminal = simulate_gbm_terminals(spot, params.mu, params.sigma, tau, n_paths, seed, dt)
    mean_yield = float((dividend_forecast / terminal).mean())
    return float(spot * math.exp((r - mean_yield) * tau))


def gbm_mc_commodity(
    spot: float,
    quotes: QuoteSeries,
    r: float,
    tau: float,
    n3: int,
    params: GbmParams,
    n_paths: int,
    seed: int,
    dt: float = DEFAULT_DT,
) -> float:
    """Commodity forward/futures price with GBM terminals plus compounded carry."""
    if not (spot > 0):
        raise PricingError(f"spot must be positive, got {spot}")
    if not (tau > 0):
        raise PricingError(f"tau must be positive, got {tau}")
    carry = estimate_carry(quotes, r, tau, n3)
    terminal = simulate_gbm_terminals(spot, params.mu, params.sigma, tau, n_paths, seed, dt)
    return float(terminal.mean() + carry.value * math.exp(r * tau))


def _option_in_regime(moneyness: float, side: str, regime: str) -> bool:
    if regime == "all":
        return True
    itm = moneyness > 1.0 if side == "call" else moneyness < 1.0
    return itm if regime == "itm" else not itm


def fit_linear_pricer(rows, regime: str = "all", kind: str = "option") -> LinearPricer:
    """OLS fit of observed prices on (1, s/X, tau) or (1, s, tau).

    Option rows are (spot, strike, tau, side, price); futures rows are
    (spot, tau, price). The regime filter (ITM/OTM by moneyness and
    side) applies to option rows only.
    """
    features, targets = [], []
    for row in rows:
        if kind == "option":
            spot, strike, tau, side, price = row
            if not _option_in_regime(spot / strike, side, regime):
                continue
            features.append([1.0, spot / strike, tau])
        else:
            spot, tau, price = row
            features.append([1.0, spot, tau])
        targets.append(price)
    if not features:
        raise PricingError(f"no rows left in regime {regime!r}")
    design = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if design.shape[0] < design.shape[1]:
        raise PricingError(
            f"underdetermined fit: {design.shape[0]} rows for {design.shape[1]} coefficients"
        )
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise PricingError("rank-deficient design matrix")
    coefficients, *_ = np.linalg.lstsq(design, y, rcond=None)
    return LinearPricer(coefficients=coefficients, regime=regime, kind=kind)


def lr_price(pricer: LinearPricer, row) -> float:
    """Predict one contract's price; the row must match the fitted regime."""
    if pricer.kind == "option":
        spot, strike, tau, side = row
        if not _option_in_regime(spot / strike, side, pricer.regime):
            raise PricingError(
                f"contract with moneyness {spot / strike:.4f} is outside regime {pricer.regime!r}"
            )
        features = np.array([1.0, spot / strike, tau])
    else:
        spot, tau = row
        features = np.array([1.0, spot, tau])
    return float(features @ pricer.coefficients)
