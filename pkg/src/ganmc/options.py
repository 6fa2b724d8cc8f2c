"""Monte Carlo option pricing over similarity-filtered generated tracks.

European prices discount the mean terminal payoff with the discrete
factor (1 + r*dt)^(-T0/dt); American prices are the midpoint of the
discounted and undiscounted payoff means.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .similarity import rank_and_select


class PricingError(ValueError):
    pass


@dataclass(frozen=True)
class OptionContract:
    side: str  # "call" | "put"
    style: str  # "european" | "american"
    strike: float
    t0_years: float
    underlying: str = ""

    def __post_init__(self):
        if self.side not in ("call", "put"):
            raise PricingError(f"side must be call or put, got {self.side!r}")
        if self.style not in ("european", "american"):
            raise PricingError(f"style must be european or american, got {self.style!r}")
        if not (self.strike > 0):
            raise PricingError(f"strike must be positive, got {self.strike}")
        if not (self.t0_years > 0):
            raise PricingError(f"time to expiry must be positive, got {self.t0_years}")


@dataclass(frozen=True)
class OptionPrice:
    value: float
    lower: float
    upper: float
    n_samples: int

    def __post_init__(self):
        if not (self.lower <= self.value <= self.upper):
            raise PricingError("price bounds out of order")
        if self.value < 0:
            raise PricingError("negative option price")


def payoff_index(t0_years: float, dt: float, horizon: int) -> int:
    """1-based day index T0/dt into a track; must be integral and within T."""
    raw = t0_years / dt
    k = round(raw)
    if abs(raw - k) > 1e-9:
        raise PricingError(f"T0/dt = {raw} is not an integral track index")
    if k < 1:
        raise PricingError(f"payoff index {k} < 1")
    if k > horizon:
        raise PricingError(f"horizon exceeds generator window: index {k} > T={horizon}")
    return int(k)


def discount_factor(r: float, t0_years: float, dt: float) -> float:
    return float((1.0 + r * dt) ** (-t0_years / dt))


def _terminal_values(tracks, t0_years: float, dt: float) -> np.ndarray:
    mat = np.asarray(tracks, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 1:
        raise PricingError("need at least one track")
    k = payoff_index(t0_years, dt, mat.shape[1])
    return mat[:, k - 1]


def price_european_call(tracks, strike: float, r: float, t0_years: float, dt: float) -> OptionPrice:
    terminal = _terminal_values(tracks, t0_years, dt)
    value = discount_factor(r, t0_years, dt) * float(np.maximum(terminal - strike, 0.0).mean())
    return OptionPrice(value=value, lower=value, upper=value, n_samples=terminal.shape[0])


def price_european_put(tracks, strike: float, r: float, t0_years: float, dt: float) -> OptionPrice:
    terminal = _terminal_values(tracks, t0_years, dt)
    value = discount_factor(r, t0_years, dt) * float(np.maximum(strike - terminal, 0.0).mean())
    return OptionPrice(value=value, lower=value, upper=value, n_samples=terminal.shape[0])


def price_american(side: str, tracks, strike: float, r: float, t0_years: float, dt: float) -> OptionPrice:
    """Midpoint of the discounted (lower) and undiscounted (upper) payoff means."""
    terminal = _terminal_values(tracks, t0_years, dt)
    if side == "call":
        mean_payoff = float(np.maximum(terminal - strike, 0.0).mean())
    elif side == "put":
        mean_payoff = float(np.maximum(strike - terminal, 0.0).mean())
    else:
        raise PricingError(f"side must be call or put, got {side!r}")
    lower = discount_factor(r, t0_years, dt) * mean_payoff
    upper = mean_payoff
    return OptionPrice(
        value=0.5 * (lower + upper),
        lower=lower,
        upper=upper,
        n_samples=terminal.shape[0],
    )


def price_option(contract: OptionContract, tracks, r: float, dt: float) -> OptionPrice:
    if contract.style == "american":
        return price_american(contract.side, tracks, contract.strike, r, contract.t0_years, dt)
    if contract.side == "call":
        return price_european_call(tracks, contract.strike, r, contract.t0_years, dt)
    return price_european_put(tracks, contract.strike, r, contract.t0_years, dt)


def empirical_variance(
    sample_tracks: Callable[[int, int], np.ndarray],
    price_fn: Callable[[np.ndarray], float],
    reference: np.ndarray,
    alpha: float,
    repetitions: int,
    n2_values,
    seed: int = 0,
) -> list[tuple[int, float]]:
    """Sample variance of the full sample->filter->price pipeline.

    For each N2, the pipeline runs `repetitions` times with distinct
    seeds derived from `seed`; the table pairs each N2 with the sample
    variance of the resulting prices.
    """
    if repetitions < 2:
        raise PricingError(f"need at least 2 repetitions, got {repetitions}")
    table = []
    for n2 in n2_values:
        prices = np.empty(repetitions)
        for rep in range(repetitions):
            tracks = sample_tracks(n2, seed + rep)
            ranking = rank_and_select(tracks, reference, alpha)
            prices[rep] = price_fn(tracks[ranking.selected])
        table.append((int(n2), float(prices.var(ddof=1))))
    return table
