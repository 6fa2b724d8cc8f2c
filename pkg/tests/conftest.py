import datetime as dt

import numpy as np
import pytest


def iso_dates(n, start=dt.date(2021, 1, 4)):
    """n weekday dates starting at `start`."""
    out = []
    day = start
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def write_price_csv(path, prices, dates=None):
    dates = dates or iso_dates(len(prices))
    lines = ["date,price"] + [f"{d.isoformat()},{p}" for d, p in zip(dates, prices)]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_dividend_csv(path, dps, dates=None):
    dates = dates or iso_dates(len(dps))
    lines = ["date,dps"] + [f"{d.isoformat()},{v}" for d, v in zip(dates, dps)]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_quote_csv(path, rows, dates=None):
    dates = dates or iso_dates(len(rows))
    lines = ["date,last,ttd_years,spot"] + [
        f"{d.isoformat()},{last},{ttd},{spot}" for d, (last, ttd, spot) in zip(dates, rows)
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


def gbm_prices(n, mu=0.05, sigma=0.2, s0=100.0, dt_years=1 / 252, seed=0):
    rng = np.random.default_rng(seed)
    increments = (mu - 0.5 * sigma**2) * dt_years + sigma * np.sqrt(dt_years) * (
        rng.standard_normal(n - 1)
    )
    return s0 * np.exp(np.concatenate([[0.0], np.cumsum(increments)]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
