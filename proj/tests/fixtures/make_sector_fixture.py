#!/usr/bin/env python3
"""Regenerates the synthetic price fixtures used by the test suites.

sector10.csv: 10 stocks, 988 trading days in 2018-2021 and 248 in 2022
(weekdays minus a seeded set of exchange holidays), correlated daily
returns from a two-factor model, plus two blank cells that exercise the
forward-fill path.

sector4.csv: 4 stocks, same calendar, first 4 columns of a second draw.

The outputs are checked in; rerunning with the same numpy version
reproduces them.
"""

import numpy as np
import pandas as pd
from pathlib import Path

HERE = Path(__file__).resolve().parent
TRAIN_ROWS, TEST_ROWS = 988, 248


def calendar(rng):
    def trading_days(start, end, keep):
        days = pd.bdate_range(start, end)
        drop = rng.choice(len(days), size=len(days) - keep, replace=False)
        return days.delete(np.sort(drop))

    train = trading_days("2018-01-01", "2021-12-31", TRAIN_ROWS)
    test = trading_days("2022-01-01", "2022-12-31", TEST_ROWS)
    return train.append(test)


def simulate(rng, n_days, n_stocks):
    market = rng.normal(0.0004, 0.010, n_days)
    sector = rng.normal(0.0, 0.007, (n_days, 2))
    beta = rng.uniform(0.6, 1.4, n_stocks)
    loadings = rng.uniform(-0.5, 1.0, (n_stocks, 2))
    drift = rng.uniform(-0.0002, 0.0006, n_stocks)
    idio_vol = rng.uniform(0.008, 0.016, n_stocks)
    eps = rng.normal(0.0, 1.0, (n_days, n_stocks)) * idio_vol
    returns = drift + np.outer(market, beta) + sector @ loadings.T + eps
    start = rng.uniform(80.0, 3000.0, n_stocks)
    prices = start * np.cumprod(1.0 + returns, axis=0)
    return np.round(prices, 4)


def write(path, dates, tickers, prices, blanks=()):
    frame = pd.DataFrame(prices, columns=tickers)
    frame.insert(0, "date", dates.strftime("%Y-%m-%d"))
    text = frame.to_csv(index=False, float_format="%.4f", lineterminator="\n")
    lines = text.splitlines()
    for row, col in blanks:
        cells = lines[row + 1].split(",")
        cells[col + 1] = ""
        lines[row + 1] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")


def main():
    rng = np.random.default_rng(20230101)
    dates = calendar(rng)
    tickers10 = ["RELIANCE", "ULTRACEMCO", "TATASTEEL", "NTPC", "JSWSTEEL",
                 "ONGC", "GRASIM", "HINDALCO", "COALINDIA", "UPL"]
    write(HERE / "sector10.csv", dates, tickers10, simulate(rng, len(dates), 10),
          blanks=[(300, 3), (1100, 7)])
    write(HERE / "sector4.csv", dates, ["ALPHA", "BETA", "GAMMA", "DELTA"],
          simulate(rng, len(dates), 4))


if __name__ == "__main__":
    main()
