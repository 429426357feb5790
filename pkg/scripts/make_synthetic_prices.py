"""Regenerate src/qfolio/data/prices_synthetic.csv.

The file is SYNTHETIC: correlated geometric Brownian motion on the trading days
between 2016-01-04 and 2021-09-20, with annual drifts from the published mean
returns, the published unit-diagonal matrix used as the correlation, and
made-up annual volatilities. It exercises the ingestion path; it is not market
data.
"""

import csv
import datetime as dt
from pathlib import Path

import numpy as np

TICKERS = ["BRKM5", "ITUB4", "KLBN4", "VALE3"]
MU = np.array([0.32, 0.06, 0.11, 0.30])
VOL = np.array([0.50, 0.30, 0.32, 0.42])
CORR = np.array([
    [1.00, 0.37, 0.28, 0.33],
    [0.37, 1.00, 0.18, 0.36],
    [0.28, 0.18, 1.00, 0.24],
    [0.33, 0.36, 0.24, 1.00],
])
START_PRICES = np.array([16.0, 20.0, 13.0, 9.0])
DAYS = 250


def business_days(start: dt.date, end: dt.date):
    d = start
    while d <= end:
        if d.weekday() < 5:
            yield d
        d += dt.timedelta(days=1)


def main(seed: int = 20210920) -> None:
    rng = np.random.default_rng(seed)
    dates = list(business_days(dt.date(2016, 1, 4), dt.date(2021, 9, 20)))
    chol = np.linalg.cholesky(CORR)
    shocks = rng.standard_normal((len(dates) - 1, len(TICKERS))) @ chol.T
    daily = MU / DAYS + shocks * VOL / np.sqrt(DAYS)
    prices = START_PRICES * np.vstack([np.ones(len(TICKERS)), np.cumprod(1.0 + daily, axis=0)])
    out = Path(__file__).resolve().parents[1] / "src" / "qfolio" / "data" / "prices_synthetic.csv"
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date"] + TICKERS)
        for d, row in zip(dates, prices):
            writer.writerow([d.isoformat()] + [f"{x:.4f}" for x in row])
    print(f"wrote {len(dates)} rows to {out}")


if __name__ == "__main__":
    main()
