"""Regenerate the bundled synthetic price file.

Simulates the leverage SV model on the NYSE trading calendar
2010-01-04 .. 2022-07-29 and writes ``date,adj_close``.  Needs pandas
for the holiday rules; the package itself does not.
"""
import argparse
from pathlib import Path

import numpy as np
import pandas as pd
from pandas.tseries.holiday import (
    AbstractHolidayCalendar,
    GoodFriday,
    Holiday,
    USLaborDay,
    USMartinLutherKingJr,
    USMemorialDay,
    USPresidentsDay,
    USThanksgivingDay,
    nearest_workday,
    sunday_to_monday,
)

from smcforecast.model import SV
from smcforecast.rng import generator

SPECIAL_CLOSURES = ["2012-10-29", "2012-10-30", "2018-12-05"]


class NYSECalendar(AbstractHolidayCalendar):
    rules = [
        Holiday("New Year", month=1, day=1, observance=sunday_to_monday),
        USMartinLutherKingJr,
        USPresidentsDay,
        GoodFriday,
        USMemorialDay,
        Holiday("Juneteenth", month=6, day=19, start_date="2022-01-01", observance=nearest_workday),
        Holiday("Independence Day", month=7, day=4, observance=nearest_workday),
        USLaborDay,
        USThanksgivingDay,
        Holiday("Christmas", month=12, day=25, observance=nearest_workday),
    ]


def trading_days(start, end):
    days = pd.bdate_range(start, end)
    closed = NYSECalendar().holidays(start, end).union(pd.DatetimeIndex(SPECIAL_CLOSURES))
    return days.difference(closed)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path,
                    default=Path(__file__).resolve().parents[1] / "src/smcforecast/data/sample_prices.csv")
    ap.add_argument("--seed", type=int, default=20100104)
    args = ap.parse_args()

    days = trading_days("2010-01-04", "2022-07-29")
    theta = np.array([-0.1, 0.97, 0.04, -0.6])
    _, y = SV.simulate(theta, len(days) - 1, generator(args.seed))
    prices = 113.33 * np.exp(np.concatenate([[0.0], np.cumsum(y)]) / 100.0)
    with args.out.open("w") as fh:
        fh.write("date,adj_close\n")
        for d, p in zip(days, prices):
            fh.write(f"{d.date().isoformat()},{p:.6f}\n")
    print(f"wrote {len(days)} rows to {args.out}")


if __name__ == "__main__":
    main()
