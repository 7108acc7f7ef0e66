"""Synthesize the bundled flight timetables (arrivals and departures).

Real timetables are not available, so flights are drawn around a smooth
target intensity: an early-afternoon peak for the day scenario and a
declining late-evening flow for the night scenario. Output is deterministic.

    python3 scripts/make_timetables.py [--out src/queuenet/scenarios]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

SPREAD = 30.0  # must match rates.spread_window in the bundled scenarios


def target_day(t):
    return 17.0 + 6.0 * np.exp(-(((t - 850.0) / 25.0) ** 2))


def target_night(t):
    return 13.0 - 2.0 * (t - 1320.0) / 60.0


def flights_for(target, t_lo, t_hi, gap, rng, scale=1.0):
    """Flights every ``gap`` minutes (jittered) carrying the target's load."""
    times = np.arange(t_lo, t_hi, gap) + rng.uniform(-0.4, 0.4, size=int(np.ceil((t_hi - t_lo) / gap)))
    # a flight spreads over the SPREAD minutes after landing, so it carries the
    # demand of that window divided among the flights landing within it
    loads = scale * target(times + SPREAD / 2) * gap
    loads *= rng.uniform(0.85, 1.15, size=loads.size)
    return [(round(float(t), 2), int(round(n))) for t, n in zip(times, loads)]


def write(path, flights):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["time_min", "passengers"])
        w.writerows(flights)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/queuenet/scenarios"))
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args(argv)
    out = Path(args.out)
    rng = np.random.default_rng(args.seed)
    # departures: taxis arrive with passengers flying out, 0.05 taxis per departing passenger
    write(out / "day_arrivals.csv", flights_for(target_day, 800, 905, 4.0, rng))
    write(out / "day_departures.csv", flights_for(lambda t: np.full_like(t, 50.0), 800, 905, 5.0, rng))
    write(out / "night_arrivals.csv", flights_for(target_night, 1280, 1385, 6.0, rng))
    write(out / "night_departures.csv", flights_for(lambda t: 26.0 - 6.0 * (t - 1320.0) / 60.0,
                                                    1280, 1385, 8.0, rng))
    print(f"timetables written to {out}")


if __name__ == "__main__":
    main()
