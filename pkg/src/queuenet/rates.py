"""Piecewise-constant arrival intensities and their per-mode split.

Every time-varying rate in the package (passenger arrivals, taxi supply,
per-stage arrival rates) is a :class:`RateProfile`: a right-continuous step
function on a half-open horizon ``[t_start, t_end)``, in units per minute.
"""

from __future__ import annotations

import bisect
import csv
import math
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

SIMPLEX_TOL = 1e-12


class RateError(ValueError):
    """Invalid rate profile, share vector or timetable."""


class ShareVector(NamedTuple):
    """Mode shares (taxi, bus, subway) on the probability simplex."""

    alpha: float
    beta: float
    gamma: float

    def check(self, tol: float = SIMPLEX_TOL) -> "ShareVector":
        arr = np.asarray(self, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr < -tol) or abs(arr.sum() - 1.0) > tol:
            raise RateError(f"shares {tuple(self)} are not on the simplex")
        return self

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


class RateProfile:
    """Step-function intensity on ``[breakpoints[0], breakpoints[-1])``.

    ``values[k]`` applies on ``[breakpoints[k], breakpoints[k+1])``.
    """

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints: Sequence[float], values: Sequence[float]):
        bp = np.array(breakpoints, dtype=float)
        vals = np.array(values, dtype=float)
        if bp.ndim != 1 or vals.ndim != 1 or len(bp) != len(vals) + 1 or len(vals) == 0:
            raise RateError("need len(breakpoints) == len(values) + 1 >= 2")
        if not np.all(np.isfinite(bp)) or np.any(np.diff(bp) <= 0):
            raise RateError("breakpoints must be finite and strictly ascending")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise RateError("rates must be finite and nonnegative")
        bp.setflags(write=False)
        vals.setflags(write=False)
        self.breakpoints = bp
        self.values = vals

    @classmethod
    def constant(cls, value: float, t_start: float, t_end: float) -> "RateProfile":
        return cls([t_start, t_end], [value])

    @property
    def horizon(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def peak(self) -> float:
        return float(self.values.max())

    def __call__(self, t: float) -> float:
        return eval_rate(self, t)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RateProfile):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.values, other.values
        )

    def __repr__(self) -> str:
        lo, hi = self.horizon
        return f"RateProfile([{lo:g}, {hi:g}), {len(self.values)} bins, peak={self.peak:g})"

    def scale(self, factor: float) -> "RateProfile":
        return RateProfile(self.breakpoints, self.values * factor)

    def map(self, fn: Callable[[float], float]) -> "RateProfile":
        """Apply ``fn`` to every bin value (breakpoints unchanged)."""
        return RateProfile(self.breakpoints, [fn(float(v)) for v in self.values])

    def clamp_time(self, t: float) -> float:
        """Time ``t`` pulled into the profile's support: the last bin covers ``t >= t_end``."""
        lo, hi = self.horizon
        if t < lo:
            raise RateError(f"t={t} precedes profile start {lo}")
        if t >= hi:
            return float(np.nextafter(hi, lo))
        return t

    def value_at_or_before(self, t: float) -> float:
        """Like :func:`eval_rate`, but the final bin's value persists past ``t_end``."""
        return eval_rate(self, self.clamp_time(t))

    def integrate(self, a: float, b: float) -> float:
        """Integral of the intensity over ``[a, b]`` (clipped to the horizon)."""
        lo, hi = self.horizon
        a, b = max(a, lo), min(b, hi)
        if b <= a:
            return 0.0
        bp = self.breakpoints
        left = np.maximum(bp[:-1], a)
        right = np.minimum(bp[1:], b)
        return float(np.sum(self.values * np.clip(right - left, 0.0, None)))

    def mean(self, a: float, b: float) -> float:
        """Time average over ``[a, b]``; falls back to the value in force at ``a`` when the
        window has no overlap with the horizon or zero length."""
        lo, hi = self.horizon
        a_in, b_in = max(a, lo), min(b, hi)
        if b_in - a_in <= 0:
            return self.value_at_or_before(a)
        return self.integrate(a_in, b_in) / (b_in - a_in)

    def total(self) -> float:
        return float(np.sum(self.values * np.diff(self.breakpoints)))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t_start", "t_end", "rate"])
            for a, b, v in zip(self.breakpoints[:-1], self.breakpoints[1:], self.values):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(v))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "RateProfile":
        rows = _read_csv(path, ("t_start", "t_end", "rate"))
        if not rows:
            raise RateError(f"{path}: no rate rows")
        starts = [r[0] for r in rows]
        ends = [r[1] for r in rows]
        for k in range(1, len(rows)):
            if starts[k] != ends[k - 1]:
                raise RateError(f"{path}: row {k + 2} does not start where the previous ends")
        return cls(starts + [ends[-1]], [r[2] for r in rows])


def eval_rate(profile: RateProfile, t: float) -> float:
    """Intensity in force at ``t`` (right-continuous, horizon half-open)."""
    lo, hi = profile.horizon
    if not lo <= t < hi:
        raise RateError(f"t={t} outside profile horizon [{lo}, {hi})")
    k = bisect.bisect_right(profile.breakpoints, t) - 1
    return float(profile.values[k])


class ModeStreams(NamedTuple):
    lambda_X: RateProfile
    lambda_B: RateProfile
    lambda_S: RateProfile


def split_streams(total: RateProfile, shares: ShareVector | Sequence[float]) -> ModeStreams:
    """Split total passenger flow into taxi / bus / subway streams by share."""
    shares = ShareVector(*map(float, shares)).check()
    return ModeStreams(*(total.scale(s) for s in shares))


def timetable_to_profile(
    flights: Iterable[tuple[float, float]],
    spread_window: float = 30.0,
    bin_width: float = 1.0,
    horizon: tuple[float, float] | None = None,
) -> RateProfile:
    """Average flight passenger loads into a binned arrival intensity.

    Each flight's passengers are spread uniformly over
    ``[time, time + spread_window]`` and the resulting intensity is averaged
    into bins of ``bin_width`` minutes. Bins start at the horizon start (or
    the earliest flight, floored to a bin multiple) and cover every flight's
    window, so the profile integrates to the total passenger count unless an
    explicit ``horizon`` cuts some windows off.
    """
    if spread_window <= 0 or bin_width <= 0:
        raise RateError("spread_window and bin_width must be positive")
    flights = [(float(t), float(n)) for t, n in flights]
    if any(n < 0 or not math.isfinite(n) or not math.isfinite(t) for t, n in flights):
        raise RateError("flight passenger counts must be finite and nonnegative")
    if horizon is not None:
        start, end = map(float, horizon)
    elif flights:
        start = math.floor(min(t for t, _ in flights) / bin_width) * bin_width
        end = max(t for t, _ in flights) + spread_window
    else:
        start, end = 0.0, bin_width
    nbins = max(1, math.ceil((end - start) / bin_width - 1e-9))
    edges = start + bin_width * np.arange(nbins + 1)
    rates = np.zeros(nbins)
    for t, n in flights:
        left = np.maximum(edges[:-1], t)
        right = np.minimum(edges[1:], t + spread_window)
        rates += (n / spread_window) * np.clip(right - left, 0.0, None)
    return RateProfile(edges, rates / bin_width)


def read_timetable(path: str | Path) -> list[tuple[float, float]]:
    """Flights from a ``time_min,passengers`` CSV (header required)."""
    return [(r[0], r[1]) for r in _read_csv(path, ("time_min", "passengers"))]


def _read_csv(path: str | Path, columns: tuple[str, ...]) -> list[list[float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != columns:
            raise RateError(f"{path}: expected header {','.join(columns)}, got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise RateError(f"{path}:{lineno}: {exc}") from None
            if len(rows[-1]) != len(columns):
                raise RateError(f"{path}:{lineno}: expected {len(columns)} columns")
        return rows
