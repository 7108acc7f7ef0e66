"""Multinomial-logit mode choice among taxi, bus and subway.

Utility per class and mode is ``w_O * O - w_T * W / tau - w_J * J``: a
static part, queueing time (converted to utility with ``tau`` minutes per
util) and the queue toll. Time and toll are disutilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .rates import ShareVector

MODES = ("X", "B", "S")


class TollScheme(NamedTuple):
    J_X: float = 0.0
    J_B: float = 0.0
    J_S: float = 0.0

    def check(self, lo: Sequence[float] | float = 0.0, hi: Sequence[float] | float = np.inf) -> "TollScheme":
        arr = np.asarray(self, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr < np.asarray(lo) - 1e-12) or np.any(arr > np.asarray(hi) + 1e-12):
            raise ValueError(f"tolls {tuple(self)} outside [{lo}, {hi}]")
        return self


def _triple(x: Sequence[float], name: str) -> tuple[float, float, float]:
    vals = tuple(float(v) for v in x)
    if len(vals) != 3:
        raise ValueError(f"{name} needs one value per mode (taxi, bus, subway)")
    return vals  # type: ignore[return-value]


@dataclass(frozen=True)
class PassengerClass:
    O: tuple[float, float, float]
    w_O: tuple[float, float, float]
    w_T: tuple[float, float, float]
    w_J: tuple[float, float, float]
    proportion: float = 1.0

    def __post_init__(self):
        for name in ("O", "w_O", "w_T", "w_J"):
            object.__setattr__(self, name, _triple(getattr(self, name), name))
        for name in ("w_O", "w_T", "w_J"):
            if min(getattr(self, name)) < 0:
                raise ValueError(f"weights {name} must be nonnegative")
        if not self.proportion >= 0:
            raise ValueError("class proportion must be nonnegative")

    def utilities(self, W: Sequence[float], tolls: Sequence[float], tau: float) -> np.ndarray:
        return np.array([
            systematic_utility(self.O[i], W[i], tolls[i], (self.w_O[i], self.w_T[i], self.w_J[i]), tau)
            for i in range(3)
        ])


@dataclass(frozen=True)
class ClassUtilityParams:
    classes: tuple[PassengerClass, ...]
    tau: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes:
            raise ValueError("need at least one passenger class")
        if abs(sum(c.proportion for c in self.classes) - 1.0) > 1e-9:
            raise ValueError("class proportions must sum to 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")


def systematic_utility(
    O: float, W: float, J: float, weights: tuple[float, float, float], tau: float = 1.0
) -> float:
    """``w_O * O - w_T * W / tau - w_J * J`` for weights ``(w_O, w_T, w_J)``."""
    w_O, w_T, w_J = weights
    return w_O * O - w_T * (W / tau) - w_J * J


def mnl_probabilities(V: Sequence[float]) -> ShareVector:
    v = np.asarray(V, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"utilities must be finite, got {V}")
    e = np.exp(v - v.max())
    p = e / e.sum()
    return ShareVector(*map(float, p))


def aggregate_shares(params: ClassUtilityParams, W: Sequence[float], tolls: Sequence[float]) -> ShareVector:
    """Class-proportion-weighted MNL shares."""
    W = _triple(W, "W")
    tolls = _triple(tolls, "tolls")
    total = np.zeros(3)
    for c in params.classes:
        total += c.proportion * np.asarray(mnl_probabilities(c.utilities(W, tolls, params.tau)))
    return ShareVector(*map(float, total / total.sum()))
