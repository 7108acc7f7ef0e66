"""Passenger-taxi double-ended queue with exponential matching time.

The chain lives on ``(i, j)``: ``i`` waiting passengers (truncated at
``passenger_cap``) and ``j`` taxis in the pool (at most ``K_T``), stored
level-major with level = ``i``. Three events drive it: a passenger arrives,
a taxi arrives (lost when the pool is full), or a matching completes and
removes one of each.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .ctmc import Generator, Transition, TransientState, rule
from .errors import littles_wait
from .rates import RateProfile


@dataclass(frozen=True)
class TaxiParams:
    lambda_X: RateProfile
    lambda_T: RateProfile
    mu: float
    K_T: int
    passenger_cap: int

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("matching rate mu must be positive")
        if self.K_T < 1:
            raise ValueError("K_T must be at least 1")
        if self.passenger_cap < 1:
            raise ValueError("passenger_cap must be at least 1")

    @property
    def dimension(self) -> int:
        return (self.passenger_cap + 1) * (self.K_T + 1)

    def index(self, i: int, j: int) -> int:
        return i * (self.K_T + 1) + j


@dataclass(frozen=True, eq=False)
class TaxiState:
    """Transient distribution over (passengers, taxis)."""

    state: TransientState
    K_T: int

    @property
    def passenger_cap(self) -> int:
        return self.state.probs.size // (self.K_T + 1) - 1

    @property
    def t(self) -> float:
        return self.state.t

    def grid(self) -> np.ndarray:
        """Probabilities as a ``(passenger_cap + 1, K_T + 1)`` array."""
        return self.state.probs.reshape(-1, self.K_T + 1)

    @classmethod
    def point(cls, passengers: int, taxis: int, K_T: int, passenger_cap: int, t: float = 0.0) -> "TaxiState":
        if not (0 <= passengers <= passenger_cap and 0 <= taxis <= K_T):
            raise ValueError(f"({passengers}, {taxis}) outside the taxi state space")
        p = np.zeros((passenger_cap + 1, K_T + 1))
        p[passengers, taxis] = 1.0
        return cls(TransientState(p.ravel(), t), K_T)

    def resized(self, passenger_cap: int) -> "TaxiState":
        """Same distribution embedded in a larger passenger truncation."""
        g = self.grid()
        if passenger_cap < g.shape[0] - 1:
            if g[passenger_cap + 1:].sum() > 0:
                raise ValueError("cannot shrink the passenger cap below occupied levels")
            g = g[: passenger_cap + 1]
        else:
            g = np.vstack([g, np.zeros((passenger_cap + 1 - g.shape[0], self.K_T + 1))])
        return TaxiState(TransientState(g.ravel(), self.t), self.K_T)

    def occupied_cap(self) -> int:
        """Highest passenger level carrying probability mass."""
        levels = np.flatnonzero(self.grid().sum(axis=1) > 0)
        return int(levels[-1]) if levels.size else 0


@lru_cache(maxsize=64)
def _taxi_rules(cap: int, K: int) -> tuple[Transition, ...]:
    # rate-free event structure; MSWA rebuilds generators of the same shape often
    states = [(i, j) for i in range(cap + 1) for j in range(K + 1)]
    index = {(i, j): i * (K + 1) + j for i, j in states}
    return (
        rule("passenger arrival", 0.0, states, index,
             lambda s: s[0] < cap, lambda s: (s[0] + 1, s[1])),
        rule("taxi arrival", 0.0, states, index,
             lambda s: s[1] < K, lambda s: (s[0], s[1] + 1)),
        rule("matching", 0.0, states, index,
             lambda s: s[0] >= 1 and s[1] >= 1, lambda s: (s[0] - 1, s[1] - 1)),
    )


def build_taxi_generator(params: TaxiParams) -> Generator:
    rates = (params.lambda_X, params.lambda_T, params.mu)
    rules = tuple(replace(tr, rate=r) for tr, r in zip(_taxi_rules(params.passenger_cap, params.K_T), rates))
    return Generator(params.dimension, rules,
                     f"taxi double-ended queue K_T={params.K_T} cap={params.passenger_cap}")


def taxi_queue_length(state: TaxiState) -> float:
    """Expected number of waiting passengers."""
    g = state.grid()
    return float(g.sum(axis=1) @ np.arange(g.shape[0]))


def taxi_pool_length(state: TaxiState) -> float:
    g = state.grid()
    return float(g.sum(axis=0) @ np.arange(g.shape[1]))


def taxi_sojourn_time(L: float, lambda_X_now: float) -> float:
    """Little's-law passenger wait; raises ``UndefinedWaitError`` when no passengers arrive."""
    return littles_wait(L, lambda_X_now)
