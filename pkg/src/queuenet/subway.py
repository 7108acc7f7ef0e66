"""Subway access: security check and ticket counters as tandem M/M/c stages.

Stages are solved as independent birth-death chains. The downstream stage
sees the upstream output approximated by ``min(arrivals, capacity)``; the
passenger then waits ``M`` minutes for the next train.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .ctmc import Generator, TransientState, birth_death_generator
from .errors import littles_wait
from .rates import RateProfile

Order = Literal["security-first", "ticket-first"]


@dataclass(frozen=True)
class SubwayParams:
    lambda_S: RateProfile
    q_S: float
    mu_S1: float
    mu_S2: float
    c_S1: int
    c_S2: int
    K_S1: int
    K_S2: int
    M: float
    order: Order = "security-first"
    security: bool = True

    def __post_init__(self):
        if not 0.0 <= self.q_S <= 1.0:
            raise ValueError(f"q_S={self.q_S} must lie in [0, 1]")
        if not (self.mu_S1 > 0 and self.mu_S2 > 0):
            raise ValueError("subway service rates must be positive")
        if min(self.c_S1, self.c_S2, self.K_S1, self.K_S2) < 1:
            raise ValueError("subway server counts and truncations must be at least 1")
        if self.M < 0:
            raise ValueError("M must be nonnegative")
        if self.order not in ("security-first", "ticket-first"):
            raise ValueError(f"unknown stage order {self.order!r}")

    def stage_profiles(self) -> tuple[RateProfile, RateProfile]:
        """Security and ticket arrival-rate profiles."""
        return (self.lambda_S.map(lambda lam: subway_stage_rates(self, lam)[0]),
                self.lambda_S.map(lambda lam: subway_stage_rates(self, lam)[1]))

    def utilizations(self, lambda_S_now: float) -> tuple[float, float]:
        l1, l2 = subway_stage_rates(self, lambda_S_now)
        return l1 / (self.c_S1 * self.mu_S1), l2 / (self.c_S2 * self.mu_S2)


def subway_stage_rates(params: SubwayParams, lambda_S_now: float) -> tuple[float, float]:
    """Arrival rates ``(lambda_S1, lambda_S2)`` at security and ticketing."""
    q = params.q_S
    if not params.security:
        return 0.0, q * lambda_S_now
    if params.order == "security-first":
        return lambda_S_now, q * min(params.c_S1 * params.mu_S1, lambda_S_now)
    lam2 = q * lambda_S_now
    return min(lam2, params.c_S2 * params.mu_S2) + (1.0 - q) * lambda_S_now, lam2


def build_stage_generators(params: SubwayParams) -> tuple[Generator, Generator]:
    sec, tick = params.stage_profiles()
    return (
        birth_death_generator(params.K_S1, sec, params.mu_S1, params.c_S1,
                              f"subway security M/M/{params.c_S1}/{params.K_S1}"),
        birth_death_generator(params.K_S2, tick, params.mu_S2, params.c_S2,
                              f"subway tickets M/M/{params.c_S2}/{params.K_S2}"),
    )


def stage_length(state: TransientState) -> float:
    return float(state.probs @ np.arange(state.probs.size))


def subway_sojourn(
    sec_state: TransientState,
    tick_state: TransientState,
    params: SubwayParams,
    lambda_S_now: float,
    lambda_S2_now: float,
) -> float:
    """``L_S1 / lambda_S + q_S L_S2 / lambda_S2 + M``.

    The security term divides by the subway arrival rate ``lambda_S`` (not
    the stage rate) in both orders; without a security station it is dropped.
    """
    L1 = stage_length(sec_state) if params.security else 0.0
    L2 = stage_length(tick_state)
    wait = params.M
    if params.security:
        wait += littles_wait(L1, lambda_S_now)
    if lambda_S2_now > 0:
        wait += params.q_S * L2 / lambda_S2_now
    return wait
