"""Ground-access queueing network: advance taxi, bus and subway together."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .bus import (BusParams, RenewalDistribution, RenewalState, advance_renewal, build_ticket_generator,
                  ticket_arrival_rate, ticket_queue_length, ticket_wait)
from .ctmc import InstabilityError, TransientState, choose_truncation, clock, final_state
from .errors import UndefinedWaitError, littles_wait
from .rates import ModeStreams, RateProfile, ShareVector, split_streams
from .subway import SubwayParams, build_stage_generators, stage_length, subway_stage_rates, subway_sojourn
from .taxi import TaxiParams, TaxiState, build_taxi_generator, taxi_queue_length

if TYPE_CHECKING:
    from .scenario import Scenario

REPORT_COLUMNS = ("t", "W_X", "W_B", "W_S", "L_X", "L_B", "L_S", "W_mean", "L_max")
MASS_FLOOR = 1e-15


class PredictionError(RuntimeError):
    def __init__(self, submodel: str, cause: Exception):
        super().__init__(f"{submodel}: {cause}")
        self.submodel = submodel
        self.t = getattr(cause, "t", None)


@dataclass(frozen=True, eq=False)
class NetworkState:
    taxi: TaxiState
    ticket: TransientState
    renewal: RenewalDistribution
    security: TransientState
    subway_ticket: TransientState
    t: float


@dataclass(frozen=True)
class CongestionReport:
    W_X: float
    W_B: float
    W_S: float
    L_X: float
    L_B: float
    L_S: float
    W_mean: float
    L_max: float
    t: float = math.nan

    @property
    def W(self) -> tuple[float, float, float]:
        return self.W_X, self.W_B, self.W_S

    @property
    def L(self) -> tuple[float, float, float]:
        return self.L_X, self.L_B, self.L_S

    @property
    def argmax_mode(self) -> str:
        return "XBS"[int(np.argmax(self.L))]

    def row(self) -> list[float]:
        return [getattr(self, c) for c in REPORT_COLUMNS]


def congestion_criteria(
    W: Sequence[float], L: Sequence[float], shares: Sequence[float], t: float = math.nan
) -> CongestionReport:
    """Share-weighted mean sojourn and the largest stranded crowd."""
    shares = ShareVector(*map(float, shares)).check()
    W_X, W_B, W_S = map(float, W)
    L_X, L_B, L_S = map(float, L)
    a, b, g = shares
    return CongestionReport(W_X, W_B, W_S, L_X, L_B, L_S,
                            a * W_X + b * W_B + g * W_S, max(L_X, L_B, L_S), t)


def initial_network_state(scenario: "Scenario") -> NetworkState:
    """Point-mass network state from the scenario's initial counts."""
    ini, t = scenario.initial, scenario.start
    bus = scenario.bus
    return NetworkState(
        taxi=TaxiState.point(ini.L_X, ini.taxis, scenario.taxi.K_T, max(ini.L_X, 1), t),
        ticket=TransientState.point_mass(max(ini.L_B, 1) + 1, ini.L_B, t),
        renewal=RenewalDistribution.from_state(RenewalState(ini.m0, ini.t0), bus.N, bus.T, t),
        security=TransientState.point_mass(max(ini.L_S1, 1) + 1, ini.L_S1, t),
        subway_ticket=TransientState.point_mass(max(ini.L_S2, 1) + 1, ini.L_S2, t),
        t=t,
    )


def _top(probs: np.ndarray) -> int:
    occupied = np.flatnonzero(probs > MASS_FLOOR)
    return int(occupied[-1]) if occupied.size else 0


def _pad(state: TransientState, size: int) -> TransientState:
    if size <= state.probs.size:
        return state
    return TransientState(np.concatenate([state.probs, np.zeros(size - state.probs.size)]), state.t)


def _cap(profile: RateProfile, capacity: float, horizon: float, current: np.ndarray, eps: float) -> int:
    return max(current.size - 1, choose_truncation(profile, capacity, horizon, _top(current), eps), 1)


def _advance(name: str, gen, state: TransientState, t_end: float, dt: float) -> TransientState:
    try:
        return final_state(gen, state, t_end, dt)
    except InstabilityError as exc:
        raise PredictionError(name, exc) from exc


def _infer_shares(streams: ModeStreams, a: float, b: float) -> ShareVector:
    flows = np.array([s.integrate(a, b) for s in streams])
    if flows.sum() <= 0:
        flows = np.array([s.value_at_or_before(a) for s in streams])
    if flows.sum() <= 0:
        return ShareVector(1 / 3, 1 / 3, 1 / 3)
    flows = flows / flows.sum()
    return ShareVector(*map(float, flows))


def predict(
    initial: NetworkState,
    streams: ModeStreams,
    scenario: "Scenario",
    horizon: float,
    shares: ShareVector | None = None,
) -> tuple[NetworkState, CongestionReport]:
    """Advance every submodel by ``horizon`` minutes and report at the end.

    Mode shares only enter the report's mean sojourn; when omitted they are
    inferred from the streams' flow over the horizon.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    t0 = initial.t
    t1 = clock(t0 + horizon)
    solver, taxi_cfg, bus_cfg, sub_cfg = scenario.solver, scenario.taxi, scenario.bus, scenario.subway
    dt, eps = solver.dt, solver.tail_eps
    lam_X, lam_B, lam_S = streams

    # taxi
    taxi_grid = initial.taxi.grid()
    cap = max(taxi_grid.shape[0] - 1, choose_truncation(
        lam_X, taxi_cfg.mu, horizon, _top(taxi_grid.sum(axis=1)), eps), 1)
    tparams = TaxiParams(lam_X, scenario.supply_profile, taxi_cfg.mu, taxi_cfg.K_T, cap)
    taxi0 = initial.taxi.resized(cap)
    taxi1 = TaxiState(_advance("taxi", build_taxi_generator(tparams), taxi0.state, t1, dt), taxi_cfg.K_T)

    # bus
    lam_B1 = lam_B.scale(bus_cfg.q_B)
    K_B = _cap(lam_B1, bus_cfg.c_B * bus_cfg.mu_B, horizon, initial.ticket.probs, eps)
    bparams = BusParams(lam_B, bus_cfg.q_B, bus_cfg.mu_B, bus_cfg.c_B, K_B, bus_cfg.N, bus_cfg.T)
    ticket1 = _advance("bus tickets", build_ticket_generator(bparams), _pad(initial.ticket, K_B + 1), t1, dt)
    lam_B2 = bparams.lambda_B2
    renewal1 = advance_renewal(initial.renewal, lam_B2, t1, bus_cfg.renewal_step)

    # subway
    probe = SubwayParams(lam_S, sub_cfg.q_S, sub_cfg.mu_S1, sub_cfg.mu_S2, sub_cfg.c_S1, sub_cfg.c_S2,
                         1, 1, scenario.initial.M, sub_cfg.order, sub_cfg.security)
    sec_prof, tick_prof = probe.stage_profiles()
    K_S1 = _cap(sec_prof, sub_cfg.c_S1 * sub_cfg.mu_S1, horizon, initial.security.probs, eps)
    K_S2 = _cap(tick_prof, sub_cfg.c_S2 * sub_cfg.mu_S2, horizon, initial.subway_ticket.probs, eps)
    sparams = SubwayParams(lam_S, sub_cfg.q_S, sub_cfg.mu_S1, sub_cfg.mu_S2, sub_cfg.c_S1, sub_cfg.c_S2,
                           K_S1, K_S2, scenario.initial.M, sub_cfg.order, sub_cfg.security)
    sec_gen, tick_gen = build_stage_generators(sparams)
    sec1 = _advance("subway security", sec_gen, _pad(initial.security, K_S1 + 1), t1, dt)
    stick1 = _advance("subway tickets", tick_gen, _pad(initial.subway_ticket, K_S2 + 1), t1, dt)

    state = NetworkState(taxi1, ticket1, renewal1, sec1, stick1, t1)
    if shares is None:
        shares = _infer_shares(streams, t0, t1)
    return state, report_for(state, streams, scenario, shares)


def _wait_or_sentinel(L: float, lam: float, sentinel: float) -> float:
    if L <= 0:
        return 0.0
    try:
        return littles_wait(L, lam)
    except UndefinedWaitError:
        return sentinel


def report_for(state: NetworkState, streams: ModeStreams, scenario: "Scenario", shares: ShareVector) -> CongestionReport:
    t = state.t
    lam_X, lam_B, lam_S = (s.value_at_or_before(t) for s in streams)
    sentinel = scenario.solver.max_wait
    bus_cfg, sub_cfg = scenario.bus, scenario.subway

    L_X = taxi_queue_length(state.taxi)
    W_X = _wait_or_sentinel(L_X, lam_X, sentinel)

    lam_B1 = ticket_arrival_rate(lam_B, bus_cfg.q_B)
    L_B1 = ticket_queue_length(state.ticket)
    W_B1 = ticket_wait(state.ticket, lam_B1) if lam_B1 > 0 else (sentinel if L_B1 > 0 else 0.0)
    lam_B2 = BusParams(streams.lambda_B, bus_cfg.q_B, bus_cfg.mu_B, bus_cfg.c_B, 1, bus_cfg.N,
                       bus_cfg.T).lambda_B2
    W_B = W_B1 + state.renewal.expected_wait(lam_B2)
    L_B = L_B1 + state.renewal.expected_aboard()

    L_S1 = stage_length(state.security) if sub_cfg.security else 0.0
    L_S2 = stage_length(state.subway_ticket)
    sparams = SubwayParams(streams.lambda_S, sub_cfg.q_S, sub_cfg.mu_S1, sub_cfg.mu_S2, sub_cfg.c_S1,
                           sub_cfg.c_S2, 1, 1, scenario.initial.M, sub_cfg.order, sub_cfg.security)
    _, lam_S2 = subway_stage_rates(sparams, lam_S)
    try:
        W_S = subway_sojourn(state.security, state.subway_ticket, sparams, lam_S, lam_S2)
    except UndefinedWaitError:
        W_S = scenario.initial.M + (sentinel if L_S1 > 0 else 0.0)
    return congestion_criteria((W_X, W_B, W_S), (L_X, L_B, L_S1 + L_S2), shares, t)


def predict_shares(
    initial: NetworkState, shares: Sequence[float], scenario: "Scenario", horizon: float
) -> tuple[NetworkState, CongestionReport]:
    """:func:`predict` with streams split from the scenario's total arrival profile."""
    shares = ShareVector(*map(float, shares))
    return predict(initial, split_streams(scenario.total_profile, shares), scenario, horizon, shares)


def write_reports(path: str | Path, reports: Iterable[CongestionReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            w.writerow([repr(float(v)) for v in r.row()])
