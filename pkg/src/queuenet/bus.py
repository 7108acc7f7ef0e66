"""Airport bus: ticket-office M/M/c/K queue feeding a Min(N, T) departure process.

Passengers buying tickets on the spot (probability ``q_B``) queue at
``c_B`` counters; everyone else walks straight to the bus. A bus leaves as
soon as ``N`` passengers are aboard or ``T`` minutes after the previous
departure, whichever happens first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .ctmc import Generator, TransientState, birth_death_generator, clock
from .errors import littles_wait
from .rates import RateProfile

PMF_TAIL = 1e-12


@dataclass(frozen=True)
class BusParams:
    lambda_B: RateProfile
    q_B: float
    mu_B: float
    c_B: int
    K_B: int
    N: int
    T: float

    def __post_init__(self):
        if not 0.0 <= self.q_B <= 1.0:
            raise ValueError(f"q_B={self.q_B} must lie in [0, 1]")
        if not self.mu_B > 0:
            raise ValueError("mu_B must be positive")
        if self.c_B < 1 or self.N < 1 or self.K_B < 1:
            raise ValueError("c_B, N and K_B must be at least 1")
        if not self.T > 0:
            raise ValueError("T must be positive")

    def utilization(self, t: float) -> float:
        """Ticket-office load ``lambda_B1 / (c_B mu_B)`` at time ``t``."""
        return ticket_arrival_rate(self.lambda_B.value_at_or_before(t), self.q_B) / (self.c_B * self.mu_B)

    @property
    def lambda_B1(self) -> RateProfile:
        return self.lambda_B.scale(self.q_B)

    @property
    def lambda_B2(self) -> RateProfile:
        return self.lambda_B.map(lambda lam: downstream_rate(
            lam, ticket_arrival_rate(lam, self.q_B), self.q_B, self.mu_B, self.c_B))


@dataclass(frozen=True)
class RenewalState:
    """Passengers aboard the waiting bus and minutes since the last departure."""

    m0: int
    t0: float

    def check(self, N: int, T: float) -> "RenewalState":
        if not (0 <= self.m0 <= N and 0.0 <= self.t0 <= T):
            raise ValueError(f"renewal state {self} outside 0<=m0<={N}, 0<=t0<={T}")
        return self


def ticket_arrival_rate(lambda_B_now: float, q_B: float) -> float:
    return q_B * lambda_B_now


def build_ticket_generator(params: BusParams) -> Generator:
    return birth_death_generator(params.K_B, params.lambda_B1, params.mu_B,
                                 params.c_B, f"bus tickets M/M/{params.c_B}/{params.K_B}")


def downstream_rate(lambda_B_now: float, lambda_B1_now: float, q_B: float, mu_B: float, c_B: int) -> float:
    """Arrival rate at the bus: e-ticket holders plus ticket-office output (capped at capacity)."""
    return lambda_B_now * (1.0 - q_B) + min(lambda_B1_now, c_B * mu_B)


def erlang_cdf(n: int, rate: float, t: float) -> float:
    """P(n Poisson(rate) arrivals happen within t)."""
    if n < 1 or rate <= 0:
        raise ValueError("erlang_cdf needs n >= 1 and rate > 0")
    x = rate * t
    if x <= 0:
        return 0.0
    if x < 700:
        term = math.exp(-x)
        acc = term
        for j in range(1, n):
            term *= x / j
            acc += term
    else:
        acc = math.fsum(math.exp(-x + j * math.log(x) - math.lgamma(j + 1)) for j in range(n))
    return min(1.0, max(0.0, 1.0 - acc))


def _erlang_table(x: np.ndarray, N: int) -> np.ndarray:
    """``F[r, n-1] = erlang_cdf(n, 1, x[r])`` for n = 1..N, via log-space Poisson terms."""
    j = np.arange(N)
    with np.errstate(divide="ignore"):
        logx = np.log(x)[:, None]
    logterms = -x[:, None] + j * logx - gammaln(j + 1)
    logterms[:, 0] = -x
    F = 1.0 - np.cumsum(np.exp(logterms), axis=1)
    F[x <= 0] = 0.0
    return np.clip(F, 0.0, 1.0)


def renewal_wait(renewal: RenewalState, lambda_B2_bar: float, N: int, T: float) -> float:
    """Mean wait for the bus under the Min(N, T) rule, as the two-branch mix
    ``(N+1)/(2 lam) * F + (T/2) * (1 - F)`` with ``F`` the Erlang(N - m0)
    probability of filling the bus in the remaining ``T - t0`` minutes."""
    if renewal.m0 >= N:
        return 0.0
    if lambda_B2_bar <= 0:
        return T / 2.0
    F = erlang_cdf(N - renewal.m0, lambda_B2_bar, max(T - renewal.t0, 0.0))
    return (N + 1) / (2.0 * lambda_B2_bar) * F + (T / 2.0) * (1.0 - F)


def ticket_wait(ticket_state: TransientState, lambda_B1_now: float) -> float:
    L = ticket_queue_length(ticket_state)
    if lambda_B1_now <= 0:
        return 0.0
    return littles_wait(L, lambda_B1_now)


def ticket_queue_length(ticket_state: TransientState) -> float:
    return float(ticket_state.probs @ np.arange(ticket_state.probs.size))


def bus_total_sojourn(
    ticket_state: TransientState,
    params: BusParams,
    renewal: RenewalState,
    lambda_B1_now: float,
    lambda_B2_bar: float,
) -> float:
    """Ticket-office Little's-law wait plus Min(N, T) boarding wait."""
    return ticket_wait(ticket_state, lambda_B1_now) + renewal_wait(renewal, lambda_B2_bar, params.N, params.T)


@dataclass(frozen=True, eq=False)
class RenewalDistribution:
    """Joint law of (minutes since last departure, passengers aboard).

    Row ``r`` holds the passengers-aboard distribution (0..N-1) of the
    cohort whose current timer age is ``ages[r]``.
    """

    ages: np.ndarray
    probs: np.ndarray
    N: int
    T: float
    t: float = 0.0

    @classmethod
    def from_state(cls, renewal: RenewalState, N: int, T: float, t: float = 0.0) -> "RenewalDistribution":
        renewal.check(N, T)
        p = np.zeros((1, N))
        if renewal.m0 >= N:
            # a full bus has already left
            p[0, 0] = 1.0
            return cls(np.zeros(1), p, N, T, t)
        p[0, renewal.m0] = 1.0
        return cls(np.array([float(renewal.t0)]), p, N, T, t)

    def expected_aboard(self) -> float:
        return float(self.probs.sum(axis=0) @ np.arange(self.N))

    def expected_age(self) -> float:
        return float(self.probs.sum(axis=1) @ self.ages)

    def summary(self) -> RenewalState:
        return RenewalState(int(round(self.expected_aboard())), min(self.expected_age(), self.T))

    def total(self) -> float:
        return float(self.probs.sum())

    def expected_wait(self, lambda_B2: RateProfile) -> float:
        """Min(N, T) boarding wait averaged over the joint (age, aboard) law.

        Each cohort uses the mean downstream rate over its own remaining
        timer window ``[t, t + T - age]``.
        """
        mass = self.probs.sum(axis=1) > 0
        ages, P = self.ages[mass], self.probs[mass]
        lam = np.array([lambda_B2.mean(self.t, self.t + max(self.T - a, 0.0)) for a in ages])
        n = self.N - np.arange(self.N)  # Erlang order per aboard count
        waits = np.full(P.shape, self.T / 2.0)
        live = lam > 0
        if np.any(live):
            x = lam[live] * np.maximum(self.T - ages[live], 0.0)
            F = _erlang_table(x, self.N)[:, n - 1]
            waits[live] = (self.N + 1) / (2.0 * lam[live])[:, None] * F + (self.T / 2.0) * (1.0 - F)
        return float(np.sum(P * waits))


def _poisson_pmf(mean: float) -> np.ndarray:
    if mean <= 0:
        return np.ones(1)
    kmax = int(mean + 12 * math.sqrt(mean) + 20)
    k = np.arange(kmax + 1)
    pmf = np.exp(-mean + k * math.log(mean) - gammaln(k + 1))
    keep = np.flatnonzero(pmf > PMF_TAIL)
    pmf = pmf[: keep[-1] + 1]
    pmf[-1] += max(0.0, 1.0 - pmf.sum())
    return pmf


def _cumulative(profile: RateProfile, a: float, b: float) -> float:
    # arrivals over [a, b]; the final bin's rate persists past the profile end
    lo, hi = profile.horizon
    extra = max(0.0, b - max(a, hi)) * profile.values[-1]
    return profile.integrate(a, min(b, hi)) + extra


def advance_renewal(
    dist: RenewalDistribution, lambda_B2: RateProfile, t_end: float, step: float = 0.05
) -> RenewalDistribution:
    """Propagate the aboard/timer law to ``t_end``.

    Arrivals in each sub-step are Poisson with the integrated downstream rate
    (pmf truncated at 1e-12); reaching ``N`` dispatches the bus and carries the
    overflow into the next one, and a cohort whose timer reaches ``T`` is
    dispatched with whatever is aboard. Sub-steps follow a grid of ``step``
    anchored at ``dist.t`` and are split at timer expiries.
    """
    N, T = dist.N, dist.T
    ages, P, t = dist.ages.copy(), dist.probs.copy(), dist.t
    t0, k = dist.t, 0
    while t < t_end - 1e-12:
        grid_next = clock(t0 + (k + 1) * step)
        if grid_next <= t + 1e-12:
            k += 1
            continue
        s_end = min(grid_next, t_end)
        live = P.sum(axis=1) > 0
        timers = T - ages[live]
        fire = timers[timers > 1e-12]
        if fire.size and t + fire.min() < s_end - 1e-12:
            s_end = clock(t + fire.min())
        s = s_end - t
        pmf = _poisson_pmf(_cumulative(lambda_B2, t, s_end))
        ext = np.zeros((P.shape[0], N + pmf.size))
        for m, w in enumerate(pmf):
            ext[:, m:m + N] += w * P
        stay = ext[:, :N]
        overflow = ext[:, N:]
        # passengers beyond one further busload are folded into the last count
        carry = np.zeros(N)
        over = overflow.sum(axis=0)
        carry[: min(N, over.size)] += over[:N]
        if over.size > N:
            carry[-1] += over[N:].sum()
        ages = ages + s
        t = s_end
        if s_end >= grid_next - 1e-12:
            k += 1
        expired = ages >= T - 1e-9
        if np.any(expired):
            carry[0] += stay[expired].sum()
            stay = stay[~expired]
            ages = ages[~expired]
        keep = stay.sum(axis=1) > 0
        stay, ages = stay[keep], ages[keep]
        if carry.sum() > 0:
            z = np.flatnonzero(ages == 0.0)
            if z.size:
                stay[z[0]] += carry
            else:
                stay = np.vstack([stay, carry])
                ages = np.append(ages, 0.0)
        P = stay
    return RenewalDistribution(ages, P, N, T, clock(t_end))


def bus_stranded_count(ticket_state: TransientState, renewal: RenewalDistribution | RenewalState) -> float:
    """Expected passengers in the bus system: ticket queue plus those aboard."""
    aboard = renewal.expected_aboard() if isinstance(renewal, RenewalDistribution) else float(renewal.m0)
    return ticket_queue_length(ticket_state) + aboard
