"""Transient solution of time-inhomogeneous CTMCs by classical RK4.

Generators are assembled from transition rules (source state, target state,
state-dependent multiplicity, time-dependent rate) instead of hand-written
block matrices, so every row sums to zero by construction. The forward
equation ``p'(t) = p(t) Q(t)`` is integrated with a fixed step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numba
import numpy as np
import scipy.sparse as sp
from scipy.stats import poisson

from .rates import RateProfile

SUM_TOL = 1e-6
NEG_TOL = -1e-10
DEFAULT_DT = 0.005

# a RateProfile rate tells the generator where rates can change, so steps
# that stay inside one bin skip re-evaluating rates for every RK4 stage
Rate = float | RateProfile | Callable[[float], float]


class InstabilityError(RuntimeError):
    """RK4 produced an invalid probability vector."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


def clock(t: float) -> float:
    # grid times from different start points must hit the same rate bins
    return round(t, 10)


@dataclass(frozen=True)
class Transition:
    """One event family: ``src[k] -> dst[k]`` at ``rate(t) * weight[k]``."""

    name: str
    rate: Rate
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    def rate_at(self, t: float) -> float:
        if isinstance(self.rate, RateProfile):
            return self.rate.value_at_or_before(t)
        return float(self.rate(t)) if callable(self.rate) else float(self.rate)


def rule(
    name: str,
    rate: Rate,
    states: Sequence,
    index: dict,
    guard: Callable[..., bool],
    delta: Callable[..., object],
    weight: Callable[..., float] | None = None,
) -> Transition:
    """Compile an event rule over an enumerated state space.

    ``guard(state)`` selects states where the event can fire, ``delta(state)``
    gives the target state and ``weight(state)`` a multiplicity on ``rate``
    (e.g. number of busy servers).
    """
    src, dst, w = [], [], []
    for s in states:
        if not guard(s):
            continue
        m = 1.0 if weight is None else float(weight(s))
        if m == 0.0:
            continue
        src.append(index[s])
        dst.append(index[delta(s)])
        w.append(m)
    return Transition(name, rate, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                      np.array(w, dtype=float))


def _unit_matrix(n: int, tr: Transition) -> sp.csr_matrix:
    # transpose of the unit-rate generator, so that (p @ Q) == Qt @ p
    rows = np.concatenate([tr.dst, tr.src])
    cols = np.concatenate([tr.src, tr.src])
    data = np.concatenate([tr.weight, -tr.weight])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


@dataclass(eq=False)
class Generator:
    """Sparse, rule-built CTMC generator ``Q(t) = sum_k rate_k(t) * U_k``."""

    dimension: int
    transitions: tuple[Transition, ...]
    description: str = ""
    _units: list = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)
    breakpoints: np.ndarray | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        self.transitions = tuple(self.transitions)
        for tr in self.transitions:
            if len(tr.src) and (tr.src.max() >= self.dimension or tr.dst.max() >= self.dimension):
                raise ValueError(f"transition {tr.name!r} leaves the state space")
            if np.any(tr.weight < 0):
                raise ValueError(f"transition {tr.name!r} has negative multiplicity")
        self._units = [_unit_matrix(self.dimension, tr) for tr in self.transitions]
        if not any(callable(tr.rate) and not isinstance(tr.rate, RateProfile) for tr in self.transitions):
            cuts = [tr.rate.breakpoints for tr in self.transitions if isinstance(tr.rate, RateProfile)]
            self.breakpoints = np.unique(np.concatenate(cuts)) if cuts else np.empty(0)

    def next_breakpoint(self, t: float) -> float:
        if self.breakpoints is None:
            return t
        i = np.searchsorted(self.breakpoints, t, side="right")
        return float(self.breakpoints[i]) if i < self.breakpoints.size else math.inf

    def constant_on(self, a: float, b: float) -> bool:
        """True when no rate can change strictly inside ``(a, b)``."""
        if self.breakpoints is None:
            return False
        i = np.searchsorted(self.breakpoints, a, side="right")
        return i >= self.breakpoints.size or self.breakpoints[i] >= b

    def rates(self, t: float) -> tuple[float, ...]:
        r = tuple(tr.rate_at(t) for tr in self.transitions)
        for tr, v in zip(self.transitions, r):
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"transition {tr.name!r} has invalid rate {v} at t={t}")
        return r

    def _combined(self, rates: tuple[float, ...]) -> sp.csr_matrix:
        mat = self._cache.get(rates)
        if mat is None:
            mat = sp.csr_matrix((self.dimension, self.dimension))
            for r, u in zip(rates, self._units):
                if r:
                    mat = mat + r * u
            mat = sp.csr_matrix(mat)
            if len(self._cache) > 256:
                self._cache.clear()
            self._cache[rates] = mat
        return mat

    def apply(self, probs: np.ndarray, t: float, left: bool = False) -> np.ndarray:
        """Time derivative ``p Q(t)`` of a probability row vector.

        ``left=True`` uses the left limit ``Q(t-)``, which keeps an RK4 step
        ending on a rate breakpoint inside the bin it integrates over.
        """
        if left:
            t = float(np.nextafter(t, -np.inf))
        return self._combined(self.rates(t)) @ probs

    def matrix(self, t: float) -> np.ndarray:
        """Dense ``Q(t)`` (rows = from-state); intended for tests and small chains."""
        return self._combined(self.rates(t)).T.toarray()


@dataclass(frozen=True, eq=False)
class TransientState:
    probs: np.ndarray
    t: float

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)

    @classmethod
    def point_mass(cls, dimension: int, index: int, t: float = 0.0) -> "TransientState":
        p = np.zeros(dimension)
        p[index] = 1.0
        return cls(p, t)

    def check(self, sum_tol: float = SUM_TOL) -> "TransientState":
        if self.probs.size and (self.probs.min() < NEG_TOL or abs(self.probs.sum() - 1.0) > sum_tol):
            raise InstabilityError(
                f"invalid distribution at t={self.t:g}: sum={self.probs.sum():.3e}, "
                f"min={self.probs.min():.3e}; reduce dt", self.t)
        return self


def rk4_step(gen: Generator, state: TransientState, dt: float) -> TransientState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    t, p = state.t, state.probs
    half = clock(t + dt / 2)
    k1 = gen.apply(p, t) * dt
    k2 = gen.apply(p + k1 / 2, half) * dt
    k3 = gen.apply(p + k2 / 2, half) * dt
    k4 = gen.apply(p + k3, clock(t + dt), left=True) * dt
    out = TransientState(p + (k1 + 2 * k2 + 2 * k3 + k4) / 6, clock(t + dt))
    return out.check()


@numba.njit(cache=True)
def _rk4_segment(indptr, indices, data, p, nsteps, out, sum_tol, neg_tol):  # pragma: no cover - compiled
    """``nsteps`` RK4 steps of ``p' = A p`` (``A`` in CSR, already scaled by dt).

    Works in place on ``p``; row ``s`` of ``out`` receives the state after
    step ``s`` when ``out`` has rows. Returns the index of the first step
    whose result fails the probability check, or -1.
    """
    n = p.size
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    tmp = np.empty(n)
    for s in range(nsteps):
        for i in range(n):
            acc = 0.0
            for q in range(indptr[i], indptr[i + 1]):
                acc += data[q] * p[indices[q]]
            k1[i] = acc
        for i in range(n):
            tmp[i] = p[i] + k1[i] / 2
        for i in range(n):
            acc = 0.0
            for q in range(indptr[i], indptr[i + 1]):
                acc += data[q] * tmp[indices[q]]
            k2[i] = acc
        for i in range(n):
            tmp[i] = p[i] + k2[i] / 2
        for i in range(n):
            acc = 0.0
            for q in range(indptr[i], indptr[i + 1]):
                acc += data[q] * tmp[indices[q]]
            k3[i] = acc
        for i in range(n):
            tmp[i] = p[i] + k3[i]
        total = 0.0
        low = np.inf
        for i in range(n):
            acc = 0.0
            for q in range(indptr[i], indptr[i + 1]):
                acc += data[q] * tmp[indices[q]]
            v = p[i] + (k1[i] + 2 * k2[i] + 2 * k3[i] + acc) / 6
            k1[i] = v  # k1 is free now; keep p intact until every row is done
            total += v
            low = min(low, v)
        for i in range(n):
            p[i] = k1[i]
        if out.shape[0] > 0:
            out[s, :] = p
        if abs(total - 1.0) > sum_tol or low < neg_tol:
            return s
    return -1


def _march(
    gen: Generator, initial: TransientState, t_end: float, dt: float, keep: bool
) -> list[TransientState]:
    """States at ``initial.t + k*dt`` (all of them if ``keep``, else only the last).

    Runs of steps that stay inside one rate bin are handed to a compiled
    loop with a fixed matrix; steps straddling a rate change (and the final,
    possibly shortened step) go through :func:`rk4_step`.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < initial.t:
        raise ValueError("t_end precedes the initial time")
    if initial.probs.shape != (gen.dimension,):
        raise ValueError(f"state has {initial.probs.size} entries, generator {gen.dimension}")
    states = [initial]
    t0 = initial.t
    n = math.ceil((t_end - t0) / dt - 1e-9)
    state, k = initial, 1
    while k <= n:
        t = state.t
        if k < n and gen.constant_on(t, t + dt):
            b = gen.next_breakpoint(t)
            m = n - 1 if math.isinf(b) else min(n - 1, max(k, math.floor((b - t0) / dt + 1e-9)))
            A = gen._combined(gen.rates(t)) * dt
            p = state.probs.copy()
            out = np.empty((m - k + 1 if keep else 0, gen.dimension))
            bad = _rk4_segment(A.indptr, A.indices, A.data, p, m - k + 1, out, SUM_TOL, NEG_TOL)
            if bad >= 0:
                TransientState(p, clock(t0 + (k + bad) * dt)).check()
            if keep:
                states.extend(TransientState(out[j], clock(t0 + (k + j) * dt)) for j in range(m - k))
            state = TransientState(p, clock(t0 + m * dt))
            k = m + 1
        else:
            target = clock(t_end if k == n else t0 + k * dt)
            state = rk4_step(gen, state, dt if k < n else target - state.t)
            state = TransientState(state.probs, target)
            k += 1
        if keep:
            states.append(state)
        else:
            states[0] = state
    return states


def iter_transient(
    gen: Generator, initial: TransientState, t_end: float, dt: float = DEFAULT_DT
) -> Iterator[TransientState]:
    """The initial state and then one state per step, landing exactly on ``t_end``."""
    return iter(_march(gen, initial, t_end, dt, keep=True))


def solve_transient(
    gen: Generator, initial: TransientState, t_end: float, dt: float = DEFAULT_DT
) -> list[TransientState]:
    return _march(gen, initial, t_end, dt, keep=True)


def final_state(gen: Generator, initial: TransientState, t_end: float, dt: float = DEFAULT_DT) -> TransientState:
    return _march(gen, initial, t_end, dt, keep=False)[-1]


def choose_truncation(
    arrival_profile: RateProfile | None,
    service_capacity: float,
    horizon: float,
    initial_count: int,
    tail_eps: float = 1e-9,
) -> int:
    """State-space cap for a queue fed by ``arrival_profile`` over ``horizon``.

    Net inflow is bounded by Poisson(peak * horizon) arrivals; service is not
    credited (``service_capacity`` only matters for the caller's diagnostics),
    which makes the bound valid for overloaded queues as well. The returned
    cap puts less than ``tail_eps`` of mass above it.
    """
    if not 0 < tail_eps <= 1e-3:
        raise ValueError("tail_eps must lie in (0, 1e-3]")
    mean = 0.0 if arrival_profile is None else arrival_profile.peak * max(horizon, 0.0)
    if mean <= 0:
        return int(initial_count)
    k = int(poisson.isf(tail_eps, mean))
    while poisson.sf(k, mean) >= tail_eps:
        k += 1
    return int(initial_count) + max(k, math.ceil(mean))


def expected_count(state: TransientState, count_of_index: Callable[[int], float] | np.ndarray) -> float:
    if callable(count_of_index):
        counts = np.array([count_of_index(i) for i in range(state.probs.size)], dtype=float)
    else:
        counts = np.asarray(count_of_index, dtype=float)
    return float(state.probs @ counts)


def birth_death_generator(
    capacity: int,
    birth: Rate,
    death: float,
    servers: int,
    description: str = "M/M/c/K",
) -> Generator:
    """M/M/c/K chain on ``{0..capacity}``: births blocked at ``capacity``,
    deaths at ``min(n, servers) * death``."""
    states = range(capacity + 1)
    index = {n: n for n in states}
    return Generator(capacity + 1, (
        rule("arrival", birth, states, index, lambda n: n < capacity, lambda n: n + 1),
        rule("service", death, states, index, lambda n: n >= 1, lambda n: n - 1,
             weight=lambda n: min(n, servers)),
    ), description)


def dump_trajectory(states: Iterable[TransientState], path: str | Path, floor: float = 1e-12) -> None:
    """Debug export: sparse ``t,index,prob`` rows for entries >= ``floor``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "index", "prob"])
        for s in states:
            for i in np.flatnonzero(s.probs >= floor):
                w.writerow([repr(s.t), int(i), repr(float(s.probs[i]))])
