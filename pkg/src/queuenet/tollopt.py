"""Ant Lion Optimizer over queue tolls (taxi, bus, subway).

Fitness of a toll scheme is the largest stranded crowd at the MSWA
equilibrium under those tolls; lower is fitter. All random draws for an
iteration happen on the calling process before fitness evaluation, so
evaluating ants in parallel never changes the result.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Sequence

import numpy as np

from .choice import TollScheme
from .equilibrium import MswaConfig, MswaResult, mswa_solve
from .network import NetworkState, PredictionError

if TYPE_CHECKING:
    from .scenario import Scenario

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("iter", "J_X", "J_B", "J_S", "fitness", "L_X", "L_B", "L_S", "alpha", "beta", "gamma")

# (fraction of t_max exceeded, exponent w); below the first breakpoint w = 1
W_SCHEDULE: tuple[tuple[float, int], ...] = ((0.1, 2), (0.5, 3), (0.75, 4), (0.9, 5), (0.95, 6))


@dataclass(frozen=True)
class AloConfig:
    n_ants: int = 20
    n_antlions: int = 20
    t_max: int = 8
    Cl: tuple[float, ...] = (0.0, 0.0, 0.0)
    Cu: tuple[float, ...] = (10.0, 10.0, 10.0)
    rng_seed: int = 42
    w_schedule: tuple[tuple[float, int], ...] = W_SCHEDULE
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "Cl", tuple(float(c) for c in self.Cl))
        object.__setattr__(self, "Cu", tuple(float(c) for c in self.Cu))
        object.__setattr__(self, "w_schedule", tuple((float(f), int(w)) for f, w in self.w_schedule))
        if self.n_ants < 2 or self.n_antlions < 2:
            raise ValueError("ALO populations must have at least 2 members")
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")
        if len(self.Cl) != len(self.Cu) or any(lo > hi for lo, hi in zip(self.Cl, self.Cu)):
            raise ValueError("need Cl <= Cu componentwise")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def dims(self) -> int:
        return len(self.Cl)


@dataclass(frozen=True)
class HistoryEntry:
    iteration: int
    elite: np.ndarray
    fitness: float
    info: Any = None


@dataclass
class AloResult:
    elite: np.ndarray
    fitness: float
    history: list[HistoryEntry] = field(default_factory=list)
    ants: np.ndarray | None = None
    antlions: np.ndarray | None = None
    antlion_fitness: np.ndarray | None = None


def random_walk(steps: int, rng: np.random.Generator, dims: int = 1) -> np.ndarray:
    """Cumulative sums of +-1 steps, one row per dimension, each starting at 0."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    r = np.where(rng.random((dims, steps)) > 0.5, 1, -1)
    return np.concatenate([np.zeros((dims, 1), dtype=np.int64), np.cumsum(r, axis=1)], axis=1)


def normalize_walk(walk: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Affine map of the walk's range onto ``[lo, hi]``; a flat walk maps to ``lo``."""
    walk = np.asarray(walk, dtype=float)
    a, b = walk.min(), walk.max()
    if b == a:
        return np.full(walk.shape, float(lo))
    return (walk - a) * (hi - lo) / (b - a) + lo


def shrink_ratio(t: int, t_max: int, w_schedule: Sequence[tuple[float, int]] = W_SCHEDULE) -> float:
    if t <= 0:
        return 1.0
    w = 1
    for frac, exponent in w_schedule:
        if t > frac * t_max:
            w = exponent
    return max(1.0, 10.0 ** w * (t / t_max))


def trap_bounds(
    antlion: Sequence[float],
    Cl: Sequence[float],
    Cu: Sequence[float],
    t: int,
    t_max: int,
    w_schedule: Sequence[tuple[float, int]],
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension trap interval around ``antlion``, shrinking as ``t`` grows."""
    antlion = np.asarray(antlion, dtype=float)
    Cl, Cu = np.asarray(Cl, dtype=float), np.asarray(Cu, dtype=float)
    I = shrink_ratio(t, t_max, w_schedule)
    s_lo = np.where(rng.random(antlion.size) < 0.5, 1.0, -1.0)
    s_hi = np.where(rng.random(antlion.size) >= 0.5, 1.0, -1.0)
    lo = np.clip(antlion + s_lo * Cl / I, Cl, Cu)
    hi = np.clip(antlion + s_hi * Cu / I, Cl, Cu)
    return np.minimum(lo, hi), np.maximum(lo, hi)


def roulette_select(fitness: Sequence[float], rng: np.random.Generator) -> int:
    """Index drawn with weight ``1 / (f - f_best + delta)``; infinite fitness never wins."""
    f = np.asarray(fitness, dtype=float)
    if f.size == 0:
        raise ValueError("empty population")
    if f.size == 1:
        return 0
    best = np.min(f)
    if not np.isfinite(best):
        return int(rng.integers(f.size))
    delta = 1e-9 * (1.0 + abs(best))
    with np.errstate(invalid="ignore"):
        weights = np.where(np.isfinite(f), 1.0 / (f - best + delta), 0.0)
    cum = np.cumsum(weights)
    return int(min(np.searchsorted(cum, rng.random() * cum[-1], side="right"), f.size - 1))


def walk_around(
    antlion: np.ndarray, cfg: AloConfig, t: int, rng: np.random.Generator
) -> np.ndarray:
    """Position at step ``t`` of a bounded random walk trapped by ``antlion``."""
    lo, hi = trap_bounds(antlion, cfg.Cl, cfg.Cu, t, cfg.t_max, cfg.w_schedule, rng)
    walks = random_walk(cfg.t_max, rng, cfg.dims)
    return np.array([normalize_walk(walks[d], lo[d], hi[d])[t] for d in range(cfg.dims)])


Evaluator = Callable[[list[np.ndarray]], list[tuple[float, Any]]]


def ant_lion_optimize(evaluate: Evaluator, cfg: AloConfig) -> AloResult:
    """Minimise a batch-evaluated objective over the box ``[Cl, Cu]``.

    ``evaluate`` maps a list of positions to ``(fitness, info)`` pairs. Each
    ant averages a walk trapped by a roulette-chosen antlion with a walk
    trapped by the elite; an ant fitter than its paired antlion replaces it.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    Cl, Cu = np.asarray(cfg.Cl), np.asarray(cfg.Cu)
    antlions = Cl + rng.random((cfg.n_antlions, cfg.dims)) * (Cu - Cl)
    ants = Cl + rng.random((cfg.n_ants, cfg.dims)) * (Cu - Cl)
    evaluated = evaluate(list(antlions))
    fit = np.array([f for f, _ in evaluated], dtype=float)
    infos = [i for _, i in evaluated]
    k = int(np.argmin(fit))
    elite, elite_fit, elite_info = antlions[k].copy(), float(fit[k]), infos[k]
    history = [HistoryEntry(0, elite.copy(), elite_fit, elite_info)]

    for t in range(1, cfg.t_max + 1):
        for i in range(cfg.n_ants):
            j = roulette_select(fit, rng)
            ra = walk_around(antlions[j], cfg, t, rng)
            re = walk_around(elite, cfg, t, rng)
            ants[i] = np.clip((ra + re) / 2.0, Cl, Cu)
        ant_results = evaluate(list(ants))
        for i, (f_ant, info) in enumerate(ant_results):
            slot = i % cfg.n_antlions
            if f_ant < fit[slot]:
                antlions[slot] = ants[i]
                fit[slot] = f_ant
                infos[slot] = info
        k = int(np.argmin(fit))
        if fit[k] < elite_fit:
            elite, elite_fit, elite_info = antlions[k].copy(), float(fit[k]), infos[k]
        history.append(HistoryEntry(t, elite.copy(), elite_fit, elite_info))
        log.info("ALO iter %d/%d: elite %s fitness %.6g", t, cfg.t_max, np.round(elite, 4).tolist(), elite_fit)

    return AloResult(elite, elite_fit, history, ants, antlions, fit)


def fitness(
    tolls: Sequence[float], scenario: "Scenario", initial: NetworkState, cfg: MswaConfig | None = None
) -> tuple[float, MswaResult | None]:
    """Max stranded crowd at the lower-level equilibrium; solver failure scores +inf."""
    try:
        res = mswa_solve(initial, scenario, TollScheme(*map(float, tolls)), cfg)
    except (PredictionError, ValueError, FloatingPointError):
        return math.inf, None
    return res.report.L_max, res


def _batch_evaluator(scenario: "Scenario", initial: NetworkState, mswa_cfg: MswaConfig | None,
                     pool: ProcessPoolExecutor | None) -> Evaluator:
    fn = partial(fitness, scenario=scenario, initial=initial, cfg=mswa_cfg)

    def evaluate(positions: list[np.ndarray]) -> list[tuple[float, Any]]:
        pts = [tuple(map(float, p)) for p in positions]
        if pool is None:
            return [fn(p) for p in pts]
        return list(pool.map(fn, pts))

    return evaluate


def alo_optimize(
    scenario: "Scenario",
    initial: NetworkState,
    cfg: AloConfig | None = None,
    mswa_cfg: MswaConfig | None = None,
) -> AloResult:
    """Toll scheme minimising the equilibrium's largest stranded crowd."""
    cfg = cfg or scenario.solver.alo
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return ant_lion_optimize(_batch_evaluator(scenario, initial, mswa_cfg, pool), cfg)
    return ant_lion_optimize(_batch_evaluator(scenario, initial, mswa_cfg, None), cfg)


def history_rows(result: AloResult) -> list[list]:
    rows = []
    for h in result.history:
        res: MswaResult | None = h.info
        L = res.report.L if res is not None else (math.nan,) * 3
        shares = tuple(res.shares) if res is not None else (math.nan,) * 3
        rows.append([h.iteration, *map(float, h.elite), h.fitness, *L, *shares])
    return rows


def write_history(path: str | Path, result: AloResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_COLUMNS)
        for row in history_rows(result):
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
