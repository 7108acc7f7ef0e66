"""Share/waiting-time equilibrium by the method of successive weighted averages.

Each iteration predicts the network under the current shares, turns the
predicted waits into MNL shares, and moves part of the way there with step
``l**d / sum(k**d for k <= l)``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .choice import TollScheme, aggregate_shares
from .network import CongestionReport, NetworkState, predict_shares
from .rates import ShareVector

if TYPE_CHECKING:
    from .scenario import Scenario

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("iter", "alpha", "beta", "gamma", "W_X", "W_B", "W_S", "error")


@dataclass(frozen=True)
class MswaConfig:
    d: float = 1.0
    eps: float = 1e-4
    max_iter: int = 100
    horizon: float | None = None  # evaluation time t_e after the start; None = scenario horizon

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("MSWA exponent d must be nonnegative")
        if not self.eps > 0:
            raise ValueError("MSWA eps must be positive")
        if self.max_iter < 1:
            raise ValueError("MSWA max_iter must be at least 1")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("MSWA horizon must be positive")


@dataclass(frozen=True)
class MswaIteration:
    iteration: int
    shares: ShareVector
    report: CongestionReport
    error: float

    def row(self) -> list:
        return [self.iteration, *self.shares, *self.report.W, self.error]


@dataclass
class MswaResult:
    shares: ShareVector
    report: CongestionReport
    trace: list[MswaIteration] = field(default_factory=list)
    converged: bool = False
    residual: float = math.nan  # ||Phi(v) - v||_2 / ||v||_1 at the returned shares
    next_change: float = math.nan  # relative move one more MSWA iteration would make

    @property
    def iterations(self) -> int:
        return self.trace[-1].iteration if self.trace else 0

    @property
    def errors(self) -> list[float]:
        return [it.error for it in self.trace]


def step_size(l: int, d: float = 1.0) -> float:
    if l < 1:
        raise ValueError("iteration index starts at 1")
    k = np.arange(1, l + 1, dtype=float)
    return float(l ** d / np.sum(k ** d))


def relative_change(new: Sequence[float], old: Sequence[float]) -> float:
    new, old = np.asarray(new, dtype=float), np.asarray(old, dtype=float)
    return float(np.linalg.norm(new - old) / np.sum(np.abs(old)))


def mswa_solve(
    initial_network: NetworkState,
    scenario: "Scenario",
    tolls: Sequence[float] = TollScheme(),
    cfg: MswaConfig | None = None,
) -> MswaResult:
    """Lower-level equilibrium of mode shares and predicted waits.

    Iteration 0 takes MNL shares with all waits zero. Every later iteration
    ``l`` averages in the MNL response to the waits predicted under the
    previous shares and stops once the relative share change drops to
    ``eps``. Each prediction restarts from ``initial_network``. Without
    convergence the iterate with the smallest change is returned.
    """
    cfg = cfg or scenario.solver.mswa
    tolls = TollScheme(*map(float, tolls))
    horizon = cfg.horizon if cfg.horizon is not None else scenario.horizon
    choice = scenario.choice

    def evaluate(v: ShareVector) -> CongestionReport:
        return predict_shares(initial_network, v, scenario, horizon)[1]

    v = aggregate_shares(choice, (0.0, 0.0, 0.0), tolls)
    report = evaluate(v)
    trace = [MswaIteration(0, v, report, math.nan)]
    best = trace[0]
    converged = False
    for l in range(1, cfg.max_iter + 1):
        target = np.asarray(aggregate_shares(choice, report.W, tolls))
        cur = np.asarray(v)
        nxt = cur + step_size(l, cfg.d) * (target - cur)
        err = relative_change(nxt, cur)
        v = ShareVector(*map(float, nxt))
        report = evaluate(v)
        trace.append(MswaIteration(l, v, report, err))
        log.debug("MSWA iter %d: shares %s, W %s, error %.3e", l, tuple(v), report.W, err)
        if err < best.error or math.isnan(best.error):
            best = trace[-1]
        if err <= cfg.eps:
            converged = True
            best = trace[-1]
            break
    result = MswaResult(best.shares, best.report, trace, converged)
    result.residual = fixed_point_residual(result, scenario, tolls)
    result.next_change = step_size(best.iteration + 1, cfg.d) * result.residual
    log.debug("MSWA %s after %d iterations: shares %s, residual %.2e",
              "converged" if converged else "stopped", result.iterations, tuple(result.shares), result.residual)
    return result


def fixed_point_residual(result: MswaResult, scenario: "Scenario", tolls: Sequence[float]) -> float:
    """Relative distance between the returned shares and their own MNL response."""
    response = aggregate_shares(scenario.choice, result.report.W, tolls)
    return relative_change(response, result.shares)


def write_trace(path: str | Path, trace: Sequence[MswaIteration]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for it in trace:
            w.writerow([it.iteration] + [repr(float(x)) for x in it.row()[1:]])
