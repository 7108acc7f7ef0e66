"""Command-line entry point: predict, equilibrium and optimize on a scenario file.

    queuenet predict|equilibrium|optimize <scenario.toml> [--horizon MIN] [--seed N]
             [--out DIR] [--dt X] [--workers N]

Each command writes ``<command>_<scenario>_<seed>.csv`` plus a run report
``<command>_<scenario>_<seed>.toml`` (resolved config, summary and wall time)
into ``--out`` and prints a summary table. ``QUEUENET_LOG`` sets the log level
(DEBUG, INFO, WARNING, ...).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import tomli_w

from .choice import TollScheme, aggregate_shares
from .equilibrium import MswaResult, mswa_solve, write_trace
from .network import CongestionReport, PredictionError, initial_network_state, predict, report_for, write_reports
from .rates import ShareVector, split_streams
from .scenario import Scenario, ScenarioError, load_scenario, scenario_to_dict
from .tollopt import AloResult, alo_optimize, write_history

log = logging.getLogger("queuenet")

COMMANDS = ("predict", "equilibrium", "optimize")


class CommandError(RuntimeError):
    """Failure inside a command, tagged with the module that raised it."""

    def __init__(self, module: str, cause: BaseException):
        super().__init__(f"{module}: {cause}")
        self.module = module
        self.cause = cause


@dataclass
class RunReport:
    command: str
    scenario: Scenario
    csv_path: Path
    summary: dict[str, Any] = field(default_factory=dict)
    wall_time: float = math.nan
    argv: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "argv": list(self.argv),
            "csv": str(self.csv_path),
            "wall_time_s": self.wall_time,
            "summary": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.summary.items()},
            "config": scenario_to_dict(self.scenario),
        }

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(tomli_w.dumps(self.to_dict()), encoding="utf-8")
        return path


def artifact_name(command: str, scenario: Scenario, ext: str = "csv") -> str:
    return f"{command}_{scenario.name}_{scenario.solver.seed}.{ext}"


def _summary(report: CongestionReport, shares: Sequence[float]) -> dict[str, Any]:
    return {"L_max": report.L_max, "W_mean": report.W_mean, "argmax_mode": report.argmax_mode,
            "L": report.L, "W": report.W, "shares": tuple(map(float, shares))}


def cmd_predict(scenario: Scenario, out: Path, horizon: float | None = None) -> RunReport:
    """Per-minute congestion reports under zero-toll, zero-wait MNL shares."""
    horizon = scenario.horizon if horizon is None else horizon
    shares = aggregate_shares(scenario.choice, (0.0, 0.0, 0.0), TollScheme())
    streams = split_streams(scenario.total_profile, shares)
    state = initial_network_state(scenario)
    reports = [report_for(state, streams, scenario, shares)]
    elapsed = 0.0
    while elapsed < horizon - 1e-9:
        step = min(1.0, horizon - elapsed)
        state, rep = predict(state, streams, scenario, step, shares)
        reports.append(rep)
        elapsed += step
    path = out / artifact_name("predict", scenario)
    write_reports(path, reports)
    return RunReport("predict", scenario, path, _summary(reports[-1], shares))


def cmd_equilibrium(scenario: Scenario, out: Path) -> tuple[RunReport, MswaResult]:
    res = mswa_solve(initial_network_state(scenario), scenario)
    path = out / artifact_name("equilibrium", scenario)
    write_trace(path, res.trace)
    summary = _summary(res.report, res.shares)
    summary.update(iterations=res.iterations, converged=res.converged, residual=res.residual,
                   W_mean_iter0=res.trace[0].report.W_mean)
    return RunReport("equilibrium", scenario, path, summary), res


def cmd_optimize(scenario: Scenario, out: Path, workers: int | None = None) -> tuple[RunReport, AloResult]:
    cfg = scenario.solver.alo
    if workers is not None:
        cfg = dataclasses.replace(cfg, workers=workers)
    res = alo_optimize(scenario, initial_network_state(scenario), cfg)
    path = out / artifact_name("optimize", scenario)
    write_history(path, res)
    info: MswaResult | None = res.history[-1].info
    summary: dict[str, Any] = {"elite_tolls": tuple(map(float, res.elite)), "fitness": res.fitness}
    if info is not None:
        summary.update(_summary(info.report, info.shares))
    return RunReport("optimize", scenario, path, summary), res


def _apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    solver = {}
    if args.seed is not None:
        solver["seed"] = args.seed
    if args.dt is not None:
        solver["dt"] = args.dt
    if solver:
        scenario = scenario.with_solver(**solver)
    if args.horizon is not None:
        scenario = scenario.replace(horizon=args.horizon)
    return scenario


def _failing_module(exc: BaseException) -> str:
    if isinstance(exc, ScenarioError):
        return "scenario"
    if isinstance(exc, PredictionError):
        return f"network ({exc.submodel})"
    module = "cli"
    for frame in traceback.extract_tb(exc.__traceback__):
        parts = Path(frame.filename).parts
        if "queuenet" in parts and frame.filename.endswith(".py"):
            module = Path(frame.filename).stem
    return module


def format_summary(report: RunReport) -> str:
    lines = [f"{report.command} {report.scenario.name} (seed {report.scenario.solver.seed})"]
    for key in ("L_max", "W_mean", "argmax_mode", "L", "W", "shares", "iterations", "converged",
                "elite_tolls", "fitness"):
        if key not in report.summary:
            continue
        v = report.summary[key]
        if isinstance(v, float):
            text = f"{v:.4f}"
        elif isinstance(v, tuple):
            text = "  ".join(f"{x:.4f}" for x in v)
        else:
            text = str(v)
        lines.append(f"  {key:<12} {text}")
    lines.append(f"  {'csv':<12} {report.csv_path}")
    lines.append(f"  {'wall time':<12} {report.wall_time:.1f} s")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="queuenet", description="Airport ground-access queue prediction and tolls")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("scenario", help="scenario TOML file, or a bundled name (day, night, case1, case2)")
    ap.add_argument("--horizon", type=float, help="minutes after the scenario start")
    ap.add_argument("--seed", type=int, help="override solver.seed")
    ap.add_argument("--out", default=".", help="output directory (default: current directory)")
    ap.add_argument("--dt", type=float, help="override solver.dt (minutes)")
    ap.add_argument("--workers", type=int, help="processes for ALO fitness evaluation")
    return ap


def configure_logging() -> None:
    level = os.environ.get("QUEUENET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def run(args: argparse.Namespace, argv: Sequence[str] = ()) -> RunReport:
    start = time.perf_counter()
    try:
        scenario = _apply_overrides(load_scenario(args.scenario), args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "predict":
            report = cmd_predict(scenario, out)
        elif args.command == "equilibrium":
            report, _ = cmd_equilibrium(scenario, out)
        else:
            report, _ = cmd_optimize(scenario, out, args.workers)
    except Exception as exc:
        raise CommandError(_failing_module(exc), exc) from exc
    report.wall_time = time.perf_counter() - start
    report.argv = list(argv)
    report.write(out / artifact_name(report.command, scenario, "toml"))
    return report


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        report = run(args, argv)
    except CommandError as exc:
        log.debug("traceback", exc_info=exc.cause)
        print(f"queuenet: error in {exc.module}: {exc.cause}", file=sys.stderr)
        return 1
    print(format_summary(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
