"""Scenario files: TOML parameter sets for the ground-access network.

A scenario names every service, choice and solver parameter explicitly.
Arrival intensities come from flight timetables (CSV side files, relative
to the scenario file) or from constant rates. Bundled scenarios can be
loaded by bare name, e.g. ``load_scenario("day")``.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .choice import ClassUtilityParams, PassengerClass
from .ctmc import DEFAULT_DT
from .equilibrium import MswaConfig
from .rates import RateError, RateProfile, read_timetable, timetable_to_profile
from .tollopt import AloConfig

BUNDLED = ("day", "night", "case1", "case2")


class ScenarioError(ValueError):
    """Invalid or unreadable scenario; the message names the offending field."""


def _require(ok: bool, name: str, msg: str) -> None:
    if not ok:
        raise ScenarioError(f"{name}: {msg}")


def _positive(value: float, name: str) -> None:
    _require(isinstance(value, (int, float)) and math.isfinite(value) and value > 0, name,
             f"must be positive and finite, got {value!r}")


def _count(value: int, name: str, minimum: int = 1) -> None:
    _require(isinstance(value, int) and not isinstance(value, bool) and value >= minimum, name,
             f"must be an integer >= {minimum}, got {value!r}")


def _fraction(value: float, name: str) -> None:
    _require(isinstance(value, (int, float)) and 0.0 <= value <= 1.0, name,
             f"must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class RatesConfig:
    arrivals: str | None = None      # timetable CSV of arriving flights
    departures: str | None = None    # timetable CSV of departing flights (taxi supply)
    total_rate: float | None = None  # constant passenger intensity instead of arrivals
    supply_rate: float | None = None  # constant taxi intensity instead of departures
    spread_window: float = 30.0
    bin_width: float = 1.0

    def __post_init__(self):
        _require((self.arrivals is None) != (self.total_rate is None), "rates",
                 "give exactly one of arrivals / total_rate")
        _require((self.departures is None) != (self.supply_rate is None), "rates",
                 "give exactly one of departures / supply_rate")
        for name in ("total_rate", "supply_rate"):
            v = getattr(self, name)
            if v is not None:
                _require(math.isfinite(v) and v >= 0, f"rates.{name}", f"must be >= 0, got {v!r}")
        for name in ("arrivals", "departures"):
            v = getattr(self, name)
            if v is not None:
                _require(Path(v).is_file(), f"rates.{name}", f"file not found: {v}")
        _positive(self.spread_window, "rates.spread_window")
        _positive(self.bin_width, "rates.bin_width")

    def profile(self, kind: str, window: tuple[float, float]) -> RateProfile:
        path, const = ((self.arrivals, self.total_rate) if kind == "arrivals"
                       else (self.departures, self.supply_rate))
        if const is not None:
            return RateProfile.constant(const, *window)
        try:
            return timetable_to_profile(read_timetable(path), self.spread_window, self.bin_width, window)
        except RateError as exc:
            raise ScenarioError(f"rates.{kind}: {exc}") from exc


@dataclass(frozen=True)
class TaxiConfig:
    mu: float = 3.0
    K_T: int = 10
    supply_factor: float = 0.05  # taxis per departing passenger

    def __post_init__(self):
        _positive(self.mu, "taxi.mu")
        _count(self.K_T, "taxi.K_T")
        _require(math.isfinite(self.supply_factor) and self.supply_factor >= 0, "taxi.supply_factor",
                 f"must be >= 0, got {self.supply_factor!r}")


@dataclass(frozen=True)
class BusConfig:
    q_B: float = 0.4
    mu_B: float = 1.0
    c_B: int = 2
    N: int = 55
    T: float = 30.0
    renewal_step: float = 0.05

    def __post_init__(self):
        _fraction(self.q_B, "bus.q_B")
        _positive(self.mu_B, "bus.mu_B")
        _count(self.c_B, "bus.c_B")
        _count(self.N, "bus.N")
        _positive(self.T, "bus.T")
        _positive(self.renewal_step, "bus.renewal_step")


@dataclass(frozen=True)
class SubwayConfig:
    q_S: float = 0.3
    mu_S1: float = 8.0
    mu_S2: float = 1.0
    c_S1: int = 2
    c_S2: int = 2
    order: str = "security-first"
    security: bool = True

    def __post_init__(self):
        _fraction(self.q_S, "subway.q_S")
        _positive(self.mu_S1, "subway.mu_S1")
        _positive(self.mu_S2, "subway.mu_S2")
        _count(self.c_S1, "subway.c_S1")
        _count(self.c_S2, "subway.c_S2")
        _require(self.order in ("security-first", "ticket-first"), "subway.order",
                 f"must be 'security-first' or 'ticket-first', got {self.order!r}")
        _require(isinstance(self.security, bool), "subway.security", "must be true or false")


@dataclass(frozen=True)
class InitialConfig:
    L_X: int = 0
    taxis: int = 0
    L_B: int = 0
    m0: int = 0
    t0: float = 0.0
    L_S1: int = 0
    L_S2: int = 0
    M: float = 2.0  # wait for the next train after ticketing (min)

    def __post_init__(self):
        for name in ("L_X", "taxis", "L_B", "m0", "L_S1", "L_S2"):
            _count(getattr(self, name), f"initial.{name}", 0)
        _require(math.isfinite(self.t0) and self.t0 >= 0, "initial.t0", f"must be >= 0, got {self.t0!r}")
        _require(math.isfinite(self.M) and self.M >= 0, "initial.M", f"must be >= 0, got {self.M!r}")


@dataclass(frozen=True)
class SolverConfig:
    dt: float = DEFAULT_DT
    tail_eps: float = 1e-9
    max_wait: float = 1e3  # reported wait when a crowd exists but nobody arrives
    seed: int = 42
    mswa: MswaConfig = field(default_factory=MswaConfig)
    alo: AloConfig = field(default_factory=AloConfig)

    def __post_init__(self):
        _positive(self.dt, "solver.dt")
        _require(0 < self.tail_eps < 1, "solver.tail_eps", f"must lie in (0, 1), got {self.tail_eps!r}")
        _positive(self.max_wait, "solver.max_wait")
        _count(self.seed, "solver.seed", 0)
        if self.alo.rng_seed != self.seed:
            object.__setattr__(self, "alo", dataclasses.replace(self.alo, rng_seed=self.seed))


@dataclass(frozen=True)
class Scenario:
    name: str
    rates: RatesConfig
    choice: ClassUtilityParams
    start: float = 0.0
    horizon: float = 15.0
    taxi: TaxiConfig = field(default_factory=TaxiConfig)
    bus: BusConfig = field(default_factory=BusConfig)
    subway: SubwayConfig = field(default_factory=SubwayConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    profile_span: float = 60.0  # minutes of rate data built from the start

    def __post_init__(self):
        _require(bool(self.name), "name", "must be nonempty")
        _require(math.isfinite(self.start), "start", "must be finite")
        _positive(self.horizon, "horizon")
        _positive(self.profile_span, "profile_span")
        _require(self.initial.m0 <= self.bus.N, "initial.m0", f"exceeds bus.N={self.bus.N}")
        _require(self.initial.t0 <= self.bus.T, "initial.t0", f"exceeds bus.T={self.bus.T}")
        _require(self.initial.taxis <= self.taxi.K_T, "initial.taxis", f"exceeds taxi.K_T={self.taxi.K_T}")

    @property
    def window(self) -> tuple[float, float]:
        return self.start, self.start + max(self.profile_span, self.horizon)

    @cached_property
    def total_profile(self) -> RateProfile:
        return self.rates.profile("arrivals", self.window)

    @cached_property
    def supply_profile(self) -> RateProfile:
        prof = self.rates.profile("departures", self.window)
        return prof if self.rates.departures is None else prof.scale(self.taxi.supply_factor)

    def replace(self, **changes: Any) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def with_solver(self, **changes: Any) -> "Scenario":
        return self.replace(solver=dataclasses.replace(self.solver, **changes))


SECTIONS = {"rates": RatesConfig, "taxi": TaxiConfig, "bus": BusConfig, "subway": SubwayConfig,
            "initial": InitialConfig}


def _build(cls, data: dict, section: str):
    if not isinstance(data, dict):
        raise ScenarioError(f"{section}: expected a table")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ScenarioError(f"{section}.{unknown[0]}: unknown field")
    try:
        return cls(**data)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{section}: {exc}") from exc


def _resolve_paths(rates: dict, base: Path) -> dict:
    rates = dict(rates)
    for key in ("arrivals", "departures"):
        if key in rates:
            p = Path(rates[key])
            rates[key] = str(p if p.is_absolute() else (base / p).resolve())
    return rates


def _choice(data: dict) -> ClassUtilityParams:
    data = dict(data)
    classes = data.pop("classes", None)
    _require(isinstance(classes, list) and len(classes) > 0, "choice.classes", "need at least one [[choice.classes]]")
    tau = data.pop("tau", 10.0)
    if data:
        raise ScenarioError(f"choice.{sorted(data)[0]}: unknown field")
    built = [_build(PassengerClass, c, f"choice.classes[{k}]") for k, c in enumerate(classes)]
    try:
        return ClassUtilityParams(tuple(built), float(tau))
    except ValueError as exc:
        raise ScenarioError(f"choice: {exc}") from exc


def _solver(data: dict) -> SolverConfig:
    data = dict(data)
    mswa = _build(MswaConfig, data.pop("mswa", {}), "solver.mswa")
    alo_data = dict(data.pop("alo", {}))
    _require("rng_seed" not in alo_data, "solver.alo.rng_seed", "set the seed with solver.seed")
    for key in ("Cl", "Cu"):
        if key in alo_data:
            alo_data[key] = tuple(alo_data[key])
    if "w_schedule" in alo_data:
        alo_data["w_schedule"] = tuple(tuple(p) for p in alo_data["w_schedule"])
    alo = _build(AloConfig, alo_data, "solver.alo")
    return _build(SolverConfig, {**data, "mswa": mswa, "alo": alo}, "solver")


def scenario_from_dict(data: dict, base: Path = Path("."), name: str | None = None) -> Scenario:
    data = dict(data)
    top = {k: data.pop(k) for k in ("name", "start", "horizon", "profile_span") if k in data}
    top.setdefault("name", name or "scenario")
    try:
        rates = _build(RatesConfig, _resolve_paths(data.pop("rates", {}), base), "rates")
        sections = {k: _build(SECTIONS[k], data.pop(k, {}), k) for k in ("taxi", "bus", "subway", "initial")}
        choice = _choice(data.pop("choice", {}))
        solver = _solver(data.pop("solver", {}))
    except KeyError as exc:
        raise ScenarioError(f"{exc.args[0]}: missing") from exc
    if data:
        raise ScenarioError(f"{sorted(data)[0]}: unknown section")
    try:
        return Scenario(rates=rates, choice=choice, solver=solver, **sections, **top)
    except TypeError as exc:
        raise ScenarioError(str(exc)) from exc


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("queuenet") / "scenarios" / f"{name}.toml"))


def resolve_path(path_or_name: str | Path) -> Path:
    p = Path(path_or_name)
    if p.is_file():
        return p
    if p.suffix == "" and bundled_path(str(p)).is_file():
        return bundled_path(str(p))
    raise ScenarioError(f"scenario file not found: {path_or_name}")


def load_scenario(path_or_name: str | Path) -> Scenario:
    """Parse and validate a scenario file (or a bundled scenario name)."""
    path = resolve_path(path_or_name)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: parse error: {exc}") from exc
    return scenario_from_dict(data, path.resolve().parent, path.stem)


def scenario_to_dict(scenario: Scenario) -> dict:
    """Fully explicit TOML-ready mapping; file references become absolute paths."""
    def clean(d: dict) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items() if v is not None}

    alo = dataclasses.asdict(scenario.solver.alo)
    alo.pop("rng_seed")
    alo["w_schedule"] = [list(p) for p in alo["w_schedule"]]
    solver = {k: getattr(scenario.solver, k) for k in ("dt", "tail_eps", "max_wait", "seed")}
    mswa = clean(dataclasses.asdict(scenario.solver.mswa))
    return {
        "name": scenario.name,
        "start": scenario.start,
        "horizon": scenario.horizon,
        "profile_span": scenario.profile_span,
        "rates": clean(dataclasses.asdict(scenario.rates)),
        "taxi": dataclasses.asdict(scenario.taxi),
        "bus": dataclasses.asdict(scenario.bus),
        "subway": dataclasses.asdict(scenario.subway),
        "initial": dataclasses.asdict(scenario.initial),
        "choice": {
            "tau": scenario.choice.tau,
            "classes": [clean(dataclasses.asdict(c)) for c in scenario.choice.classes],
        },
        "solver": {**solver, "mswa": mswa, "alo": clean(alo)},
    }


def write_scenario(scenario: Scenario, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(tomli_w.dumps(scenario_to_dict(scenario)), encoding="utf-8")
    return path
