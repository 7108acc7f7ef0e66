"""Transient queueing network for airport ground access, with mode choice and queue tolls."""

from .choice import ClassUtilityParams, PassengerClass, TollScheme, aggregate_shares, mnl_probabilities
from .ctmc import Generator, InstabilityError, TransientState, rk4_step, solve_transient
from .equilibrium import MswaConfig, MswaResult, mswa_solve
from .network import CongestionReport, NetworkState, PredictionError, initial_network_state, predict, predict_shares
from .rates import RateProfile, ShareVector, split_streams, timetable_to_profile
from .scenario import Scenario, ScenarioError, load_scenario, write_scenario
from .tollopt import AloConfig, AloResult, alo_optimize, ant_lion_optimize

__version__ = "0.1.0"

__all__ = [
    "AloConfig", "AloResult", "ClassUtilityParams", "CongestionReport", "Generator", "InstabilityError",
    "MswaConfig", "MswaResult", "NetworkState", "PassengerClass", "PredictionError", "RateProfile",
    "Scenario", "ScenarioError", "ShareVector", "TollScheme", "TransientState", "aggregate_shares",
    "alo_optimize", "ant_lion_optimize", "initial_network_state", "load_scenario", "mnl_probabilities",
    "mswa_solve", "predict", "predict_shares", "rk4_step", "solve_transient", "split_streams",
    "timetable_to_profile", "write_scenario",
]
