"""Routing and scheduling of trains under moving-block signalling as a MILP.

Typical use::

    from mbroute import read_instance, solve_iteratively, SolveConfig
    result = solve_iteratively(read_instance("line.json"), SolveConfig(strategy="AdjacentViolated"))
"""
from mbroute.config import SolveConfig, Strategy
from mbroute.instance import Demand, Edge, Instance, Network, Station, StopRequest, Train, load_instance, read_instance
from mbroute.lazy import SolveResult, solve_iteratively
from mbroute.schedule import CandidateSolution
from mbroute.validator import ViolationReport, fastest_single_train_time, verify_schedule

__version__ = "0.1.0"

__all__ = ["CandidateSolution", "Demand", "Edge", "Instance", "Network", "SolveConfig", "SolveResult", "Station",
           "StopRequest", "Strategy", "Train", "ViolationReport", "fastest_single_train_time", "load_instance",
           "read_instance", "solve_iteratively", "verify_schedule"]
