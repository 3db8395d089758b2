from mbroute.backend.base import BackendCapabilities, BackendSolution, SolverBackend, SolveStatus
from mbroute.backend.conformance import ConformanceReport, conformance_suite
from mbroute.backend.highs import HighsBackend
from mbroute.backend.scipy_milp import ScipyBackend

BACKENDS = {"highs": HighsBackend, "scipy": ScipyBackend}


def make_backend(name: str = "highs") -> SolverBackend:
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None


__all__ = ["BACKENDS", "BackendCapabilities", "BackendSolution", "ConformanceReport", "HighsBackend",
           "ScipyBackend", "SolveStatus", "SolverBackend", "conformance_suite", "make_backend"]
