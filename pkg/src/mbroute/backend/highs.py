"""HiGHS adapter (default backend)."""
from __future__ import annotations

import logging

import highspy
import numpy as np

from mbroute.backend.base import BackendCapabilities, BackendSolution, SolverBackend, SolveStatus
from mbroute.errors import BackendError

log = logging.getLogger(__name__)

_INF = highspy.kHighsInf
_MS = highspy.HighsModelStatus


class HighsBackend(SolverBackend):
    capabilities = BackendCapabilities(supports_warm_start=True, supports_abs_gap=True)

    def __init__(self, threads: int | None = None, feasibility_tol: float = 1e-9, presolve: bool = False):
        self._h = highspy.Highs()
        self._h.setOptionValue("output_flag", False)
        # presolve mostly probes the big-M rows and costs more than it saves here
        self._h.setOptionValue("presolve", "on" if presolve else "off")
        self._h.setOptionValue("mip_feasibility_tolerance", feasibility_tol)
        self._h.setOptionValue("primal_feasibility_tolerance", feasibility_tol)
        if threads is not None:
            self._h.setOptionValue("threads", int(threads))
        self._integer: list[int] = []
        self._bounds: list[tuple[float, float]] = []
        self._names: list[str | None] = []
        self._rows = 0
        self._last: np.ndarray | None = None
        self._offset = 0.0

    @staticmethod
    def _inf(x: float) -> float:
        if x == np.inf:
            return _INF
        if x == -np.inf:
            return -_INF
        return float(x)

    def add_variable(self, lb, ub, binary=False, name=None):
        self._h.addVar(self._inf(lb), self._inf(ub))
        col = len(self._bounds)
        if binary:
            self._h.changeColIntegrality(col, highspy.HighsVarType.kInteger)
            self._integer.append(col)
        if name:
            self._h.passColName(col, name)
        self._bounds.append((lb, ub))
        self._names.append(name)
        if self._last is not None:
            self._last = np.append(self._last, max(lb, 0.0) if np.isfinite(lb) else 0.0)
        return col

    def add_row(self, indices, coefs, lb, ub):
        idx = np.asarray(indices, dtype=np.int32)
        val = np.asarray(coefs, dtype=np.float64)
        self._h.addRow(self._inf(lb), self._inf(ub), len(idx), idx, val)
        self._rows += 1
        return self._rows - 1

    def set_objective(self, coefs, offset=0.0):
        for col in range(len(self._bounds)):
            self._h.changeColCost(col, float(coefs.get(col, 0.0)))
        self._offset = float(offset)
        self._h.changeObjectiveOffset(self._offset)

    @property
    def num_vars(self):
        return len(self._bounds)

    @property
    def num_rows(self):
        return self._rows

    def solve(self, gap_abs=0.0, time_limit=None):
        h = self._h
        if not self._bounds:
            return BackendSolution(SolveStatus.OPTIMAL, self._offset, self._offset, np.empty(0))
        h.setOptionValue("mip_abs_gap", float(gap_abs))
        h.setOptionValue("mip_rel_gap", 0.0)
        h.setOptionValue("time_limit", float(time_limit) if time_limit else _INF)
        if self._last is not None and len(self._last) == len(self._bounds):
            sol = highspy.HighsSolution()
            sol.col_value = list(self._last)
            sol.value_valid = True
            h.setSolution(sol)
        h.run()
        status = h.getModelStatus()
        info = h.getInfo()
        if status in (_MS.kInfeasible, _MS.kUnboundedOrInfeasible):
            return BackendSolution(SolveStatus.INFEASIBLE)
        has_primal = info.primal_solution_status == 2
        values = np.array(h.getSolution().col_value) if has_primal else None
        bound = info.mip_dual_bound if self._integer else info.objective_function_value
        if status == _MS.kOptimal:
            self._last = values
            return BackendSolution(SolveStatus.OPTIMAL, info.objective_function_value, bound, values)
        if status in (_MS.kTimeLimit, _MS.kInterrupt, _MS.kSolutionLimit, _MS.kIterationLimit):
            return BackendSolution(SolveStatus.TIME_LIMIT,
                                   info.objective_function_value if has_primal else None, bound, values)
        raise BackendError(f"HiGHS returned {h.modelStatusToString(status)}")

    def polish(self, solution):
        if solution.values is None or not self._integer:
            return solution
        h = self._h
        cols = np.array(self._integer, dtype=np.int32)
        fixed = np.round(solution.values[cols])
        cont = np.array([highspy.HighsVarType.kContinuous] * len(cols))
        integ = np.array([highspy.HighsVarType.kInteger] * len(cols))
        h.changeColsIntegrality(len(cols), cols, cont)
        h.changeColsBounds(len(cols), cols, fixed, fixed)
        try:
            h.setOptionValue("time_limit", _INF)
            h.run()
            ok = h.getModelStatus() == _MS.kOptimal
            if ok:
                values = np.array(h.getSolution().col_value)
                values[cols] = fixed
                objective = h.getInfo().objective_function_value
        finally:
            lbs = np.array([self._bounds[c][0] for c in cols], dtype=np.float64)
            ubs = np.array([self._bounds[c][1] for c in cols], dtype=np.float64)
            h.changeColsBounds(len(cols), cols, lbs, ubs)
            h.changeColsIntegrality(len(cols), cols, integ)
        if not ok:
            log.debug("polish LP failed; keeping MIP values")
            return solution
        self._last = values
        return BackendSolution(solution.status, objective, solution.bound, values)

    def write_lp(self, path):
        self._h.writeModel(str(path))
