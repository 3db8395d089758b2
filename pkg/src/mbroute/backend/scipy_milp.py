"""Drop-in backend on ``scipy.optimize.milp`` (HiGHS bundled with scipy).

No incremental state: every solve rebuilds the matrix. ``milp`` exposes only a
relative gap, so the absolute gap is emulated by solving to optimality
(``mip_rel_gap=0``), which is stricter than requested.
"""
from __future__ import annotations

import numpy as np
from scipy import optimize, sparse

from mbroute.backend.base import BackendCapabilities, BackendSolution, SolverBackend, SolveStatus
from mbroute.errors import BackendError


class ScipyBackend(SolverBackend):
    capabilities = BackendCapabilities(supports_warm_start=False, supports_abs_gap=False)

    def __init__(self):
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._int: list[int] = []
        self._rows: list[tuple[np.ndarray, np.ndarray, float, float]] = []
        self._cost: dict[int, float] = {}
        self._offset = 0.0

    def add_variable(self, lb, ub, binary=False, name=None):
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._int.append(1 if binary else 0)
        return len(self._lb) - 1

    def add_row(self, indices, coefs, lb, ub):
        self._rows.append((np.asarray(indices, dtype=np.int64), np.asarray(coefs, float), lb, ub))
        return len(self._rows) - 1

    def set_objective(self, coefs, offset=0.0):
        self._cost = dict(coefs)
        self._offset = float(offset)

    @property
    def num_vars(self):
        return len(self._lb)

    @property
    def num_rows(self):
        return len(self._rows)

    def _matrix(self):
        n = len(self._lb)
        rows, cols, vals = [], [], []
        for r, (idx, val, _, _) in enumerate(self._rows):
            rows.extend([r] * len(idx))
            cols.extend(idx.tolist())
            vals.extend(val.tolist())
        a = sparse.csr_array((vals, (rows, cols)), shape=(len(self._rows), n))
        lo = np.array([r[2] for r in self._rows], float)
        hi = np.array([r[3] for r in self._rows], float)
        return a, lo, hi

    def _cost_vector(self):
        c = np.zeros(len(self._lb))
        for k, v in self._cost.items():
            c[k] = v
        return c

    def _run(self, integrality, lb, ub, time_limit):
        constraints = []
        if self._rows:
            a, lo, hi = self._matrix()
            constraints = [optimize.LinearConstraint(a, lo, hi)]
        options = {"mip_rel_gap": 0.0}
        if time_limit:
            options["time_limit"] = float(time_limit)
        return optimize.milp(self._cost_vector(), integrality=integrality,
                             bounds=optimize.Bounds(lb, ub), constraints=constraints, options=options)

    def solve(self, gap_abs=0.0, time_limit=None):
        if not self._lb:
            return BackendSolution(SolveStatus.OPTIMAL, self._offset, self._offset, np.empty(0))
        res = self._run(np.array(self._int), np.array(self._lb), np.array(self._ub), time_limit)
        if res.status == 2:
            return BackendSolution(SolveStatus.INFEASIBLE)
        if res.status == 0:
            bound = getattr(res, "mip_dual_bound", None)
            bound = res.fun + self._offset if bound is None else bound + self._offset
            return BackendSolution(SolveStatus.OPTIMAL, res.fun + self._offset, bound, np.asarray(res.x))
        if res.status == 1:
            x = None if res.x is None else np.asarray(res.x)
            obj = None if res.x is None else res.fun + self._offset
            return BackendSolution(SolveStatus.TIME_LIMIT, obj, None, x)
        raise BackendError(f"scipy.milp failed: {res.message}")

    def polish(self, solution):
        if solution.values is None or not any(self._int):
            return solution
        lb, ub = np.array(self._lb), np.array(self._ub)
        mask = np.array(self._int, bool)
        fixed = np.round(solution.values[mask])
        lb[mask] = fixed
        ub[mask] = fixed
        res = self._run(np.zeros(len(lb)), lb, ub, None)
        if res.status != 0:
            return solution
        values = np.asarray(res.x)
        values[mask] = fixed
        return BackendSolution(solution.status, res.fun + self._offset, solution.bound, values)
