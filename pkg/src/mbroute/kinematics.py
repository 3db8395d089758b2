"""Closed-form travel times for trapezoidal speed profiles.

Trains accelerate and brake at constant rates and never exceed ``v_max``.
The fastest profile on an edge rides the upper envelope (accelerate, cruise,
brake); the slowest non-stopping profile rides the lower envelope but never
drops below ``v_floor`` unless an endpoint speed forces it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mbroute import _kernels
from mbroute.errors import DomainError, InfeasibleTransition

_REL_TOL = 1e-12
_ABS_TOL = 1e-9


@dataclass(frozen=True)
class KinematicParams:
    v_max: float
    accel: float
    decel: float
    v_floor: float = 0.5

    def __post_init__(self):
        for name in ("v_max", "accel", "decel", "v_floor"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")
        if not self.v_floor < self.v_max:
            raise DomainError(f"v_floor ({self.v_floor}) must be below v_max ({self.v_max})")

    def capped(self, v_max: float) -> "KinematicParams":
        """Same rates with a lower speed cap (edge limit)."""
        cap = min(self.v_max, v_max)
        return KinematicParams(cap, self.accel, self.decel, min(self.v_floor, 0.5 * cap))


def braking_distance(v: float, decel: float) -> float:
    if decel <= 0:
        raise DomainError(f"decel must be > 0, got {decel!r}")
    if v < 0:
        raise DomainError(f"speed must be >= 0, got {v!r}")
    return v * v / (2.0 * decel)


def _check_speeds(length, v1, v2, params):
    if length <= 0:
        raise DomainError(f"length must be > 0, got {length!r}")
    if v1 < 0 or v2 < 0:
        raise DomainError(f"speeds must be >= 0, got {v1!r}, {v2!r}")
    limit = params.v_max * (1 + _REL_TOL) + _ABS_TOL
    if v1 > limit or v2 > limit:
        raise DomainError(f"speeds {v1!r}, {v2!r} exceed v_max {params.v_max!r}")


def feasible_transition(length: float, v1: float, v2: float, params: KinematicParams) -> bool:
    """Whether the train can change speed from v1 to v2 within ``length``."""
    _check_speeds(length, v1, v2, params)
    rate = params.accel if v2 > v1 else params.decel
    need = abs(v2 * v2 - v1 * v1)
    have = 2.0 * rate * length
    return need <= have * (1 + _REL_TOL) + _ABS_TOL


def feasible_transitions(length, v1, v2, accel, decel):
    """Vectorised energy check (no domain validation)."""
    length, v1, v2 = np.asarray(length, float), np.asarray(v1, float), np.asarray(v2, float)
    rate = np.where(v2 > v1, accel, decel)
    return np.abs(v2 * v2 - v1 * v1) <= 2.0 * rate * length * (1 + _REL_TOL) + _ABS_TOL


def _require(length, v1, v2, params):
    if not feasible_transition(length, v1, v2, params):
        raise InfeasibleTransition(f"cannot go from {v1} to {v2} m/s within {length} m")


def _time(mode, length, v1, v2, lam, mu, params):
    return _kernels.interval_time(mode, length, v1, v2, lam, mu,
                                  params.v_max, params.accel, params.decel, params.v_floor)


def min_traverse_time(length: float, v1: float, v2: float, params: KinematicParams) -> float:
    _require(length, v1, v2, params)
    return _time(_kernels.FASTEST, length, v1, v2, 0.0, length, params)


def max_traverse_time(length: float, v1: float, v2: float, stop_allowed: bool,
                      params: KinematicParams) -> float:
    _require(length, v1, v2, params)
    if stop_allowed:
        return math.inf
    return _time(_kernels.SLOWEST, length, v1, v2, 0.0, length, params)


def _check_interval(length, lam, mu):
    if not (0 <= lam <= mu <= length * (1 + _REL_TOL) + _ABS_TOL):
        raise DomainError(f"need 0 <= lambda <= mu <= length, got {lam!r}, {mu!r}, {length!r}")


def min_time_over_interval(length: float, v1: float, v2: float, lam: float, mu: float,
                           params: KinematicParams) -> float:
    _check_interval(length, lam, mu)
    _require(length, v1, v2, params)
    return _time(_kernels.FASTEST, length, v1, v2, lam, min(mu, length), params)


def max_time_over_interval(length: float, v1: float, v2: float, lam: float, mu: float,
                           stop_allowed: bool, params: KinematicParams) -> float:
    _check_interval(length, lam, mu)
    _require(length, v1, v2, params)
    if mu <= lam:
        return 0.0
    if stop_allowed:
        return math.inf
    return _time(_kernels.SLOWEST, length, v1, v2, lam, min(mu, length), params)


def batch_times(mode: int, length, v1, v2, lam, mu, v_max, accel, decel, v_floor) -> np.ndarray:
    """Array version used when building extended graphs; inputs are assumed feasible."""
    return _kernels.interval_times(mode, length, v1, v2, lam, mu, v_max, accel, decel, v_floor)
