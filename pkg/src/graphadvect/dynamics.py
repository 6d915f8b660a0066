"""Time integration of ``du/dt = -L_adv u`` and spatial convergence studies."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidResolutionList, NonFiniteState, ValidationError
from .graphs import (
    FamilyKind,
    GraphFamily,
    LinearOperator,
    OperatorKind,
    advection_operator,
    generate,
    node_positions,
)

__all__ = [
    "StateVector",
    "IntegrationConfig",
    "InitialCondition",
    "ConvergenceReport",
    "CFLWarning",
    "advection_rhs",
    "integrate",
    "total_mass",
    "exact_step_solution",
    "initial_profile",
    "convergence_study",
    "STEP_LEFT_VALUE",
    "STEP_JUMP",
]

# road initially 70% occupied on its first half
STEP_LEFT_VALUE = 0.7
STEP_JUMP = 0.5

# Dormand-Prince 5(4): stages 1-6 and the fifth-order solution weights
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])


class CFLWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class StateVector:
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteState(f"non-finite state at t={self.time}")
        if self.time < 0:
            raise ValidationError("time must be >= 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "time", float(self.time))

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class IntegrationConfig:
    """Fixed-step integration settings.

    When ``v`` and ``dx`` are given the CFL ratio ``|v dt / dx|`` is checked
    and a ``CFLWarning`` is emitted above 1; it is never an error.
    """

    dt: float
    t_end: float
    method: str = "RK5"
    v: Optional[float] = None
    dx: Optional[float] = None

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValidationError(f"t_end must be positive, got {self.t_end}")
        if self.dt > self.t_end:
            raise ValidationError(f"dt={self.dt} exceeds t_end={self.t_end}")
        if self.method.upper() != "RK5":
            raise ValidationError(f"unsupported method {self.method!r}")
        ratio = self.cfl_ratio
        if ratio is not None and ratio > 1:
            warnings.warn(f"CFL ratio {ratio:.3g} > 1", CFLWarning, stacklevel=3)

    @property
    def cfl_ratio(self) -> Optional[float]:
        if self.v is None or self.dx is None:
            return None
        return abs(self.v * self.dt / self.dx)


class InitialCondition(enum.Enum):
    STEP = "step"
    SMOOTH_SINE = "sine"


@dataclass(frozen=True)
class ConvergenceReport:
    resolutions: tuple
    errors: tuple
    fitted_slope: float
    family: Optional[GraphFamily] = None
    initial_condition: Optional[InitialCondition] = None
    t_end: Optional[float] = None

    def __post_init__(self):
        if len(self.resolutions) != len(self.errors) or len(self.errors) < 3:
            raise ValidationError("need >= 3 (resolution, error) pairs")
        if any(not (e > 0) for e in self.errors):
            raise ValidationError("errors must be strictly positive")


def _as_values(u) -> np.ndarray:
    if isinstance(u, StateVector):
        return u.values
    return np.asarray(u, dtype=float).reshape(-1)


def advection_rhs(op: LinearOperator, u) -> np.ndarray:
    """``-L_adv u``."""
    vals = _as_values(u)
    if vals.size != op.n:
        raise DimensionMismatch(f"state has {vals.size} entries, operator is {op.n}x{op.n}")
    return -(op.matrix @ vals)


def _rk5_step(a, u, h):
    k = []
    for i in range(6):
        ui = u
        for aij, kj in zip(_DP_A[i], k):
            ui = ui + h * aij * kj
        k.append(a @ ui)
    out = u.copy()
    for b, ki in zip(_DP_B, k):
        if b:
            out += h * b * ki
    return out


def integrate(op: LinearOperator, u0, cfg: IntegrationConfig) -> List[StateVector]:
    """Fixed-step fifth-order Runge-Kutta (Dormand-Prince weights).

    Returns the state at t=0 and after every step; the last step is shortened
    so the final state lands exactly on ``cfg.t_end``.
    """
    u = np.array(_as_values(u0), dtype=float)
    if u.size != op.n:
        raise DimensionMismatch(f"state has {u.size} entries, operator is {op.n}x{op.n}")
    a = -op.matrix
    t0 = u0.time if isinstance(u0, StateVector) else 0.0
    t_stop = t0 + cfg.t_end
    nsteps = math.ceil(cfg.t_end / cfg.dt - 1e-12)
    out = [StateVector(u.copy(), t0)]
    t = t0
    for step in range(nsteps):
        t_next = t_stop if step == nsteps - 1 else t0 + (step + 1) * cfg.dt
        with np.errstate(over="ignore", invalid="ignore"):
            u = _rk5_step(a, u, t_next - t)
        t = t_next
        if not np.all(np.isfinite(u)):
            bad = int(np.flatnonzero(~np.isfinite(u))[0])
            raise NonFiniteState(
                f"state blew up at step {step + 1} (t={t:.6g}), first bad node {bad}"
            )
        out.append(StateVector(u.copy(), t))
    return out


def total_mass(u) -> float:
    return float(np.sum(_as_values(u)))


def exact_step_solution(x, t, v, left_value=STEP_LEFT_VALUE, jump_position=STEP_JUMP):
    """Translated step with inflow held at ``left_value``."""
    if not v > 0:
        raise ValidationError("exact step solution needs v > 0")
    x = np.asarray(x, dtype=float)
    return np.where(x < jump_position + v * t, float(left_value), 0.0)


def initial_profile(x, ic: InitialCondition) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    ic = InitialCondition(ic)
    if ic is InitialCondition.SMOOTH_SINE:
        return np.sin(2 * np.pi * x)
    return np.where(x < STEP_JUMP, STEP_LEFT_VALUE, 0.0)


def _resolve_family(family: GraphFamily, n: int) -> GraphFamily:
    """Same family at resolution ``n`` on the unit domain."""
    periods = n if family.periodic else n - 1
    spacing = 1.0 / periods
    dx = 2 * spacing if family.kind is FamilyKind.NONUNIFORM_LINE else spacing
    return replace(family, n=int(n), dx=dx)


def _single_error(family, ic, t_end, cfl):
    x = node_positions(family)
    h = x[1] - x[0]
    op = advection_operator(generate(family))
    v = family.v
    cfg = IntegrationConfig(dt=min(cfl * h / abs(v), t_end), t_end=t_end, v=v, dx=h)
    u0 = initial_profile(x, ic)
    final = integrate(op, u0, cfg)[-1].values
    if family.periodic:
        exact = initial_profile(np.mod(x - v * t_end, 1.0), ic)
        mask = np.ones_like(x, dtype=bool)
    else:
        exact = exact_step_solution(x, t_end, v)
        # the open inflow node drains; compare only ahead of its influence zone
        mask = x >= v * t_end
        if not mask.any():
            raise ValidationError("t_end too large: no nodes outside the inflow zone")
    return math.sqrt(np.sum((final[mask] - exact[mask]) ** 2) * h)


def convergence_study(
    family: GraphFamily,
    initial_condition,
    resolutions: Sequence[int],
    t_end: float,
    cfl: float = 0.5,
) -> ConvergenceReport:
    """Integrate the family at each resolution on [0, 1] and fit the order.

    ``fitted_slope`` is minus the least-squares slope of log(error) against
    log(n), so first-order schemes report about 1.
    """
    ic = InitialCondition(initial_condition)
    res = [int(r) for r in resolutions]
    if len(res) < 3 or len(set(res)) != len(res) or min(res) < 3:
        raise InvalidResolutionList(f"need >= 3 distinct resolutions >= 3, got {list(resolutions)}")
    if family.kind in (FamilyKind.INTERSECTION, FamilyKind.STAR, FamilyKind.COMPLETE):
        raise ValidationError(f"{family.kind.value} has no spatial domain")
    if ic is InitialCondition.SMOOTH_SINE and not family.periodic:
        raise ValidationError("the sine initial condition needs a periodic family")
    if not family.periodic and family.v < 0:
        raise ValidationError("open-line step study needs v > 0")
    errors = [_single_error(_resolve_family(family, n), ic, t_end, cfl) for n in res]
    slope = -np.polyfit(np.log(res), np.log(errors), 1)[0]
    return ConvergenceReport(tuple(res), tuple(errors), float(slope), family, ic, float(t_end))
