"""Commitment-level success model and its numerical verification.

A commitment of depth h fails with probability q(h) = c*h^alpha, so an
episode of T primitive steps executed in fixed-depth chunks succeeds with
probability P(h) = p0*(1 - c*h^alpha)^(T/h).  The shape of P over h is
governed entirely by alpha: for alpha >= 1 it is maximized at h = 1, while
for alpha in (0, 1) there is a unique interior optimum recovered from the
root of F(u) = (1-u)*(-log(1-u))/u = alpha via u* = c*h*^alpha.

The state-dependent extension gives each visited state its own (c, alpha)
and multiplies per-commitment factors; when local optima differ across
states, choosing them adaptively strictly beats every constant depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import DEFAULT_DEPTHS, DepthSet, DomainError


@dataclass(frozen=True)
class PowerLawParams:
    p0: float
    c: float
    alpha: float
    T: float

    def __post_init__(self) -> None:
        if not 0 < self.p0 <= 1:
            raise DomainError(f"p0 must be in (0, 1], got {self.p0}")
        if self.c <= 0:
            raise DomainError(f"c must be positive, got {self.c}")
        if self.alpha <= 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if self.T <= 0:
            raise DomainError(f"T must be positive, got {self.T}")


def _failure(h: float, c: float, alpha: float) -> float:
    """Per-commitment failure probability u = c*h^alpha, checked < 1."""
    if h <= 0:
        raise DomainError(f"h must be positive, got {h}")
    u = c * h ** alpha
    if u >= 1:
        raise DomainError(f"c*h^alpha = {u} >= 1 at h={h}")
    return u


def log_success_fixed(h: float, params: PowerLawParams) -> float:
    u = _failure(h, params.c, params.alpha)
    return math.log(params.p0) + (params.T / h) * math.log1p(-u)


def success_fixed(h: float, params: PowerLawParams) -> float:
    """P(h) = p0*(1 - c*h^alpha)^(T/h).  T/h may be non-integer."""
    return math.exp(log_success_fixed(h, params))


def log_success_derivative(h: float, params: PowerLawParams) -> float:
    """d/dh of log success_fixed; zero exactly at the interior optimum."""
    u = _failure(h, params.c, params.alpha)
    bracket = -math.log1p(-u) - params.alpha * u / (1 - u)
    return (params.T / h ** 2) * bracket


def F(u: float) -> float:
    """The strictly decreasing bijection (0,1) -> (0,1) whose root against
    alpha locates the optimal failure level: F(u) = (1-u)*(-log(1-u))/u."""
    if not 0 < u < 1:
        raise DomainError(f"u must be in (0, 1), got {u}")
    return (1 - u) * (-math.log1p(-u)) / u


def solve_ustar(alpha: float, tol: float = 1e-10) -> float:
    """Unique root of F(u) = alpha by bisection, to |F(u*) - alpha| <= tol."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    lo, hi = 1e-15, 1 - 1e-15
    for _ in range(200):
        mid = (lo + hi) / 2
        value = F(mid)
        if abs(value - alpha) <= tol:
            return mid
        if value > alpha:
            lo = mid
        else:
            hi = mid
    raise ArithmeticError(
        f"bisection failed to reach tolerance {tol} for alpha={alpha}")


def hstar_continuous(alpha: float, c: float) -> float:
    """Interior optimum h* = (u*(alpha)/c)^(1/alpha), alpha in (0,1)."""
    if c <= 0:
        raise DomainError(f"c must be positive, got {c}")
    return (solve_ustar(alpha) / c) ** (1 / alpha)


def local_hstar(c_s: float, alpha_s: float,
                depths: DepthSet = DEFAULT_DEPTHS) -> int:
    """Best depth in the set for one state: argmax of the per-step success
    rate g(h) = (1 - c*h^alpha)^(1/h).  Ties go to the larger h, which
    conserves decisions."""
    best_h, best_g = None, -math.inf
    for h in depths:
        g = math.log1p(-_failure(h, c_s, alpha_s)) / h
        if g >= best_g:
            best_h, best_g = h, g
    return best_h


@dataclass(frozen=True)
class StateModel:
    """Per-state error parameters and the sequence of states an episode
    visits, one entry per decision."""

    states: tuple[tuple[float, float], ...]
    visit_sequence: tuple[int, ...]
    p0: float = 1.0

    def __post_init__(self) -> None:
        if not self.states:
            raise DomainError("need at least one state")
        for c_s, alpha_s in self.states:
            if c_s <= 0:
                raise DomainError(f"c must be positive, got {c_s}")
            if not 0 < alpha_s < 1:
                raise DomainError(f"alpha must be in (0, 1), got {alpha_s}")
        if not self.visit_sequence:
            raise DomainError("visit sequence must be non-empty")
        for idx in self.visit_sequence:
            if not 0 <= idx < len(self.states):
                raise DomainError(f"visit index {idx} out of range")
        if not 0 < self.p0 <= 1:
            raise DomainError(f"p0 must be in (0, 1], got {self.p0}")


def log_success_adaptive(model: StateModel,
                         depths_chosen: Sequence[int]) -> float:
    if len(depths_chosen) != len(model.visit_sequence):
        raise DomainError(
            f"{len(depths_chosen)} depths for "
            f"{len(model.visit_sequence)} visits")
    total = math.log(model.p0)
    for idx, h in zip(model.visit_sequence, depths_chosen):
        c_s, alpha_s = model.states[idx]
        total += math.log1p(-_failure(h, c_s, alpha_s))
    return total


def success_adaptive(model: StateModel,
                     depths_chosen: Sequence[int]) -> float:
    """p0 * product over decisions of (1 - c(s_k)*h_k^alpha(s_k))."""
    return math.exp(log_success_adaptive(model, depths_chosen))


@dataclass(frozen=True)
class DominanceResult:
    adaptive_logp: float
    best_fixed_logp: float
    best_fixed_h: int
    strict: bool

    @property
    def gap(self) -> float:
        return self.adaptive_logp - self.best_fixed_logp


def _log_rate(h: int, c_s: float, alpha_s: float) -> float:
    """Per-primitive-step log success of committing depth h at one state."""
    return math.log1p(-_failure(h, c_s, alpha_s)) / h


def _horizon_logp(model: StateModel, schedule: Sequence[int]) -> float:
    """Log success of a depth schedule at a fixed primitive horizon.

    A depth-h commitment covers h primitive steps, so covering the same
    stretch of trajectory costs (1 - c*h^alpha)^(1/h) per step.  Comparing
    schedules per decision instead would let a constant depth of 1 win by
    covering an 8x shorter horizon with the same number of factors.
    """
    total = math.log(model.p0)
    for idx, h in zip(model.visit_sequence, schedule):
        c_s, alpha_s = model.states[idx]
        total += _log_rate(h, c_s, alpha_s)
    return total


def dominance_check(model: StateModel,
                    depths: DepthSet = DEFAULT_DEPTHS) -> DominanceResult:
    """Compare per-state-best depths against the best constant depth.

    Both schedules are scored by per-primitive-step log success summed
    over the visit sequence (see _horizon_logp).  The adaptive schedule
    picks local_hstar at every visited state, so the gap is always >= 0
    and strictly positive exactly when the visited states' local optima
    differ.
    """
    adaptive = [local_hstar(c_s, alpha_s, depths)
                for c_s, alpha_s in
                (model.states[i] for i in model.visit_sequence)]
    adaptive_logp = _horizon_logp(model, adaptive)
    best_fixed_logp, best_fixed_h = -math.inf, None
    for h0 in depths:
        logp = _horizon_logp(model, [h0] * len(model.visit_sequence))
        if logp > best_fixed_logp:
            best_fixed_logp, best_fixed_h = logp, h0
    return DominanceResult(
        adaptive_logp=adaptive_logp,
        best_fixed_logp=best_fixed_logp,
        best_fixed_h=best_fixed_h,
        strict=adaptive_logp > best_fixed_logp)


def default_h_grid(max_exponent: int = 8, per_decade: int = 50) -> tuple[int, ...]:
    """Log-spaced integer depths from 1 to 10^max_exponent."""
    points = {
        int(round(10 ** (i / per_decade)))
        for i in range(max_exponent * per_decade + 1)
    }
    return tuple(sorted(points))


@dataclass(frozen=True)
class PhaseRow:
    alpha: float
    c: float
    T: float
    argmax_h: int
    interior: bool
    hstar: Optional[float]
    matches_prediction: bool
    log_success: float


def phase_scan(alpha_grid: Sequence[float], c: float, T: float,
               h_grid: Optional[Sequence[int]] = None,
               check: bool = True) -> list[PhaseRow]:
    """Locate the best depth on a grid for each alpha and flag whether the
    result matches the phase-transition prediction: boundary argmax h=1
    for alpha >= 1, interior argmax within one grid step of the continuous
    optimum for alpha < 1 (when that optimum lies inside the grid).

    With ``check`` a mismatching row raises instead of being returned.
    """
    grid = tuple(h_grid) if h_grid is not None else default_h_grid()
    if not grid or not alpha_grid:
        raise DomainError("grids must be non-empty")
    rows = []
    for alpha in alpha_grid:
        params = PowerLawParams(p0=1.0, c=c, alpha=alpha, T=T)
        feasible = [h for h in grid if c * h ** alpha < 1]
        if not feasible:
            raise DomainError(f"no feasible h on grid for alpha={alpha}")
        values = [log_success_fixed(h, params) for h in feasible]
        best_i = max(range(len(feasible)), key=values.__getitem__)
        argmax_h = feasible[best_i]
        interior = 0 < best_i < len(feasible) - 1
        if alpha < 1:
            hstar = hstar_continuous(alpha, c)
            if feasible[0] <= hstar <= feasible[-1]:
                nearest = min(range(len(feasible)),
                              key=lambda i: abs(feasible[i] - hstar))
                matches = abs(best_i - nearest) <= 1
            else:
                matches = True
        else:
            hstar = None
            matches = argmax_h == grid[0]
        row = PhaseRow(alpha=alpha, c=c, T=T, argmax_h=argmax_h,
                       interior=interior, hstar=hstar,
                       matches_prediction=matches, log_success=values[best_i])
        if check and not matches:
            raise RuntimeError(
                f"phase scan row alpha={alpha} has argmax {argmax_h}, "
                f"contradicting the predicted optimum {hstar or grid[0]}")
        rows.append(row)
    return rows
