"""
Piecewise-constant steering plans X_f = prod_k exp(T_k (A + u_k B)) for controllable
single-input systems.

The planner first tries a single exponential factor in closed form, then fits Q factors
by bounded least squares over (T_k >= 0, u_k in the admissible box), growing Q from 3 and
restarting from points seeded around the Omega witness.
"""
import math
import logging
import numpy as np

from tqdm import tqdm
from dataclasses import dataclass
from typing import Optional, Tuple
from scipy.optimize import least_squares

from app.core import settings
from app.core.errors import InvalidInput, NotControllable, NotConverged, NumericalOverflow
from app.core.algebra import (IDENTITY, AlgebraElement, GroupElement, Kind, classify,
                              group_dist, indefinite_form, require_group)
from app.control.controllability import verdict_single, verdict_single_bounded
from app.control.simulator import ControlSchedule, evolve

logger = logging.getLogger(__name__)

# Residual returned for parameter vectors whose product overflows.
OVERFLOW_RESIDUAL = 1e6


@dataclass(frozen=True)
class SteeringPlan:
    schedule: ControlSchedule
    achieved: GroupElement
    target: GroupElement
    error: float
    iterations: int
    converged: bool

    @property
    def factors(self) -> int:
        return len(self.schedule)

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "error": self.error,
            "iterations": self.iterations,
            "factors": self.factors,
            "schedule": self.schedule.to_dict(),
            "achieved": self.achieved.to_dict(),
            "target": self.target.to_dict(),
        }


def _make_plan(A: AlgebraElement, B: AlgebraElement, schedule: ControlSchedule, target: GroupElement,
               iterations: int, tol: float) -> SteeringPlan:
    achieved = evolve(A, [B], schedule)
    error = math.sqrt(2.0) * float(np.linalg.norm(achieved.as_array() - target.as_array()))
    return SteeringPlan(schedule, achieved, target, error, iterations, error <= tol)


def _factor_time(M: AlgebraElement, x1: float, s: float) -> Optional[float]:
    """Smallest T >= 0 with exp(TM) = x1 I + s M, if one exists."""
    kind = classify(M).kind
    kappa = indefinite_form(M, M)
    if kind is Kind.ELLIPTIC:
        omega = math.sqrt(-kappa) / 2.0
        return (math.atan2(s * omega, x1) % (2.0 * math.pi)) / omega
    if kind is Kind.HYPERBOLIC:
        if s < 0.0:
            return None
        omega = math.sqrt(kappa) / 2.0
        return math.asinh(s * omega) / omega
    return s if s >= 0.0 else None


def single_factor(A: AlgebraElement, B: AlgebraElement, target: GroupElement,
                  bound: Optional[float] = None, witness: Optional[float] = None) -> Optional[Tuple[float, float]]:
    """
    (T, u) with exp(T (A + uB)) = target when the target lies on one such factor.
    The traceless part of the target is s (A + uB), so it has to lie in span(A, B).
    """
    traceless = AlgebraElement.from_matrix(target.matrix() - target.x1 * np.eye(2))
    scale = max(1.0, abs(target.x1))
    if traceless.norm() <= 1e-14 * scale:
        # +-I: the identity needs no factor, -I is half a turn of the elliptic witness.
        if target.x1 > 0.0 or witness is None:
            return None
        M = A + witness * B
        return math.pi / (math.sqrt(-indefinite_form(M, M)) / 2.0), witness
    columns = np.column_stack([A.as_array(), B.as_array()])
    (alpha, gamma), *_ = np.linalg.lstsq(columns, traceless.as_array(), rcond=None)
    if np.linalg.norm(columns @ np.array([alpha, gamma]) - traceless.as_array()) > 1e-12 * scale:
        return None
    if abs(alpha) <= 1e-14:
        return None
    u = gamma / alpha
    if bound is not None and abs(u) > bound:
        return None
    T = _factor_time(A + u * B, target.x1, alpha)
    return None if T is None else (T, u)


def _elliptic_period(M: AlgebraElement) -> float:
    return 4.0 * math.pi / math.sqrt(-indefinite_form(M, M))


def _residual(params: np.ndarray, A: AlgebraElement, B: AlgebraElement, target: np.ndarray, Q: int) -> np.ndarray:
    schedule = ControlSchedule.from_pairs(zip(params[:Q], params[Q:]))
    try:
        achieved = evolve(A, [B], schedule)
    except NumericalOverflow:
        return np.full(4, OVERFLOW_RESIDUAL)
    return math.sqrt(2.0) * (achieved.as_array() - target)


def _schedule_key(plan: SteeringPlan) -> tuple:
    return plan.error, plan.factors, tuple((s.duration, s.controls) for s in plan.schedule.segments)


def plan(A: AlgebraElement, B: AlgebraElement, target: GroupElement, bound: Optional[float] = None,
         tol: float = settings.STEERING_TOL, seed: int = settings.DEFAULT_SEED,
         restarts: int = settings.STEERING_RESTARTS, q_max: int = settings.STEERING_Q_MAX,
         progress: bool = False) -> SteeringPlan:
    """
    Raises NotControllable when the system is gated out and NotConverged, carrying the best
    plan found, when no plan reaches tol.
    """
    if not (math.isfinite(tol) and tol > 0.0):
        raise InvalidInput(f"tolerance must be positive, got {tol}")
    require_group(target)
    verdict = verdict_single(A, B) if bound is None else verdict_single_bounded(A, B, bound)
    if not verdict.is_controllable:
        raise NotControllable(f"steering needs a controllable system, verdict is {verdict.decision.value}")
    witness = float(verdict.witness)

    if group_dist(target, IDENTITY) <= tol:
        return _make_plan(A, B, ControlSchedule(), target, 0, tol)

    closed_form = single_factor(A, B, target, bound, witness)
    if closed_form is not None:
        candidate = _make_plan(A, B, ControlSchedule.from_pairs([closed_form]), target, 0, tol)
        if candidate.converged:
            logger.info("target reached by one factor, error %.3e", candidate.error)
            return candidate

    rng = np.random.default_rng(seed)
    t_max = 2.0 * _elliptic_period(A + witness * B)
    u_low, u_high = (-bound, bound) if bound is not None else (-np.inf, np.inf)
    target_array = target.as_array()
    best: Optional[SteeringPlan] = None
    iterations = 0

    Q = settings.STEERING_Q_START
    while Q <= q_max:
        lower = np.concatenate([np.zeros(Q), np.full(Q, u_low)])
        upper = np.concatenate([np.full(Q, t_max), np.full(Q, u_high)])
        for _ in tqdm(range(restarts), disable=not progress, desc=f"Q={Q}"):
            durations = rng.uniform(0.0, t_max / 2.0, size=Q)
            controls = witness + rng.normal(0.0, 1.0, size=Q)
            if bound is not None:
                controls = np.clip(controls, -bound, bound)
            fit = least_squares(_residual, np.concatenate([durations, controls]), args=(A, B, target_array, Q),
                                bounds=(lower, upper), xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=200 * Q)
            iterations += fit.nfev
            params = np.clip(fit.x, lower, upper)
            schedule = ControlSchedule.from_pairs(zip(params[:Q], params[Q:]))
            try:
                candidate = _make_plan(A, B, schedule, target, iterations, tol)
            except NumericalOverflow:
                continue
            if best is None or _schedule_key(candidate) < _schedule_key(best):
                best = candidate
            if candidate.converged:
                logger.info("target reached with Q=%d after %d evaluations, error %.3e", Q, iterations, candidate.error)
                return candidate
        logger.info("no plan within %.1e at Q=%d, best error %.3e", tol, Q, best.error if best else float("nan"))
        Q *= 2

    if best is None:
        best = _make_plan(A, B, ControlSchedule(), target, iterations, tol)
    best = SteeringPlan(best.schedule, best.achieved, best.target, best.error, iterations, False)
    raise NotConverged(best, f"best steering error {best.error:.3e} exceeds tolerance {tol:.1e}")
