import logging

from typing import Callable, Dict, List, Optional, Sequence

from app.core import settings
from app.core.errors import InvalidInput
from app.core.algebra import AlgebraElement, GroupElement
from app.control import canonical, controllability, simulator, steering

logger = logging.getLogger(__name__)


class ControlSystem:
    """Right-invariant system X' = (A + sum_l u_l B_l) X, X(0) = I."""

    def __init__(self, drift: AlgebraElement, controls: Sequence[AlgebraElement],
                 bound: Optional[float] = None):
        self.drift = drift
        self.controls: List[AlgebraElement] = list(controls)
        if not self.controls:
            raise InvalidInput("a control system needs at least one control direction")
        self.bound = bound
        self.available_operations: Dict[str, Callable] = {}
        self._operation_declarations()

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    def generator(self, values: Sequence[float]) -> AlgebraElement:
        return simulator.segment_generator(self.drift, self.controls, values)

    def _operation_declarations(self):
        """Subclasses register the operations their mixins provide."""

    def describe(self) -> dict:
        return {
            "type": type(self).__name__,
            "drift": self.drift.to_dict(),
            "controls": [b.to_dict() for b in self.controls],
            "bound": self.bound,
            "operations": sorted(self.available_operations),
        }


class ControllabilityMixin:
    " Capability to decide controllability. Expects the host class to have .drift, .controls and .bound"
    def verdict(self) -> controllability.Verdict:
        if self.n_controls > 1:
            return controllability.verdict_multi(self.drift, self.controls)
        if self.bound is not None:
            return controllability.verdict_single_bounded(self.drift, self.controls[0], self.bound)
        return controllability.verdict_single(self.drift, self.controls[0])

    def stlc(self) -> controllability.Verdict:
        return controllability.stlc_verdict(self.drift, self.controls[0])

    def strong_verdict(self) -> controllability.Verdict:
        return controllability.strong_verdict_single(self.drift, self.controls[0])


class CanonicalMixin:
    " Capability to reduce a single-input system with hyperbolic B to its canonical form."
    def normalize(self) -> canonical.NormalizationResult:
        return canonical.normalize_hyperbolic(self.controls[0])

    def canonical(self) -> canonical.CanonicalSystem:
        return canonical.reduce_single(self.drift, self.controls[0])


class SimulationMixin:
    " Capability to propagate schedules and certify trajectories."
    def simulate(self, schedule: simulator.ControlSchedule,
                 max_step: Optional[float] = None,
                 substep_bound: float = settings.SUBSTEP_BOUND) -> simulator.Trajectory:
        return simulator.propagate(self.drift, self.controls, schedule, max_step=max_step,
                                   substep_bound=substep_bound)

    def certify(self, schedules: Sequence[simulator.ControlSchedule],
                direction: simulator.CertificateKind = simulator.CertificateKind.MONOTONE_NONINCREASING,
                tol: float = settings.CERTIFICATE_TOL) -> simulator.CertificateReport:
        if direction is simulator.CertificateKind.GROUP_RESIDUAL:
            trajectories = [self.simulate(schedule) for schedule in schedules]
            return simulator.certify_group_residual(trajectories, tol)
        return simulator.certify_monotone_system(self.drift, self.controls, schedules, direction, tol)

    def sample(self, n_schedules: int, max_segments: int, horizon: float,
               seed: int = settings.DEFAULT_SEED, scale: Optional[float] = None,
               progress: bool = False) -> List[GroupElement]:
        if scale is None:
            scale = self.bound if self.bound is not None else 1.0
        return simulator.reachable_sample(self.drift, self.controls, n_schedules, max_segments,
                                          horizon, seed=seed, scale=scale, progress=progress)


class SteeringMixin:
    " Capability to plan a piecewise-constant schedule to a target. Single input only."
    def steer(self, target: GroupElement, tol: float = settings.STEERING_TOL,
              seed: int = settings.DEFAULT_SEED, progress: bool = False) -> steering.SteeringPlan:
        logger.info("planning towards %s", target)
        return steering.plan(self.drift, self.controls[0], target, bound=self.bound,
                             tol=tol, seed=seed, progress=progress)
