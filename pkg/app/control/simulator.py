"""
Propagation of piecewise-constant controls by exact exponential factors.

Each segment contributes exp(T (A + sum_l u_l B_l)), left-multiplied onto the running
state, so every stored state is pseudo-unitary up to rounding.
"""
import math
import logging
import numpy as np
import pandas as pd

from enum import Enum
from tqdm import tqdm
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

from app.core import settings
from app.core.data import ScheduleModel
from app.core.errors import InvalidInput, PreconditionViolated
from app.core.algebra import (IDENTITY, KX, KY, KZ, AlgebraElement, GroupElement, exp_element,
                              multiply)
from app.control.canonical import monotone_value

logger = logging.getLogger(__name__)

Controls = Union[float, Sequence[float]]


@dataclass(frozen=True)
class Segment:
    duration: float
    controls: Tuple[float, ...]

    def __post_init__(self):
        duration = float(self.duration)
        if not math.isfinite(duration) or duration < 0.0:
            raise InvalidInput(f"segment duration must be finite and nonnegative, got {duration}")
        controls = tuple(float(u) for u in self.controls)
        if not all(math.isfinite(u) for u in controls):
            raise InvalidInput(f"segment controls must be finite, got {controls}")
        object.__setattr__(self, "duration", duration)
        object.__setattr__(self, "controls", controls)

    def to_dict(self) -> dict:
        return {"duration": self.duration, "controls": list(self.controls)}


@dataclass(frozen=True)
class ControlSchedule:
    segments: Tuple[Segment, ...] = ()

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, Controls]]) -> "ControlSchedule":
        segments = []
        for duration, controls in pairs:
            controls = (controls,) if np.isscalar(controls) else tuple(controls)
            segments.append(Segment(duration, controls))
        return cls(tuple(segments))

    @classmethod
    def from_model(cls, model: ScheduleModel) -> "ControlSchedule":
        return cls.from_pairs((s.duration, s.controls) for s in model.segments)

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def __len__(self) -> int:
        return len(self.segments)

    def __add__(self, other: "ControlSchedule") -> "ControlSchedule":
        return ControlSchedule(self.segments + other.segments)

    def require_controls(self, count: int) -> None:
        for index, segment in enumerate(self.segments):
            if len(segment.controls) != count:
                raise InvalidInput(f"segment {index} has {len(segment.controls)} controls, the system has {count}")

    def to_dict(self) -> dict:
        return {"segments": [s.to_dict() for s in self.segments]}


@dataclass
class Trajectory:
    times: List[float] = field(default_factory=list)
    states: List[GroupElement] = field(default_factory=list)
    monitors: List[dict] = field(default_factory=list)

    def record(self, t: float, state: GroupElement) -> None:
        self.times.append(t)
        self.states.append(state)
        self.monitors.append({"residual": state.residual(), "monotone": monotone_value(state)})

    @property
    def final(self) -> GroupElement:
        return self.states[-1]

    def max_residual(self) -> float:
        return max(abs(m["residual"]) for m in self.monitors)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"t": t, **state.to_dict(), **monitor}
            for t, state, monitor in zip(self.times, self.states, self.monitors)
        ]
        return pd.DataFrame(rows, columns=["t", "x1", "x2", "x3", "x4", "residual", "monotone"])


class CertificateKind(str, Enum):
    MONOTONE_NONINCREASING = "MonotoneNonincreasing"
    MONOTONE_NONDECREASING = "MonotoneNondecreasing"
    GROUP_RESIDUAL = "GroupResidual"


@dataclass(frozen=True)
class CertificateReport:
    kind: CertificateKind
    max_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "max_violation": self.max_violation,
                "tolerance": self.tolerance, "pass": self.passed}


def _controls_list(Bs: Union[AlgebraElement, Sequence[AlgebraElement]]) -> List[AlgebraElement]:
    return [Bs] if isinstance(Bs, AlgebraElement) else list(Bs)


def segment_generator(A: AlgebraElement, Bs: Sequence[AlgebraElement], controls: Sequence[float]) -> AlgebraElement:
    generator = A
    for u, B in zip(controls, Bs):
        generator = generator + u * B
    return generator


def _substeps(generator: AlgebraElement, duration: float, max_step: Optional[float],
              substep_bound: float = settings.SUBSTEP_BOUND) -> int:
    count = max(1, math.ceil(duration * generator.norm() / substep_bound))
    if max_step is not None and duration > 0.0:
        count = max(count, math.ceil(duration / max_step))
    return count


def propagate(A: AlgebraElement, Bs: Union[AlgebraElement, Sequence[AlgebraElement]],
              schedule: ControlSchedule, max_step: Optional[float] = None,
              initial: GroupElement = IDENTITY, substep_bound: float = settings.SUBSTEP_BOUND) -> Trajectory:
    """
    States are stored at segment boundaries; with max_step they are also stored at
    uniform substeps no longer than max_step.
    """
    Bs = _controls_list(Bs)
    schedule.require_controls(len(Bs))
    if max_step is not None and not (math.isfinite(max_step) and max_step > 0.0):
        raise InvalidInput(f"max_step must be positive, got {max_step}")
    if not (math.isfinite(substep_bound) and substep_bound > 0.0):
        raise InvalidInput(f"substep_bound must be positive, got {substep_bound}")

    trajectory = Trajectory()
    state, t = initial, 0.0
    trajectory.record(t, state)
    for segment in schedule.segments:
        generator = segment_generator(A, Bs, segment.controls)
        count = _substeps(generator, segment.duration, max_step, substep_bound)
        dt = segment.duration / count
        factor = exp_element(generator, dt)
        for step in range(count):
            state = multiply(factor, state)
            if max_step is not None and step < count - 1:
                trajectory.record(t + (step + 1) * dt, state)
        t += segment.duration
        trajectory.record(t, state)
    return trajectory


def evolve(A: AlgebraElement, Bs: Sequence[AlgebraElement], schedule: ControlSchedule,
           initial: GroupElement = IDENTITY) -> GroupElement:
    """Final state only; the same factors as propagate without the bookkeeping."""
    state = initial
    for segment in schedule.segments:
        generator = segment_generator(A, Bs, segment.controls)
        count = _substeps(generator, segment.duration, None)
        factor = exp_element(generator, segment.duration / count)
        for _ in range(count):
            state = multiply(factor, state)
    return state


def sampled_schedule(u: Callable[[float], Controls], t_f: float, dt: float) -> ControlSchedule:
    """Piecewise-constant schedule holding u at the midpoint of each step."""
    if not (math.isfinite(dt) and dt > 0.0):
        raise InvalidInput(f"dt must be positive, got {dt}")
    if not (math.isfinite(t_f) and t_f >= 0.0):
        raise InvalidInput(f"t_f must be nonnegative, got {t_f}")
    pairs = []
    start = 0.0
    steps = math.ceil(t_f / dt - 1e-12) if t_f > 0.0 else 0
    for index in range(steps):
        end = min(t_f, (index + 1) * dt)
        pairs.append((end - start, u(0.5 * (start + end))))
        start = end
    return ControlSchedule.from_pairs(pairs)


def propagate_sampled(A: AlgebraElement, Bs: Union[AlgebraElement, Sequence[AlgebraElement]],
                      u: Callable[[float], Controls], t_f: float, dt: float) -> Trajectory:
    return propagate(A, Bs, sampled_schedule(u, t_f, dt))


def _monotone_violation(trajectory: Trajectory, direction: CertificateKind) -> float:
    """Largest step in the forbidden direction, relative to max(1, |f|)."""
    sign = 1.0 if direction is CertificateKind.MONOTONE_NONINCREASING else -1.0
    values = [m["monotone"] for m in trajectory.monitors]
    worst = 0.0
    for before, after in zip(values, values[1:]):
        worst = max(worst, sign * (after - before) / max(1.0, abs(before)))
    return worst


def certify_monotone_system(A: AlgebraElement, Bs: Union[AlgebraElement, Sequence[AlgebraElement]],
                            schedules: Sequence[ControlSchedule],
                            direction: CertificateKind = CertificateKind.MONOTONE_NONINCREASING,
                            tol: float = settings.CERTIFICATE_TOL) -> CertificateReport:
    if direction is CertificateKind.GROUP_RESIDUAL:
        raise InvalidInput("a monotone certificate needs a monotone direction")
    worst = 0.0
    for schedule in schedules:
        worst = max(worst, _monotone_violation(propagate(A, Bs, schedule), direction))
    logger.debug("monotone certificate over %d schedules: worst step %.3e", len(schedules), worst)
    return CertificateReport(direction, worst, tol)


def certify_monotone(epsilon: int, a: float, schedules: Sequence[ControlSchedule],
                     tol: float = settings.CERTIFICATE_TOL) -> CertificateReport:
    """Monotone certificate for the canonical system eps K_x + a K_z + v K_y."""
    if epsilon not in (1, -1):
        raise InvalidInput(f"epsilon must be +1 or -1, got {epsilon}")
    if not abs(a) < 1.0:
        raise PreconditionViolated("|a| < 1", f"a = {a}")
    direction = (CertificateKind.MONOTONE_NONINCREASING if epsilon == 1
                 else CertificateKind.MONOTONE_NONDECREASING)
    return certify_monotone_system(epsilon * KX + a * KZ, [KY], schedules, direction, tol)


def scaled_residual(state: GroupElement) -> float:
    """Residual relative to x1^2 + x2^2, which is at least 1 on the group."""
    return abs(state.residual()) / max(1.0, state.x1 * state.x1 + state.x2 * state.x2)


def certify_group_residual(trajectories: Sequence[Trajectory],
                           tol: float = settings.GROUP_RESIDUAL_TOL) -> CertificateReport:
    worst = 0.0
    for trajectory in trajectories:
        worst = max([worst, *(scaled_residual(state) for state in trajectory.states)])
    return CertificateReport(CertificateKind.GROUP_RESIDUAL, worst, tol)


def random_schedule(rng: np.random.Generator, n_controls: int, max_segments: int,
                    horizon: float, scale: float = 1.0) -> ControlSchedule:
    """Segment count uniform in 1..max_segments, durations uniform in [0, horizon / count]."""
    count = int(rng.integers(1, max_segments + 1))
    durations = rng.uniform(0.0, horizon / count, size=count)
    controls = rng.uniform(-1.0, 1.0, size=(count, n_controls)) * scale
    return ControlSchedule.from_pairs(zip(durations, controls))


def reachable_sample(A: AlgebraElement, Bs: Union[AlgebraElement, Sequence[AlgebraElement]],
                     n_schedules: int, max_segments: int, horizon: float,
                     seed: int = settings.DEFAULT_SEED, scale: float = 1.0,
                     progress: bool = False) -> List[GroupElement]:
    Bs = _controls_list(Bs)
    if n_schedules < 1 or max_segments < 1:
        raise InvalidInput("sample counts must be positive")
    if not (math.isfinite(horizon) and horizon >= 0.0):
        raise InvalidInput(f"horizon must be nonnegative, got {horizon}")
    if not (math.isfinite(scale) and scale > 0.0):
        raise InvalidInput(f"control scale must be positive, got {scale}")
    rng = np.random.default_rng(seed)
    logger.info("sampling %d schedules (max %d segments, horizon %g, seed %d)",
                n_schedules, max_segments, horizon, seed)
    samples = []
    for _ in tqdm(range(n_schedules), disable=not progress, desc="sampling"):
        schedule = random_schedule(rng, len(Bs), max_segments, horizon, scale)
        samples.append(evolve(A, Bs, schedule))
    return samples


def samples_frame(samples: Sequence[GroupElement]) -> pd.DataFrame:
    frame = pd.DataFrame([state.to_dict() for state in samples], columns=["x1", "x2", "x3", "x4"])
    frame["monotone"] = [monotone_value(state) for state in samples]
    return frame


def small_time_limit(A: AlgebraElement, B: AlgebraElement, s: float, t_f: float) -> GroupElement:
    """exp(t_f (A + (s / t_f) B)); tends to exp(sB) as t_f -> 0."""
    if not (math.isfinite(t_f) and t_f > 0.0):
        raise InvalidInput(f"t_f must be positive, got {t_f}")
    return exp_element(A + (s / t_f) * B, t_f)
