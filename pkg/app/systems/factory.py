from typing import Optional, Sequence

from app.core.errors import InvalidInput
from app.core.algebra import AlgebraElement
from app.systems.base import (ControlSystem, ControllabilityMixin, CanonicalMixin, SimulationMixin,
                              SteeringMixin)


class SingleInputSystem(ControlSystem, ControllabilityMixin, CanonicalMixin, SimulationMixin, SteeringMixin):
    def __init__(self, drift: AlgebraElement, control: AlgebraElement, bound: Optional[float] = None):
        super().__init__(drift, [control], bound)

    def _operation_declarations(self):
        self.available_operations.update({
            "verdict": self.verdict,
            "stlc": self.stlc,
            "strong_verdict": self.strong_verdict,
            "normalize": self.normalize,
            "canonical": self.canonical,
            "simulate": self.simulate,
            "certify": self.certify,
            "sample": self.sample,
            "steer": self.steer,
        })


class BoundedSingleInputSystem(SingleInputSystem):
    """|u(t)| <= bound; verdicts and plans are restricted to the box."""

    def __init__(self, drift: AlgebraElement, control: AlgebraElement, bound: float):
        if bound is None or not bound > 0.0:
            raise InvalidInput(f"control bound must be positive, got {bound}")
        super().__init__(drift, control, bound)

    def _operation_declarations(self):
        super()._operation_declarations()
        # Canonical reduction describes the unbounded family.
        self.available_operations.pop("canonical")


class MultiInputSystem(ControlSystem, ControllabilityMixin, SimulationMixin):
    def __init__(self, drift: AlgebraElement, controls: Sequence[AlgebraElement]):
        super().__init__(drift, controls)

    def _operation_declarations(self):
        self.available_operations.update({
            "verdict": self.verdict,
            "simulate": self.simulate,
            "certify": self.certify,
            "sample": self.sample,
        })


def build_system(drift: AlgebraElement, controls: Sequence[AlgebraElement],
                 bound: Optional[float] = None) -> ControlSystem:
    controls = list(controls)
    if len(controls) > 1:
        if bound is not None:
            raise InvalidInput("control bounds are supported for single-input systems only")
        return MultiInputSystem(drift, controls)
    if len(controls) != 1:
        raise InvalidInput("a control system needs at least one control direction")
    if bound is not None:
        return BoundedSingleInputSystem(drift, controls[0], bound)
    return SingleInputSystem(drift, controls[0])
