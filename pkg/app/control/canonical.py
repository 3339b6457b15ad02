"""
Normal forms for single-input systems with a hyperbolic control direction.

A hyperbolic B is conjugated onto sqrt(<B,B>) K_y by P = exp(beta K_x) exp(alpha K_z).
When in addition Omega is empty and [A,B] is not parabolic, the system reduces to

    dY/dtau = (eps K_x + a K_z + v K_y) Y,   eps = +-1, |a| < 1,

along which (x1 - x4)^2 - (x2 - x3)^2 is monotone.
"""
import math
import logging

from dataclasses import dataclass
from typing import Tuple

from app.core import settings
from app.core.errors import InvalidInput, InvariantViolation, NotHyperbolic, PreconditionViolated
from app.core.algebra import (AlgebraElement, GroupElement, KX, KY, KZ, Kind, classify, commutator,
                              conjugate, exp_element, group_mul, indefinite_form)
from app.control.omega import are_independent, discriminant, omega_set, trace_polynomial

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormalizationResult:
    alpha: float
    beta: float
    P: GroupElement
    scale: float

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "scale": self.scale, "P": self.P.to_dict()}


@dataclass(frozen=True)
class CanonicalSystem:
    """
    Frame, offset and time scale taking X' = (A + uB) X to the canonical family. In the
    frame Y = P X P^-1 and time tau = time_scale * t the control becomes
    v = (control_offset + control_scale * u) / time_scale.
    """
    epsilon: int
    a: float
    time_scale: float
    control_offset: float
    control_scale: float
    frame: GroupElement

    @property
    def drift(self) -> AlgebraElement:
        return self.epsilon * KX + self.a * KZ

    @property
    def control(self) -> AlgebraElement:
        return KY

    def canonical_control(self, u: float) -> float:
        return (self.control_offset + self.control_scale * u) / self.time_scale

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "a": self.a,
            "time_scale": self.time_scale,
            "control_offset": self.control_offset,
            "control_scale": self.control_scale,
            "frame": self.frame.to_dict(),
        }


def normalize_hyperbolic(B: AlgebraElement) -> NormalizationResult:
    kind = classify(B)
    if kind.kind is not Kind.HYPERBOLIC:
        raise NotHyperbolic(f"control direction is {kind.kind.value}, form value {kind.form_value:.3e}")
    x, y, z = B.kx, B.ky, B.kz
    alpha = math.atan2(x, y)
    beta = math.asinh(z / math.sqrt(x * x + y * y - z * z))
    P = group_mul(exp_element(KX, beta), exp_element(KZ, alpha))
    return NormalizationResult(alpha, beta, P, math.sqrt(indefinite_form(B, B)))


def reduce_single(A: AlgebraElement, B: AlgebraElement) -> CanonicalSystem:
    if classify(B).kind is not Kind.HYPERBOLIC:
        raise PreconditionViolated("B hyperbolic", f"classify(B) = {classify(B).kind.value}")
    if not are_independent(A, B):
        raise PreconditionViolated("A and B independent")
    omega = omega_set(A, B)
    if not omega.is_empty:
        raise PreconditionViolated("Omega empty", f"Omega is {omega.shape.value}")
    if classify(commutator(A, B)).kind is Kind.PARABOLIC:
        p2, p1, p0 = trace_polynomial(A, B)
        raise PreconditionViolated("[A,B] not parabolic", f"discriminant {discriminant(p2, p1, p0):.3e}")

    normal = normalize_hyperbolic(B)
    rotated = conjugate(normal.P, A)
    time_scale = abs(rotated.kx)
    a = rotated.kz / time_scale
    if abs(a) >= 1.0:
        raise InvariantViolation(f"reduced drift ratio |a| = {abs(a):.6f} is not below 1")
    logger.debug("canonical form eps=%d a=%.6g time_scale=%.6g", int(math.copysign(1, rotated.kx)), a, time_scale)
    return CanonicalSystem(
        epsilon=1 if rotated.kx > 0 else -1,
        a=a,
        time_scale=time_scale,
        control_offset=rotated.ky,
        control_scale=normal.scale,
        frame=normal.P,
    )


def monotone_value(X: GroupElement) -> float:
    p, q = X.x1 - X.x4, X.x2 - X.x3
    return p * p - q * q


def periodic_control(A: AlgebraElement, B: AlgebraElement, epsilon: float,
                     rtol: float = settings.CLASSIFY_RTOL) -> Tuple[float, int]:
    """
    Smallest n >= 1 and the control u above the elliptic threshold with
    exp(epsilon (A + uB)) = I, i.e. q(u) = -(4 pi n / epsilon)^2.
    """
    if not (math.isfinite(epsilon) and epsilon > 0.0):
        raise InvalidInput(f"epsilon must be positive and finite, got {epsilon}")
    if classify(B, rtol).kind is not Kind.ELLIPTIC:
        raise PreconditionViolated("B elliptic", f"form value {indefinite_form(B, B):.3e}")
    p2, p1, p0 = trace_polynomial(A, B)
    h = 0.5 * p1
    n = 1
    while True:
        target = (4.0 * math.pi * n / epsilon) ** 2
        u = (h + math.sqrt(discriminant(p2, p1, p0 + target))) / -p2
        if u != 0.0:
            return u, n
        n += 1
