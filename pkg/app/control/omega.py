"""
The control set Omega = {u : A + uB elliptic} and the trace polynomial behind it.

    q(u) = <B,B^dag> u^2 + 2 <A,B^dag> u + <A,A^dag>,   Omega = {u : q(u) < 0}.

Omega is open; its nonemptiness decides single-input controllability.
"""
import math
import logging
import numpy as np

from enum import Enum
from typing import List, Optional, Tuple
from dataclasses import dataclass, field

from app.core import settings
from app.core.errors import DependentInputs
from app.core.algebra import AlgebraElement, indefinite_form, inner_product

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]


class Shape(str, Enum):
    EMPTY = "Empty"
    OPEN_INTERVAL = "OpenInterval"
    HALF_LINE_BELOW = "HalfLineBelow"
    HALF_LINE_ABOVE = "HalfLineAbove"
    TWO_RAYS = "TwoRays"
    ALL_REALS = "AllReals"


@dataclass(frozen=True)
class OmegaSet:
    """
    Exact solution set of q(u) < 0.

    Bounds by shape: OpenInterval (lo, hi); HalfLineBelow (-inf, hi); HalfLineAbove
    (lo, inf); TwoRays (-inf, lo) U (hi, inf).
    """
    shape: Shape
    lo: Optional[float] = None
    hi: Optional[float] = None
    witness: Optional[float] = None
    polynomial: Tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    @property
    def is_empty(self) -> bool:
        return self.shape is Shape.EMPTY

    def q(self, u: float) -> float:
        p2, p1, p0 = self.polynomial
        return (p2 * u + p1) * u + p0

    def pieces(self) -> List[Interval]:
        """Open intervals whose union is the set."""
        inf = math.inf
        if self.shape is Shape.OPEN_INTERVAL:
            return [(self.lo, self.hi)]
        if self.shape is Shape.HALF_LINE_BELOW:
            return [(-inf, self.hi)]
        if self.shape is Shape.HALF_LINE_ABOVE:
            return [(self.lo, inf)]
        if self.shape is Shape.TWO_RAYS:
            return [(-inf, self.lo), (self.hi, inf)]
        if self.shape is Shape.ALL_REALS:
            return [(-inf, inf)]
        return []

    def contains(self, u: float) -> bool:
        return any(lo < u < hi for lo, hi in self.pieces())

    def to_dict(self) -> dict:
        payload = {"shape": self.shape.value}
        if self.shape in (Shape.OPEN_INTERVAL, Shape.TWO_RAYS):
            payload.update(lo=self.lo, hi=self.hi)
        elif self.shape is Shape.HALF_LINE_BELOW:
            payload["c"] = self.hi
        elif self.shape is Shape.HALF_LINE_ABOVE:
            payload["c"] = self.lo
        if self.witness is not None:
            payload["witness"] = self.witness
        return payload


@dataclass(frozen=True)
class FormSigns:
    """Tolerance-aware signs of <B,B>, <A,B>, the discriminant and <A,A>."""
    bb: int
    ab: int
    disc: int
    aa: int


def trace_polynomial(A: AlgebraElement, B: AlgebraElement) -> Tuple[float, float, float]:
    return indefinite_form(B, B), 2.0 * indefinite_form(A, B), indefinite_form(A, A)


def discriminant(p2: float, p1: float, p0: float) -> float:
    """Quarter discriminant p1^2/4 - p2 p0; equals <[A,B],[A,B]^dag>."""
    h = 0.5 * p1
    return h * h - p2 * p0


def _sign(value: float, tol: float) -> int:
    if value > tol:
        return 1
    if value < -tol:
        return -1
    return 0


def _evaluate(p2: float, p1: float, p0: float, u: float) -> float:
    return (p2 * u + p1) * u + p0


def _away(point: float, direction: float) -> float:
    """A point beyond `point` in `direction`, far enough that q is not lost to rounding."""
    return point + math.copysign(max(1.0, abs(point)), direction)


def _linear_witness(p1: float, p0: float) -> float:
    return _away(-p0 / p1, -p1)


def polynomial_signs(p2: float, p1: float, p0: float,
                     scale_a: Optional[float] = None,
                     scale_b: Optional[float] = None,
                     rtol: float = settings.CLASSIFY_RTOL) -> FormSigns:
    """
    scale_a and scale_b are |A|^2 and |B|^2; when unknown they are estimated from the
    polynomial itself.

    A leading coefficient inside the tolerance band counts as zero only while the
    linear solution it implies still holds for the full quadratic; otherwise its exact
    sign is used.
    """
    scale_a = abs(p0) if scale_a is None else scale_a
    scale_b = abs(p2) if scale_b is None else scale_b
    bb = _sign(p2, rtol * max(1.0, scale_b))
    ab = _sign(0.5 * p1, rtol * max(1.0, math.sqrt(scale_a * scale_b)))
    if bb == 0 and ab != 0 and p2 != 0.0 and _evaluate(p2, p1, p0, _linear_witness(p1, p0)) >= 0.0:
        bb = 1 if p2 > 0.0 else -1
    return FormSigns(
        bb=bb,
        ab=ab,
        disc=_sign(discriminant(p2, p1, p0), rtol * max(1.0, scale_a * scale_b)),
        aa=_sign(p0, rtol * max(1.0, scale_a)),
    )


def form_signs(A: AlgebraElement, B: AlgebraElement, rtol: float = settings.CLASSIFY_RTOL) -> FormSigns:
    p2, p1, p0 = trace_polynomial(A, B)
    return polynomial_signs(p2, p1, p0, inner_product(A, A), inner_product(B, B), rtol)


def independence_minor(A: AlgebraElement, B: AlgebraElement) -> float:
    """Largest 2x2 minor of the coefficient matrix [A; B] relative to |A| |B|."""
    scale = A.norm() * B.norm()
    if scale == 0.0:
        return 0.0
    minors = np.cross(A.as_array(), B.as_array())
    return float(np.max(np.abs(minors))) / scale


def are_independent(A: AlgebraElement, B: AlgebraElement, tol: float = settings.INDEPENDENCE_RTOL) -> bool:
    return independence_minor(A, B) >= tol


def _roots(p2: float, h: float, p0: float, disc: float) -> Interval:
    """Sorted real roots of p2 u^2 + 2 h u + p0, p2 != 0, using the stable formula."""
    root_disc = math.sqrt(max(disc, 0.0))
    qq = -(h + math.copysign(root_disc, h)) if h != 0.0 else -root_disc
    if qq == 0.0:
        return 0.0, 0.0
    r1, r2 = qq / p2, p0 / qq
    return (r1, r2) if r1 <= r2 else (r2, r1)


def _half_line(p1: float, p0: float, polynomial) -> OmegaSet:
    c = -p0 / p1
    witness = _linear_witness(p1, p0)
    if p1 > 0.0:
        return OmegaSet(Shape.HALF_LINE_BELOW, hi=c, witness=witness, polynomial=polynomial)
    return OmegaSet(Shape.HALF_LINE_ABOVE, lo=c, witness=witness, polynomial=polynomial)


def _two_rays(lo: float, hi: float, polynomial) -> OmegaSet:
    return OmegaSet(Shape.TWO_RAYS, lo=lo, hi=hi, witness=_away(lo, -1.0), polynomial=polynomial)


def _exact_omega(p2: float, p1: float, p0: float) -> OmegaSet:
    """The same case analysis with every sign taken exactly, no tolerance band."""
    polynomial = (p2, p1, p0)
    h = 0.5 * p1
    disc = discriminant(p2, p1, p0)
    if p2 == 0.0:
        if p1 != 0.0:
            return _half_line(p1, p0, polynomial)
        if p0 < 0.0:
            return OmegaSet(Shape.ALL_REALS, witness=0.0, polynomial=polynomial)
        return OmegaSet(Shape.EMPTY, polynomial=polynomial)
    if disc <= 0.0:
        if p2 < 0.0:
            return OmegaSet(Shape.ALL_REALS, witness=-h / p2, polynomial=polynomial)
        return OmegaSet(Shape.EMPTY, polynomial=polynomial)
    lo, hi = _roots(p2, h, p0, disc)
    if p2 < 0.0:
        return _two_rays(lo, hi, polynomial)
    return OmegaSet(Shape.OPEN_INTERVAL, lo=lo, hi=hi, witness=0.5 * (lo + hi), polynomial=polynomial)


def _banded_omega(p2: float, p1: float, p0: float, signs: FormSigns) -> OmegaSet:
    polynomial = (p2, p1, p0)
    h = 0.5 * p1
    disc = discriminant(p2, p1, p0)

    if signs.bb < 0:
        if signs.disc < 0:
            return OmegaSet(Shape.ALL_REALS, witness=0.0, polynomial=polynomial)
        lo, hi = _roots(p2, h, p0, disc)
        return _two_rays(lo, hi, polynomial)

    if signs.bb == 0:
        if signs.ab == 0:
            if p0 < 0.0 and signs.aa < 0:
                return OmegaSet(Shape.ALL_REALS, witness=0.0, polynomial=polynomial)
            return OmegaSet(Shape.EMPTY, polynomial=polynomial)
        return _half_line(p1, p0, polynomial)

    # p2 > 0: a strict negative part exists only for a positive discriminant.
    if signs.disc <= 0:
        return OmegaSet(Shape.EMPTY, polynomial=polynomial)
    lo, hi = _roots(p2, h, p0, disc)
    return OmegaSet(Shape.OPEN_INTERVAL, lo=lo, hi=hi, witness=0.5 * (lo + hi), polynomial=polynomial)


def _has_valid_witness(omega: OmegaSet) -> bool:
    return omega.witness is not None and omega.q(omega.witness) < 0.0


def omega_from_polynomial(p2: float, p1: float, p0: float,
                          scale_a: Optional[float] = None,
                          scale_b: Optional[float] = None,
                          rtol: float = settings.CLASSIFY_RTOL) -> OmegaSet:
    """
    Case analysis on the sign of p2 and of the discriminant. A nonempty result always
    carries a witness with q(witness) < 0 in floating point; when the tolerance band
    would produce one that fails, the exact signs decide, and if they fail too the set
    is reported empty.
    """
    signs = polynomial_signs(p2, p1, p0, scale_a, scale_b, rtol)
    omega = _banded_omega(p2, p1, p0, signs)
    if omega.is_empty or _has_valid_witness(omega):
        return omega
    logger.debug("witness %.6g fails q < 0 for %s; using exact signs", omega.witness, omega.polynomial)
    omega = _exact_omega(p2, p1, p0)
    if omega.is_empty or _has_valid_witness(omega):
        return omega
    return OmegaSet(Shape.EMPTY, polynomial=omega.polynomial)


def omega_set(A: AlgebraElement, B: AlgebraElement, rtol: float = settings.CLASSIFY_RTOL,
              independence_tol: float = settings.INDEPENDENCE_RTOL) -> OmegaSet:
    if not are_independent(A, B, independence_tol):
        raise DependentInputs("drift and control direction are linearly dependent")
    p2, p1, p0 = trace_polynomial(A, B)
    return omega_from_polynomial(p2, p1, p0, inner_product(A, A), inner_product(B, B), rtol)


def intersect_box(omega: OmegaSet, bound: float) -> List[Interval]:
    """Pieces of Omega inside [-bound, bound]; each is returned as its closure endpoints."""
    result = []
    for lo, hi in omega.pieces():
        left, right = max(lo, -bound), min(hi, bound)
        if left < right:
            result.append((left, right))
    return result
