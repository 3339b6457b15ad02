"""
Controllability decisions for right-invariant systems X' = (A + sum_l u_l B_l) X on SU(1,1).

Every verdict carries a certificate: an elliptic witness for controllable systems, a
rank deficiency, a parabolic bracket or a hyperbolic family for uncontrollable ones.
"""
import math
import logging
import numpy as np

from enum import Enum
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

from app.core import settings
from app.core.errors import DependentInputs, InvalidInput
from app.core.algebra import (AlgebraElement, KX, KY, KZ, Kind, classify, commutator,
                              indefinite_form)
from app.control.omega import (OmegaSet, are_independent, form_signs, independence_minor,
                               intersect_box, omega_set, trace_polynomial, discriminant)
from app.control.canonical import periodic_control

logger = logging.getLogger(__name__)

Witness = Union[float, List[float], None]


class Decision(str, Enum):
    CONTROLLABLE = "Controllable"
    UNCONTROLLABLE = "Uncontrollable"
    STRONG_CONTROLLABLE = "StrongControllable"
    NOT_STRONG_CONTROLLABLE = "NotStrongControllable"
    STLC_SUFFICIENT = "STLCSufficient"
    STLC_UNKNOWN = "STLCUnknown"


@dataclass(frozen=True)
class Verdict:
    """
    witness is None when no control is exhibited: Uncontrollable, STLCUnknown and
    NotStrongControllable verdicts, and a StrongControllable verdict whose control plane
    has no elliptic element. The certificate then records "elliptic_witness_exists":
    false and to_dict omits the key.
    """
    decision: Decision
    certificate: Dict[str, Any] = field(default_factory=dict)
    omega: Optional[OmegaSet] = None
    witness: Witness = None

    @property
    def is_controllable(self) -> bool:
        return self.decision in (Decision.CONTROLLABLE, Decision.STRONG_CONTROLLABLE)

    def to_dict(self) -> dict:
        payload: Dict[str, Any] = {"decision": self.decision.value}
        if self.witness is not None:
            payload["witness"] = self.witness
        payload["certificate"] = self.certificate
        if self.omega is not None:
            payload["omega"] = self.omega.to_dict()
        return payload


@dataclass(frozen=True)
class SubalgebraBasis:
    generators: List[AlgebraElement]
    basis: List[AlgebraElement]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, M: AlgebraElement) -> bool:
        return _distance_to_span(self.basis, M.as_array()) <= settings.CLASSIFY_RTOL * max(1.0, M.norm())

    def closure_residual(self) -> float:
        """Largest distance of a bracket of basis elements from the span."""
        residual = 0.0
        for i, left in enumerate(self.basis):
            for right in self.basis[i + 1:]:
                residual = max(residual, _distance_to_span(self.basis, commutator(left, right).as_array()))
        return residual

    def to_dict(self) -> dict:
        return {"dim": self.dim, "basis": [element.to_dict() for element in self.basis]}


def _orthonormal_span(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Rows form an orthonormal basis of span(vectors)."""
    if not vectors:
        return np.zeros((0, 3))
    stacked = np.vstack(vectors)
    _, singular, vt = np.linalg.svd(stacked)
    if singular[0] == 0.0:
        return np.zeros((0, 3))
    rank = int(np.sum(singular > settings.CLASSIFY_RTOL * singular[0]))
    return vt[:rank]


def _distance_to_span(basis: Sequence[AlgebraElement], vector: np.ndarray) -> float:
    if not basis:
        return float(np.linalg.norm(vector))
    rows = np.vstack([element.as_array() for element in basis])
    return float(np.linalg.norm(vector - rows.T @ (rows @ vector)))


def _close_under(span: np.ndarray, actors: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """
    Grow span until [a, s] stays inside it for every actor a and every s in span. Without
    explicit actors the span acts on itself, which closes it into a subalgebra.
    """
    while 0 < span.shape[0] < 3:
        candidates = list(span)
        for actor in (span if actors is None else actors):
            actor_element = AlgebraElement.from_array(actor)
            for row in span:
                candidates.append(commutator(actor_element, AlgebraElement.from_array(row)).as_array())
        grown = _orthonormal_span(candidates)
        if grown.shape[0] == span.shape[0]:
            break
        span = grown
    return span


def _require_nonzero(generators: Sequence[AlgebraElement]) -> None:
    if not generators or all(g.is_zero() for g in generators):
        raise InvalidInput("at least one nonzero generator is required")


def generated_subalgebra(generators: Sequence[AlgebraElement]) -> SubalgebraBasis:
    """Lie algebra spanned by the generators and all their iterated brackets."""
    _require_nonzero(generators)
    span = _close_under(_orthonormal_span([g.as_array() for g in generators]))
    return SubalgebraBasis(list(generators), [AlgebraElement.from_array(row) for row in span])


def generated_ideal(drift: AlgebraElement, controls: Sequence[AlgebraElement]) -> SubalgebraBasis:
    """Ideal generated by the control directions inside Lie{drift, controls}."""
    _require_nonzero(controls)
    algebra = generated_subalgebra([drift, *controls])
    actors = [element.as_array() for element in algebra.basis]
    span = _close_under(_orthonormal_span([b.as_array() for b in controls]), actors)
    return SubalgebraBasis(list(controls), [AlgebraElement.from_array(row) for row in span])


def _algebra_dims(drift: AlgebraElement, controls: Sequence[AlgebraElement]) -> Dict[str, int]:
    return {
        "dim_L": generated_subalgebra([drift, *controls]).dim,
        "dim_L0": generated_ideal(drift, controls).dim,
        "dim_B": generated_subalgebra(controls).dim,
    }


def _is_parabolic(M: AlgebraElement, rtol: float = settings.CLASSIFY_RTOL) -> bool:
    return classify(M, rtol).kind is Kind.PARABOLIC


def _uncontrollable_certificate(A: AlgebraElement, B: AlgebraElement,
                                rtol: float = settings.CLASSIFY_RTOL) -> Dict[str, Any]:
    bracket = commutator(A, B)
    if _is_parabolic(bracket, rtol):
        return {"type": "parabolic_bracket", "bracket": bracket.to_dict(),
                "form_value": indefinite_form(bracket, bracket)}
    p2, p1, p0 = trace_polynomial(A, B)
    return {"type": "hyperbolic_family", "polynomial": [p2, p1, p0],
            "discriminant": discriminant(p2, p1, p0)}


def _dependent_verdict(A: AlgebraElement, B: AlgebraElement) -> Verdict:
    return Verdict(Decision.UNCONTROLLABLE,
                   {"type": "dependent_inputs", "minor": independence_minor(A, B)})


def verdict_single(A: AlgebraElement, B: AlgebraElement, rtol: float = settings.CLASSIFY_RTOL,
                   independence_tol: float = settings.INDEPENDENCE_RTOL) -> Verdict:
    if not are_independent(A, B, independence_tol):
        logger.debug("dependent inputs A=%s B=%s", A, B)
        return _dependent_verdict(A, B)
    omega = omega_set(A, B, rtol, independence_tol)
    if omega.is_empty:
        return Verdict(Decision.UNCONTROLLABLE, _uncontrollable_certificate(A, B, rtol), omega)
    u = omega.witness
    certificate = {"type": "elliptic_witness", "u": u, "form_value": indefinite_form(A + u * B, A + u * B)}
    return Verdict(Decision.CONTROLLABLE, certificate, omega, u)


def table_row(A: AlgebraElement, B: AlgebraElement, rtol: float = settings.CLASSIFY_RTOL,
              independence_tol: float = settings.INDEPENDENCE_RTOL) -> Verdict:
    """The three controllable rows of the (B,B) / discriminant table, else uncontrollable."""
    if not are_independent(A, B, independence_tol):
        raise DependentInputs("drift and control direction are linearly dependent")
    signs = form_signs(A, B, rtol)
    if signs.bb < 0 and signs.disc != 0:
        row = 1
    elif signs.bb == 0 and signs.ab != 0:
        row = 2
    elif signs.bb > 0 and signs.disc > 0:
        row = 3
    else:
        return Verdict(Decision.UNCONTROLLABLE, {"type": "table_row", "row": "otherwise"})
    return Verdict(Decision.CONTROLLABLE, {"type": "table_row", "row": row})


def _validate_bound(bound: float) -> float:
    bound = float(bound)
    if not math.isfinite(bound) or bound <= 0.0:
        raise InvalidInput(f"control bound must be positive and finite, got {bound}")
    return bound


def verdict_single_bounded(A: AlgebraElement, B: AlgebraElement, bound: float,
                           rtol: float = settings.CLASSIFY_RTOL,
                           independence_tol: float = settings.INDEPENDENCE_RTOL) -> Verdict:
    """Controllable with |u| <= bound iff the open set Omega meets [-bound, bound]."""
    bound = _validate_bound(bound)
    if not are_independent(A, B, independence_tol):
        return _dependent_verdict(A, B)
    omega = omega_set(A, B, rtol, independence_tol)
    pieces = intersect_box(omega, bound)
    if not pieces:
        certificate = {"type": "bounded_exclusion", "bound": bound}
        if omega.is_empty:
            certificate.update(_uncontrollable_certificate(A, B, rtol))
        return Verdict(Decision.UNCONTROLLABLE, certificate, omega)
    # longest piece, ties resolved to the left
    left, right = max(pieces, key=lambda piece: (piece[1] - piece[0], -piece[0]))
    u = 0.5 * (left + right)
    certificate = {"type": "elliptic_witness", "u": u, "bound": bound, "interval": [left, right],
                   "form_value": indefinite_form(A + u * B, A + u * B)}
    return Verdict(Decision.CONTROLLABLE, certificate, omega, u)


def stlc_verdict(A: AlgebraElement, B: AlgebraElement, rtol: float = settings.CLASSIFY_RTOL) -> Verdict:
    """Sufficient test only: an elliptic control direction gives small-time local controllability."""
    if classify(B, rtol).kind is not Kind.ELLIPTIC:
        return Verdict(Decision.STLC_UNKNOWN, {"type": "condition_not_met",
                                                "form_value": indefinite_form(B, B)})
    u, n = periodic_control(A, B, 1.0, rtol)
    return Verdict(Decision.STLC_SUFFICIENT,
                   {"type": "periodic_control", "epsilon": 1.0, "u": u, "n": n}, witness=u)


def strong_verdict_single(A: Optional[AlgebraElement] = None,
                          B: Optional[AlgebraElement] = None) -> Verdict:
    """
    A single-input system is never strongly controllable: as the horizon shrinks every
    trajectory end point tends to the one-parameter group {exp(sB)}.
    """
    certificate: Dict[str, Any] = {"type": "small_time_limit", "limit_set": "exp(sB)"}
    if B is not None:
        certificate["B"] = B.to_dict()
    return Verdict(Decision.NOT_STRONG_CONTROLLABLE, certificate)


ELLIPTIC_CANDIDATES = (KZ, KZ + 0.5 * KX, KZ + 0.5 * KY)


def _full_rank_witness(A: AlgebraElement, controls: Sequence[AlgebraElement]) -> List[float]:
    """Controls u with A + sum u_l B_l elliptic when {A, B_1, ...} spans the algebra."""
    control_columns = np.column_stack([b.as_array() for b in controls])
    if len(controls) == 3:
        return [float(c) for c in np.linalg.solve(control_columns, KZ.as_array() - A.as_array())]
    # Write each candidate as alpha A + beta . B; any nonzero alpha rescales it onto the
    # affine family, and ellipticity is invariant under scaling.
    columns = np.column_stack([A.as_array(), control_columns])
    best = max((np.linalg.solve(columns, candidate.as_array()) for candidate in ELLIPTIC_CANDIDATES),
               key=lambda coeffs: abs(coeffs[0]))
    return [float(c / best[0]) for c in best[1:]]


def _plane_witness(A: AlgebraElement, controls: Sequence[AlgebraElement],
                   rtol: float = settings.CLASSIFY_RTOL) -> Optional[List[float]]:
    """Elliptic point of span(B_1, B_2), when A lies in that plane."""
    rows = [b.as_array() for b in controls]
    eta = np.diag([1.0, 1.0, -1.0])
    gram = np.array([[r @ eta @ s for s in rows] for r in rows])
    values, vectors = np.linalg.eigh(gram)
    if values[0] >= -rtol * max(1.0, abs(values[-1])):
        return None
    direction = vectors[:, 0] / math.sqrt(-values[0])
    offset = np.linalg.lstsq(np.column_stack(rows), A.as_array(), rcond=None)[0]
    return [float(d - o) for d, o in zip(direction, offset)]


def verdict_multi(A: AlgebraElement, controls: Sequence[AlgebraElement], rtol: float = settings.CLASSIFY_RTOL,
                  independence_tol: float = settings.INDEPENDENCE_RTOL) -> Verdict:
    controls = list(controls)
    if not 1 <= len(controls) <= 3:
        raise InvalidInput(f"between one and three control directions are supported, got {len(controls)}")
    if _orthonormal_span([b.as_array() for b in controls]).shape[0] < len(controls):
        raise DependentInputs("control directions are linearly dependent")
    if len(controls) == 1:
        return verdict_single(A, controls[0], rtol, independence_tol)

    certificate: Dict[str, Any] = _algebra_dims(A, controls)
    if len(controls) == 3:
        certificate["type"] = "full_control_algebra"
        return Verdict(Decision.STRONG_CONTROLLABLE, certificate, witness=_full_rank_witness(A, controls))

    B1, B2 = controls
    bracket = commutator(B1, B2)
    parabolic = _is_parabolic(bracket, rtol)
    certificate["bracket"] = bracket.to_dict()
    certificate["bracket_parabolic"] = parabolic
    drift_in_plane = _orthonormal_span([A.as_array(), B1.as_array(), B2.as_array()]).shape[0] < 3

    if drift_in_plane:
        if parabolic:
            certificate["type"] = "parabolic_bracket"
            return Verdict(Decision.UNCONTROLLABLE, certificate)
        certificate["type"] = "control_algebra_spans"
        witness = _plane_witness(A, controls, rtol)
        # a hyperbolic plane (e.g. span{K_x, K_y}) holds no elliptic element, so no witness
        certificate["elliptic_witness_exists"] = witness is not None
        return Verdict(Decision.STRONG_CONTROLLABLE, certificate, witness=witness)

    witness = _full_rank_witness(A, controls)
    if parabolic:
        certificate["type"] = "elliptic_witness"
        return Verdict(Decision.CONTROLLABLE, certificate, witness=witness)
    certificate["type"] = "control_algebra_spans"
    return Verdict(Decision.STRONG_CONTROLLABLE, certificate, witness=witness)
