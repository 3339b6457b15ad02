"""
Maps from su(1,1) / SU(1,1) into so(2,1) / SO(2,1) and sl(2,R) / SL(2,R).

rho1 sends K_a to O_a and its group map is the adjoint action, two-to-one with kernel
{+I, -I}. rho2 sends K_a to L_a and its group map is conjugation by a fixed complex
matrix W, which is an isomorphism.
"""
import math
import logging
import numpy as np
import pandas as pd

from dataclasses import dataclass
from typing import Iterable, List, Literal, Sequence, Tuple, Union

from app.core import settings
from app.core.errors import InvalidInput, InvariantViolation
from app.core.algebra import AlgebraElement, GroupElement, adjoint_matrix, exp_element, require_group

logger = logging.getLogger(__name__)

Target = Literal["so21", "sl2r"]

O_X = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
O_Y = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
O_Z = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])

L_X = 0.5 * np.array([[-1.0, 0.0], [0.0, 1.0]])
L_Y = 0.5 * np.array([[0.0, -1.0], [-1.0, 0.0]])
L_Z = 0.5 * np.array([[0.0, -1.0], [1.0, 0.0]])

ETA = np.diag([1.0, 1.0, -1.0])
# Adjoint matrices in (K_x, K_y, K_z) coordinates differ from O_a by these signs.
SIGN_FLIP = np.diag([-1.0, 1.0, -1.0])
# W K_a W^-1 = L_a for a = x, y, z.
W = np.array([[1.0, 1j], [1j, 1.0]]) / math.sqrt(2.0)
W_INV = np.array([[1.0, -1j], [-1j, 1.0]]) / math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class So21Element:
    matrix: np.ndarray

    def metric_residual(self) -> float:
        """max |R^T eta R - eta|."""
        return float(np.max(np.abs(self.matrix.T @ ETA @ self.matrix - ETA)))

    def det_residual(self) -> float:
        return abs(float(np.linalg.det(self.matrix)) - 1.0)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.matrix @ point

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist()}


@dataclass(frozen=True, eq=False)
class Sl2rElement:
    matrix: np.ndarray

    def det_residual(self) -> float:
        return abs(float(np.linalg.det(self.matrix)) - 1.0)

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist()}


def rho1_algebra(M: AlgebraElement) -> np.ndarray:
    return M.kx * O_X + M.ky * O_Y + M.kz * O_Z


def rho2_algebra(M: AlgebraElement) -> np.ndarray:
    return M.kx * L_X + M.ky * L_Y + M.kz * L_Z


def rho1_group(X: GroupElement) -> So21Element:
    require_group(X)
    return So21Element(SIGN_FLIP @ adjoint_matrix(X) @ SIGN_FLIP)


def rho2_group(X: GroupElement, imag_tol: float = settings.SL2R_IMAG_TOL) -> Sl2rElement:
    require_group(X)
    image = W @ X.matrix() @ W_INV
    leak = float(np.max(np.abs(image.imag)))
    if leak > imag_tol * max(1.0, float(np.max(np.abs(image)))):
        raise InvariantViolation(f"SL(2,R) image has imaginary part {leak:.3e}")
    return Sl2rElement(image.real.copy())


def so21_form(P: np.ndarray, Q: np.ndarray) -> float:
    """Tr(PQ)/2; reproduces the indefinite form on rho1 images."""
    return 0.5 * float(np.trace(P @ Q))


def sl2r_form(P: np.ndarray, Q: np.ndarray) -> float:
    """2 Tr(PQ); reproduces the indefinite form on rho2 images."""
    return 2.0 * float(np.trace(P @ Q))


def transported_polynomial(A: AlgebraElement, B: AlgebraElement,
                           target: Target) -> Tuple[float, float, float]:
    """Trace polynomial of (A, B) recomputed from the mapped matrices alone."""
    if target == "so21":
        image, form = rho1_algebra, so21_form
    elif target == "sl2r":
        image, form = rho2_algebra, sl2r_form
    else:
        raise InvalidInput(f"unknown target {target!r}")
    PA, PB = image(A), image(B)
    return form(PB, PB), 2.0 * form(PA, PB), form(PA, PA)


def map_element(element: Union[AlgebraElement, GroupElement], target: Target,
                imag_tol: float = settings.SL2R_IMAG_TOL):
    """Algebra elements map to matrices, group elements to So21Element / Sl2rElement."""
    if target not in ("so21", "sl2r"):
        raise InvalidInput(f"unknown target {target!r}")
    if isinstance(element, AlgebraElement):
        return rho1_algebra(element) if target == "so21" else rho2_algebra(element)
    return rho1_group(element) if target == "so21" else rho2_group(element, imag_tol)


def map_trajectory(trajectory, target: Target,
                   imag_tol: float = settings.SL2R_IMAG_TOL) -> List[Union[So21Element, Sl2rElement]]:
    """Images of every stored state of a simulated trajectory."""
    return [map_element(state, target, imag_tol) for state in trajectory.states]


def so21_path(M: AlgebraElement, times: Iterable[float]) -> List[So21Element]:
    return [rho1_group(exp_element(M, t)) for t in times]


def _sheet_value(point: np.ndarray) -> float:
    return float(point[0] ** 2 + point[1] ** 2 - point[2] ** 2)


def hyperboloid_orbit(path: Sequence[So21Element], p0, tol: float = settings.HYPERBOLOID_TOL) -> List[np.ndarray]:
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (3,) or not np.all(np.isfinite(p0)):
        raise InvalidInput("start point must be a finite 3-vector")
    sheet = _sheet_value(p0)
    if min(abs(sheet - 1.0), abs(sheet + 1.0)) > tol:
        raise InvalidInput(f"start point is off the hyperboloids x^2+y^2-z^2 = +-1 (value {sheet:.6g})")
    sheet = 1.0 if sheet > 0 else -1.0
    orbit = []
    for R in path:
        point = R.apply(p0)
        drift = abs(_sheet_value(point) - sheet)
        if drift > tol * max(1.0, float(point @ point)):
            raise InvariantViolation(f"orbit left its hyperboloid sheet by {drift:.3e}")
        orbit.append(point)
    logger.debug("orbit of %d points on sheet %+d", len(orbit), int(sheet))
    return orbit


def orbit_frame(times: Sequence[float], points: Sequence[np.ndarray]) -> pd.DataFrame:
    stacked = np.vstack(points) if len(points) else np.zeros((0, 3))
    return pd.DataFrame({"t": list(times), "x": stacked[:, 0], "y": stacked[:, 1], "z": stacked[:, 2]})
