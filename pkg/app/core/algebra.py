"""
Exact arithmetic on the su(1,1) Lie algebra and the SU(1,1) group.

Algebra elements are stored as real coefficients over the basis

    K_x = sigma_y / 2,   K_y = -sigma_x / 2,   K_z = -i sigma_z / 2,

with [K_x, K_y] = -K_z, [K_y, K_z] = K_x, [K_z, K_x] = K_y. Group elements are stored as
the real quadruple (x1, x2, x3, x4) of

    X = [[x1 + i x2, x3 - i x4],
         [x3 + i x4, x1 - i x2]],   x1^2 + x2^2 - x3^2 - x4^2 = 1.

Matrices are derived views; every form and bracket is a polynomial in the coefficients.
"""
import math
import numpy as np

from enum import Enum
from typing import Tuple
from dataclasses import dataclass

from app.core import settings
from app.core.errors import InvalidInput, InvariantViolation, NumericalOverflow

KX_MATRIX = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
KY_MATRIX = 0.5 * np.array([[0, -1], [-1, 0]], dtype=complex)
KZ_MATRIX = 0.5 * np.array([[-1j, 0], [0, 1j]], dtype=complex)
BASIS_MATRICES = (KX_MATRIX, KY_MATRIX, KZ_MATRIX)


def _finite(value, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInput(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class AlgebraElement:
    kx: float = 0.0
    ky: float = 0.0
    kz: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kx", _finite(self.kx, "kx"))
        object.__setattr__(self, "ky", _finite(self.ky, "ky"))
        object.__setattr__(self, "kz", _finite(self.kz, "kz"))

    @classmethod
    def from_array(cls, values) -> "AlgebraElement":
        kx, ky, kz = (float(v) for v in values)
        return cls(kx, ky, kz)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "AlgebraElement":
        """Coefficients <M, K_a> = 2 Tr(M K_a^dagger) for each basis element."""
        matrix = np.asarray(matrix, dtype=complex)
        coeffs = [2.0 * np.trace(matrix @ basis.conj().T).real for basis in BASIS_MATRICES]
        return cls.from_array(coeffs)

    def as_array(self) -> np.ndarray:
        return np.array([self.kx, self.ky, self.kz])

    def matrix(self) -> np.ndarray:
        return self.kx * KX_MATRIX + self.ky * KY_MATRIX + self.kz * KZ_MATRIX

    def norm(self) -> float:
        return math.sqrt(inner_product(self, self))

    def is_zero(self) -> bool:
        return self.kx == 0.0 and self.ky == 0.0 and self.kz == 0.0

    def to_dict(self) -> dict:
        return {"kx": self.kx, "ky": self.ky, "kz": self.kz}

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.kx + other.kx, self.ky + other.ky, self.kz + other.kz)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.kx - other.kx, self.ky - other.ky, self.kz - other.kz)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.kx, -self.ky, -self.kz)

    def __mul__(self, scalar: float) -> "AlgebraElement":
        return AlgebraElement(scalar * self.kx, scalar * self.ky, scalar * self.kz)

    __rmul__ = __mul__


KX = AlgebraElement(1.0, 0.0, 0.0)
KY = AlgebraElement(0.0, 1.0, 0.0)
KZ = AlgebraElement(0.0, 0.0, 1.0)
ZERO = AlgebraElement()


@dataclass(frozen=True)
class GroupElement:
    x1: float
    x2: float
    x3: float
    x4: float

    def __post_init__(self):
        for name in ("x1", "x2", "x3", "x4"):
            object.__setattr__(self, name, _finite(getattr(self, name), name))

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_ab(cls, a: complex, b: complex) -> "GroupElement":
        return cls(a.real, a.imag, b.real, -b.imag)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "GroupElement":
        matrix = np.asarray(matrix, dtype=complex)
        return cls.from_ab(complex(matrix[0, 0]), complex(matrix[0, 1]))

    @property
    def a(self) -> complex:
        return complex(self.x1, self.x2)

    @property
    def b(self) -> complex:
        return complex(self.x3, -self.x4)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3, self.x4])

    def matrix(self) -> np.ndarray:
        a, b = self.a, self.b
        return np.array([[a, b], [b.conjugate(), a.conjugate()]], dtype=complex)

    def residual(self) -> float:
        """Signed deviation from pseudo-unitarity, x1^2 + x2^2 - x3^2 - x4^2 - 1."""
        return self.x1 * self.x1 + self.x2 * self.x2 - self.x3 * self.x3 - self.x4 * self.x4 - 1.0

    def to_dict(self) -> dict:
        return {"x1": self.x1, "x2": self.x2, "x3": self.x3, "x4": self.x4}

    def __neg__(self) -> "GroupElement":
        return GroupElement(-self.x1, -self.x2, -self.x3, -self.x4)


IDENTITY = GroupElement.identity()


class Kind(str, Enum):
    ELLIPTIC = "Elliptic"
    HYPERBOLIC = "Hyperbolic"
    PARABOLIC = "Parabolic"


@dataclass(frozen=True)
class ClassKind:
    kind: Kind
    form_value: float

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "form_value": self.form_value}


def inner_product(M: AlgebraElement, N: AlgebraElement) -> float:
    """Positive-definite form 2 Tr(M N^dagger); the basis is orthonormal for it."""
    return M.kx * N.kx + M.ky * N.ky + M.kz * N.kz


def indefinite_form(M: AlgebraElement, N: AlgebraElement) -> float:
    """Classification form <M, N^dagger> = 2 Tr(M N), signature (2, 1)."""
    return M.kx * N.kx + M.ky * N.ky - M.kz * N.kz


def commutator(M: AlgebraElement, N: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(
        M.ky * N.kz - M.kz * N.ky,
        M.kz * N.kx - M.kx * N.kz,
        -(M.kx * N.ky - M.ky * N.kx),
    )


def classification_tolerance(M: AlgebraElement, rtol: float = settings.CLASSIFY_RTOL) -> float:
    return rtol * max(1.0, inner_product(M, M))


def classify(M: AlgebraElement, rtol: float = settings.CLASSIFY_RTOL) -> ClassKind:
    """Elliptic, hyperbolic or parabolic by the sign of <M, M^dagger>. Zero is parabolic."""
    value = indefinite_form(M, M)
    tau = classification_tolerance(M, rtol)
    if value < -tau:
        return ClassKind(Kind.ELLIPTIC, value)
    if value > tau:
        return ClassKind(Kind.HYPERBOLIC, value)
    return ClassKind(Kind.PARABOLIC, value)


def exp_coefficients(M: AlgebraElement, t: float) -> Tuple[float, float]:
    """
    Return (c, s) with exp(tM) = c I + s M, using M^2 = (kappa / 4) I.
    """
    t = _finite(t, "t")
    kappa = indefinite_form(M, M)
    if abs(kappa) < settings.EXP_SERIES_KAPPA and abs(kappa) * t * t < 1e-4:
        x = kappa * t * t / 4.0
        return 1.0 + x / 2.0 + x * x / 24.0, t * (1.0 + x / 6.0 + x * x / 120.0)
    if kappa < 0.0:
        omega = math.sqrt(-kappa) / 2.0
        return math.cos(omega * t), math.sin(omega * t) / omega
    omega = math.sqrt(kappa) / 2.0
    argument = omega * t
    if abs(argument) > settings.EXP_MAX_ARGUMENT:
        raise NumericalOverflow(f"cosh argument {argument:.3e} exceeds the representable range")
    return math.cosh(argument), math.sinh(argument) / omega


def exp_element(M: AlgebraElement, t: float) -> GroupElement:
    c, s = exp_coefficients(M, t)
    coordinates = (c, -0.5 * s * M.kz, -0.5 * s * M.ky, 0.5 * s * M.kx)
    # sinh(omega t) / omega overflows for small kappa even below the argument cap
    if not all(math.isfinite(v) for v in coordinates):
        raise NumericalOverflow(f"exp(tM) overflowed at t = {t:.3e}")
    return GroupElement(*coordinates)


def require_group(X: GroupElement, tol: float = settings.GROUP_INPUT_TOL) -> GroupElement:
    residual = X.residual()
    if abs(residual) > tol:
        raise InvariantViolation(f"group element off SU(1,1): residual {residual:.3e} > {tol:.1e}")
    return X


def multiply(X: GroupElement, Y: GroupElement) -> GroupElement:
    """Product XY without input validation; propagation loops call this directly."""
    a, b, c, d = X.a, X.b, Y.a, Y.b
    first, second = a * c + b * d.conjugate(), a * d + b * c.conjugate()
    if not all(math.isfinite(v) for v in (first.real, first.imag, second.real, second.imag)):
        raise NumericalOverflow("group product overflowed")
    return GroupElement.from_ab(first, second)


def group_mul(X: GroupElement, Y: GroupElement) -> GroupElement:
    require_group(X)
    require_group(Y)
    return multiply(X, Y)


def group_inv(X: GroupElement) -> GroupElement:
    require_group(X)
    return GroupElement(X.x1, -X.x2, -X.x3, -X.x4)


def group_dist(X: GroupElement, Y: GroupElement) -> float:
    """Frobenius norm of the difference of the 2x2 realizations."""
    require_group(X)
    require_group(Y)
    delta = X.as_array() - Y.as_array()
    return math.sqrt(2.0 * float(delta @ delta))


def conjugate(P: GroupElement, M: AlgebraElement) -> AlgebraElement:
    """Adjoint action P M P^-1."""
    P_inv = group_inv(P)
    return AlgebraElement.from_matrix(P.matrix() @ M.matrix() @ P_inv.matrix())


def adjoint_matrix(X: GroupElement) -> np.ndarray:
    """3x3 matrix of Ad_X in (K_x, K_y, K_z) coordinates; column j is X K_j X^-1."""
    basis = (KX, KY, KZ)
    return np.column_stack([conjugate(X, element).as_array() for element in basis])
