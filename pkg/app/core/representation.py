"""
Truncated positive discrete series D+(k) of su(1,1).

Basis states |m, k>, m = 0..N-1, with

    K+ |m,k> = sqrt((m+1)(m+2k)) |m+1,k>,   K- = (K+)^T,   Kz |m,k> = (m+k) |m,k>.

Truncation only touches the top of the ladder, so every algebraic check is made on the
interior states 0..N-2.
"""
import math
import logging
import numpy as np

from typing import Sequence, Union
from dataclasses import dataclass
from scipy.linalg import expm
from scipy.special import gammaln
from scipy.stats import nbinom

from app.core import settings
from app.core.errors import InvalidInput, TruncationInsufficient
from app.core.algebra import IDENTITY, AlgebraElement, GroupElement, exp_element, group_mul

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TruncatedRep:
    k: float
    N: int
    Kp: np.ndarray
    Km: np.ndarray
    Kz: np.ndarray
    Kx: np.ndarray
    Ky: np.ndarray

    def interior_residuals(self) -> dict:
        n = self.N - 1
        comm_zp = self.Kz @ self.Kp - self.Kp @ self.Kz - self.Kp
        comm_pm = self.Kp @ self.Km - self.Km @ self.Kp + 2.0 * self.Kz
        cas = casimir(self) - self.k * (self.k - 1.0) * np.eye(self.N)
        return {
            "commutator_z_plus": float(np.max(np.abs(comm_zp[:, :n]))),
            "commutator_plus_minus": float(np.max(np.abs(comm_pm[:n, :n]))),
            "casimir": float(np.max(np.abs(cas[:n, :n]))),
        }


@dataclass(frozen=True, eq=False)
class CoherentState:
    alpha: complex
    k: float
    amplitudes: np.ndarray
    deficit: float

    @property
    def zeta(self) -> complex:
        return displacement_label(self.alpha)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_dict(self) -> dict:
        return {
            "alpha": [self.alpha.real, self.alpha.imag],
            "k": self.k,
            "deficit": self.deficit,
            "amplitudes": [[a.real, a.imag] for a in self.amplitudes],
        }


@dataclass(frozen=True)
class TransitionReport:
    discrepancy: float
    fidelity: float
    deficit: float
    final_label: complex

    def to_dict(self) -> dict:
        return {
            "discrepancy": self.discrepancy,
            "fidelity": self.fidelity,
            "deficit": self.deficit,
            "final_label": [self.final_label.real, self.final_label.imag],
        }


def _validate(k: float, N: int) -> None:
    if not (math.isfinite(k) and k > 0.0):
        raise InvalidInput(f"Bargmann index must be positive, got {k}")
    if int(N) != N or N < 2:
        raise InvalidInput(f"truncation dimension must be an integer >= 2, got {N}")


def build_rep(k: float, N: int) -> TruncatedRep:
    _validate(k, N)
    N = int(N)
    m = np.arange(N - 1)
    Kp = np.zeros((N, N))
    Kp[m + 1, m] = np.sqrt((m + 1) * (m + 2.0 * k))
    Km = Kp.T.copy()
    Kz = np.diag(np.arange(N) + k)
    Kx = (Kp + Km) / 2.0 + 0j
    Ky = (Kp - Km) / 2j
    return TruncatedRep(k, N, Kp, Km, Kz, Kx, Ky)


def casimir(rep: TruncatedRep) -> np.ndarray:
    """Kz^2 - Kx^2 - Ky^2."""
    value = rep.Kz @ rep.Kz - rep.Kx @ rep.Kx - rep.Ky @ rep.Ky
    return value.real


def fock_generator(M: AlgebraElement, rep: TruncatedRep) -> np.ndarray:
    """Anti-Hermitian image -i (mx Kx + my Ky + mz Kz) of the 2x2 generator M."""
    return -1j * (M.kx * rep.Kx + M.ky * rep.Ky + M.kz * rep.Kz)


def displacement_generator(alpha: complex, rep: TruncatedRep) -> np.ndarray:
    """-2 [Im(alpha)(-i Kx) + Re(alpha)(-i Ky)], equal to alpha K+ - conj(alpha) K-."""
    return -2.0 * (alpha.imag * (-1j * rep.Kx) + alpha.real * (-1j * rep.Ky))


def displacement_element(alpha: complex) -> AlgebraElement:
    """su(1,1) element whose exponential is the 2x2 image of the displacement."""
    return AlgebraElement(-2.0 * alpha.imag, -2.0 * alpha.real, 0.0)


def displacement_label(alpha: complex) -> complex:
    r = abs(alpha)
    if r == 0.0:
        return 0j
    return alpha / r * math.tanh(r)


def coherent_amplitudes(zeta: complex, k: float, N: int) -> np.ndarray:
    """(1 - |zeta|^2)^k zeta^m sqrt((2k)_m / m!) for m < N."""
    _validate(k, N)
    if abs(zeta) >= 1.0:
        raise InvalidInput(f"coherent label must lie in the unit disk, got |zeta| = {abs(zeta):.6g}")
    m = np.arange(int(N))
    log_weights = 0.5 * (gammaln(2.0 * k + m) - gammaln(2.0 * k) - gammaln(m + 1.0))
    return (1.0 - abs(zeta) ** 2) ** k * np.power(complex(zeta), m) * np.exp(log_weights)


def truncation_deficit(zeta: complex, k: float, N: int) -> float:
    """Probability mass of the exact coherent state above level N-1."""
    x = abs(zeta) ** 2
    if x == 0.0:
        return 0.0
    return float(nbinom.sf(int(N) - 1, 2.0 * k, 1.0 - x))


def _check_deficit(deficit: float, N: int, tol: float) -> None:
    if deficit > tol:
        raise TruncationInsufficient(deficit, N)


def coherent_state(alpha: complex, k: float, N: int,
                   tol: float = settings.TRUNCATION_DEFICIT_TOL) -> CoherentState:
    alpha = complex(alpha)
    rep = build_rep(k, N)
    deficit = truncation_deficit(displacement_label(alpha), k, N)
    _check_deficit(deficit, rep.N, tol)
    generator = alpha * rep.Kp - alpha.conjugate() * rep.Km
    amplitudes = expm(generator)[:, 0]
    return CoherentState(alpha, k, amplitudes, deficit)


def coherent_label(state: Union[CoherentState, np.ndarray], k: float) -> complex:
    """Recovers zeta from the ratio of the two lowest amplitudes."""
    psi = state.amplitudes if isinstance(state, CoherentState) else np.asarray(state)
    if psi[0] == 0:
        raise InvalidInput("state has no weight on the lowest level; its label is undefined")
    return complex(psi[1] / (math.sqrt(2.0 * k) * psi[0]))


def mobius(X: GroupElement, zeta: complex) -> complex:
    """Label of X acting on the coherent state with label zeta."""
    m = X.matrix()
    return complex((m[0, 0] * zeta + m[0, 1]) / (m[1, 0] * zeta + m[1, 1]))


def _as_list(Bs: Union[AlgebraElement, Sequence[AlgebraElement]]):
    return [Bs] if isinstance(Bs, AlgebraElement) else list(Bs)


def transition_check(A: AlgebraElement, Bs: Union[AlgebraElement, Sequence[AlgebraElement]],
                     schedule, k: float, N: int, alpha: complex = 0j,
                     tol: float = settings.TRUNCATION_DEFICIT_TOL) -> TransitionReport:
    """
    Propagates a coherent state through the truncated Schroedinger equation segment by
    segment and compares its label with the Moebius image under the 2x2 trajectory.
    Returns the largest label discrepancy seen at segment boundaries.
    """
    Bs = _as_list(Bs)
    rep = build_rep(k, N)
    start = coherent_state(alpha, k, N, tol)
    zeta0 = start.zeta
    psi = start.amplitudes
    X = IDENTITY
    discrepancy = 0.0
    deficit = start.deficit
    for segment in schedule.segments:
        generator = A
        for u, B in zip(segment.controls, Bs):
            generator = generator + u * B
        X = group_mul(exp_element(generator, segment.duration), X)
        psi = expm(segment.duration * fock_generator(generator, rep)) @ psi
        predicted = mobius(X, zeta0)
        deficit = max(deficit, truncation_deficit(predicted, k, N))
        _check_deficit(deficit, rep.N, tol)
        discrepancy = max(discrepancy, abs(coherent_label(psi, k) - predicted))
    final_label = mobius(X, zeta0)
    expected = coherent_amplitudes(final_label, k, N)
    fidelity = float(abs(np.vdot(expected, psi)) ** 2)
    logger.debug("transition check: %d segments, discrepancy %.3e, fidelity %.12f",
                 len(schedule.segments), discrepancy, fidelity)
    return TransitionReport(discrepancy, fidelity, deficit, final_label)
