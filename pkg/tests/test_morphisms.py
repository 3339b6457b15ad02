import math
import numpy as np
import pytest

from hypothesis import given
from scipy.linalg import expm

from app.core.errors import InvalidInput
from app.core.algebra import IDENTITY, KX, KY, KZ, AlgebraElement, commutator, exp_element
from app.core.morphisms import (ETA, map_element, map_trajectory, orbit_frame, hyperboloid_orbit, rho1_algebra,
                                rho1_group, rho2_algebra, rho2_group, sl2r_form, so21_form, so21_path,
                                transported_polynomial)
from app.control.omega import trace_polynomial
from app.control.simulator import ControlSchedule, propagate
from tests.strategies import elements, small_elements

BASIS = (KX, KY, KZ)
PAIRS = [(M, N) for M in BASIS for N in BASIS]


def matrix_commutator(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return P @ Q - Q @ P


class TestAlgebraMaps:
    @pytest.mark.parametrize("image", [rho1_algebra, rho2_algebra])
    @pytest.mark.parametrize("M, N", PAIRS)
    def test_basis_brackets_are_preserved_exactly(self, image, M, N):
        np.testing.assert_array_equal(matrix_commutator(image(M), image(N)), image(commutator(M, N)))

    @given(elements, elements)
    def test_brackets_are_preserved(self, M, N):
        for image in (rho1_algebra, rho2_algebra):
            np.testing.assert_allclose(matrix_commutator(image(M), image(N)), image(commutator(M, N)),
                                       rtol=0.0, atol=1e-12 * max(1.0, M.norm() * N.norm()))

    @given(elements, elements)
    def test_forms_are_reproduced(self, M, N):
        expected = M.kx * N.kx + M.ky * N.ky - M.kz * N.kz
        scale = max(1.0, M.norm() * N.norm())
        assert abs(so21_form(rho1_algebra(M), rho1_algebra(N)) - expected) <= 1e-12 * scale
        assert abs(sl2r_form(rho2_algebra(M), rho2_algebra(N)) - expected) <= 1e-12 * scale

    @pytest.mark.parametrize("target", ["so21", "sl2r"])
    def test_transported_polynomial(self, target):
        A, B = AlgebraElement(0.3, -1.1, 0.7), AlgebraElement(1.2, 0.4, -0.9)
        np.testing.assert_allclose(transported_polynomial(A, B, target), trace_polynomial(A, B), atol=1e-12)

    def test_unknown_target(self):
        with pytest.raises(InvalidInput):
            transported_polynomial(KX, KZ, "so3")


class TestGroupMaps:
    @given(small_elements, small_elements.map(lambda e: 3.0 * e.kx))
    def test_generators_exponentiate_consistently(self, M, t):
        X = exp_element(M, t)
        np.testing.assert_allclose(rho1_group(X).matrix, expm(t * rho1_algebra(M)), rtol=0.0, atol=1e-10)
        np.testing.assert_allclose(rho2_group(X).matrix, expm(t * rho2_algebra(M)), rtol=0.0, atol=1e-10)

    def test_rho1_is_two_to_one(self):
        X = exp_element(AlgebraElement(0.4, -0.8, 1.1), 1.3)
        np.testing.assert_allclose(rho1_group(-X).matrix, rho1_group(X).matrix, atol=1e-14)
        np.testing.assert_allclose(rho1_group(-IDENTITY).matrix, np.eye(3), atol=1e-14)

    def test_rho2_is_faithful(self):
        X = exp_element(AlgebraElement(0.4, -0.8, 1.1), 1.3)
        np.testing.assert_allclose(rho2_group(-X).matrix, -rho2_group(X).matrix, atol=1e-15)

    def test_images_are_in_the_real_groups(self):
        X = exp_element(AlgebraElement(1.5, 0.2, -0.6), 2.0)
        image1, image2 = rho1_group(X), rho2_group(X)
        assert image1.metric_residual() < 1e-12
        assert image1.det_residual() < 1e-12
        assert image2.det_residual() < 1e-12
        assert image2.matrix.dtype == np.float64

    def test_map_element_dispatch(self):
        X = exp_element(KY, 0.5)
        assert map_element(KZ, "so21").shape == (3, 3)
        assert map_element(KZ, "sl2r").shape == (2, 2)
        np.testing.assert_allclose(map_element(X, "sl2r").matrix, rho2_group(X).matrix)
        with pytest.raises(InvalidInput):
            map_element(X, "su2")

    def test_map_trajectory(self):
        trajectory = propagate(KZ, KX, ControlSchedule.from_pairs([(0.3, 0.5), (0.4, -0.2), (0.1, 1.0)]))
        images = map_trajectory(trajectory, "so21")
        assert len(images) == 4
        assert all(image.metric_residual() < 1e-12 for image in images)


class TestHyperboloidOrbit:
    def test_rotation_returns_after_full_turn(self):
        times = np.linspace(0.0, 2.0 * math.pi, 9)
        orbit = hyperboloid_orbit(so21_path(KZ, times), [1.0, 0.0, 0.0])
        np.testing.assert_allclose(orbit[-1], [1.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(orbit[4], [-1.0, 0.0, 0.0], atol=1e-12)

    def test_orbit_stays_on_sheet(self):
        times = np.linspace(0.0, 3.0, 31)
        orbit = hyperboloid_orbit(so21_path(KX + 0.5 * KZ, times), [0.0, 0.0, 1.0])
        for point in orbit:
            assert point @ ETA @ point == pytest.approx(-1.0, abs=1e-10)

    @pytest.mark.parametrize("p0", [[1.0, 1.0, 0.0], [1.0, 0.0], [math.nan, 0.0, 1.0]])
    def test_invalid_start_point(self, p0):
        with pytest.raises(InvalidInput):
            hyperboloid_orbit(so21_path(KZ, [0.0, 1.0]), p0)

    def test_orbit_frame(self):
        times = [0.0, 0.5]
        frame = orbit_frame(times, hyperboloid_orbit(so21_path(KZ, times), [0.0, 1.0, 0.0]))
        assert list(frame.columns) == ["t", "x", "y", "z"]
        assert len(frame) == 2
