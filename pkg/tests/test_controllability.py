import math
import pytest

from hypothesis import assume, given

from app.core.errors import DependentInputs, InvalidInput
from app.core.algebra import (IDENTITY, KX, KY, KZ, ZERO, AlgebraElement, Kind, classify, exp_element,
                              group_dist)
from app.control.omega import are_independent
from app.control.canonical import periodic_control
from app.control.simulator import segment_generator
from app.control.controllability import (Decision, generated_ideal, generated_subalgebra, stlc_verdict,
                                         strong_verdict_single, table_row, verdict_multi, verdict_single,
                                         verdict_single_bounded)
from tests.strategies import integer_coefficients, lattice_elements


class TestVerdictSingle:
    @pytest.mark.parametrize("omega0", [0.1, 1.0, 10.0])
    def test_oscillator_is_controllable(self, omega0):
        verdict = verdict_single(omega0 * KZ, KX)
        assert verdict.decision is Decision.CONTROLLABLE
        assert verdict.is_controllable
        assert classify(omega0 * KZ + verdict.witness * KX).kind is Kind.ELLIPTIC
        assert verdict.certificate["type"] == "elliptic_witness"

    def test_parabolic_bracket_certificate(self):
        verdict = verdict_single(KY, KX + KZ)
        assert verdict.decision is Decision.UNCONTROLLABLE
        assert verdict.certificate["type"] == "parabolic_bracket"
        assert verdict.certificate["bracket"] == {"kx": 1.0, "ky": 0.0, "kz": 1.0}

    def test_hyperbolic_family_certificate(self):
        verdict = verdict_single(KX, KY)
        assert verdict.decision is Decision.UNCONTROLLABLE
        assert verdict.certificate["type"] == "hyperbolic_family"
        assert verdict.certificate["discriminant"] < 0.0

    def test_dependent_inputs_certificate(self):
        verdict = verdict_single(KY, 2 * KY)
        assert verdict.decision is Decision.UNCONTROLLABLE
        assert verdict.certificate["type"] == "dependent_inputs"
        assert verdict.omega is None

    def test_serialization(self):
        payload = verdict_single(KZ, KX).to_dict()
        assert payload["decision"] == "Controllable"
        assert payload["witness"] == 0.0
        assert payload["omega"]["shape"] == "OpenInterval"

    def test_control_just_inside_the_light_cone(self):
        verdict = verdict_single(AlgebraElement(3e-10, 1.0, 0.0), AlgebraElement(1.0, 0.0, 1.0 - 1e-12))
        assert verdict.decision is Decision.UNCONTROLLABLE
        assert verdict.witness is None
        assert verdict.omega.is_empty


class TestTable:
    @pytest.mark.parametrize("A, B, decision, row", [
        (KX, KZ, Decision.CONTROLLABLE, 1),
        (KX, KX + KZ, Decision.CONTROLLABLE, 2),
        (KZ, KX, Decision.CONTROLLABLE, 3),
        (KY, KX + KZ, Decision.UNCONTROLLABLE, "otherwise"),
    ])
    def test_rows(self, A, B, decision, row):
        verdict = table_row(A, B)
        assert verdict.decision is decision
        assert verdict.certificate["row"] == row

    def test_dependent_inputs_rejected(self):
        with pytest.raises(DependentInputs):
            table_row(KX, -3 * KX)

    @given(lattice_elements, lattice_elements)
    def test_agrees_with_omega_solver(self, A, B):
        assume(are_independent(A, B))
        assert table_row(A, B).decision is verdict_single(A, B).decision

    @pytest.mark.parametrize("A, B", [
        (AlgebraElement(3e-10, 1.0, 0.0), AlgebraElement(1.0, 0.0, 1.0 - 1e-12)),
        (AlgebraElement(1e-6, 1.0, 0.0), AlgebraElement(1.0, 0.0, 1.0 - 1e-14)),
        (AlgebraElement(1e-6, 1.0, 0.0), AlgebraElement(-1.0, 0.0, 1.0 + 1e-12)),
    ])
    def test_agrees_with_omega_solver_near_the_light_cone(self, A, B):
        verdict = verdict_single(A, B)
        assert table_row(A, B).decision is verdict.decision
        if verdict.is_controllable:
            assert verdict.omega.q(verdict.witness) < 0.0


class TestBounded:
    @pytest.mark.parametrize("bound", [1.01, 2.0, 10.0])
    def test_squeezing_controllable_above_threshold(self, bound):
        verdict = verdict_single_bounded(KX, KZ, bound)
        assert verdict.decision is Decision.CONTROLLABLE
        assert 1.0 < abs(verdict.witness) <= bound

    @pytest.mark.parametrize("bound", [0.5, 1.0])
    def test_squeezing_uncontrollable_at_or_below_threshold(self, bound):
        verdict = verdict_single_bounded(KX, KZ, bound)
        assert verdict.decision is Decision.UNCONTROLLABLE
        assert verdict.certificate["type"] == "bounded_exclusion"

    def test_ties_resolve_to_the_left(self):
        assert verdict_single_bounded(KX, KZ, 2.0).witness == -1.5

    def test_witness_inside_box(self):
        verdict = verdict_single_bounded(KZ, KX, 0.5)
        assert verdict.decision is Decision.CONTROLLABLE
        assert verdict.witness == 0.0

    @pytest.mark.parametrize("bound", [0.0, -1.0, math.inf, math.nan])
    def test_invalid_bound(self, bound):
        with pytest.raises(InvalidInput):
            verdict_single_bounded(KZ, KX, bound)


class TestSmallTime:
    def test_elliptic_control_is_sufficient(self):
        verdict = stlc_verdict(KX, KZ)
        assert verdict.decision is Decision.STLC_SUFFICIENT
        assert verdict.certificate["n"] >= 1

    @pytest.mark.parametrize("B", [KY, KX + KZ])
    def test_other_controls_are_unknown(self, B):
        assert stlc_verdict(KX, B).decision is Decision.STLC_UNKNOWN

    @pytest.mark.parametrize("epsilon", [0.1, 0.5, 1.0])
    @pytest.mark.parametrize("A, B", [(KX, KZ), (AlgebraElement(0.3, -1.2, 0.4), AlgebraElement(0.2, 0.1, 1.5))])
    def test_periodic_control_closes_the_loop(self, A, B, epsilon):
        u, n = periodic_control(A, B, epsilon)
        assert n >= 1 and u != 0.0
        assert group_dist(exp_element(A + u * B, epsilon), IDENTITY) < 1e-9

    @pytest.mark.parametrize("A, B", [(KZ, KX), (KX, KZ), (KY, KX + KZ)])
    def test_single_input_is_never_strong(self, A, B):
        assert strong_verdict_single(A, B).decision is Decision.NOT_STRONG_CONTROLLABLE
        assert strong_verdict_single().decision is Decision.NOT_STRONG_CONTROLLABLE


class TestMulti:
    def test_full_control_algebra(self):
        verdict = verdict_multi(ZERO, [KX, KY, KZ])
        assert verdict.decision is Decision.STRONG_CONTROLLABLE
        assert verdict.certificate["dim_B"] == 3
        generator = segment_generator(ZERO, [KX, KY, KZ], verdict.witness)
        assert classify(generator).kind is Kind.ELLIPTIC

    def test_drift_in_control_plane(self):
        verdict = verdict_multi(KX + KZ, [KX, KZ])
        assert verdict.decision is Decision.STRONG_CONTROLLABLE
        generator = segment_generator(KX + KZ, [KX, KZ], verdict.witness)
        assert classify(generator).kind is Kind.ELLIPTIC

    def test_drift_in_hyperbolic_plane_has_no_witness(self):
        verdict = verdict_multi(KX + KY, [KX, KY])
        assert verdict.decision is Decision.STRONG_CONTROLLABLE
        assert verdict.witness is None
        assert verdict.certificate["elliptic_witness_exists"] is False
        assert "witness" not in verdict.to_dict()

    def test_drift_in_plane_with_elliptic_direction_has_witness(self):
        verdict = verdict_multi(KZ, [KX, KZ])
        assert verdict.certificate["elliptic_witness_exists"] is True
        assert classify(segment_generator(KZ, [KX, KZ], verdict.witness)).kind is Kind.ELLIPTIC

    def test_drift_in_parabolic_plane(self):
        verdict = verdict_multi(KY + KX + KZ, [KY, KX + KZ])
        assert verdict.decision is Decision.UNCONTROLLABLE
        assert verdict.certificate["type"] == "parabolic_bracket"

    def test_independent_triple(self):
        verdict = verdict_multi(KY, [KX, KZ])
        assert verdict.decision is Decision.STRONG_CONTROLLABLE
        assert classify(segment_generator(KY, [KX, KZ], verdict.witness)).kind is Kind.ELLIPTIC

    def test_independent_triple_with_parabolic_bracket(self):
        verdict = verdict_multi(KZ, [KY, KX + KZ])
        assert verdict.decision is Decision.CONTROLLABLE
        assert classify(segment_generator(KZ, [KY, KX + KZ], verdict.witness)).kind is Kind.ELLIPTIC

    def test_single_control_delegates(self):
        assert verdict_multi(KZ, [KX]).decision is Decision.CONTROLLABLE

    def test_dependent_controls_rejected(self):
        with pytest.raises(DependentInputs):
            verdict_multi(KZ, [KX, 2 * KX])

    @pytest.mark.parametrize("controls", [[], [KX, KY, KZ, KX + KY]])
    def test_control_count(self, controls):
        with pytest.raises(InvalidInput):
            verdict_multi(KZ, controls)


class TestSubalgebras:
    @pytest.mark.parametrize("generators, dim", [
        ([KX, KY], 3),
        ([KY, KX + KZ], 2),
        ([KZ], 1),
        ([KZ, 2 * KZ], 1),
    ])
    def test_generated_dimension(self, generators, dim):
        algebra = generated_subalgebra(generators)
        assert algebra.dim == dim
        assert algebra.closure_residual() < 1e-12

    @given(lattice_elements, lattice_elements, integer_coefficients, integer_coefficients,
           integer_coefficients, integer_coefficients)
    def test_dimension_ignores_recombination(self, B1, B2, a, b, c, d):
        assume(not B1.is_zero() and not B2.is_zero())
        assume(a * d - b * c != 0.0)
        C1, C2 = a * B1 + b * B2, c * B1 + d * B2
        assume(not C1.is_zero() and not C2.is_zero())
        assert generated_subalgebra([C1, C2]).dim == generated_subalgebra([B1, B2]).dim

    @pytest.mark.parametrize("generators, recombined", [
        ([KY, KX + KZ], [2 * KY + (KX + KZ), KY - (KX + KZ)]),
        ([KX, KY], [KX + 2 * KY, KY - KX]),
        ([KZ, KX], [KZ + KX, KZ - KX]),
    ])
    def test_dimension_of_fixed_recombinations(self, generators, recombined):
        assert generated_subalgebra(recombined).dim == generated_subalgebra(generators).dim

    def test_contains(self):
        algebra = generated_subalgebra([KY, KX + KZ])
        assert algebra.contains(3 * KY - (KX + KZ))
        assert not algebra.contains(KZ)

    def test_zero_generators_rejected(self):
        with pytest.raises(InvalidInput):
            generated_subalgebra([ZERO])

    def test_ideal_of_full_algebra(self):
        assert generated_ideal(KZ, [KX]).dim == 3

    def test_ideal_with_codimension_one(self):
        ideal = generated_ideal(KY, [KX + KZ])
        assert ideal.dim == 1
        assert not ideal.contains(KY)
