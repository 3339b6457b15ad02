import io
import json
import random
import numpy as np
import pytest

from main import run

ORIGIN = '{"x1": 1, "x2": 0, "x3": 0, "x4": 0}'
SCHEDULE = '{"segments": [{"duration": 0.5, "controls": [0.2]}, {"duration": 0.25, "controls": [-0.4]}]}'


def invoke(*argv):
    stdout, stderr = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout, stderr)
    return code, stdout.getvalue(), stderr.getvalue()


def invoke_json(*argv):
    code, out, err = invoke(*argv)
    assert code == 0, err
    return json.loads(out)


class TestVerdicts:
    def test_oscillator(self):
        payload = invoke_json("verdict", "--a", '{"kz": 1}', "--b", '{"kx": 1}')
        assert payload["decision"] == "Controllable"
        assert payload["witness"] == 0.0
        assert payload["omega"]["shape"] == "OpenInterval"

    def test_bounded_squeezing(self):
        payload = invoke_json("verdict-bounded", "--a", '{"kx": 1}', "--b", '{"kz": 1}', "--bound", "1")
        assert payload["decision"] == "Uncontrollable"

    def test_multi(self):
        payload = invoke_json("verdict-multi", "--a", '{"ky": 1}', "--b", '{"kx": 1}', "--b", '{"kz": 1}')
        assert payload["decision"] == "StrongControllable"
        assert len(payload["witness"]) == 2

    @pytest.mark.parametrize("kind, decision", [
        ("table", "Controllable"),
        ("stlc", "STLCSufficient"),
        ("strong", "NotStrongControllable"),
    ])
    def test_verdict_kinds(self, kind, decision):
        payload = invoke_json("verdict", "--a", '{"kx": 1}', "--b", '{"kz": 1}', "--kind", kind)
        assert payload["decision"] == decision

    def test_table_rejects_dependent_inputs(self):
        code, out, err = invoke("verdict", "--a", '{"kx": 1}', "--b", '{"kx": -2}', "--kind", "table")
        assert code == 2
        assert out == ""
        assert err.startswith("error:")

    def test_omega(self):
        payload = invoke_json("omega", "--a", '{"kx": 1}', "--b", '{"kz": 1}')
        assert payload["shape"] == "TwoRays"
        assert payload["polynomial"] == [-1.0, 0.0, 1.0]


class TestAlgebraCommands:
    def test_classify_zero_warns(self):
        payload = invoke_json("classify", "--m", "{}")
        assert payload["kind"] == "Parabolic"
        assert "warning" in payload

    def test_forms(self):
        payload = invoke_json("forms", "--m", '{"kx": 1}', "--n", '{"ky": 1}')
        assert payload["commutator"] == {"kx": 0.0, "ky": 0.0, "kz": -1.0}
        assert payload["indefinite_form"] == 0.0

    def test_normalize_rejects_elliptic(self):
        code, _, err = invoke("normalize", "--b", '{"kz": 1}')
        assert code == 2
        assert "elliptic" in err.lower()

    def test_canonical(self):
        payload = invoke_json("canonical", "--a", '{"kx": 2, "kz": 0.5}', "--b", '{"ky": 1}')
        assert payload["epsilon"] == 1
        assert payload["a"] == pytest.approx(0.25)

    def test_map_group_element(self):
        payload = invoke_json("map", "--to", "sl2r", "--element", ORIGIN)
        np.testing.assert_allclose(payload["matrix"], np.eye(2), atol=1e-15)


class TestInputErrors:
    def test_malformed_json(self):
        code, _, err = invoke("classify", "--m", "{")
        assert code == 2
        assert "malformed JSON" in err

    def test_unknown_field(self):
        code, _, _ = invoke("classify", "--m", '{"kw": 1}')
        assert code == 2

    def test_unknown_flag(self):
        code, _, _ = invoke("classify", "--m", "{}", "--bogus")
        assert code == 2

    def test_abbreviated_flag_rejected(self):
        code, _, _ = invoke("verdict-bounded", "--a", "{}", "--b", '{"kz": 1}', "--bou", "1")
        assert code == 2

    def test_off_group_target(self):
        code, _, _ = invoke("steer", "--a", '{"kz": 1}', "--b", '{"kx": 1}',
                              "--target", '{"x1": 2, "x2": 0, "x3": 0, "x4": 0}')
        assert code == 2


class TestTables:
    def test_simulate_csv(self):
        code, out, _ = invoke("simulate", "--a", '{"kz": 1}', "--b", '{"kx": 1}', "--schedule", SCHEDULE)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "t,x1,x2,x3,x4,residual,monotone"
        assert len(lines) == 4

    def test_simulate_mapped(self):
        payload = invoke_json("simulate", "--a", '{"kz": 1}', "--b", '{"kx": 1}', "--schedule", SCHEDULE,
                              "--to", "so21")
        assert len(payload["matrices"]) == 3

    def test_orbit_csv(self):
        code, out, _ = invoke("orbit", "--m", '{"kz": 1}', "--p0", "[1, 0, 0]", "--steps", "4")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "t,x,y,z"
        assert len(lines) == 6

    def test_orbit_rejects_bad_start(self):
        code, _, _ = invoke("orbit", "--m", '{"kz": 1}', "--p0", '{"x": 1}')
        assert code == 2

    def test_sample_is_seeded(self):
        argv = ("--seed", "5", "sample", "--a", '{"kx": 1, "kz": 0.5}', "--b", '{"ky": 1}', "--n", "10")
        first, second = invoke(*argv), invoke(*argv)
        assert first[0] == 0
        assert first[1] == second[1]
        assert first[1].splitlines()[0] == "x1,x2,x3,x4,monotone"

    def test_sample_as_json(self):
        payload = invoke_json("--format", "json", "sample", "--a", '{"kz": 1}', "--b", '{"kx": 1}', "--n", "3")
        assert len(payload) == 3
        assert set(payload[0]) == {"x1", "x2", "x3", "x4", "monotone"}


class TestCertificatesAndSteering:
    def test_canonical_certificate(self):
        payload = invoke_json("certify", "--epsilon", "1", "--coef", "0.5", "--random", "5", "--horizon", "2")
        assert payload["pass"] is True
        assert payload["kind"] == "MonotoneNonincreasing"

    def test_system_certificate_from_schedule(self):
        payload = invoke_json("certify", "--a", '{"kz": 1}', "--b", '{"kx": 1}', "--schedule", SCHEDULE,
                              "--kind", "GroupResidual")
        assert payload["pass"] is True

    def test_certify_needs_schedules(self):
        code, _, _ = invoke("certify", "--epsilon", "1")
        assert code == 2

    def test_steer_to_origin(self):
        payload = invoke_json("steer", "--a", '{"kz": 1}', "--b", '{"kx": 1}', "--target", ORIGIN)
        assert payload["converged"] is True
        assert payload["factors"] == 0

    def test_steer_uncontrollable(self):
        code, out, _ = invoke("steer", "--a", '{"ky": 1}', "--b", '{"kx": 1, "kz": 1}', "--target", ORIGIN)
        assert code == 2
        assert out == ""


class TestRepresentationCommands:
    def test_rep_check(self):
        payload = invoke_json("rep", "--k", "0.5", "--n", "8", "--check")
        assert max(payload[key] for key in ("commutator_z_plus", "commutator_plus_minus", "casimir")) < 1e-10

    def test_coherent(self):
        payload = invoke_json("coherent", "--alpha", "0.3+0.1i")
        assert payload["norm"] == pytest.approx(1.0)
        assert len(payload["amplitudes"]) == 40

    def test_truncation_failure_exit_code(self):
        code, _, err = invoke("coherent", "--alpha", "2", "--n", "4")
        assert code == 3
        assert "deficit" in err


def test_benchmark_examples(tmp_path):
    payload = invoke_json("benchmark", "--suite", "examples", "--output-dir", str(tmp_path))
    assert payload["examples"]["pass"] is True
    assert (tmp_path / "evaluation_results_examples.csv").exists()


class TestToleranceFlags:
    NEAR_CONE = '{"kx": 1, "kz": 1.001}'

    def test_classify_tau(self):
        assert invoke_json("classify", "--m", self.NEAR_CONE)["kind"] == "Elliptic"
        assert invoke_json("classify", "--m", self.NEAR_CONE, "--tau", "0.01")["kind"] == "Parabolic"

    def test_omega_tau(self):
        assert invoke_json("omega", "--a", '{"kx": 1}', "--b", self.NEAR_CONE)["shape"] == "TwoRays"
        payload = invoke_json("omega", "--a", '{"kx": 1}', "--b", self.NEAR_CONE, "--tau", "0.01")
        assert payload["shape"] == "HalfLineBelow"
        assert payload["c"] == pytest.approx(-0.5)

    def test_verdict_table_tau(self):
        argv = ("verdict", "--a", '{"kx": 1}', "--b", self.NEAR_CONE, "--kind", "table")
        assert invoke_json(*argv)["certificate"]["row"] == 1
        assert invoke_json(*argv, "--tau", "0.01")["certificate"]["row"] == 2

    def test_verdict_independence_tol(self):
        argv = ("verdict", "--a", '{"kx": 1}', "--b", '{"kx": 1, "ky": 0.01}')
        assert invoke_json(*argv)["certificate"]["type"] != "dependent_inputs"
        payload = invoke_json(*argv, "--independence-tol", "0.5")
        assert payload["decision"] == "Uncontrollable"
        assert payload["certificate"]["type"] == "dependent_inputs"

    def test_verdict_multi_independence_tol(self):
        argv = ("verdict-multi", "--a", '{"kx": 1}', "--b", '{"kx": 1, "ky": 0.01}')
        assert invoke_json(*argv, "--independence-tol", "0.5")["certificate"]["type"] == "dependent_inputs"

    def test_orbit_tol(self):
        argv = ("orbit", "--m", '{"kz": 1}', "--p0", "[1.001, 0, 0]", "--steps", "2")
        assert invoke(*argv)[0] == 2
        code, out, _ = invoke(*argv, "--tol", "0.01")
        assert code == 0
        assert len(out.strip().splitlines()) == 4

    def test_simulate_substep_bound(self):
        schedule = '{"segments": [{"duration": 3.0, "controls": [0.4]}, {"duration": 2.0, "controls": [-1.5]}]}'
        argv = ("--format", "json", "simulate", "--a", '{"kz": 1}', "--b", '{"kx": 1}', "--schedule", schedule)
        default = invoke_json(*argv)
        fine = invoke_json(*argv, "--substep-bound", "0.1")
        assert len(fine) == len(default) == 3
        for key in ("x1", "x2", "x3", "x4"):
            assert fine[-1][key] == pytest.approx(default[-1][key], rel=1e-9, abs=1e-9)

    @pytest.mark.parametrize("flag, value", [
        ("--substep-bound", "0"),
        ("--substep-bound", "-1"),
        ("--imag-tol", "0"),
        ("--imag-tol", "nan"),
    ])
    def test_simulate_rejects_bad_tolerances(self, flag, value):
        code, out, _ = invoke("simulate", "--a", '{"kz": 1}', "--b", '{"kx": 1}', "--schedule", SCHEDULE,
                              flag, value)
        assert code == 2
        assert out == ""

    def test_map_imag_tol(self):
        payload = invoke_json("map", "--to", "sl2r", "--element", ORIGIN, "--imag-tol", "1e-3")
        np.testing.assert_allclose(payload["matrix"], np.eye(2), atol=1e-15)
        assert invoke("map", "--to", "sl2r", "--element", ORIGIN, "--imag-tol", "-1")[0] == 2

    def test_negative_tau_rejected(self):
        assert invoke("classify", "--m", "{}", "--tau", "-1")[0] == 2


def test_sample_ignores_global_random_state():
    argv = ("--seed", "11", "sample", "--a", '{"kz": 1}', "--b", '{"kx": 1}', "--n", "5")
    outputs = []
    for global_seed in (0, 12345):
        random.seed(global_seed)
        np.random.seed(global_seed)
        code, out, _ = invoke(*argv)
        assert code == 0
        outputs.append(out)
    assert outputs[0] == outputs[1]
