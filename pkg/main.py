import os
import sys
import json
import math
import logging
import argparse
import contextlib
import numpy as np
import pandas as pd

from typing import List, Optional, Sequence

from app.core import settings
from app.core.errors import InvalidInput, NotConverged, ReachError
from app.core.data import (ScheduleModel, load_json_argument, parse_algebra, parse_complex, parse_element,
                           parse_group, parse_model)
from app.core.algebra import classify, commutator, indefinite_form, inner_product
from app.core import morphisms, representation
from app.control import canonical, controllability, omega, simulator
from app.systems import build_system
from app.evaluation.evaluator import SUITES, Evaluator
from app.evaluation.benchmarking import load_worked_examples

logger = logging.getLogger("reach")

# Constants for default paths
SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
DEFAULT_CASES_PATH = os.path.join(SCRIPT_DIR, "app", "resources", "data", "worked_examples.json")

VERDICT_KINDS = ("omega", "table", "stlc", "strong")


def _to_jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"cannot serialize {type(value).__name__}")


class ReachRunner:
    def __init__(self, args, stdout, stderr):
        self.args = args
        self.stdout = stdout
        self.stderr = stderr

        self.commands = {
            "classify": self.run_classify,
            "forms": self.run_forms,
            "verdict": self.run_verdict,
            "verdict-bounded": self.run_verdict_bounded,
            "verdict-multi": self.run_verdict_multi,
            "omega": self.run_omega,
            "normalize": self.run_normalize,
            "canonical": self.run_canonical,
            "map": self.run_map,
            "orbit": self.run_orbit,
            "simulate": self.run_simulate,
            "certify": self.run_certify,
            "sample": self.run_sample,
            "steer": self.run_steer,
            "rep": self.run_rep,
            "coherent": self.run_coherent,
            "benchmark": self.run_benchmark,
        }

    def __call__(self) -> int:
        try:
            self.emit(self.commands[self.args.command]())
        except NotConverged as e:
            # The best plan still goes to stdout so callers can inspect it.
            if e.plan is not None:
                self.emit({**e.plan.to_dict(), "warning": str(e)})
            self.stderr.write(f"error: {e}\n")
            return e.exit_code
        except ReachError as e:
            self.stderr.write(f"error: {e}\n")
            return e.exit_code
        return 0

    def emit(self, payload):
        fmt = self.args.format
        if isinstance(payload, pd.DataFrame):
            if fmt == "json":
                payload = payload.to_dict(orient="records")
            else:
                payload.to_csv(self.stdout, index=False)
                return
        elif fmt == "csv":
            pd.json_normalize(payload).to_csv(self.stdout, index=False)
            return
        self.stdout.write(json.dumps(payload, default=_to_jsonable) + "\n")

    # algebra

    def run_classify(self):
        M = parse_algebra(self.args.m)
        result = classify(M, self.args.tau)
        payload = {"kind": result.kind.value, "form_value": result.form_value}
        if M.is_zero():
            logger.warning("classifying the zero element")
            payload["warning"] = "zero element has no type; reported as Parabolic"
        return payload

    def run_forms(self):
        M, N = parse_algebra(self.args.m), parse_algebra(self.args.n)
        return {
            "inner_product": inner_product(M, N),
            "indefinite_form": indefinite_form(M, N),
            "commutator": commutator(M, N).to_dict(),
        }

    # controllability

    def _tolerances(self) -> dict:
        return {"rtol": self.args.tau, "independence_tol": self.args.independence_tol}

    def run_verdict(self):
        A, B = parse_algebra(self.args.a), parse_algebra(self.args.b)
        kind = self.args.kind
        if kind == "omega":
            return controllability.verdict_single(A, B, **self._tolerances()).to_dict()
        if kind == "table":
            return controllability.table_row(A, B, **self._tolerances()).to_dict()
        if kind == "stlc":
            return controllability.stlc_verdict(A, B, self.args.tau).to_dict()
        return controllability.strong_verdict_single(A, B).to_dict()

    def run_verdict_bounded(self):
        A, B = parse_algebra(self.args.a), parse_algebra(self.args.b)
        return controllability.verdict_single_bounded(A, B, self.args.bound, **self._tolerances()).to_dict()

    def run_verdict_multi(self):
        A = parse_algebra(self.args.a)
        Bs = [parse_algebra(text) for text in self.args.b]
        return controllability.verdict_multi(A, Bs, **self._tolerances()).to_dict()

    def run_omega(self):
        A, B = parse_algebra(self.args.a), parse_algebra(self.args.b)
        result = omega.omega_set(A, B, **self._tolerances())
        return {**result.to_dict(), "polynomial": list(result.polynomial)}

    # canonical forms

    def run_normalize(self):
        return canonical.normalize_hyperbolic(parse_algebra(self.args.b)).to_dict()

    def run_canonical(self):
        A, B = parse_algebra(self.args.a), parse_algebra(self.args.b)
        return canonical.reduce_single(A, B).to_dict()

    # morphisms

    def run_map(self):
        element = parse_element(self.args.element)
        image = morphisms.map_element(element, self.args.to, self.args.imag_tol)
        matrix = image if isinstance(image, np.ndarray) else image.matrix
        return {"target": self.args.to, "matrix": matrix.tolist()}

    def run_orbit(self):
        M = parse_algebra(self.args.m)
        p0 = load_json_argument(self.args.p0)
        if not isinstance(p0, list) or len(p0) != 3 or not all(isinstance(v, (int, float)) for v in p0):
            raise InvalidInput("p0 must be a JSON list of three numbers")
        if self.args.steps < 1 or not (math.isfinite(self.args.t_max) and self.args.t_max >= 0.0):
            raise InvalidInput("orbit needs steps >= 1 and a nonnegative t_max")
        times = np.linspace(0.0, self.args.t_max, self.args.steps + 1)
        points = morphisms.hyperboloid_orbit(morphisms.so21_path(M, times), p0, self.args.tol)
        return morphisms.orbit_frame(times, points)

    # simulation

    def _system(self, bound: Optional[float] = None):
        return build_system(parse_algebra(self.args.a), [parse_algebra(text) for text in self.args.b], bound)

    def _schedules(self, n_controls: int) -> List[simulator.ControlSchedule]:
        schedules = [simulator.ControlSchedule.from_model(parse_model(ScheduleModel, text))
                     for text in (self.args.schedule or [])]
        if self.args.random:
            rng = np.random.default_rng(self.args.seed)
            schedules.extend(simulator.random_schedule(rng, n_controls, self.args.max_segments,
                                                       self.args.horizon, self.args.scale)
                             for _ in range(self.args.random))
        if not schedules:
            raise InvalidInput("give at least one --schedule or a positive --random count")
        return schedules

    def run_simulate(self):
        system = self._system()
        schedule = simulator.ControlSchedule.from_model(parse_model(ScheduleModel, self.args.schedule))
        trajectory = system.simulate(schedule, max_step=self.args.max_step, substep_bound=self.args.substep_bound)
        if self.args.to:
            images = morphisms.map_trajectory(trajectory, self.args.to, self.args.imag_tol)
            return {"target": self.args.to, "times": trajectory.times,
                    "matrices": [image.matrix.tolist() for image in images]}
        return trajectory.to_frame()

    def run_certify(self):
        if self.args.epsilon is not None:
            schedules = self._schedules(1)
            return simulator.certify_monotone(self.args.epsilon, self.args.coef, schedules, self.args.tol).to_dict()
        if self.args.a is None or not self.args.b:
            raise InvalidInput("certify needs --epsilon/--coef or --a and --b")
        system = self._system()
        schedules = self._schedules(system.n_controls)
        kind = simulator.CertificateKind(self.args.kind)
        return system.certify(schedules, kind, self.args.tol).to_dict()

    def run_sample(self):
        system = self._system()
        samples = system.sample(self.args.n, self.args.max_segments, self.args.horizon,
                                seed=self.args.seed, scale=self.args.scale, progress=self.args.progress)
        return simulator.samples_frame(samples)

    # steering

    def run_steer(self):
        system = self._system(self.args.bound)
        if system.n_controls != 1:
            raise InvalidInput("steering supports a single control direction")
        target = parse_group(self.args.target)
        return system.steer(target, tol=self.args.tol, seed=self.args.seed,
                            progress=self.args.progress).to_dict()

    # representation

    def run_rep(self):
        rep = representation.build_rep(self.args.k, self.args.n)
        if self.args.check:
            return {"k": rep.k, "N": rep.N, **rep.interior_residuals()}
        return {"k": rep.k, "N": rep.N, "Kp": rep.Kp.tolist(), "Km": rep.Km.tolist(),
                "Kz": rep.Kz.tolist()}

    def run_coherent(self):
        alpha = parse_complex(self.args.alpha)
        state = representation.coherent_state(alpha, self.args.k, self.args.n, self.args.tol)
        return {**state.to_dict(), "zeta": state.zeta, "norm": state.norm()}

    # benchmark

    def run_benchmark(self):
        cases = load_worked_examples(self.args.cases)
        evaluator = Evaluator(cases, self.args.output_dir, n=self.args.n, seed=self.args.seed,
                              progress=self.args.progress)
        return evaluator(self.args.suite)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _float_at_least(text: str, strict: bool) -> float:
    value = float(text)
    if not math.isfinite(value) or value < 0.0 or (strict and value == 0.0):
        raise argparse.ArgumentTypeError(f"expected a {'positive' if strict else 'nonnegative'} number, got {text}")
    return value


def _positive_float(text: str) -> float:
    return _float_at_least(text, strict=True)


def _nonnegative_float(text: str) -> float:
    return _float_at_least(text, strict=False)


def add_classification_flags(p: argparse.ArgumentParser, independence: bool = True) -> None:
    p.add_argument("--tau", type=_nonnegative_float, default=settings.CLASSIFY_RTOL,
                   help="relative band around zero in which a form value counts as zero")
    if independence:
        p.add_argument("--independence-tol", dest="independence_tol", type=_nonnegative_float,
                       default=settings.INDEPENDENCE_RTOL,
                       help="relative 2x2 minor below which drift and control count as dependent")


def get_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reach", allow_abbrev=False,
                                     description="Controllability, simulation and steering on SU(1,1)")
    parser.add_argument("--format", choices=["json", "csv"], default=None,
                        help="output format (default: csv for tables, json otherwise)")
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    parser.add_argument("--verbose", "-v", action="store_true")
    parser.add_argument("--progress", action="store_true", help="show progress bars on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, allow_abbrev=False)

    p = command("classify", "elliptic / hyperbolic / parabolic type of an algebra element")
    p.add_argument("--m", required=True)
    add_classification_flags(p, independence=False)

    p = command("forms", "inner product, indefinite form and bracket of two elements")
    p.add_argument("--m", required=True)
    p.add_argument("--n", required=True)

    p = command("verdict", "single-input controllability")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--kind", choices=VERDICT_KINDS, default="omega")
    add_classification_flags(p)

    p = command("verdict-bounded", "single-input controllability with |u| <= bound")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--bound", type=float, required=True)
    add_classification_flags(p)

    p = command("verdict-multi", "controllability with up to three control directions")
    p.add_argument("--a", required=True)
    p.add_argument("--b", action="append", required=True)
    add_classification_flags(p)

    p = command("omega", "set of controls with an elliptic generator")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    add_classification_flags(p)

    p = command("normalize", "frame taking a hyperbolic B onto a multiple of K_y")
    p.add_argument("--b", required=True)

    p = command("canonical", "canonical form of an uncontrollable single-input system")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = command("map", "image in so(2,1) / SO(2,1) or sl(2,R) / SL(2,R)")
    p.add_argument("--to", choices=["so21", "sl2r"], required=True)
    p.add_argument("--element", required=True)
    p.add_argument("--imag-tol", dest="imag_tol", type=_positive_float, default=settings.SL2R_IMAG_TOL)

    p = command("orbit", "hyperboloid orbit of exp(tM) acting on p0")
    p.add_argument("--m", required=True)
    p.add_argument("--p0", required=True)
    p.add_argument("--t-max", dest="t_max", type=float, default=2.0 * math.pi)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--tol", type=_positive_float, default=settings.HYPERBOLOID_TOL)

    p = command("simulate", "propagate a piecewise-constant schedule")
    p.add_argument("--a", required=True)
    p.add_argument("--b", action="append", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--max-step", dest="max_step", type=float, default=None)
    p.add_argument("--to", choices=["so21", "sl2r"], default=None)
    p.add_argument("--substep-bound", dest="substep_bound", type=_positive_float, default=settings.SUBSTEP_BOUND)
    p.add_argument("--imag-tol", dest="imag_tol", type=_positive_float, default=settings.SL2R_IMAG_TOL)

    p = command("certify", "monotone or group-residual certificate over schedules")
    p.add_argument("--epsilon", type=int, choices=[1, -1], default=None)
    p.add_argument("--coef", type=float, default=0.0, help="a of the canonical drift eps K_x + a K_z")
    p.add_argument("--a", default=None)
    p.add_argument("--b", action="append", default=None)
    p.add_argument("--kind", choices=[k.value for k in simulator.CertificateKind],
                   default=simulator.CertificateKind.MONOTONE_NONINCREASING.value)
    p.add_argument("--schedule", action="append", default=None)
    p.add_argument("--random", type=int, default=0)
    p.add_argument("--max-segments", dest="max_segments", type=_positive_int, default=20)
    p.add_argument("--horizon", type=float, default=5.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=settings.CERTIFICATE_TOL)

    p = command("sample", "end points of random schedules")
    p.add_argument("--a", required=True)
    p.add_argument("--b", action="append", required=True)
    p.add_argument("--n", type=_positive_int, default=200)
    p.add_argument("--max-segments", dest="max_segments", type=_positive_int, default=10)
    p.add_argument("--horizon", type=float, default=5.0)
    p.add_argument("--scale", type=float, default=None)

    p = command("steer", "plan a schedule reaching a target group element")
    p.add_argument("--a", required=True)
    p.add_argument("--b", action="append", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--bound", type=float, default=None)
    p.add_argument("--tol", type=float, default=settings.STEERING_TOL)

    p = command("rep", "truncated discrete-series operators")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--check", action="store_true")

    p = command("coherent", "truncated coherent state D(alpha)|0,k>")
    p.add_argument("--alpha", required=True)
    p.add_argument("--k", type=float, default=0.5)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--tol", type=float, default=settings.TRUNCATION_DEFICIT_TOL)

    p = command("benchmark", "worked examples and randomized sweeps")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--output-dir", dest="output_dir", default=settings.DEFAULT_OUTPUT_DIR)
    p.add_argument("--cases", default=DEFAULT_CASES_PATH)

    return parser


def run(argv: Sequence[str], stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = get_parser()
    with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
        try:
            args = parser.parse_args(list(argv))
        except SystemExit as e:
            return e.code if isinstance(e.code, int) else 2
    settings.configure_logging("DEBUG" if args.verbose else settings.LOG_LEVEL, stderr)
    return ReachRunner(args, stdout, stderr)()


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
