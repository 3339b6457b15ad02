import os
import logging

from dotenv import load_dotenv

load_dotenv()

# Classification: a form value within CLASSIFY_RTOL * max(1, |M|^2) of zero is parabolic.
CLASSIFY_RTOL = 1e-10
# Two inputs are dependent when their largest 2x2 minor is below INDEPENDENCE_RTOL * scale^2.
INDEPENDENCE_RTOL = 1e-12
# Series branch of the closed-form exponential.
EXP_SERIES_KAPPA = 1e-12
# Largest cosh/sinh argument before overflow is reported.
EXP_MAX_ARGUMENT = 700.0

GROUP_INPUT_TOL = 1e-6
GROUP_RESIDUAL_TOL = 1e-9
CONJUGATION_TOL = 1e-10
CERTIFICATE_TOL = 1e-9
HYPERBOLOID_TOL = 1e-8
SL2R_IMAG_TOL = 1e-8

# Per-factor bound on |T| * |M| used by the propagator to split long segments.
SUBSTEP_BOUND = 10.0

TRUNCATION_DEFICIT_TOL = 1e-6

STEERING_TOL = 1e-6
STEERING_Q_START = 3
STEERING_Q_MAX = 24
STEERING_RESTARTS = 6

DEFAULT_SEED = int(os.getenv("REACH_SEED", "42"))
DEFAULT_OUTPUT_DIR = os.getenv("REACH_OUTPUT_DIR", "./benchmark_output")
LOG_LEVEL = os.getenv("REACH_LOG_LEVEL", "WARNING")


def configure_logging(level: str = LOG_LEVEL, stream=None) -> None:
    """Send log records to stderr; stdout carries command output only."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(stream)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level.upper() if isinstance(level, str) else level)
