import os
import json
import logging
import numpy as np
import pandas as pd
import pydantic
import matplotlib

matplotlib.use("Agg")

import seaborn as sns
import matplotlib.pyplot as plt

from tqdm import tqdm
from typing import List, Optional

from app.core.data import WorkedExample
from app.core.errors import InvalidInput, ReachError
from app.core.algebra import (AlgebraElement, KY, Kind, classify, commutator, conjugate, exp_element,
                              indefinite_form)
from app.control.omega import are_independent, discriminant, trace_polynomial
from app.control.canonical import normalize_hyperbolic
from app.control import controllability
from app.control.controllability import table_row, verdict_single

logger = logging.getLogger(__name__)

COEFFICIENT_RANGE = 10.0


def load_worked_examples(file_path: str) -> List[WorkedExample]:
    """Loads and validates the worked-example case file."""
    if not os.path.exists(file_path):
        raise InvalidInput(f"case file not found at {file_path}")
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        cases = [WorkedExample.model_validate(entry) for entry in raw]
    except (json.JSONDecodeError, pydantic.ValidationError) as e:
        raise InvalidInput(f"cannot parse case file {file_path}: {e}") from e
    logger.info("loaded %d worked examples from %s", len(cases), file_path)
    return cases


def save_test_results(cm_df: pd.DataFrame, fig: plt.Figure, output_dir: str, file_suffix: str = "") -> None:
    """Saves the confusion matrix CSV and its heatmap."""
    os.makedirs(output_dir, exist_ok=True)
    cm_df.to_csv(os.path.join(output_dir, f"confusion_matrix{file_suffix}.csv"))
    fig.savefig(os.path.join(output_dir, f"confusion_matrix_plot{file_suffix}.png"))
    plt.close(fig)


def plot_decision_confusion_matrix(cm_array, labels, accuracy, title="Decision confusion matrix"):
    fig, ax = plt.subplots(figsize=(8, 7))
    sns.heatmap(cm_array, annot=True, fmt="d", cmap="Blues", ax=ax,
                xticklabels=labels, yticklabels=labels, cbar=False)
    ax.set_title(f"{title}\nAgreement: {accuracy:.2%}", pad=20)
    ax.set_xlabel("Computed decision", labelpad=15)
    ax.set_ylabel("Expected decision", labelpad=15)
    plt.xticks(rotation=45, ha="right", rotation_mode="anchor")
    plt.yticks(rotation=0)
    plt.tight_layout()
    return fig


def get_encoded_labels_and_mapping(y_true, y_pred, custom_all_labels=None):
    """
    Integer codes for sklearn's confusion_matrix over a fixed label set.

    Returns (y_true codes, y_pred codes, display labels, label->code mapping, codes).
    """
    if custom_all_labels is None:
        all_unique_labels = sorted(set(y_true + y_pred))
    else:
        all_unique_labels = sorted(set(custom_all_labels) | set(y_true) | set(y_pred))
    label_to_code = {label: i for i, label in enumerate(all_unique_labels)}
    y_true_encoded = [label_to_code[label] for label in y_true]
    y_pred_encoded = [label_to_code[label] for label in y_pred]
    return y_true_encoded, y_pred_encoded, all_unique_labels, label_to_code, list(label_to_code.values())


def random_element(rng: np.random.Generator, scale: float = COEFFICIENT_RANGE) -> AlgebraElement:
    return AlgebraElement.from_array(rng.uniform(-scale, scale, size=3))


def discriminant_sweep(n: int, seed: int, progress: bool = False) -> pd.DataFrame:
    """Discriminant of the trace polynomial against the form of [A,B] on random pairs."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in tqdm(range(n), disable=not progress, desc="discriminant identity"):
        A, B = random_element(rng), random_element(rng)
        bracket = commutator(A, B)
        lhs = discriminant(*trace_polynomial(A, B))
        rhs = indefinite_form(bracket, bracket)
        scale = max(1.0, (A.norm() * B.norm()) ** 2)
        rows.append({"discriminant": lhs, "bracket_form": rhs, "relative_residual": abs(lhs - rhs) / scale})
    return pd.DataFrame(rows)


def table_agreement_sweep(n: int, seed: int, progress: bool = False) -> pd.DataFrame:
    """Omega-solver verdicts against the table rows on random independent pairs."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in tqdm(range(n), disable=not progress, desc="table agreement"):
        A, B = random_element(rng), random_element(rng)
        if not are_independent(A, B):
            continue
        solver = verdict_single(A, B).decision.value
        table = table_row(A, B).decision.value
        rows.append({"solver": solver, "table": table, "agree": solver == table})
    return pd.DataFrame(rows, columns=["solver", "table", "agree"])


def series_expm(matrix: np.ndarray, terms: int = 80) -> np.ndarray:
    """Truncated Taylor series of the matrix exponential."""
    result = np.eye(matrix.shape[0], dtype=complex)
    term = np.eye(matrix.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ matrix / k
        result = result + term
    return result


def exp_series_sweep(n: int, seed: int, max_argument: float = 5.0, progress: bool = False) -> pd.DataFrame:
    """Closed-form exponential against the series oracle for |t| |M| <= max_argument."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in tqdm(range(n), disable=not progress, desc="exponential"):
        M = random_element(rng, 1.0)
        t = rng.uniform(-1.0, 1.0) * max_argument / max(M.norm(), 1e-12)
        closed = exp_element(M, t).matrix()
        oracle = series_expm(t * M.matrix())
        rows.append({"kind": classify(M).kind.value, "t": t, "max_error": float(np.max(np.abs(closed - oracle)))})
    return pd.DataFrame(rows)


def normalization_sweep(n: int, seed: int, progress: bool = False) -> pd.DataFrame:
    """Frobenius residual of P B P^-1 - sqrt(<B,B>) K_y over random hyperbolic B."""
    rng = np.random.default_rng(seed)
    rows = []
    with tqdm(total=n, disable=not progress, desc="normalization") as bar:
        while len(rows) < n:
            B = random_element(rng)
            if classify(B).kind is not Kind.HYPERBOLIC:
                continue
            result = normalize_hyperbolic(B)
            residual = np.linalg.norm((conjugate(result.P, B) - result.scale * KY).matrix())
            rows.append({"alpha": result.alpha, "beta": result.beta, "scale": result.scale,
                         "residual": float(residual)})
            bar.update(1)
    return pd.DataFrame(rows)


def run_case(case: WorkedExample) -> str:
    """Decision computed for one worked example, or 'Error' when the call fails."""
    drift = case.drift.to_element()
    controls = [c.to_element() for c in case.controls]
    dispatch = {
        "verdict": lambda: controllability.verdict_single(drift, controls[0]),
        "verdict-bounded": lambda: controllability.verdict_single_bounded(drift, controls[0], case.bound),
        "verdict-multi": lambda: controllability.verdict_multi(drift, controls),
        "table": lambda: controllability.table_row(drift, controls[0]),
        "stlc": lambda: controllability.stlc_verdict(drift, controls[0]),
        "strong": lambda: controllability.strong_verdict_single(drift, controls[0]),
    }
    if case.command not in dispatch:
        raise InvalidInput(f"unknown case command {case.command!r}")
    try:
        return dispatch[case.command]().decision.value
    except ReachError as e:
        logger.warning("case %s failed: %s", case.name, e)
        return "Error"


def summarize(frame: pd.DataFrame, column: str, threshold: Optional[float] = None) -> dict:
    summary = {"count": int(len(frame))}
    if len(frame):
        summary["max"] = float(frame[column].max())
        if threshold is not None:
            summary["pass"] = bool(summary["max"] < threshold)
    return summary
