import os
import time
import logging
import pandas as pd

from typing import Dict, List
from sklearn.metrics import confusion_matrix

from app.core.data import WorkedExample
from app.core.errors import InvalidInput
from app.control.controllability import Decision
from app.evaluation.benchmarking import (discriminant_sweep, exp_series_sweep, get_encoded_labels_and_mapping,
                                         normalization_sweep, plot_decision_confusion_matrix, run_case,
                                         save_test_results, summarize, table_agreement_sweep)

logger = logging.getLogger(__name__)

SUITES = ("all", "examples", "discriminant", "table", "exp", "normalize")
ERROR_LABEL = "Error"


class Evaluator:
    def __init__(self, cases: List[WorkedExample], output_dir: str, n: int = 1000, seed: int = 42,
                 progress: bool = False):
        self.cases = cases
        self.output_dir = output_dir
        self.n = n
        self.seed = seed
        self.progress = progress

    def __call__(self, suite: str = "all") -> Dict[str, dict]:
        if suite not in SUITES:
            raise InvalidInput(f"unknown benchmark suite {suite!r}; choose from {', '.join(SUITES)}")
        os.makedirs(self.output_dir, exist_ok=True)
        runners = {
            "examples": self.examples_evaluation,
            "discriminant": self.discriminant_evaluation,
            "table": self.table_evaluation,
            "exp": self.exp_evaluation,
            "normalize": self.normalization_evaluation,
        }
        selected = list(runners) if suite == "all" else [suite]
        summary = {}
        for name in selected:
            start_time = time.time()
            summary[name] = runners[name]()
            summary[name]["runtime_sec"] = round(time.time() - start_time, 3)
            logger.info("suite %s finished: %s", name, summary[name])
        return summary

    def examples_evaluation(self) -> dict:
        """
        Runs every worked example, saves the per-case CSV and the decision confusion matrix.
        """
        results = []
        for idx, case in enumerate(self.cases):
            computed = run_case(case)
            match = "PASS" if computed == case.expected else "FAIL"
            results.append({
                "test_id": idx,
                "name": case.name,
                "command": case.command,
                "expected": case.expected,
                "computed": computed,
                "match_status": match,
            })
            logger.info("case %s: %s (expected %s, got %s)", case.name, match, case.expected, computed)
        df = pd.DataFrame(results, columns=["test_id", "name", "command", "expected", "computed", "match_status"])
        self.save_results(df, "examples")
        if len(df):
            self.plot_and_save_cm(df, "examples")
        return {"count": int(len(df)), "passed": int((df["match_status"] == "PASS").sum()),
                "pass": bool((df["match_status"] == "PASS").all())}

    def discriminant_evaluation(self) -> dict:
        df = discriminant_sweep(self.n, self.seed, self.progress)
        self.save_results(df, "discriminant")
        return summarize(df, "relative_residual", 1e-10)

    def table_evaluation(self) -> dict:
        df = table_agreement_sweep(self.n, self.seed, self.progress)
        self.save_results(df, "table")
        disagreements = int((~df["agree"]).sum()) if len(df) else 0
        if disagreements:
            logger.warning("%d table disagreements", disagreements)
        return {"count": int(len(df)), "disagreements": disagreements, "pass": disagreements == 0}

    def exp_evaluation(self) -> dict:
        df = exp_series_sweep(self.n, self.seed, progress=self.progress)
        self.save_results(df, "exp")
        return summarize(df, "max_error", 1e-12)

    def normalization_evaluation(self) -> dict:
        df = normalization_sweep(self.n, self.seed, self.progress)
        self.save_results(df, "normalize")
        return summarize(df, "residual", 1e-10)

    def plot_and_save_cm(self, df: pd.DataFrame, suite: str) -> pd.DataFrame:
        y_true = df["expected"].tolist()
        y_pred = df["computed"].tolist()
        all_decisions = [d.value for d in Decision] + [ERROR_LABEL]
        y_true_enc, y_pred_enc, labels, _, codes = get_encoded_labels_and_mapping(
            y_true, y_pred, custom_all_labels=all_decisions)

        cm_array = confusion_matrix(y_true_enc, y_pred_enc, labels=codes)
        cm_df = pd.DataFrame(cm_array, index=labels, columns=labels)
        accuracy = (df["match_status"] == "PASS").mean()
        fig = plot_decision_confusion_matrix(cm_array, labels, accuracy,
                                             title=f"Worked examples: {suite}")
        save_test_results(cm_df=cm_df, fig=fig, output_dir=self.output_dir, file_suffix=f"_{suite}")
        logger.info("confusion matrix saved for %s", suite)
        return cm_df

    def save_results(self, df: pd.DataFrame, suite: str) -> None:
        path = os.path.join(self.output_dir, f"evaluation_results_{suite}.csv")
        df.to_csv(path, index=False)
        logger.info("saved %d rows to %s", len(df), path)
