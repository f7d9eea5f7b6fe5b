"""Experiment harness: run configs, evaluation reports, CLI."""

from .cli import build_parser, main
from .compare import compare_runs, format_comparison, read_train_csv
from .evaluate import evaluate_policy, evaluate_replay
from .gradcheck import GradcheckResult, run_gradcheck
from .report import COLUMNS, REPORT_MAGIC, EvalReport, read_report
from .runconfig import RunConfig, file_sha256, load_run_config

__all__ = [
    "COLUMNS", "REPORT_MAGIC", "EvalReport", "GradcheckResult", "RunConfig",
    "build_parser", "compare_runs", "evaluate_policy", "evaluate_replay",
    "file_sha256", "format_comparison", "load_run_config", "main",
    "read_report", "read_train_csv", "run_gradcheck",
]
