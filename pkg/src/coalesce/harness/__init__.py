"""Reports and the command line front end."""

from coalesce.harness.commands import (
    COMPARE_QUANTITIES,
    EXACT_QUANTITIES,
    MODELS,
    Params,
    UsageError,
    run_compare,
    run_exact,
    run_simulate,
)
from coalesce.harness.report import REPORT_VERSION, Report, Row, StatTest

__all__ = [
    "COMPARE_QUANTITIES",
    "EXACT_QUANTITIES",
    "MODELS",
    "Params",
    "REPORT_VERSION",
    "Report",
    "Row",
    "StatTest",
    "UsageError",
    "run_compare",
    "run_exact",
    "run_simulate",
]
