"""Report rows, verdicts and their CSV/JSON forms."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = [
    "REPORT_VERSION",
    "Report",
    "Row",
    "StatTest",
    "Z_THRESHOLD",
    "P_THRESHOLD",
    "proportion_row",
    "mean_row",
    "parse_csv",
]

REPORT_VERSION = "1"
Z_THRESHOLD = 4.0
P_THRESHOLD = 1e-3

ROW_FIELDS = [
    "index", "exact", "empirical", "std_error", "z_score", "passed", "reference", "note",
]


@dataclass
class Row:
    index: int | str
    exact: float | None = None
    empirical: float | None = None
    std_error: float | None = None
    z_score: float | None = None
    passed: bool | None = None
    reference: float | None = None  # a secondary value, e.g. a limit or asymptote
    note: str = ""


@dataclass
class StatTest:
    name: str
    statistic: float
    p_value: float | None
    passed: bool | None


@dataclass
class Report:
    command: str
    quantity: str
    config: dict
    rows: list[Row] = field(default_factory=list)
    tests: list[StatTest] = field(default_factory=list)
    verdict: bool = True
    runtime_ms: float = 0.0
    version: str = REPORT_VERSION

    def finalize(self) -> "Report":
        """Overall verdict: no row or test marked as failing."""
        self.verdict = all(r.passed is not False for r in self.rows) and all(
            t.passed is not False for t in self.tests
        )
        return self

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        d = dict(d)
        d["rows"] = [Row(**r) for r in d.get("rows", [])]
        d["tests"] = [StatTest(**t) for t in d.get("tests", [])]
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    # -- CSV ----------------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in self.rows:
            w.writerow([_cell(getattr(r, f)) for f in ROW_FIELDS])
        # tests ride along as rows: statistic under empirical, p-value under reference
        for t in self.tests:
            w.writerow([f"test:{t.name}", "", _cell(t.statistic), "", "", _cell(t.passed), _cell(t.p_value), ""])
        w.writerow(["verdict", "", "", "", "", _cell(self.verdict), "", ""])
        return buf.getvalue()

    def plot_data(self) -> str:
        """x, exact, empirical, band; band is the |z| threshold times the
        standard error."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "exact", "empirical", "band"])
        for r in self.rows:
            band = None if r.std_error is None else Z_THRESHOLD * r.std_error
            w.writerow([_cell(v) for v in (r.index, r.exact, r.empirical, band)])
        return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "pass" if v else "fail"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def parse_csv(text: str) -> list[dict]:
    """Rows of a CSV report as dicts of strings."""
    return list(csv.DictReader(io.StringIO(text)))


def _judge(z: float | None, threshold: float) -> bool | None:
    if z is None:
        return None
    return bool(abs(z) <= threshold)


def proportion_row(index, exact: float, hits: int, replicas: int, *, threshold=Z_THRESHOLD, note=""):
    """Frequency vs exact probability; binomial error from the exact value,
    floored at half a count so a certain event still gets a finite z."""
    emp = hits / replicas
    se = max(math.sqrt(max(exact * (1 - exact), 0.0) / replicas), 0.5 / replicas)
    z = (emp - exact) / se
    return Row(index, float(exact), float(emp), float(se), float(z), _judge(z, threshold), note=note)


def mean_row(index, exact: float | None, samples, *, threshold=Z_THRESHOLD, note=""):
    """Sample mean vs exact expectation with the Wald standard error.

    Constant samples get the same half-count floor as frequencies, read on
    the scale of the values, so the error is never reported as zero.
    """
    x = np.asarray(samples, dtype=float)
    emp = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    if se == 0:
        se = 0.5 * max(abs(emp), 1.0) / x.size
    if exact is None or not math.isfinite(exact):
        return Row(index, exact, emp, se, note=note)
    z = (emp - exact) / se
    return Row(index, float(exact), emp, se, float(z), _judge(z, threshold), note=note)
