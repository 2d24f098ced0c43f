"""
Report Service

Writes TestReports as JSON (stable field order, no timestamps) and renders
them as plain-text tables for the terminal.
"""

import logging
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from ..exceptions import GWIError
from .convergence import TestReport

logger = logging.getLogger(__name__)


class ReportService:
    """Persists and renders convergence reports"""

    def to_json(self, report: TestReport) -> str:
        return report.model_dump_json(by_alias=True, indent=2) + "\n"

    def write(self, report: TestReport, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.to_json(report).encode("utf-8"))
        logger.info(f"📝 Report '{report.scenario}' written to {path}")
        return path

    def load(self, path) -> TestReport:
        """
        Load a report written by write().

        Raises:
            GWIError: Missing file or a document that is not a report
        """
        path = Path(path)
        try:
            return TestReport.model_validate_json(path.read_bytes())
        except OSError as e:
            raise GWIError(f"Cannot read report {path}: {e}") from e
        except ValidationError as e:
            logger.error(f"Invalid report {path}: {e.error_count()} errors")
            raise GWIError(f"{path} is not a valid report: {e.errors()[0]['msg']}") from e

    def verdict_frame(self, report: TestReport) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "test": v.test,
                    "statistic": v.statistic,
                    "comparison": v.comparison,
                    "tolerance": v.tolerance,
                    "result": "PASS" if v.passed else "FAIL",
                }
                for v in report.verdicts
            ],
            columns=["test", "statistic", "comparison", "tolerance", "result"],
        )

    def render(self, report: TestReport) -> str:
        lines = [f"Scenario: {report.scenario}  seed={report.seed}  paths={report.n_paths}  version={report.version}"]
        if report.verdicts:
            lines.append(self.verdict_frame(report).to_string(index=False))
        else:
            lines.append("(no gated tests)")

        if report.diagnostics:
            lines.append("")
            lines.append("Diagnostics (not gated):")
            diagnostics = pd.DataFrame(
                [{"name": d.name, "statistic": d.statistic} for d in report.diagnostics]
            )
            lines.append(diagnostics.to_string(index=False))

        passed = sum(v.passed for v in report.verdicts)
        lines.append("")
        lines.append(f"{passed}/{len(report.verdicts)} gated tests passed")
        return "\n".join(lines)


# Global report service instance
report_service = ReportService()
