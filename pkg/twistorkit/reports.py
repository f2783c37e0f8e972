"""Markdown summaries printed to stderr next to the JSON output."""

import sys

import pandas as pd

from twistorkit.deformation import DeformationReport


def residual_table(residuals: dict[str, float], failures: list[str]) -> str:
    """One row per check with its max residual."""
    failed = set(failures)
    frame = pd.DataFrame(
        [
            {"check": name, "max_residual": value, "status": "FAIL" if name in failed else "ok"}
            for name, value in residuals.items()
        ]
    )
    extra = sorted(failed - set(residuals))
    if extra:
        frame = pd.concat(
            [frame, pd.DataFrame([{"check": e, "max_residual": None, "status": "FAIL"} for e in extra])],
            ignore_index=True,
        )
    return frame.to_markdown(index=False)


def key_value_table(values: dict) -> str:
    frame = pd.DataFrame({"quantity": list(values), "value": [str(v) for v in values.values()]})
    return frame.to_markdown(index=False)


def deformation_table(report: DeformationReport) -> str:
    return report.to_frame().to_markdown(index=False)


def print_summary(text: str) -> None:
    print(text, file=sys.stderr)
