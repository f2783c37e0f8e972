from unittest.mock import MagicMock, patch

from twistorkit.reports import deformation_table, key_value_table, print_summary, residual_table


def test_residual_table_marks_failures():
    """Tests the ok/FAIL column of the residual table."""
    table = residual_table({"I_squared": 0.0, "metric_symmetry": 0.5}, ["metric_symmetry", "NotReal"])
    lines = table.splitlines()
    assert any("metric_symmetry" in line and "FAIL" in line for line in lines)
    assert any("I_squared" in line and "ok" in line for line in lines)
    assert any("NotReal" in line for line in lines)


def test_key_value_table():
    """Tests the two-column summary table."""
    table = key_value_table({"rank": 2, "splitting": (1, -1)})
    assert "(1, -1)" in table
    assert "quantity" in table


def test_deformation_table_uses_report_frame():
    """Tests that the deformation table renders the report frame."""
    report = MagicMock()
    report.to_frame.return_value.to_markdown.return_value = "| t |"
    assert deformation_table(report) == "| t |"
    report.to_frame.return_value.to_markdown.assert_called_once_with(index=False)


@patch("twistorkit.reports.sys")
def test_print_summary_goes_to_stderr(mock_sys):
    """Tests that summaries are printed to stderr."""
    with patch("builtins.print") as mock_print:
        print_summary("hello")
    mock_print.assert_called_once_with("hello", file=mock_sys.stderr)
