"""Rich rendering of suite reports."""

import json
from typing import Any, Dict, Sequence

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from qflag.schemas import RelationReport, SuiteReport

console = Console()

COLUMNS = ("relation", "anchor", "max_residual", "tolerance", "samples", "passed", "elapsed")


def _cell(report: RelationReport, column: str) -> str:
    if column == "passed":
        return "[green]pass[/]" if report.passed else "[bold red]FAIL[/]"
    if column in ("max_residual", "tolerance"):
        return f"{getattr(report, column):.2e}"
    if column == "elapsed":
        return f"{report.elapsed:.2f}s"
    return str(getattr(report, column))


def report_table(reports: Sequence[RelationReport]) -> Table:
    table = Table(box=box.MINIMAL_DOUBLE_HEAD, highlight=True, show_lines=True)
    for column in COLUMNS:
        table.add_column(column, overflow="fold", no_wrap=False)
    for report in reports:
        table.add_row(*(_cell(report, column) for column in COLUMNS))
    return table


def summary_panel(suite: SuiteReport) -> Panel:
    failing = suite.failing()
    if failing:
        body = f"[bold red]{len(failing)} of {len(suite.reports)} relations failed:[/] " + ", ".join(failing)
    else:
        body = f"[green]all {len(suite.reports)} relations hold[/]"
    return Panel(
        f"{body}\nseed {suite.seed}, schema {suite.schema_version}",
        title=suite.command,
        expand=False,
        border_style="bold magenta",
    )


def render_suite(suite: SuiteReport, show_details: bool = False) -> None:
    """Print the relation table and the summary panel."""
    if not suite.reports:
        console.print("[bold yellow]No relations were checked.[/]")
        return
    console.print(report_table(suite.reports))
    if show_details:
        for report in suite.reports:
            if report.details:
                console.print(f"[bold blue]{report.relation}:[/] {json.dumps(report.details, default=str)}")
    console.print(summary_panel(suite))


def render_mapping(title: str, data: Dict[str, Any]) -> None:
    """Two-column table of a flat mapping, e.g. algebra data."""
    table = Table(box=box.MINIMAL_DOUBLE_HEAD, highlight=True, show_lines=True, title=title)
    table.add_column("field", overflow="fold", no_wrap=False)
    table.add_column("value", overflow="fold", no_wrap=False)
    for key, value in data.items():
        table.add_row(key, str(value))
    console.print(table)
