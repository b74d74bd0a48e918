from collections.abc import Mapping

from conf.conf_types import MetricName
from models.metrics.model import MetricReport

__all__ = ["TABLE_COLUMNS", "format_cell", "render_table"]

TABLE_COLUMNS: list[tuple[MetricName, str]] = [
    (MetricName.LDS, "LDS"),
    (MetricName.LPS, "LPS"),
    (MetricName.JSD, "JSD"),
    (MetricName.ALPHA_PRECISION, "a-precision"),
    (MetricName.BETA_RECALL, "b-recall"),
    (MetricName.COVERAGE, "Coverage"),
    (MetricName.PLUS_FIVE_STEPS, "+5 Steps Ahead"),
]


def format_cell(report: MetricReport | None) -> str:
    if report is None:
        return "-"
    return f"{report.mean:.3f} ± {report.std:.3f}"


def render_table(rows: Mapping[str, Mapping[MetricName, MetricReport]], dataset: str = "") -> str:
    """Aligned plain-text table, one row per model, mean ± std per metric column."""
    header = ["Dataset", "Model", *(title for _, title in TABLE_COLUMNS)]
    body = [
        [dataset or "-", model, *(format_cell(reports.get(metric)) for metric, _ in TABLE_COLUMNS)]
        for model, reports in rows.items()
    ]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]

    def line(cells: list[str]) -> str:
        return "  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip()

    rule = "  ".join("-" * width for width in widths)
    return "\n".join([line(header), rule, *(line(row) for row in body)]) + "\n"
