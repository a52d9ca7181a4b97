"""Text, JSON and CSV renderings of evaluation results."""

import csv
import io
import json
from enum import Enum

from constants.config import NEWLINE_CHAR


class ReportFormat(Enum):
    TEXT = "text"
    JSON = "json"
    CSV = "csv"

    @property
    def extension(self):
        return "txt" if self == ReportFormat.TEXT else self.value


def pct(value):
    """Two-decimal percentage, 'n/a' for undefined quantities."""
    return "n/a" if value is None else f"{value * 100:.2f}%"


def _json(data):
    return json.dumps(data, indent=2, ensure_ascii=False) + NEWLINE_CHAR


def to_csv(header, rows):
    """Header and rows as CSV text, quoting fields that need it. None becomes an empty field."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator=NEWLINE_CHAR)
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def confusion_grid(m):
    return NEWLINE_CHAR.join(
        [
            "confusion matrix (positive class: edit)",
            f"{'':<12}{'pred edit':>12}{'pred keep':>12}",
            f"{'gold edit':<12}{'TP ' + str(m.tp):>12}{'FN ' + str(m.fn):>12}",
            f"{'gold keep':<12}{'FP ' + str(m.fp):>12}{'TN ' + str(m.tn):>12}",
            f"total: {m.total()}  abstained: {m.abstained}",
        ]
    )


def render_report(report, fmt=ReportFormat.TEXT):
    """Render a MetricsReport.

    TEXT is the labeled grid plus one 'name: value' line per quantity. JSON round-trips through
    MetricsReport.from_dict. CSV is the tp,fp,tn,fn,abstained header and one row.
    """
    m = report.matrix
    if fmt == ReportFormat.JSON:
        return _json(report.to_dict())
    if fmt == ReportFormat.CSV:
        return to_csv(["tp", "fp", "tn", "fn", "abstained"], [[m.tp, m.fp, m.tn, m.fn, m.abstained]])
    lines = [
        confusion_grid(m),
        f"accuracy: {pct(report.accuracy)}",
        f"type II rate: {pct(report.type2_rate)}",
        f"LAI false rate: {pct(report.lai_false_rate)}",
        f"error-rate ceiling: {pct(report.error_ceiling)}",
        f"scenario 1 savings: {pct(report.scenario1_savings)}",
        f"scenario 2 savings: {pct(report.scenario2_savings)} "
        f"(LAI review pay rate {pct(report.params.lai_review_pay_rate)})",
    ]
    return NEWLINE_CHAR.join(lines) + NEWLINE_CHAR


def render_savings(report, fmt=ReportFormat.TEXT):
    if fmt == ReportFormat.JSON:
        return _json(report.to_dict())
    if fmt == ReportFormat.CSV:
        rows = [[rate, savings] for rate, savings in report.sweep]
        rows = rows or [[report.params.lai_review_pay_rate, report.scenario2_savings]]
        return to_csv(["pay_rate", "scenario2_savings"], rows)
    lines = [
        f"error-rate ceiling: {pct(report.error_ceiling)}",
        f"LAI false rate: {pct(report.lai_false_rate)}",
        f"scenario 1 savings: {pct(report.scenario1_savings)}",
        f"scenario 2 savings: {pct(report.scenario2_savings)} "
        f"(LAI review pay rate {pct(report.params.lai_review_pay_rate)})",
    ]
    if report.sweep:
        lines.append("pay rate sweep:")
        lines.extend(f"  {pct(rate):>7}  {pct(savings)}" for rate, savings in report.sweep)
    return NEWLINE_CHAR.join(lines) + NEWLINE_CHAR


def render_comparison(rows, fmt=ReportFormat.TEXT):
    if fmt == ReportFormat.JSON:
        return _json(
            [
                {"model": r.model, "correct": r.correct, "total": r.total, "accuracy": r.accuracy, "delta": r.delta}
                for r in rows
            ]
        )
    if fmt == ReportFormat.CSV:
        return to_csv(
            ["model", "correct", "total", "accuracy", "delta"],
            [[r.model, r.correct, r.total, r.accuracy, r.delta] for r in rows],
        )
    width = max(len("model"), *(len(r.model) for r in rows))
    lines = [f"{'model':<{width}}  {'correct':>9}  {'accuracy':>8}  {'delta':>8}"]
    for r in rows:
        delta = f"{r.delta * 100:+.2f}%"
        lines.append(f"{r.model:<{width}}  {f'{r.correct}/{r.total}':>9}  {pct(r.accuracy):>8}  {delta:>8}")
    return NEWLINE_CHAR.join(lines) + NEWLINE_CHAR


def render_curve(points, trend, fmt=ReportFormat.TEXT):
    if fmt == ReportFormat.JSON:
        return _json(
            {
                "trend": trend.value,
                "points": [
                    {"train_size": p.train_size, "matrix": p.matrix.to_dict(), "fn_rate": p.fn_rate}
                    for p in points
                ],
            }
        )
    if fmt == ReportFormat.CSV:
        return to_csv(
            ["train_size", "tp", "fp", "tn", "fn", "fn_rate"],
            [[p.train_size, p.matrix.tp, p.matrix.fp, p.matrix.tn, p.matrix.fn, p.fn_rate] for p in points],
        )
    lines = [f"{'train size':>10}  {'fn rate':>8}"]
    lines.extend(f"{p.train_size:>10}  {pct(p.fn_rate):>8}" for p in points)
    lines.append(f"trend: {trend.value}")
    return NEWLINE_CHAR.join(lines) + NEWLINE_CHAR


def render_profiles(matrices, profiles, fmt=ReportFormat.TEXT):
    if fmt == ReportFormat.JSON:
        return _json(
            {pair: {"matrix": matrices[pair].to_dict(), "profile": profiles[pair].value} for pair in matrices}
        )
    if fmt == ReportFormat.CSV:
        return to_csv(
            ["lang_pair", "tp", "tn", "profile"],
            [[pair, m.tp, m.tn, profiles[pair].value] for pair, m in matrices.items()],
        )
    lines = [f"{pair}: TP {m.tp}, TN {m.tn} -> {profiles[pair].value}" for pair, m in matrices.items()]
    return NEWLINE_CHAR.join(lines) + NEWLINE_CHAR
