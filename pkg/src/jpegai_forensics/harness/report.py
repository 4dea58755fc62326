"""Deterministic report serialization: JSON, CSV and a markdown table."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .experiment import ExperimentReport

FORMATS = ("json", "csv", "markdown")
CSV_HEADER = ["section", "name", "label", "accuracy", "correct", "n"]


class ReportError(ValueError):
    pass


def _check(report: ExperimentReport) -> None:
    if report.n_test < 1 or not report.per_condition:
        raise ReportError("report has no test samples; refusing to emit an empty report")
    cells = [report.overall, *report.per_class.values(), *report.per_condition.values(), *report.pairs.values()]
    for cell in cells:
        if cell["n"] < 1 or not 0.0 <= cell["accuracy"] <= 1.0:
            raise ReportError(f"invalid accuracy cell {cell}")


def _rows(report: ExperimentReport) -> list:
    rows = [
        ["meta", "cue", report.cue, "", "", ""],
        ["meta", "config_hash", report.config_hash, "", "", ""],
        ["meta", "manifest_digest", report.manifest_digest, "", "", ""],
        ["overall", "all", "", report.overall["accuracy"], report.overall["correct"], report.overall["n"]],
    ]
    rows += [["class", lab, lab, c["accuracy"], c["correct"], c["n"]] for lab, c in sorted(report.per_class.items())]
    rows += [["condition", k, c["label"], c["accuracy"], c["correct"], c["n"]] for k, c in sorted(report.per_condition.items())]
    rows += [["pooled", k, "+".join(c["conditions"]), c["accuracy"], c["correct"], c["n"]] for k, c in sorted(report.pairs.items())]
    return rows


def to_json(report: ExperimentReport, include_runtime: bool = False) -> str:
    return json.dumps(report.to_dict(include_runtime), indent=2, sort_keys=True) + "\n"


def to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in _rows(report):
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def to_markdown(report: ExperimentReport) -> str:
    lines = [
        f"**cue:** {report.cue}  **config:** `{report.config_hash}`  "
        f"**train/test:** {report.n_train}/{report.n_test}",
        "",
        "| condition | label | accuracy | n |",
        "|---|---|---:|---:|",
    ]
    for k, c in sorted(report.per_condition.items()):
        lines.append(f"| {k} | {c['label']} | {c['accuracy']:.3f} | {c['n']} |")
    for k, c in sorted(report.pairs.items()):
        lines.append(f"| **{k}** | pooled | {c['accuracy']:.3f} | {c['n']} |")
    o = report.overall
    lines.append(f"| **overall** | all | {o['accuracy']:.3f} | {o['n']} |")
    return "\n".join(lines) + "\n"


def emit_report(report: ExperimentReport, path, fmt: str = "json", include_runtime: bool = False) -> Path:
    """Write ``report`` as ``json``, ``csv`` or ``markdown``.  Runtime is left out unless asked for."""
    _check(report)
    if fmt == "json":
        text = to_json(report, include_runtime)
    elif fmt == "csv":
        text = to_csv(report)
    elif fmt in ("markdown", "md"):
        text = to_markdown(report)
    else:
        raise ReportError(f"unknown report format {fmt!r}; choose from {FORMATS}")
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise ReportError(f"cannot write report to {path}: {exc}") from exc
    return path


def load_report(path) -> ExperimentReport:
    data = json.loads(Path(path).read_text())
    data.setdefault("runtime_s", 0.0)
    return ExperimentReport.from_dict(data)
