"""Plain-text evaluation report with a fixed section and column layout.

The schema never changes with the data: every section and column is emitted
even when its value is zero or nan, so reports from different runs line up.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..evaluation import EvaluationSummary
from ..skeleton.topology import JOINT_NAMES


def _num(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    return "nan" if np.isnan(value) else f"{value:.6f}"


def render_report(summary: EvaluationSummary, params: dict | None = None) -> str:
    report = summary.report
    lines = ["# evaluation report"]
    for note in summary.notes:
        lines.append(f"# {note}")
    if params:
        joined = " ".join(f"{k}={params[k]}" for k in sorted(params))
        lines.append(f"# params: {joined}")
    lines += [
        "",
        "[detection]",
        "true_positives\ttp_area\tfalse_positives\tfp_area\tfalse_negatives\tfn_area",
        "\t".join([
            _num(report.true_positives), _num(report.tp_area),
            _num(report.false_positives), _num(report.fp_area),
            _num(report.false_negatives), _num(report.fn_area),
        ]),
        "",
        "[pose]",
        "mpjds\tmpjds_norm\tpedestrians\tbikers\tcrossover_pedestrians\tcrossover_bikers",
        "\t".join([
            _num(report.mpjds), _num(report.mpjds_normalized),
            _num(report.pedestrian_count), _num(report.biker_count),
            _num(report.crossover_pedestrians), _num(report.crossover_bikers),
        ]),
        "",
        "[size_filter]",
        "metric\tbefore\tafter",
        f"true_positives\t{_num(report.true_positives)}\t{_num(summary.filtered_true_positives)}",
        f"false_positives\t{_num(report.false_positives)}\t{_num(summary.filtered_false_positives)}",
        "",
        "[per_joint]",
        "joint\tjds",
    ]
    for name, value in zip(JOINT_NAMES, report.per_joint_jds):
        lines.append(f"{name}\t{_num(float(value))}")
    return "\n".join(lines) + "\n"


def save_report(summary: EvaluationSummary, path, params: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(summary, params), encoding="utf-8")
    return path
