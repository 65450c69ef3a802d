# cli/results_view.py
from typing import Any, Dict, List

import pandas as pd

from core.stats_tests import GofReport, MomentReport


def format_graph_summary(summary: Dict[str, Any]) -> str:
    """Two-column listing of a graph summary"""
    width = max(len(k) for k in summary)
    return "\n".join(f"{key.ljust(width)}  {value}" for key, value in summary.items())


def format_simulation_summary(frame: pd.DataFrame) -> str:
    columns = ["xi_count", "xi_std"] + (["s_n"] if frame["s_n"].notna().any() else [])
    described = frame[columns].describe().T[["count", "mean", "std", "min", "max"]]
    return described.to_string(float_format=lambda v: f"{v:.5g}")


def format_gof_reports(reports: List[GofReport]) -> str:
    """Display a table of goodness-of-fit results"""
    if not reports:
        return "No goodness-of-fit tests were run."
    rows = []
    for r in reports:
        rows.append({
            "Test": r.test_name.value,
            "Statistic": f"{r.statistic:.6g}",
            "p-value": f"{r.p_value:.4g}",
            "n": r.sample_size,
            "Reference": r.reference_law,
            "Rejected at": ", ".join(str(a) for a, rej in r.decision_at if rej) or "-",
        })
    return pd.DataFrame(rows).to_string(index=False)


def format_moment_report(report: MomentReport) -> str:
    frame = pd.DataFrame([{
        "k": row.order,
        "sample": f"{row.sample:.5f}",
        "expected": f"{row.expected:.5f}",
        "z": f"{row.z:+.2f}",
        "flag": "!" if row.flagged else "",
    } for row in report.rows])
    return f"Moments vs {report.reference_law} (n={report.sample_size})\n" + frame.to_string(index=False)


def format_independence(report: Dict[str, Any]) -> str:
    lines = [f"K = {report['tuple_size']}: {'independent' if report['independent'] else 'NOT independent'}"
             f" over {report['tuples_checked']} tuples ({report['method']})"]
    if report["method"] == "exact":
        lines.append(f"max |joint - product| = {report['max_abs_deviation']}")
        witness = report.get("witness")
        if witness:
            lines.append(f"witness edges {witness['edges']} outcome {witness['outcome']}: "
                         f"joint {witness['joint']} vs product {witness['product']}")
    else:
        lines.append(f"rejected {report['rejected']} of {report['tuples_checked']} "
                     f"(fraction {report['rejected_fraction']:.4f}), min p = {report['min_p_value']:.3g}")
    return "\n".join(lines)


def format_artifacts(artifacts: Dict[str, str], out_dir: str, config_hash: str) -> str:
    lines = [f"config hash {config_hash}", f"artifacts in {out_dir}:"]
    lines += [f"  {name}" for name in artifacts]
    return "\n".join(lines)
