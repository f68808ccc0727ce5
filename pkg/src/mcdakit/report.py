"""Deterministic rendering of pipeline results.

Markdown shows rounded values for reading; the CSV files keep full
precision (shortest round-trip repr). Rendering is a pure function of the
bundle, so identical inputs give byte-identical output on any platform.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SectionAbsent, ValidationError
from .kmeans import CenterDistanceMatrix
from .robustness import SensitivityReport, UncertaintyRow
from .stats import AnovaRow, ConcordanceReport, DescriptiveRow

CSV_SECTIONS = (
    "descriptive",
    "center_distances",
    "anova",
    "clusters",
    "fig5",
    "fig6",
    "fig7",
    "uncertainty",
)


@dataclass
class ReportBundle:
    """Everything one run produced; every section except provenance is
    optional."""

    provenance: dict
    descriptive: list[DescriptiveRow] | None = None
    center_distances: CenterDistanceMatrix | None = None
    anova: list[AnovaRow] | None = None
    cluster_table: dict[str, list[str]] | None = None
    criterion_weights: dict[str, float] | None = None
    factor_weights: dict[str, float] | None = None
    concordance: ConcordanceReport | None = None
    uncertainty: list[UncertaintyRow] | None = None
    sensitivity: SensitivityReport | None = None
    criterion_bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    factor_bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance is None:
            raise ValidationError("provenance is required")


def _f3(v: float) -> str:
    return f"{v:.3f}"


def _f2(v: float) -> str:
    return f"{v:.2f}"


def _fmt_p(p: float) -> str:
    if math.isnan(p) or math.isinf(p):
        return "-"
    if p < 1e-300:
        return "0.000"
    if p < 0.001:
        return f"{p:.3e}"
    return f"{p:.3f}"


def _fmt_stat(v: float) -> str:
    # infinite or undefined statistics render as a dash
    if math.isnan(v) or math.isinf(v):
        return "-"
    return _f3(v)


def _table(header: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join(" --- " for _ in header) + "|")
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return lines


def render_markdown(bundle: ReportBundle) -> str:
    """Render the full report; section order is fixed, absent sections are
    skipped."""
    out: list[str] = ["# Decision analysis report", ""]

    out.append("## Provenance")
    out.append("")
    for key in sorted(bundle.provenance):
        out.append(f"- {key}: {bundle.provenance[key]}")
    out.append("")

    if bundle.descriptive is not None:
        out.append("## Descriptive statistics")
        out.append("")
        rows = [
            [r.criterion.code, str(r.n), _f3(r.min), _f3(r.max),
             _f3(r.mean), _f3(r.std)]
            for r in bundle.descriptive
        ]
        out += _table(["Criterion", "N", "Min", "Max", "Mean", "Std"], rows)
        out.append("")

    if bundle.center_distances is not None:
        out.append("## Distances between final cluster centers")
        out.append("")
        d = bundle.center_distances.distances
        k = d.shape[0]
        header = ["Cluster"] + [str(i + 1) for i in range(k)]
        rows = [
            [str(i + 1)] + [_f3(d[i, j]) for j in range(k)] for i in range(k)
        ]
        out += _table(header, rows)
        if bundle.center_distances.min_off_diagonal is not None:
            out.append("")
            out.append(
                f"Minimum off-diagonal distance: "
                f"{_f3(bundle.center_distances.min_off_diagonal)}"
            )
        out.append("")

    if bundle.anova is not None:
        out.append("## ANOVA by criterion")
        out.append("")
        rows = []
        for r in bundle.anova:
            sig = "-" if math.isinf(r.f_stat) else _fmt_p(r.significance)
            rows.append(
                [r.criterion.code, _f3(r.cluster_ms), str(r.cluster_df),
                 _f3(r.error_ms), str(r.error_df), _fmt_stat(r.f_stat), sig]
            )
        out += _table(
            ["Criterion", "Cluster MS", "df", "Error MS", "df", "F", "Sig."],
            rows,
        )
        out.append("")

    if bundle.cluster_table is not None:
        out.append("## Factor membership")
        out.append("")
        rows = [
            [factor, ", ".join(concepts)]
            for factor, concepts in bundle.cluster_table.items()
        ]
        out += _table(["Factor", "Concepts"], rows)
        out.append("")

    if bundle.criterion_weights is not None:
        out.append("## Criterion weights")
        out.append("")
        ordered = sorted(
            bundle.criterion_weights.items(), key=lambda kv: (-kv[1], kv[0])
        )
        rows = [[name, _f3(w)] for name, w in ordered]
        out += _table(["Criterion", "Weight"], rows)
        out.append("")

    if bundle.factor_weights is not None:
        out.append("## Factor weights")
        out.append("")
        ordered = sorted(
            bundle.factor_weights.items(), key=lambda kv: (-kv[1], kv[0])
        )
        rows = [[name, _f3(w)] for name, w in ordered]
        out += _table(["Factor", "Weight"], rows)
        out.append("")

    if bundle.concordance is not None:
        out.append("## Rank agreement")
        out.append("")
        for crit in bundle.concordance.per_criterion_w:
            out.append(
                f"- W[{crit}]: {_f2(bundle.concordance.per_criterion_w[crit])}"
            )
        if bundle.concordance.among_criteria_w is not None:
            out.append(
                f"- W among criteria: {_f2(bundle.concordance.among_criteria_w)}"
            )
        out.append("")

    if bundle.uncertainty is not None:
        out.append("## Uncertainty analysis")
        out.append("")
        rows = []
        for r in bundle.uncertainty:
            cv = "-" if r.cv_percent is None else _f2(r.cv_percent)
            rows.append(
                [r.item, r.kind, _f2(r.lower), _f2(r.upper), _f2(r.point),
                 _f2(r.delta), _f2(r.sigma), cv, _f2(r.threshold), r.verdict]
            )
        out += _table(
            ["Item", "Kind", "Lower", "Upper", "Point", "Delta", "Sigma",
             "CV%", "T", "Verdict"],
            rows,
        )
        out.append("")

    if bundle.sensitivity is not None:
        out.append("## Sensitivity analysis")
        out.append("")
        out.append(f"- scenarios: {len(bundle.sensitivity.scenarios)}")
        out.append(
            f"- rank stable: {'yes' if bundle.sensitivity.rank_stable else 'no'}"
        )
        if bundle.sensitivity.changed_pairs:
            pairs = ", ".join(
                f"{a}/{b}" for a, b in bundle.sensitivity.changed_pairs
            )
            out.append(f"- order flips: {pairs}")
        out.append("")
        rows = [
            [item, _f3(lo), _f3(hi), _f3(point)]
            for item, (lo, hi, point) in bundle.sensitivity.envelope.items()
        ]
        out += _table(["Item", "Lower", "Upper", "Point"], rows)
        out.append("")

    return "\n".join(out)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        # shortest round-trip repr of a plain float is platform-stable
        writer.writerow(
            [repr(float(v)) if isinstance(v, float) else v for v in row]
        )
    return buf.getvalue()


def _weight_series(
    weights: dict[str, float], bounds: dict[str, tuple[float, float]]
) -> list[list]:
    rows = []
    for item, point in weights.items():
        lo, hi = bounds.get(item, (point, point))
        rows.append([item, float(lo), float(hi), float(point)])
    return rows


def render_csv(bundle: ReportBundle, section: str) -> str:
    """Full-precision CSV for one section; raises when the section was not
    produced by the run."""
    if section == "descriptive":
        if bundle.descriptive is None:
            raise SectionAbsent("descriptive section not present")
        return _csv_text(
            ["criterion", "n", "min", "max", "mean", "std"],
            [
                [r.criterion.code, r.n, r.min, r.max, r.mean, r.std]
                for r in bundle.descriptive
            ],
        )
    if section == "center_distances":
        if bundle.center_distances is None:
            raise SectionAbsent("center_distances section not present")
        d = bundle.center_distances.distances
        k = d.shape[0]
        return _csv_text(
            ["cluster"] + [str(j + 1) for j in range(k)],
            [[i + 1] + [float(d[i, j]) for j in range(k)] for i in range(k)],
        )
    if section == "anova":
        if bundle.anova is None:
            raise SectionAbsent("anova section not present")
        return _csv_text(
            ["criterion", "cluster_ms", "cluster_df", "error_ms", "error_df",
             "f_stat", "significance"],
            [
                [r.criterion.code, r.cluster_ms, r.cluster_df, r.error_ms,
                 r.error_df, r.f_stat, r.significance]
                for r in bundle.anova
            ],
        )
    if section == "clusters":
        if bundle.cluster_table is None:
            raise SectionAbsent("clusters section not present")
        rows = []
        for factor, concepts in bundle.cluster_table.items():
            for concept in concepts:
                rows.append([factor, concept])
        return _csv_text(["factor", "concept"], rows)
    if section == "fig5":
        if bundle.criterion_weights is None:
            raise SectionAbsent("fig5 section not present")
        return _csv_text(
            ["item", "lower", "upper", "point"],
            _weight_series(bundle.criterion_weights, bundle.criterion_bounds),
        )
    if section == "fig6":
        if bundle.factor_weights is None:
            raise SectionAbsent("fig6 section not present")
        return _csv_text(
            ["item", "lower", "upper", "point"],
            _weight_series(bundle.factor_weights, bundle.factor_bounds),
        )
    if section == "fig7":
        if bundle.sensitivity is None:
            raise SectionAbsent("fig7 section not present")
        return _csv_text(
            ["item", "lower", "upper", "point"],
            [
                [item, float(lo), float(hi), float(point)]
                for item, (lo, hi, point) in bundle.sensitivity.envelope.items()
            ],
        )
    if section == "uncertainty":
        if bundle.uncertainty is None:
            raise SectionAbsent("uncertainty section not present")
        return _csv_text(
            ["item", "kind", "lower", "upper", "point", "delta", "sigma",
             "cv_percent", "threshold", "verdict"],
            [
                [r.item, r.kind, r.lower, r.upper, r.point, r.delta, r.sigma,
                 "" if r.cv_percent is None else r.cv_percent,
                 r.threshold, r.verdict]
                for r in bundle.uncertainty
            ],
        )
    raise SectionAbsent(f"unknown section {section!r}")


def available_sections(bundle: ReportBundle) -> list[str]:
    out = []
    for section in CSV_SECTIONS:
        try:
            render_csv(bundle, section)
        except SectionAbsent:
            continue
        out.append(section)
    return out


def write_bundle(bundle: ReportBundle, out_dir) -> Path:
    """Write ``report.md``, ``tables/*.csv`` and ``provenance.json``.

    Everything is staged in a temporary sibling directory and moved into
    place only on success, so a failed run never leaves a partial output
    directory behind.
    """
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(
        tempfile.mkdtemp(prefix=out_dir.name + ".tmp-", dir=out_dir.parent)
    )
    try:
        (staging / "tables").mkdir()
        md = render_markdown(bundle)
        (staging / "report.md").write_bytes(md.encode("utf-8"))
        for section in available_sections(bundle):
            text = render_csv(bundle, section)
            (staging / "tables" / f"{section}.csv").write_bytes(
                text.encode("utf-8")
            )
        prov = json.dumps(bundle.provenance, sort_keys=True, indent=2)
        (staging / "provenance.json").write_bytes((prov + "\n").encode("utf-8"))
        if out_dir.exists():
            shutil.rmtree(out_dir)
        os.rename(staging, out_dir)
    except Exception:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return out_dir
