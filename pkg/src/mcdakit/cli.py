"""Batch command line interface.

Subcommands: ``cluster`` (stage 1), ``prioritize`` (stage 2), ``pipeline``
(both stages with a factor-membership table connecting them) and ``report``
(re-print sections of a finished run). Exit codes: 0 success, 2 invalid
input, 3 internal or numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .errors import InsufficientPanel, McdaError, ValidationError
from .kmeans import center_distances, lloyd
from .model import (
    NIST_CRITERIA,
    aggregate_ratings,
    load_concepts,
    parse_ranks,
    parse_ratings,
)
from .opa import build_opa_lp, rank_items, solve_opa
from .report import ReportBundle, write_bundle
from .robustness import (
    SENSITIVITY_MODES,
    sensitivity_analysis,
    uncertainty_table,
)
from .simplex import DEFAULT_CONFIG, format_lp
from .stats import JACOBI_TOL, anova, concordance_report, descriptive_stats, pca_project


def _bundled(name: str) -> Path:
    # package data ships on the filesystem, so the traversable is a real path
    return Path(str(resources.files("mcdakit").joinpath(f"data/{name}")))


def _read_input(path: Path, what: str) -> bytes:
    if not path.is_file():
        raise ValidationError(f"{what} file not found: {path}")
    try:
        return path.read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read {what} file {path}: {exc}")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _format_of(path: Path) -> str:
    return "json" if path.suffix.lower() == ".json" else "csv"


def _base_provenance(command: str) -> dict:
    return {
        "tool": f"mcdakit {__version__}",
        "command": command,
        "sigma_convention": "population",
        "tie_break": "lowest-index",
        "solver_pivot_tol": DEFAULT_CONFIG.pivot_tol,
        "solver_feasibility_tol": DEFAULT_CONFIG.feasibility_tol,
        "jacobi_tol": JACOBI_TOL,
    }


def _concept_display(concept_id: int, catalog: dict[int, object]) -> str:
    concept = catalog.get(concept_id)
    if concept is None:
        return f"concept {concept_id}"
    return f"{concept.name} ({concept.notation})"


def _cluster_stage(args, ratings_bytes: bytes, provenance: dict) -> dict:
    """Parse, aggregate, optionally project, cluster, and build the stage-1
    report sections."""
    records = parse_ratings(
        ratings_bytes, _format_of(args.ratings), criteria=NIST_CRITERIA
    )
    matrix = aggregate_ratings(records, criteria=NIST_CRITERIA)

    if args.pca_dims is not None:
        points = pca_project(matrix, args.pca_dims)
    else:
        points = matrix.values
    solution = lloyd(points, args.k, seed=args.seed, max_iter=args.max_iter)
    # carry the concept ids through even when clustering ran on projections
    solution = dataclasses.replace(
        solution,
        assignments={
            cid: solution.assignments[i + 1]
            for i, cid in enumerate(matrix.concept_ids)
        },
        row_ids=matrix.concept_ids,
        seed=args.seed,
    )

    catalog = {c.id: c for c in load_concepts()}
    cluster_table = {
        f"F{c}": [
            _concept_display(cid, catalog) for cid in solution.members(c)
        ]
        for c in range(1, solution.k + 1)
    }

    distances = center_distances(solution.centroids)
    initial = center_distances(solution.initial_centroids)
    sections = {
        "descriptive": descriptive_stats(matrix),
        "center_distances": distances,
        "cluster_table": cluster_table,
    }
    if solution.k >= 2 and matrix.values.shape[0] > solution.k:
        sections["anova"] = anova(matrix, solution.labels)

    provenance.update(
        {
            "k": args.k,
            "seed": args.seed,
            "max_iter": args.max_iter,
            "pca_dims": args.pca_dims,
            "kmeans_iterations": solution.iterations,
            "kmeans_wcss": repr(solution.wcss),
            "initial_center_min_distance": (
                None
                if initial.min_off_diagonal is None
                else repr(initial.min_off_diagonal)
            ),
        }
    )
    return {"solution": solution, "sections": sections}


def _prioritize_stage(args, ranks_bytes: bytes, provenance: dict,
                      items=None) -> dict:
    """Parse rank profiles, solve, and build the stage-2 report sections."""
    profiles = parse_ranks(ranks_bytes, _format_of(args.ranks), items=items)
    solution = solve_opa(profiles)

    if getattr(args, "dump_lp", None):
        lp_text = format_lp(build_opa_lp(profiles))
        Path(args.dump_lp).write_text(lp_text, encoding="utf-8")

    if args.sensitivity_mode == "leave-one-out" and len(profiles) < 2:
        raise InsufficientPanel(
            "leave-one-out sensitivity needs at least 2 experts"
        )
    uncertainty = uncertainty_table(
        profiles, solution, threshold_override=args.threshold
    )
    sensitivity = sensitivity_analysis(profiles, mode=args.sensitivity_mode)
    concordance = concordance_report(profiles)

    ranking = rank_items(solution)
    # full-precision copies of every figure quoted in the markdown body
    concordance_values = {
        crit: repr(w) for crit, w in concordance.per_criterion_w.items()
    }
    if concordance.among_criteria_w is not None:
        concordance_values["among"] = repr(concordance.among_criteria_w)
    provenance.update(
        {
            "experts": len(profiles),
            "threshold_override": args.threshold,
            "sensitivity_mode": args.sensitivity_mode,
            "sensitivity_scenarios": len(sensitivity.scenarios),
            "opa_z": repr(solution.z),
            "top_item": ranking[0].item,
            "concordance": concordance_values,
        }
    )
    sections = {
        "criterion_weights": dict(solution.criterion_weights),
        "factor_weights": dict(solution.factor_weights),
        "uncertainty": uncertainty,
        "sensitivity": sensitivity,
        "concordance": concordance,
        "criterion_bounds": {
            r.item: (r.lower, r.upper)
            for r in uncertainty
            if r.kind == "criterion"
        },
        "factor_bounds": {
            r.item: (r.lower, r.upper) for r in uncertainty if r.kind == "factor"
        },
    }
    return {"solution": solution, "profiles": profiles, "sections": sections}


def cmd_cluster(args) -> int:
    ratings_bytes = _read_input(args.ratings, "ratings")
    provenance = _base_provenance("cluster")
    provenance["input_ratings"] = {
        "name": args.ratings.name,
        "sha256": _sha256(ratings_bytes),
    }
    stage = _cluster_stage(args, ratings_bytes, provenance)
    bundle = ReportBundle(provenance=provenance, **stage["sections"])
    write_bundle(bundle, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_prioritize(args) -> int:
    ranks_bytes = _read_input(args.ranks, "ranks")
    provenance = _base_provenance("prioritize")
    provenance["input_ranks"] = {
        "name": args.ranks.name,
        "sha256": _sha256(ranks_bytes),
    }
    stage = _prioritize_stage(args, ranks_bytes, provenance)
    bundle = ReportBundle(provenance=provenance, **stage["sections"])
    write_bundle(bundle, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_pipeline(args) -> int:
    # fail fast: both inputs must be readable before any work happens
    ratings_bytes = _read_input(args.ratings, "ratings")
    ranks_bytes = _read_input(args.ranks, "ranks")
    provenance = _base_provenance("pipeline")
    provenance["input_ratings"] = {
        "name": args.ratings.name,
        "sha256": _sha256(ratings_bytes),
    }
    provenance["input_ranks"] = {
        "name": args.ranks.name,
        "sha256": _sha256(ranks_bytes),
    }

    stage1 = _cluster_stage(args, ratings_bytes, provenance)
    items = (
        None
        if args.any_items
        else [f"F{c}" for c in range(1, stage1["solution"].k + 1)]
    )
    stage2 = _prioritize_stage(args, ranks_bytes, provenance, items=items)

    sections = dict(stage1["sections"])
    sections.update(stage2["sections"])
    bundle = ReportBundle(provenance=provenance, **sections)
    write_bundle(bundle, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_report(args) -> int:
    run = Path(args.run)
    if not run.is_dir():
        raise ValidationError(f"run directory not found: {run}")
    if args.section is None:
        target = run / "report.md"
        if not target.is_file():
            raise ValidationError(f"no report.md under {run}")
        sys.stdout.write(target.read_text(encoding="utf-8"))
        return 0
    target = run / "tables" / f"{args.section}.csv"
    if not target.is_file():
        raise ValidationError(
            f"section {args.section!r} absent from {run} "
            f"(no {target.name} in tables/)"
        )
    sys.stdout.write(target.read_text(encoding="utf-8"))
    return 0


def _add_cluster_args(p: argparse.ArgumentParser):
    p.add_argument("--ratings", type=Path, default=_bundled("ratings.csv"),
                   help="ratings CSV/JSON (default: bundled example data)")
    p.add_argument("--k", type=int, default=5, help="number of clusters")
    p.add_argument("--seed", type=int, default=42, help="centroid draw seed")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--pca-dims", type=int, default=None,
                   help="project ratings to this many principal axes first")


def _add_prioritize_args(p: argparse.ArgumentParser):
    p.add_argument("--ranks", type=Path, default=_bundled("ranks.csv"),
                   help="ranks CSV/JSON (default: bundled example data)")
    p.add_argument("--threshold", type=float, default=None,
                   help="override the 1/n uncertainty threshold")
    p.add_argument("--sensitivity-mode", choices=SENSITIVITY_MODES,
                   default="both")
    p.add_argument("--dump-lp", type=Path, default=None,
                   help="write the prioritization LP to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcdakit",
        description="Cluster rated concepts and prioritize the resulting "
                    "factors from ordinal expert input.",
    )
    parser.add_argument("--version", action="version",
                        version=f"mcdakit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="stage 1: group rated concepts")
    _add_cluster_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("prioritize", help="stage 2: weight ranked items")
    _add_prioritize_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_prioritize)

    p = sub.add_parser("pipeline", help="both stages, one combined report")
    _add_cluster_args(p)
    _add_prioritize_args(p)
    p.add_argument("--any-items", action="store_true",
                   help="do not require rank items to match cluster factors")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("report", help="print sections of a finished run")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--section", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except McdaError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # malformed input must never crash the process
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
