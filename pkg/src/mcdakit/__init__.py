"""mcdakit: two-stage multi-criteria decision analysis.

Stage 1 groups expert-rated concepts with seeded k-means; stage 2 turns
ordinal expert rankings into cardinal weights through a max-Z linear
program, with uncertainty and sensitivity analysis on top. Reports render
deterministically as Markdown plus full-precision CSV.
"""

__version__ = "0.1.0"

from .errors import McdaError, NumericalError, ValidationError
from .kmeans import (
    CenterDistanceMatrix,
    ClusterSolution,
    KMeansClusterer,
    assign,
    center_distances,
    init_centroids,
    lloyd,
    update_centroids,
    variance_form_wcss,
)
from .model import (
    EVALUATION_CRITERIA,
    NIST_CRITERIA,
    Concept,
    CriterionId,
    RankProfile,
    RatingMatrix,
    SurveyRecord,
    aggregate_ratings,
    load_concepts,
    parse_ranks,
    parse_ratings,
    serialize_ranks,
    serialize_ratings,
)
from .opa import (
    OrdinalPrioritizer,
    RankedItem,
    WeightSolution,
    build_opa_lp,
    rank_items,
    solve_opa,
)
from .report import ReportBundle, render_csv, render_markdown, write_bundle
from .robustness import (
    SensitivityReport,
    UncertaintyRow,
    per_expert_weights,
    sensitivity_analysis,
    uncertainty_table,
)
from .simplex import (
    LinearProgram,
    LpSolution,
    SolverConfig,
    format_lp,
    solve,
)
from .stats import (
    AnovaRow,
    ConcordanceReport,
    DescriptiveRow,
    PrincipalComponents,
    anova,
    concordance_report,
    descriptive_stats,
    f_significance,
    jacobi_eigh,
    kendalls_w,
    pca_project,
)

__all__ = [
    "__version__",
    "McdaError",
    "ValidationError",
    "NumericalError",
    "Concept",
    "CriterionId",
    "SurveyRecord",
    "RatingMatrix",
    "RankProfile",
    "NIST_CRITERIA",
    "EVALUATION_CRITERIA",
    "parse_ratings",
    "aggregate_ratings",
    "parse_ranks",
    "serialize_ratings",
    "serialize_ranks",
    "load_concepts",
    "DescriptiveRow",
    "AnovaRow",
    "ConcordanceReport",
    "descriptive_stats",
    "anova",
    "f_significance",
    "kendalls_w",
    "concordance_report",
    "pca_project",
    "jacobi_eigh",
    "PrincipalComponents",
    "ClusterSolution",
    "CenterDistanceMatrix",
    "KMeansClusterer",
    "init_centroids",
    "assign",
    "update_centroids",
    "lloyd",
    "center_distances",
    "variance_form_wcss",
    "LinearProgram",
    "LpSolution",
    "SolverConfig",
    "solve",
    "format_lp",
    "WeightSolution",
    "RankedItem",
    "OrdinalPrioritizer",
    "build_opa_lp",
    "solve_opa",
    "rank_items",
    "UncertaintyRow",
    "SensitivityReport",
    "per_expert_weights",
    "uncertainty_table",
    "sensitivity_analysis",
    "ReportBundle",
    "render_markdown",
    "render_csv",
    "write_bundle",
]
