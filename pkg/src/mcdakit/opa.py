"""Ordinal priority weighting.

Expert rank profiles become one linear program: maximize Z subject to, for
every (expert, criterion) block with items ordered best-first,

    Z <= r_e * r_c * r * (w at rank r - w at rank r+1)   for r = 1..m-1
    Z <= r_e * r_c * m * (w at rank m)

plus one normalization over the whole weight tensor (all weights sum to 1,
weights non-negative). Factor, criterion and expert weights are the three
marginals of the optimal tensor.

Z is kept non-negative: any feasible assignment with all weights positive
already makes Z positive, so the cut never changes the optimum but spares
the free-variable split. Tests assert the equivalence against the split
form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from sklearn.base import BaseEstimator

from .errors import InconsistentProfiles, NumericalError, ValidationError
from .model import RankProfile
from .simplex import LinearProgram, LpSolution, SolverConfig, solve

MARGINAL_TOL = 1e-9
TIE_TOL = 1e-9


@dataclass(frozen=True)
class WeightSolution:
    """Optimal weight tensor with its three marginals.

    ``tensor[i, j, k]`` is the weight of item ``items[k]`` on criterion
    ``criteria[j]`` according to expert ``experts[i]``. All marginals sum
    to one.
    """

    experts: tuple[int, ...]
    criteria: tuple[str, ...]
    items: tuple[str, ...]
    tensor: np.ndarray
    z: float
    factor_weights: dict[str, float]
    criterion_weights: dict[str, float]
    expert_weights: dict[int, float]


@dataclass(frozen=True)
class RankedItem:
    item: str
    weight: float
    tied: bool


def _check_panel(profiles: Sequence[RankProfile]):
    if not profiles:
        raise ValidationError("at least one rank profile is required")
    ids = [p.expert_id for p in profiles]
    if len(set(ids)) != len(ids):
        raise InconsistentProfiles(f"duplicate expert ids: {sorted(ids)}")
    first = profiles[0]
    for prof in profiles[1:]:
        if set(prof.criterion_ranks) != set(first.criterion_ranks):
            raise InconsistentProfiles(
                f"expert {prof.expert_id} ranks criteria "
                f"{sorted(prof.criterion_ranks)} but expert {first.expert_id} "
                f"ranks {sorted(first.criterion_ranks)}"
            )
        if prof.items != first.items:
            raise InconsistentProfiles(
                f"expert {prof.expert_id} ranks items {list(prof.items)} but "
                f"expert {first.expert_id} ranks {list(first.items)}"
            )


def _axes(profiles: Sequence[RankProfile]):
    experts = sorted(p.expert_id for p in profiles)
    by_id = {p.expert_id: p for p in profiles}
    # criteria keep the first profile's declaration order
    criteria = list(by_id[experts[0]].criterion_ranks)
    items = list(by_id[experts[0]].items)
    return experts, by_id, criteria, items


def build_opa_lp(
    profiles: Sequence[RankProfile], z_nonnegative: bool = True
) -> LinearProgram:
    """Assemble the prioritization LP for a panel of rank profiles.

    Variables are Z followed by one weight per (expert, criterion, item);
    there is one ordinal constraint per (expert, criterion, rank) and a
    single normalization equality.
    """
    _check_panel(profiles)
    experts, by_id, criteria, items = _axes(profiles)
    p, n, m = len(experts), len(criteria), len(items)

    n_vars = 1 + p * n * m
    names = ["Z"]
    index: dict[tuple[int, str, str], int] = {}
    for expert in experts:
        for crit in criteria:
            for item in items:
                index[(expert, crit, item)] = len(names)
                names.append(f"w[{expert}][{crit}][{item}]")

    constraints: list[tuple[np.ndarray, str, float]] = []
    for expert in experts:
        prof = by_id[expert]
        for crit in criteria:
            scale = float(prof.expert_rank * prof.criterion_ranks[crit])
            ordering = prof.item_ranks[crit]
            for r in range(1, m):
                row = np.zeros(n_vars)
                row[0] = 1.0
                row[index[(expert, crit, ordering[r - 1])]] = -scale * r
                row[index[(expert, crit, ordering[r])]] = scale * r
                constraints.append((row, "<=", 0.0))
            row = np.zeros(n_vars)
            row[0] = 1.0
            row[index[(expert, crit, ordering[m - 1])]] = -scale * m
            constraints.append((row, "<=", 0.0))

    total = np.ones(n_vars)
    total[0] = 0.0
    constraints.append((total, "=", 1.0))

    objective = np.zeros(n_vars)
    objective[0] = 1.0
    bounds: list[tuple[float | None, float | None]] = [(0.0, None)] * n_vars
    if not z_nonnegative:
        bounds[0] = (None, None)
    return LinearProgram("max", objective, constraints, bounds, names)


def solve_opa(
    profiles: Sequence[RankProfile],
    config: SolverConfig | None = None,
    z_nonnegative: bool = True,
) -> WeightSolution:
    """Solve the prioritization LP and aggregate the weight marginals."""
    lp = build_opa_lp(profiles, z_nonnegative=z_nonnegative)
    sol: LpSolution = solve(lp, config)
    if sol.status != "optimal":
        # every strict permutation yields a feasible positive-weight point
        raise NumericalError(
            f"prioritization LP unexpectedly {sol.status}; this indicates an "
            f"internal solver bug"
        )
    experts, _, criteria, items = _axes(profiles)
    p, n, m = len(experts), len(criteria), len(items)
    tensor = sol.x[1:].reshape(p, n, m).copy()
    # nonbasic weights are exact zeros; basic ones may carry round-off
    tensor[(tensor < 0) & (tensor > -MARGINAL_TOL)] = 0.0
    if tensor.min() < 0:
        raise NumericalError(f"negative weight in solution: {tensor.min()}")
    total = float(tensor.sum())
    if abs(total - 1.0) > MARGINAL_TOL:
        raise NumericalError(f"weight tensor sums to {total}, expected 1")

    factor = {it: float(tensor[:, :, k].sum()) for k, it in enumerate(items)}
    criterion = {c: float(tensor[:, j, :].sum()) for j, c in enumerate(criteria)}
    expert = {e: float(tensor[i, :, :].sum()) for i, e in enumerate(experts)}
    return WeightSolution(
        experts=tuple(experts),
        criteria=tuple(criteria),
        items=tuple(items),
        tensor=tensor,
        z=float(sol.objective_value),
        factor_weights=factor,
        criterion_weights=criterion,
        expert_weights=expert,
    )


def rank_items(weights: dict[str, float] | WeightSolution) -> list[RankedItem]:
    """Order items by weight descending; equal weights break ties by item id
    ascending and are flagged."""
    if isinstance(weights, WeightSolution):
        weights = weights.factor_weights
    ordered = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))
    out: list[RankedItem] = []
    pos = 0
    while pos < len(ordered):
        end = pos + 1
        while end < len(ordered) and abs(ordered[end][1] - ordered[pos][1]) <= TIE_TOL:
            end += 1
        tied = end - pos > 1
        for item, w in ordered[pos:end]:
            out.append(RankedItem(item=item, weight=w, tied=tied))
        pos = end
    return out


class OrdinalPrioritizer(BaseEstimator):
    """Estimator wrapper around :func:`solve_opa`.

    ``fit`` takes a sequence of rank profiles and exposes the weight
    marginals and the ranked item list as attributes.
    """

    def __init__(self, config: SolverConfig | None = None):
        self.config = config

    def fit(self, profiles: Sequence[RankProfile], y=None):
        self.solution_ = solve_opa(profiles, config=self.config)
        self.factor_weights_ = self.solution_.factor_weights
        self.criterion_weights_ = self.solution_.criterion_weights
        self.expert_weights_ = self.solution_.expert_weights
        self.z_ = self.solution_.z
        self.ranking_ = rank_items(self.solution_)
        return self
