"""Uncertainty and sensitivity analysis over ordinal-priority solutions.

Uncertainty intervals come from re-solving the prioritization on each expert
alone: the per-item spread of those singleton solves gives the lower/upper
bounds, their population standard deviation the dispersion. Sensitivity
re-solves the full panel under small input edits (drop one expert, or swap
one adjacent pair in one expert's ranking) and reports the weight envelope
and whether the item ordering ever changes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import math

from .errors import InsufficientPanel, RaterCountTooSmall
from .model import RankProfile
from .opa import WeightSolution, rank_items, solve_opa
from .simplex import SolverConfig

SENSITIVITY_MODES = ("leave-one-out", "adjacent-swap", "both")


@dataclass(frozen=True)
class UncertaintyRow:
    item: str
    kind: str  # "criterion" or "factor"
    lower: float
    upper: float
    point: float
    delta: float
    sigma: float
    cv_percent: float | None
    threshold: float
    verdict: str  # "pass" when delta <= threshold (inclusive)


@dataclass(frozen=True)
class SensitivityReport:
    scenarios: tuple[tuple[str, dict[str, float]], ...]
    envelope: dict[str, tuple[float, float, float]]  # item -> (min, max, point)
    rank_stable: bool
    changed_pairs: tuple[tuple[str, str], ...]


def per_expert_weights(
    profiles: Sequence[RankProfile],
    config: SolverConfig | None = None,
) -> dict[int, WeightSolution]:
    """Solve the prioritization separately for each expert."""
    if len(profiles) < 2:
        raise InsufficientPanel(
            f"need at least 2 experts, got {len(profiles)}"
        )
    return {
        prof.expert_id: solve_opa([prof], config=config)
        for prof in sorted(profiles, key=lambda p: p.expert_id)
    }


def coefficient_of_variation(sigma: float, point: float) -> float | None:
    """100 * sigma / point; undefined (None) when the point estimate is 0."""
    if point == 0:
        return None
    return 100.0 * sigma / point


def _population_std(values: Sequence[float]) -> float:
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def make_uncertainty_row(
    item: str,
    kind: str,
    per_expert: Sequence[float],
    point: float,
    threshold: float,
) -> UncertaintyRow:
    """Assemble one uncertainty row; the verdict is inclusive
    (delta == threshold passes)."""
    lower = min(per_expert)
    upper = max(per_expert)
    delta = upper - lower
    sigma = _population_std(per_expert)
    return UncertaintyRow(
        item=item,
        kind=kind,
        lower=lower,
        upper=upper,
        point=point,
        delta=delta,
        sigma=sigma,
        cv_percent=coefficient_of_variation(sigma, point),
        threshold=threshold,
        verdict="pass" if delta <= threshold else "fail",
    )


def uncertainty_table(
    profiles: Sequence[RankProfile],
    panel_solution: WeightSolution,
    threshold_override: float | None = None,
    config: SolverConfig | None = None,
) -> list[UncertaintyRow]:
    """Interval table for criteria and factors.

    Bounds are the min/max of the singleton per-expert solves, the point
    estimate is the full-panel weight, sigma is the population standard
    deviation. The default threshold is 1/n within each family (criteria,
    factors); ``threshold_override`` replaces both.
    """
    singles = per_expert_weights(profiles, config=config)
    ordered = [singles[e] for e in sorted(singles)]
    rows: list[UncertaintyRow] = []
    crit_threshold = (
        threshold_override
        if threshold_override is not None
        else 1.0 / len(panel_solution.criteria)
    )
    for crit in panel_solution.criteria:
        rows.append(
            make_uncertainty_row(
                item=crit,
                kind="criterion",
                per_expert=[s.criterion_weights[crit] for s in ordered],
                point=panel_solution.criterion_weights[crit],
                threshold=crit_threshold,
            )
        )
    item_threshold = (
        threshold_override
        if threshold_override is not None
        else 1.0 / len(panel_solution.items)
    )
    for item in panel_solution.items:
        rows.append(
            make_uncertainty_row(
                item=item,
                kind="factor",
                per_expert=[s.factor_weights[item] for s in ordered],
                point=panel_solution.factor_weights[item],
                threshold=item_threshold,
            )
        )
    return rows


def _swap_adjacent(profile: RankProfile, criterion: str, rank: int) -> RankProfile:
    """Copy of ``profile`` with the items at ``rank`` and ``rank + 1`` of one
    criterion exchanged."""
    ordering = list(profile.item_ranks[criterion])
    ordering[rank - 1], ordering[rank] = ordering[rank], ordering[rank - 1]
    new_ranks = dict(profile.item_ranks)
    new_ranks[criterion] = tuple(ordering)
    return dataclasses.replace(profile, item_ranks=new_ranks)


def sensitivity_analysis(
    profiles: Sequence[RankProfile],
    mode: str = "both",
    config: SolverConfig | None = None,
) -> SensitivityReport:
    """Re-solve under small input perturbations and report stability.

    Scenario labels are canonical and sorted into a fixed order, so the
    report does not depend on evaluation order.
    """
    if mode not in SENSITIVITY_MODES:
        raise InsufficientPanel(
            f"unknown sensitivity mode {mode!r}; use one of {SENSITIVITY_MODES}"
        )
    profiles = sorted(profiles, key=lambda p: p.expert_id)
    baseline = solve_opa(profiles, config=config)
    items = baseline.items
    m = len(items)

    wanted_loo = mode in ("leave-one-out", "both")
    wanted_swap = mode in ("adjacent-swap", "both")
    if wanted_loo and len(profiles) < 2:
        raise InsufficientPanel(
            "leave-one-out sensitivity needs at least 2 experts"
        )
    if wanted_swap and m < 2:
        raise InsufficientPanel(
            "adjacent-swap sensitivity needs at least 2 items"
        )

    scenarios: dict[str, dict[str, float]] = {
        "baseline": dict(baseline.factor_weights)
    }
    if wanted_loo:
        for prof in profiles:
            rest = [p for p in profiles if p.expert_id != prof.expert_id]
            sol = solve_opa(rest, config=config)
            scenarios[f"loo:e{prof.expert_id}"] = dict(sol.factor_weights)
    if wanted_swap:
        for idx, prof in enumerate(profiles):
            for crit in prof.criterion_ranks:
                for rank in range(1, m):
                    edited = list(profiles)
                    edited[idx] = _swap_adjacent(prof, crit, rank)
                    sol = solve_opa(edited, config=config)
                    label = f"swap:e{prof.expert_id}:{crit}:r{rank}"
                    scenarios[label] = dict(sol.factor_weights)

    ordered_labels = sorted(scenarios)
    envelope = {
        item: (
            min(scenarios[lab][item] for lab in ordered_labels),
            max(scenarios[lab][item] for lab in ordered_labels),
            baseline.factor_weights[item],
        )
        for item in items
    }

    base_order = [r.item for r in rank_items(baseline.factor_weights)
                  if not r.tied]
    rank_stable = True
    changed: set[tuple[str, str]] = set()
    base_full = [r.item for r in rank_items(baseline.factor_weights)]
    base_pos = {item: i for i, item in enumerate(base_full)}
    for lab in ordered_labels:
        ranked = rank_items(scenarios[lab])
        order = [r.item for r in ranked if not r.tied]
        if order != base_order:
            rank_stable = False
        pos = {r.item: i for i, r in enumerate(ranked)}
        for a in items:
            for b in items:
                if a < b and (pos[a] - pos[b]) * (base_pos[a] - base_pos[b]) < 0:
                    changed.add((a, b))
    return SensitivityReport(
        scenarios=tuple((lab, scenarios[lab]) for lab in ordered_labels),
        envelope=envelope,
        rank_stable=rank_stable,
        changed_pairs=tuple(sorted(changed)),
    )
