"""Dense two-phase simplex for small linear programs.

The tableau is stored densely; problems here stay around a hundred variables
and constraints, so clarity wins over sparse machinery. Phase 1 drives
artificial variables to zero, phase 2 optimizes the real objective. The
entering rule is most-negative reduced cost, switching to Bland's rule after
a run of degenerate pivots so the solver always terminates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NumericalBreakdown, ValidationError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class SolverConfig:
    """Numerical tolerances, echoed into report provenance."""

    pivot_tol: float = 1e-9
    feasibility_tol: float = 1e-8
    phase1_tol: float = 1e-9
    degenerate_pivot_limit: int = 50
    max_pivots: int = 50_000


DEFAULT_CONFIG = SolverConfig()


@dataclass
class LinearProgram:
    """``sense`` objective over ``constraints`` with per-variable bounds.

    Each constraint is ``(coefficients, relation, rhs)`` with relation one of
    ``<=``, ``=``, ``>=``. Bounds default to ``(0, None)``; a lower bound of
    ``None`` makes the variable free.
    """

    sense: str
    objective: Sequence[float]
    constraints: list[tuple[Sequence[float], str, float]] = field(default_factory=list)
    bounds: list[tuple[float | None, float | None]] | None = None
    names: list[str] | None = None

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise ValidationError(f"sense must be 'max' or 'min', got {self.sense!r}")
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.ndim != 1 or self.objective.size == 0:
            raise ValidationError("objective must be a non-empty vector")
        n = self.objective.size
        for idx, (coeffs, rel, rhs) in enumerate(self.constraints):
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.shape != (n,):
                raise ValidationError(
                    f"constraint {idx} has width {coeffs.size}, expected {n}"
                )
            if rel not in ("<=", "=", ">="):
                raise ValidationError(f"constraint {idx}: bad relation {rel!r}")
            if not math.isfinite(rhs):
                raise ValidationError(f"constraint {idx}: rhs must be finite")
            self.constraints[idx] = (coeffs, rel, float(rhs))
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        if len(self.bounds) != n:
            raise ValidationError("bounds length must match objective width")
        if self.names is not None and len(self.names) != n:
            raise ValidationError("names length must match objective width")

    @property
    def n_vars(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray | None
    objective_value: float | None
    iterations: int


def format_lp(lp: LinearProgram) -> str:
    """Human-readable dump, one constraint per line, for external checking."""
    names = lp.names or [f"x{j + 1}" for j in range(lp.n_vars)]

    def term(c, name):
        return f"{c:+g} {name}"

    lines = [f"{lp.sense} " + " ".join(term(c, n) for c, n in zip(lp.objective, names))]
    lines.append("subject to")
    for coeffs, rel, rhs in lp.constraints:
        body = " ".join(
            term(c, n) for c, n in zip(coeffs, names) if c != 0.0
        ) or "0"
        lines.append(f"  {body} {rel} {rhs:g}")
    lines.append("bounds")
    for name, (lo, up) in zip(names, lp.bounds):
        if lo is None and up is None:
            lines.append(f"  {name} free")
        elif up is None:
            lines.append(f"  {name} >= {lo:g}")
        elif lo is None:
            lines.append(f"  {name} <= {up:g}")
        else:
            lines.append(f"  {lo:g} <= {name} <= {up:g}")
    return "\n".join(lines) + "\n"


class _Tableau:
    """Mutable simplex state for one standard-form problem (max c.y, Ay=b, y>=0)."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: np.ndarray,
                 config: SolverConfig):
        self.m, self.n = A.shape
        self.T = np.hstack([A, b[:, None]])
        self.basis = basis.copy()
        self.config = config
        self.pivots = 0

    def price_out(self, c: np.ndarray) -> np.ndarray:
        """Return the objective row (z_j - c_j | objective value) for basis."""
        row = np.append(-c, 0.0)
        for i, bi in enumerate(self.basis):
            if c[bi] != 0.0:
                row += c[bi] * self.T[i]
        return row

    def run(self, c: np.ndarray, allowed: np.ndarray) -> str:
        """Optimize max c.y over the current basis; ``allowed`` masks columns
        eligible to enter (artificials are locked out in phase 2)."""
        cfg = self.config
        obj = self.price_out(c)
        degenerate_streak = 0
        bland = False
        while True:
            if self.pivots > cfg.max_pivots:
                raise NumericalBreakdown("pivot limit exceeded")
            reduced = obj[:-1]
            candidates = np.where(allowed & (reduced < -cfg.pivot_tol))[0]
            if candidates.size == 0:
                return OPTIMAL
            if bland:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmin(reduced[candidates])])
            col = self.T[:, j]
            pos = col > cfg.pivot_tol
            if not np.any(pos):
                if np.any(col > cfg.pivot_tol * 1e-3):
                    raise NumericalBreakdown(
                        f"no admissible pivot above tolerance in column {j}"
                    )
                return UNBOUNDED
            ratios = np.full(self.m, np.inf)
            ratios[pos] = self.T[pos, -1] / col[pos]
            best = ratios.min()
            tied = np.where(ratios <= best + cfg.pivot_tol)[0]
            if bland:
                # leave the row whose basic variable has the smallest index
                r = int(tied[np.argmin(self.basis[tied])])
            else:
                r = int(tied[0])
            entering_cost = obj[j]
            self._pivot(r, j)
            obj -= entering_cost * self.T[r]
            self.pivots += 1
            if best <= cfg.pivot_tol:
                degenerate_streak += 1
                if degenerate_streak >= cfg.degenerate_pivot_limit:
                    bland = True
            else:
                degenerate_streak = 0
                bland = False

    def _pivot(self, r: int, j: int):
        piv = self.T[r, j]
        if abs(piv) <= self.config.pivot_tol:
            raise NumericalBreakdown(f"pivot element {piv} below tolerance")
        self.T[r] /= piv
        col = self.T[:, j].copy()
        col[r] = 0.0
        self.T -= np.outer(col, self.T[r])
        # re-fix the pivot column exactly to a unit vector
        self.T[:, j] = 0.0
        self.T[r, j] = 1.0
        self.basis[r] = j

    def solution(self, n_cols: int) -> np.ndarray:
        y = np.zeros(n_cols)
        for i, bi in enumerate(self.basis):
            if bi < n_cols:
                y[bi] = self.T[i, -1]
        return y


def solve(lp: LinearProgram, config: SolverConfig | None = None) -> LpSolution:
    """Solve ``lp`` with the two-phase dense simplex.

    Returns a solution with status ``optimal``, ``infeasible`` or
    ``unbounded``. On ``optimal`` the reported x satisfies every constraint
    within the configured feasibility tolerance.
    """
    cfg = config or DEFAULT_CONFIG
    n = lp.n_vars

    # Transform to standard form: shift finite lower bounds to zero, split
    # free variables into positive and negative parts, turn upper bounds
    # into extra rows.
    col_of: list[tuple[int, int | None]] = []  # (plus column, minus column)
    shifts = np.zeros(n)
    n_cols = 0
    for j, (lo, up) in enumerate(lp.bounds):
        if lo is None:
            col_of.append((n_cols, n_cols + 1))
            n_cols += 2
        else:
            shifts[j] = lo
            col_of.append((n_cols, None))
            n_cols += 1
        if lo is not None and up is not None and up < lo:
            return LpSolution(INFEASIBLE, None, None, 0)

    rows: list[np.ndarray] = []
    rels: list[str] = []
    rhs: list[float] = []

    def expand(coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros(n_cols)
        for j, (jp, jm) in enumerate(col_of):
            out[jp] = coeffs[j]
            if jm is not None:
                out[jm] = -coeffs[j]
        return out

    for coeffs, rel, b in lp.constraints:
        rows.append(expand(coeffs))
        rels.append(rel)
        rhs.append(b - float(coeffs @ shifts))
    for j, (lo, up) in enumerate(lp.bounds):
        if up is not None:
            unit = np.zeros(n)
            unit[j] = 1.0
            rows.append(expand(unit))
            rels.append("<=")
            rhs.append(up - (lo if lo is not None else 0.0))

    obj = expand(lp.objective)
    if lp.sense == "min":
        obj = -obj

    m = len(rows)
    if m == 0:
        # no constraints at all: optimum is at the origin unless the
        # objective can grow along some coordinate
        grows = np.any(obj > 0)
        if grows:
            return LpSolution(UNBOUNDED, None, None, 0)
        x = shifts.copy()
        value = float(lp.objective @ x)
        return LpSolution(OPTIMAL, x, value, 0)

    A = np.vstack(rows)
    b = np.asarray(rhs, dtype=float)
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    flip = {"<=": ">=", ">=": "<=", "=": "="}
    rels = [flip[rel] if neg[i] else rel for i, rel in enumerate(rels)]

    # slack for <=, surplus for >=; artificial for >= and =
    slack_cols = []
    art_rows = []
    for i, rel in enumerate(rels):
        if rel == "<=":
            slack_cols.append((i, 1.0))
        elif rel == ">=":
            slack_cols.append((i, -1.0))
            art_rows.append(i)
        else:
            art_rows.append(i)

    n_slack = len(slack_cols)
    n_art = len(art_rows)
    full = np.zeros((m, n_cols + n_slack + n_art))
    full[:, :n_cols] = A
    basis = np.full(m, -1, dtype=int)
    for s, (i, sign) in enumerate(slack_cols):
        full[i, n_cols + s] = sign
        if sign > 0:
            basis[i] = n_cols + s
    for a, i in enumerate(art_rows):
        full[i, n_cols + n_slack + a] = 1.0
        basis[i] = n_cols + n_slack + a

    tab = _Tableau(full, b, basis, cfg)
    total_cols = n_cols + n_slack + n_art
    art_mask = np.zeros(total_cols, dtype=bool)
    art_mask[n_cols + n_slack:] = True

    if n_art:
        c1 = np.zeros(total_cols)
        c1[art_mask] = -1.0
        status = tab.run(c1, allowed=np.ones(total_cols, dtype=bool))
        if status != OPTIMAL:
            raise NumericalBreakdown("phase 1 terminated abnormally")
        art_sum = sum(
            tab.T[i, -1] for i, bi in enumerate(tab.basis) if art_mask[bi]
        )
        if art_sum > cfg.phase1_tol:
            return LpSolution(INFEASIBLE, None, None, tab.pivots)
        # pivot remaining artificial variables out of the basis; a row with
        # no eligible pivot is redundant and can be zeroed by the artificial
        for i in range(tab.m):
            if art_mask[tab.basis[i]]:
                row = tab.T[i, :-1]
                eligible = np.where(~art_mask & (np.abs(row) > cfg.pivot_tol))[0]
                if eligible.size:
                    tab._pivot(i, int(eligible[0]))
                    tab.pivots += 1

    c2 = np.zeros(total_cols)
    c2[:n_cols] = obj
    status = tab.run(c2, allowed=~art_mask)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, None, tab.pivots)

    y = tab.solution(n_cols)
    x = shifts.copy()
    for j, (jp, jm) in enumerate(col_of):
        x[j] += y[jp] - (y[jm] if jm is not None else 0.0)
    value = float(lp.objective @ x)

    _check_feasible(lp, x, cfg)
    return LpSolution(OPTIMAL, x, value, tab.pivots)


def _check_feasible(lp: LinearProgram, x: np.ndarray, cfg: SolverConfig):
    for idx, (coeffs, rel, b) in enumerate(lp.constraints):
        lhs = float(coeffs @ x)
        ok = (
            lhs <= b + cfg.feasibility_tol
            if rel == "<="
            else lhs >= b - cfg.feasibility_tol
            if rel == ">="
            else abs(lhs - b) <= cfg.feasibility_tol
        )
        if not ok:
            raise NumericalBreakdown(
                f"optimal point violates constraint {idx}: {lhs} {rel} {b}"
            )
    for j, (lo, up) in enumerate(lp.bounds):
        if lo is not None and x[j] < lo - cfg.feasibility_tol:
            raise NumericalBreakdown(f"variable {j} below its lower bound")
        if up is not None and x[j] > up + cfg.feasibility_tol:
            raise NumericalBreakdown(f"variable {j} above its upper bound")
