"""The linear-programming mirror of the switching engine.

An MDP whose policies all funnel into one absorbing zero-reward sink turns
into a max-form primal LP: one equality row per non-sink state, one column
per action available there, with the column of an action at state s holding
+1 at row s minus the action's entry probability at every row.  The
right-hand side is uniformly 1/n.

A policy corresponds to the basis of its chosen columns.  The basis defines
a dual solution equal to the policy's state values, and reduced costs equal
to the appeals, so greedy largest-coefficient pivoting retraces greedy
largest-appeal switching step for step.  ``check_pi_simplex_equivalence``
verifies that correspondence at every iteration, exactly.

The basis inverse is recomputed from scratch at every pivot.  That is
deliberate: no product-form update, no chance of drift, and the instances
are desk-scale.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .mdp import Mdp, Policy, TieBreak, appeals, evaluate_values
from .numerics import Matrix, ONE, ZERO, SingularMatrixError, format_rational, inverse


class LpError(ValueError):
    pass


class NoSinkError(LpError):
    """The designated sink is not an absorbing zero-reward state."""


class SingularBasisError(LpError):
    """A policy's columns are dependent: its policy graph has a trapped cycle."""


class UnboundedDirectionError(LpError):
    """No leaving candidate: cannot happen on a well-formed instance."""


class DegenerateLeavingError(LpError):
    """The ratio test tied: the instance or the converter is wrong."""


class PivotInvariantError(LpError):
    """The leaving column was not the other action at the entering state."""


class EquivalenceViolationError(AssertionError):
    def __init__(self, message: str, report: "EquivalenceReport"):
        super().__init__(message)
        self.report = report


@dataclass
class LinearProgram:
    mdp: Mdp
    sink: int
    rows: list[int]
    row_of: dict[int, int]
    cols: list[int]
    col_of: dict[int, int]
    objective: list[Fraction]
    columns: list[dict[int, Fraction]]
    rhs: list[Fraction]

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def num_cols(self) -> int:
        return len(self.cols)


def mdp_to_primal(mdp: Mdp, sink: int) -> LinearProgram:
    """Max-form flow LP over the non-sink states.

    Every action at the sink must be a probability-1 zero-reward self-loop;
    the sink's row and columns are dropped.
    """
    for aid in mdp.actions_at(sink):
        act = mdp.action(aid)
        if act.transitions != {sink: ONE} or act.reward != 0:
            raise NoSinkError(f"state {mdp.state_names[sink]} is not an absorbing zero-reward sink")
    rows = [s for s in range(mdp.num_states) if s != sink]
    row_of = {s: i for i, s in enumerate(rows)}
    cols = [aid for s in rows for aid in mdp.actions_at(s)]
    col_of = {aid: j for j, aid in enumerate(cols)}
    objective = []
    columns = []
    for aid in cols:
        act = mdp.action(aid)
        column: dict[int, Fraction] = {row_of[act.state]: ONE}
        for target, p in act.transitions.items():
            if target == sink:
                continue
            i = row_of[target]
            column[i] = column.get(i, ZERO) - p
        columns.append({i: v for i, v in column.items() if v})
        objective.append(act.reward)
    n = len(rows)
    rhs = [Fraction(1, n)] * n
    return LinearProgram(mdp, sink, rows, row_of, cols, col_of, objective, columns, rhs)


@dataclass
class Basis:
    lp: LinearProgram
    cols: tuple[int, ...]  # one column index per row, in row order
    matrix: Matrix
    inv: Matrix

    def action_ids(self) -> frozenset[int]:
        return frozenset(self.lp.cols[j] for j in self.cols)

    def basic_solution(self) -> list[Fraction]:
        return self.inv.mul_vec(self.lp.rhs)

    def objective_value(self) -> Fraction:
        x = self.basic_solution()
        return sum(
            (self.lp.objective[j] * x[pos] for pos, j in enumerate(self.cols)),
            start=ZERO,
        )


def _dense_column(lp: LinearProgram, col: int) -> list[Fraction]:
    dense = [ZERO] * lp.num_rows
    for i, v in lp.columns[col].items():
        dense[i] = v
    return dense


def make_basis(lp: LinearProgram, cols: Sequence[int]) -> Basis:
    if len(cols) != lp.num_rows:
        raise LpError(f"basis needs {lp.num_rows} columns, got {len(cols)}")
    entries: list[Fraction] = []
    dense = [_dense_column(lp, j) for j in cols]
    for i in range(lp.num_rows):
        entries.extend(dense[j][i] for j in range(len(cols)))
    matrix = Matrix(lp.num_rows, lp.num_rows, entries)
    try:
        inv = inverse(matrix)
    except SingularMatrixError as exc:
        raise SingularBasisError(f"dependent basis columns: {exc}") from exc
    return Basis(lp, tuple(cols), matrix, inv)


def basis_from_policy(lp: LinearProgram, policy: Policy) -> Basis:
    """The basis of the policy's chosen columns, in row (state) order."""
    cols = []
    for s in lp.rows:
        aid = policy.choice[s]
        if aid not in lp.col_of:
            raise LpError(f"policy's action at state {s} is not an LP column")
        cols.append(lp.col_of[aid])
    return make_basis(lp, cols)


def dual_and_reduced_costs(lp: LinearProgram, basis: Basis) -> tuple[list[Fraction], list[Fraction]]:
    """Dual solution y (per row) and reduced costs (per column) of the basis."""
    c_b = [lp.objective[j] for j in basis.cols]
    y = basis.inv.transpose().mul_vec(c_b)
    reduced = []
    for j in range(lp.num_cols):
        acc = lp.objective[j]
        for i, v in lp.columns[j].items():
            acc -= v * y[i]
        reduced.append(acc)
    return y, reduced


@dataclass
class SimplexStep:
    basis: Basis
    entering: int  # column index
    leaving: int  # column index
    reduced_cost: Fraction


def simplex_dantzig_step(
    lp: LinearProgram,
    basis: Basis,
    tie: TieBreak,
    rng: random.Random | None = None,
) -> SimplexStep | None:
    """One largest-reduced-cost pivot, or None at optimality.

    The ratio test must have a unique minimizer, and the leaving column
    must be the basic action at the entering column's state; both are
    structural facts here, so their failure aborts loudly rather than
    falling back to an anti-cycling rule.
    """
    if rng is None:
        rng = tie.make_rng()
    _, reduced = dual_and_reduced_costs(lp, basis)
    best: Fraction | None = None
    candidates: list[tuple[int, int]] = []
    for j, rc in enumerate(reduced):
        if rc <= 0:
            continue
        if best is None or rc > best:
            best = rc
            candidates = [(lp.mdp.action(lp.cols[j]).state, lp.cols[j])]
        elif rc == best:
            candidates.append((lp.mdp.action(lp.cols[j]).state, lp.cols[j]))
    if best is None:
        return None
    state, aid = tie.select(candidates, rng)
    entering = lp.col_of[aid]

    direction = basis.inv.mul_vec(_dense_column(lp, entering))
    x_b = basis.basic_solution()
    best_ratio: Fraction | None = None
    leaving_pos: int | None = None
    tie_count = 0
    for pos, d in enumerate(direction):
        if d <= 0:
            continue
        ratio = x_b[pos] / d
        if best_ratio is None or ratio < best_ratio:
            best_ratio = ratio
            leaving_pos = pos
            tie_count = 1
        elif ratio == best_ratio:
            tie_count += 1
    if leaving_pos is None:
        raise UnboundedDirectionError("entering column has no positive direction entry")
    if tie_count > 1:
        raise DegenerateLeavingError("ratio test minimizer is not unique")
    leaving = basis.cols[leaving_pos]
    enter_state = lp.mdp.action(aid).state
    leave_state = lp.mdp.action(lp.cols[leaving]).state
    if enter_state != leave_state:
        raise PivotInvariantError(
            f"leaving column lives at state {leave_state}, entering at {enter_state}"
        )
    new_cols = list(basis.cols)
    new_cols[leaving_pos] = entering
    return SimplexStep(make_basis(lp, new_cols), entering, leaving, best)


@dataclass
class EquivalenceReport:
    iterations: list[dict] = field(default_factory=list)
    ok: bool = True
    first_divergence: int | None = None
    pivots: int = 0

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "pivots": self.pivots,
            "first_divergence": self.first_divergence,
            "iterations": self.iterations,
        }


def check_pi_simplex_equivalence(
    mdp: Mdp,
    policy: Policy,
    sink: int,
    *,
    tie: TieBreak | None = None,
    budget: int,
    raise_on_divergence: bool = True,
) -> EquivalenceReport:
    """Drive switching and pivoting in lockstep and compare everything.

    Per iteration: the basis equals the policy's chosen columns, the dual
    solution equals the state values, every reduced cost equals the
    corresponding appeal, and both rules pick the same entering action
    under the shared tie-break.  Exact comparisons throughout.
    """
    if tie is None:
        tie = TieBreak.lowest()
    lp = mdp_to_primal(mdp, sink)
    basis = basis_from_policy(lp, policy)
    rng_pi = tie.make_rng()
    rng_lp = tie.make_rng()
    report = EquivalenceReport()

    from .mdp import dantzig_step

    iteration = 0
    while True:
        if iteration > budget:
            raise LpError(f"no optimum within {budget} pivots")
        values = evaluate_values(mdp, policy)
        gains = appeals(mdp, policy, values)
        y, reduced = dual_and_reduced_costs(lp, basis)
        entry: dict = {"iteration": iteration}
        entry["basis_match"] = basis.action_ids() == frozenset(
            policy.choice[s] for s in lp.rows
        )
        entry["dual_match"] = all(
            y[lp.row_of[s]] == values[s] for s in lp.rows
        ) and values[sink] == 0
        entry["reduced_cost_match"] = all(
            reduced[j] == gains[lp.cols[j]] for j in range(lp.num_cols)
        )

        pi_step = dantzig_step(mdp, policy, tie, rng_pi, values)
        lp_step = simplex_dantzig_step(lp, basis, tie, rng_lp)
        if (pi_step is None) != (lp_step is None):
            entry["same_entering"] = False
        elif pi_step is None:
            entry["same_entering"] = True
        else:
            _, event = pi_step
            assert lp_step is not None
            entry["same_entering"] = (
                lp.cols[lp_step.entering] == event.new_action
                and lp.cols[lp_step.leaving] == event.old_action
                and lp_step.reduced_cost == event.appeal
            )
        entry["ok"] = all(
            entry[k] for k in ("basis_match", "dual_match", "reduced_cost_match", "same_entering")
        )
        report.iterations.append(entry)
        if not entry["ok"] and report.first_divergence is None:
            report.ok = False
            report.first_divergence = iteration
            if raise_on_divergence:
                raise EquivalenceViolationError(
                    f"solvers diverged at iteration {iteration}: {entry}", report
                )
        if pi_step is None or lp_step is None:
            break
        policy = pi_step[0]
        basis = lp_step.basis
        iteration += 1
    report.pivots = iteration
    return report


def lp_to_text(lp: LinearProgram) -> str:
    """Human-readable max-form rendering with exact fraction coefficients."""
    lines = ["Maximize"]
    terms = " + ".join(
        f"{format_rational(c)} x{j}" for j, c in enumerate(lp.objective) if c
    )
    lines.append(f" obj: {terms if terms else '0'}")
    lines.append("Subject To")
    by_row: list[list[str]] = [[] for _ in range(lp.num_rows)]
    for j in range(lp.num_cols):
        for i, v in sorted(lp.columns[j].items()):
            sign = "+" if v > 0 else "-"
            by_row[i].append(f"{sign} {format_rational(abs(v))} x{j}")
    for i, parts in enumerate(by_row):
        lines.append(f" r{i}: {' '.join(parts)} = {format_rational(lp.rhs[i])}")
    lines.append("Bounds")
    lines.append(" x >= 0")
    lines.append("End")
    return "\n".join(lines) + "\n"


def lp_manifest(lp: LinearProgram) -> dict:
    return {
        "rows": [lp.mdp.state_names[s] for s in lp.rows],
        "rhs": [format_rational(v) for v in lp.rhs],
        "columns": [
            {
                "action": lp.mdp.action(aid).name,
                "objective": format_rational(lp.objective[j]),
                "entries": {str(i): format_rational(v) for i, v in sorted(lp.columns[j].items())},
            }
            for j, aid in enumerate(lp.cols)
        ],
    }
