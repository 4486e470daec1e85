"""Deterministic branch-and-bound with root cuts, and the two cut-quality scores."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .cuts import tableau_cg_cuts
from .instance import Cut, IlpInstance
from .lp import LpSolution, LpStatus, solve_lp
from .rational import as_rational, format_rational


class UnboundedRelaxationError(ValueError):
    pass


class GapUndefinedError(ValueError):
    pass


class InfeasibleInstanceError(ValueError):
    pass


class TruncatedLabelError(RuntimeError):
    def __init__(self, message: str, baseline_size: int | None = None, cut_size: int | None = None):
        super().__init__(message)
        self.baseline_size = baseline_size
        self.cut_size = cut_size


@dataclass(frozen=True)
class BncConfig:
    """Search knobs.  Branching is lowest-index fractional, depth-first, floor child first."""

    node_limit: int = 100_000

    def __post_init__(self):
        if self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")


@dataclass(frozen=True)
class BncResult:
    tree_size: int
    incumbent_value: Fraction | None
    incumbent_x: tuple[int, ...] | None
    truncated: bool

    @property
    def feasible(self) -> bool:
        return self.incumbent_value is not None


def _branch_rows(n: int, j: int, value: Fraction) -> tuple[Cut, Cut]:
    f = math.floor(value)
    unit = [0] * n
    unit[j] = 1
    down = Cut(tuple(unit), f)
    unit[j] = -1
    up = Cut(tuple(unit), -(f + 1))
    return down, up


def solve_bnc(inst: IlpInstance, root_cuts: Sequence[Cut] = (), cfg: BncConfig = BncConfig()) -> BncResult:
    """Exhaustive branch-and-bound; ``root_cuts`` are added once at the root.

    A node is pruned when its LP is infeasible, when its bound does not beat
    the incumbent (ties discarded), or when its vertex is integral.  Branch
    bounds are appended as extra constraint rows.
    """
    stack: list[tuple[Cut, ...]] = [tuple(root_cuts)]
    tree_size = 0
    best_val: Fraction | None = None
    best_x: tuple[int, ...] | None = None
    truncated = False
    while stack:
        if tree_size >= cfg.node_limit:
            truncated = True
            break
        rows = stack.pop()
        sol = solve_lp(inst, rows)
        tree_size += 1
        if sol.status is LpStatus.INFEASIBLE:
            continue
        if sol.status is LpStatus.UNBOUNDED:
            raise UnboundedRelaxationError(f"LP relaxation of {inst.id!r} is unbounded")
        if best_val is not None and sol.objective <= best_val:
            continue
        frac_j = next((j for j, v in enumerate(sol.x_star) if v.denominator != 1), None)
        if frac_j is None:
            best_val = sol.objective
            best_x = tuple(int(v) for v in sol.x_star)
            continue
        down, up = _branch_rows(inst.n, frac_j, sol.x_star[frac_j])
        stack.append(rows + (up,))
        stack.append(rows + (down,))
    return BncResult(tree_size, best_val, best_x, truncated)


@dataclass(frozen=True)
class Baseline:
    """Quantities shared by every cut of one instance."""

    lp: LpSolution
    bnc: BncResult

    @property
    def z_lp(self) -> Fraction:
        return self.lp.objective

    @property
    def z_ip(self) -> Fraction:
        return self.bnc.incumbent_value


def baseline(inst: IlpInstance, cfg: BncConfig = BncConfig()) -> Baseline:
    lp = solve_lp(inst)
    if lp.status is LpStatus.UNBOUNDED:
        raise UnboundedRelaxationError(f"LP relaxation of {inst.id!r} is unbounded")
    return Baseline(lp, solve_bnc(inst, (), cfg))


def _checked_gap(inst: IlpInstance, base: Baseline) -> Fraction:
    if base.lp.status is not LpStatus.OPTIMAL:
        raise InfeasibleInstanceError(f"{inst.id!r}: LP relaxation infeasible")
    if base.z_ip is None:
        raise InfeasibleInstanceError(f"{inst.id!r}: no integer feasible point")
    gap = base.z_lp - base.z_ip
    if gap <= 0:
        raise GapUndefinedError(f"{inst.id!r}: integrality gap is zero")
    return gap


def _gap_closed(inst: IlpInstance, cut: Cut, base: Baseline) -> Fraction:
    gap = _checked_gap(inst, base)
    with_cut = solve_lp(inst, (cut,))
    if with_cut.status is not LpStatus.OPTIMAL:
        raise InfeasibleInstanceError(f"{inst.id!r}: cut made the LP {with_cut.status.value}")
    return (base.z_lp - with_cut.objective) / gap


def gap_closed_exact(inst: IlpInstance, cut: Cut, cfg: BncConfig = BncConfig()) -> Fraction:
    base = baseline(inst, cfg)
    if base.bnc.truncated:
        raise TruncatedLabelError(f"{inst.id!r}: baseline tree truncated", base.bnc.tree_size)
    return _gap_closed(inst, cut, base)


def gap_closed_score(inst: IlpInstance, cut: Cut, cfg: BncConfig = BncConfig()) -> float:
    """Fraction of the integrality gap removed by ``cut``; in ``[0, 1]`` for valid cuts."""
    return float(gap_closed_exact(inst, cut, cfg))


def _tree_size_after(inst: IlpInstance, cut: Cut, base: Baseline, cfg: BncConfig) -> tuple[int, Fraction]:
    t0 = base.bnc.tree_size
    if base.bnc.truncated:
        raise TruncatedLabelError(f"{inst.id!r}: baseline tree truncated at {t0}", t0, None)
    after = solve_bnc(inst, (cut,), cfg)
    if after.truncated:
        raise TruncatedLabelError(
            f"{inst.id!r}: tree with cut truncated at {after.tree_size}", t0, after.tree_size
        )
    if after.incumbent_value != base.z_ip:
        raise AssertionError(
            f"{inst.id!r}: cut {cut} changed the integer optimum "
            f"({base.z_ip} -> {after.incumbent_value})"
        )
    return after.tree_size, Fraction(t0 - after.tree_size, t0)


def tree_size_score(inst: IlpInstance, cut: Cut, cfg: BncConfig = BncConfig()) -> tuple[int, float]:
    """``(T1, (T0 - T1) / T0)`` for the tree with ``cut`` added at the root."""
    base = baseline(inst, cfg)
    t1, red = _tree_size_after(inst, cut, base, cfg)
    return t1, float(red)


@dataclass(frozen=True)
class CutScore:
    row: int
    cut: Cut
    gap_closed: Fraction
    tree_size_after: int
    relative_reduction: Fraction

    def to_json(self) -> dict:
        return {
            "row": self.row,
            "cut": self.cut.to_json(),
            "gap_closed": format_rational(self.gap_closed),
            "gap_closed_float": float(self.gap_closed),
            "tree_size_after": self.tree_size_after,
            "relative_reduction": format_rational(self.relative_reduction),
            "relative_reduction_float": float(self.relative_reduction),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CutScore":
        return cls(
            obj["row"],
            Cut.from_json(obj["cut"]),
            as_rational(obj["gap_closed"]),
            obj["tree_size_after"],
            as_rational(obj["relative_reduction"]),
        )


@dataclass(frozen=True)
class ScoredCutSet:
    instance_id: str
    baseline_tree_size: int
    z_lp: Fraction
    z_ip: Fraction
    entries: tuple[CutScore, ...] = field(default=())
    instance: IlpInstance | None = field(default=None, compare=False, repr=False)

    @property
    def no_cuts(self) -> bool:
        return not self.entries

    def to_json(self) -> dict:
        return {
            "id": self.instance_id,
            "baseline_tree_size": self.baseline_tree_size,
            "z_lp": format_rational(self.z_lp),
            "z_ip": format_rational(self.z_ip),
            "status": "no-cuts" if self.no_cuts else "ok",
            "entries": [e.to_json() for e in self.entries],
            "instance": self.instance.to_json() if self.instance is not None else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ScoredCutSet":
        return cls(
            obj["id"],
            obj["baseline_tree_size"],
            as_rational(obj["z_lp"]),
            as_rational(obj["z_ip"]),
            tuple(CutScore.from_json(e) for e in obj["entries"]),
            IlpInstance.from_json(obj["instance"]) if obj.get("instance") else None,
        )


def label_instance(inst: IlpInstance, cfg: BncConfig = BncConfig()) -> ScoredCutSet:
    """Score every tableau CG cut of ``inst`` by gap closed and tree size."""
    base = baseline(inst, cfg)
    if base.lp.status is not LpStatus.OPTIMAL:
        raise InfeasibleInstanceError(f"{inst.id!r}: LP relaxation infeasible")
    if base.bnc.truncated:
        raise TruncatedLabelError(f"{inst.id!r}: baseline tree truncated", base.bnc.tree_size)
    if base.z_ip is None:
        raise InfeasibleInstanceError(f"{inst.id!r}: no integer feasible point")
    cuts = tableau_cg_cuts(inst)
    if not cuts:
        return ScoredCutSet(inst.id, base.bnc.tree_size, base.z_lp, base.z_ip, (), inst)
    entries = []
    for row, cut in cuts:
        gc = _gap_closed(inst, cut, base)
        t1, red = _tree_size_after(inst, cut, base, cfg)
        entries.append(CutScore(row, cut, gc, t1, red))
    return ScoredCutSet(inst.id, base.bnc.tree_size, base.z_lp, base.z_ip, tuple(entries), inst)
