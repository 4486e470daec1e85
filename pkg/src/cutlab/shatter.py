"""Exact checks of the two-cut constructions used in the shattering lower bounds.

Each instance ``P(a, gamma)`` is ``max x1 + x2`` over ``a^T x <= 0``,
``2 x1 <= 4``, ``2 x2 <= 5/2 + 2 gamma``, ``x >= 0``.  Two CG weight vectors
give a strong cut ``x1 + x2 <= 3`` (closes the whole gap) and a weak cut
``x1 <= 3`` (redundant), so every +/- labelling of the instances can be
realised with a margin on either score.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .bnc import BncConfig, solve_bnc
from .cuts import cg_cut_from_weights, tableau_cg_cuts
from .instance import Cut, IlpInstance
from .instgen import worked_example_2d
from .lp import solve_lp
from .rational import as_rational, format_rational

MAX_ENUMERATED = 20


class ShatterError(ValueError):
    pass


class Score(str, enum.Enum):
    GAP_CLOSED = "gap"
    TREE_SIZE = "tree"


def _check_gamma(gamma) -> Fraction:
    gamma = as_rational(gamma)
    if not 0 < gamma < Fraction(1, 2):
        raise ShatterError(f"gamma must lie in (0, 1/2), got {gamma}")
    return gamma


@dataclass(frozen=True)
class ShatterConfig:
    gamma: Fraction
    directions: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        object.__setattr__(self, "gamma", _check_gamma(self.gamma))
        dirs = tuple(tuple(as_rational(v) for v in a) for a in self.directions)
        for a in dirs:
            if len(a) != 2 or any(v > 0 for v in a):
                raise ShatterError(f"direction {a} must be a 2-vector with nonpositive entries")
        object.__setattr__(self, "directions", dirs)

    @property
    def r(self) -> int:
        return len(self.directions)


def build_shatter_instance(a: Sequence, gamma, id: str = "", n: int | None = None, m: int | None = None) -> IlpInstance:
    """``P(a, gamma)``; ``2 x1 <= 4`` is kept unsimplified.  ``n``/``m`` pad with zeros."""
    gamma = _check_gamma(gamma)
    a = tuple(as_rational(v) for v in a)
    if len(a) != 2 or any(v > 0 for v in a):
        raise ShatterError(f"direction {a} must be a 2-vector with nonpositive entries")
    inst = IlpInstance(
        [a, (2, 0), (0, 2)],
        [0, 4, Fraction(5, 2) + 2 * gamma],
        [1, 1],
        id or f"shatter-{a[0]},{a[1]}-{gamma}",
    )
    if n is not None or m is not None:
        inst = inst.padded(n or inst.n, m or inst.m)
    return inst


def strong_region(gamma: Fraction) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
    """Closed/half-open bounds ``([u2_lo, u2_hi], [u3_lo, u3_hi))`` yielding ``x1 + x2 <= 3``."""
    return (
        (Fraction(1, 2), 1 - Fraction(5, 36) * (Fraction(5, 2) + 2 * gamma)),
        (Fraction(1, 2), Fraction(20, 36)),
    )


def weak_region(gamma: Fraction) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
    """Bounds ``([u2_lo, u2_hi], [u3_lo, u3_hi))`` of the redundant-cut weight region."""
    return (
        (Fraction(1, 2), Fraction(11, 16) - gamma / 4),
        ((Fraction(1, 4) + gamma) / (Fraction(5, 2) + 2 * gamma), Fraction(1, 2)),
    )


def _inside(u2, u3, region) -> bool:
    (lo2, hi2), (lo3, hi3) = region
    return lo2 <= u2 <= hi2 and lo3 <= u3 < hi3


def weight_region_representatives(gamma) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """One weight vector from each region; the row ``a^T x <= 0`` gets weight 0.

    The weak representative uses ``u2 = 1/2`` and the smallest ``u3`` for which
    ``floor(2 + u3 (5/2 + 2 gamma))`` reaches 3, so its cut is ``x1 <= 3``.
    """
    gamma = _check_gamma(gamma)
    half = Fraction(1, 2)
    strong = (Fraction(0), half, half)
    weak = (Fraction(0), half, 1 / (Fraction(5, 2) + 2 * gamma))
    if not _inside(strong[1], strong[2], strong_region(gamma)):
        raise ShatterError(f"strong representative outside its region for gamma={gamma}")
    if not _inside(weak[1], weak[2], weak_region(gamma)):
        raise ShatterError(f"weak representative outside its region for gamma={gamma}")
    return strong, weak


def _score_of(record: dict, which: str, score: Score) -> Fraction:
    if score is Score.GAP_CLOSED:
        return record[which]["gap_closed"]
    return Fraction(record[which]["tree_size"])


def _cut_record(inst: IlpInstance, cut: Cut, z_lp: Fraction, z_ip: Fraction, cfg: BncConfig) -> dict:
    lp = solve_lp(inst, (cut,))
    tree = solve_bnc(inst, (cut,), cfg)
    return {
        "cut": cut,
        "lp_value": lp.objective,
        "lp_vertex": lp.x_star,
        "vertex_integral": lp.is_integral(),
        "gap_closed": (z_lp - lp.objective) / (z_lp - z_ip),
        "gap_closed_abs": z_lp - lp.objective,
        "tree_size": tree.tree_size,
        "z_ip_after": tree.incumbent_value,
    }


@dataclass
class ShatterReport:
    gamma: Fraction | None
    score: str
    records: list[dict] = field(default_factory=list)
    labelings_checked: int = 0
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        def conv(v):
            if isinstance(v, Fraction):
                return format_rational(v)
            if isinstance(v, Cut):
                return str(v)
            if isinstance(v, (tuple, list)):
                return [conv(x) for x in v]
            if isinstance(v, dict):
                return {k: conv(x) for k, x in v.items()}
            return v

        return {
            "gamma": conv(self.gamma),
            "score": self.score,
            "verdict": self.verdict,
            "labelings_checked": self.labelings_checked,
            "records": conv(self.records),
            "failures": self.failures,
            "notes": self.notes,
        }

    def table(self) -> str:
        lines = [f"score={self.score} gamma={self.gamma} verdict={'PASS' if self.verdict else 'FAIL'}"]
        if self.score == "tableau":
            for rec in self.records:
                for c in rec["cuts"]:
                    lines.append(f"row {c['row']}: {c['cut']}  gap closed {c['gap_closed']}  tree {c['tree_size']}")
            lines.extend(f"FAIL: {f}" for f in self.failures)
            return "\n".join(lines)
        lines.append(f"{'instance':<28}{'z_lp':>10}{'z_ip':>6}{'strong':>10}{'weak':>10}{'T_s':>5}{'T_w':>5}  strong vertex")
        for rec in self.records:
            s, w = rec["strong"], rec["weak"]
            vertex = "(" + ", ".join(str(v) for v in s["lp_vertex"]) + ")"
            lines.append(
                f"{rec['id']:<28}{str(rec['z_lp']):>10}{str(rec['z_ip']):>6}"
                f"{str(s['gap_closed']):>10}{str(w['gap_closed']):>10}"
                f"{s['tree_size']:>5}{w['tree_size']:>5}  {vertex}"
            )
        lines.extend(f"FAIL: {f}" for f in self.failures)
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


def verify_shattering(cfg: ShatterConfig, score: Score | str, bnc_cfg: BncConfig = BncConfig(),
                      pad: tuple[int, int] | None = None) -> ShatterReport:
    """Check that strong/weak cuts straddle a witness for every instance and labelling.

    Gap closed: strong 1 and weak 0 with witness 1/2 give margin ``gamma``.
    Tree size: the weak cut needs a branching (>= 3 nodes) while the strong cut
    solves at the root when the simplex returns the integral vertex of the
    degenerate optimal face; the returned vertex is recorded.
    """
    score = Score(score)
    gamma = cfg.gamma
    report = ShatterReport(gamma, score.value)
    u_strong, u_weak = weight_region_representatives(gamma)
    ok_hi, ok_lo = [], []
    for idx, a in enumerate(cfg.directions):
        n, m = pad if pad else (None, None)
        inst = build_shatter_instance(a, gamma, id=f"P{idx + 1}({a[0]},{a[1]})", n=n, m=m)
        u_s = u_strong + (Fraction(0),) * (inst.m - 3)
        u_w = u_weak + (Fraction(0),) * (inst.m - 3)
        lp = solve_lp(inst)
        base = solve_bnc(inst, (), bnc_cfg)
        z_lp, z_ip = lp.objective, base.incumbent_value
        rec = {"id": inst.id, "z_lp": z_lp, "z_ip": z_ip, "lp_vertex": lp.x_star}
        if z_lp != Fraction(13, 4) + gamma:
            report.failures.append(f"{inst.id}: z_LP={z_lp}, expected {Fraction(13, 4) + gamma}")
        if z_ip != 3:
            report.failures.append(f"{inst.id}: z_IP={z_ip}, expected 3")
        strong = _cut_record(inst, cg_cut_from_weights(inst, u_s), z_lp, z_ip, bnc_cfg)
        weak = _cut_record(inst, cg_cut_from_weights(inst, u_w), z_lp, z_ip, bnc_cfg)
        rec["strong"], rec["weak"] = strong, weak
        report.records.append(rec)

        expected_strong = Cut((1, 1) + (0,) * (inst.n - 2), 3)
        expected_weak = Cut((1,) + (0,) * (inst.n - 1), 3)
        if strong["cut"] != expected_strong:
            report.failures.append(f"{inst.id}: strong cut is {strong['cut']}, expected x1 + x2 <= 3")
        if weak["cut"] != expected_weak:
            report.failures.append(f"{inst.id}: weak cut is {weak['cut']}, expected x1 <= 3")
        if strong["gap_closed_abs"] != Fraction(1, 4) + gamma:
            report.failures.append(f"{inst.id}: strong cut closes {strong['gap_closed_abs']}, expected 1/4 + gamma")
        if not strong["vertex_integral"]:
            report.notes.append(f"{inst.id}: simplex returned fractional vertex {strong['lp_vertex']} of the strong-cut face")

        hi, lo = _score_of(rec, "strong", score), _score_of(rec, "weak", score)
        if score is Score.GAP_CLOSED:
            witness, margin = Fraction(1, 2), gamma
        else:
            # larger tree is labelled +1
            hi, lo = lo, hi
            witness, margin = Fraction(2), Fraction(1)
            if weak["tree_size"] < 3:
                report.failures.append(f"{inst.id}: weak-cut tree has {weak['tree_size']} < 3 nodes")
            if strong["tree_size"] not in (1, 3):
                report.failures.append(f"{inst.id}: strong-cut tree has {strong['tree_size']} nodes, expected 1 or 3")
            if not strong["vertex_integral"]:
                report.notes.append(f"{inst.id}: tree separation not required (fractional strong vertex)")
        rec["witness"], rec["margin"] = witness, margin
        strict = score is Score.GAP_CLOSED or strong["vertex_integral"]
        ok_hi.append(hi >= witness + margin or not strict)
        ok_lo.append(lo <= witness - margin or not strict)

    if cfg.r <= MAX_ENUMERATED:
        for labels in itertools.product((1, -1), repeat=cfg.r):
            report.labelings_checked += 1
            for i, y in enumerate(labels):
                if not (ok_hi[i] if y > 0 else ok_lo[i]):
                    report.failures.append(f"labelling {labels}: instance {i + 1} misses the margin")
                    break
            else:
                continue
            break
    else:
        report.notes.append(
            f"r={cfg.r} > {MAX_ENUMERATED}: labellings not enumerated; per-instance checks suffice "
            "because each instance's cut choice is independent"
        )
        for i in range(cfg.r):
            if not (ok_hi[i] and ok_lo[i]):
                report.failures.append(f"instance {i + 1} misses the margin")
    return report


def verify_tableau_lemma(bnc_cfg: BncConfig = BncConfig()) -> ShatterReport:
    """Both tableau cuts of the 2-D worked example; scores must be more than 1/5 apart."""
    inst = worked_example_2d()
    report = ShatterReport(None, "tableau")
    lp = solve_lp(inst)
    base = solve_bnc(inst, (), bnc_cfg)
    z_lp, z_ip = lp.objective, base.incumbent_value
    cuts = tableau_cg_cuts(inst)
    rec = {"id": inst.id, "z_lp": z_lp, "z_ip": z_ip, "lp_vertex": lp.x_star, "baseline_tree": base.tree_size}
    per_cut = [_cut_record(inst, cut, z_lp, z_ip, bnc_cfg) | {"row": row} for row, cut in cuts]
    rec["cuts"] = per_cut
    report.records.append(rec)
    expected = [Cut((4, 7), 35), Cut((2, 3), 15)]
    if [c["cut"] for c in per_cut] != expected:
        report.failures.append(f"tableau cuts {[str(c['cut']) for c in per_cut]} differ from {[str(c) for c in expected]}")
        return report
    gaps = [c["gap_closed"] for c in per_cut]
    trees = [c["tree_size"] for c in per_cut]
    rec["gap_distance"] = abs(gaps[0] - gaps[1])
    rec["tree_sizes"] = trees
    if rec["gap_distance"] <= Fraction(1, 5):
        report.failures.append(f"gap-closed distance {rec['gap_distance']} is not > 1/5")
    rel = [Fraction(base.tree_size - t, base.tree_size) for t in trees]
    rec["relative_reductions"] = rel
    if abs(rel[0] - rel[1]) <= Fraction(1, 5):
        report.failures.append(f"tree-size score distance {abs(rel[0] - rel[1])} is not > 1/5")
    if min(trees) != 1 or max(trees) < 3:
        report.failures.append(f"tree sizes {trees}: expected one root-solved cut and one needing >= 3 nodes")
    if per_cut[1]["lp_vertex"] != (0, 5):
        report.failures.append(f"second cut LP vertex {per_cut[1]['lp_vertex']} is not (0, 5)")
    return report
