"""Seeded instance generators for set cover, facility location and the worked examples.

Random streams: instance ``i`` of a configuration draws from
``numpy.random.Generator(PCG64(SeedSequence(seed, spawn_key=(family_code, i))))``.
The stream is independent of ``count`` and of the other instances, so any
prefix of a dataset can be regenerated on its own.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .bnc import BncConfig, solve_bnc
from .instance import IlpInstance
from .lp import LpStatus, solve_lp

log = logging.getLogger(__name__)

FAMILIES = ("set_cover", "facility_location", "example_2d", "shatter")
_FAMILY_CODE = {name: i for i, name in enumerate(FAMILIES)}


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    family: str = "set_cover"
    seed: int = 0
    count: int = 1
    # set cover
    elements: int = 30
    sets: int = 50
    coverage_p: float = 0.2
    cost_range: tuple[int, int] = (1, 100)
    # facility location
    facilities: int = 10
    clients: int = 10
    fixed_cost_range: tuple[int, int] = (20, 70)
    assign_cost_range: tuple[int, int] = (1, 20)
    # shattering family
    gamma: str = "1/4"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for name in ("cost_range", "fixed_cost_range", "assign_cost_range"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def to_json(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GenConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown GenConfig fields: {sorted(unknown)}")
        return cls(**obj)


def instance_rng(cfg: GenConfig, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(_FAMILY_CODE[cfg.family], index))
    return np.random.Generator(np.random.PCG64(ss))


def set_cover_instance(costs: Sequence[int], membership: np.ndarray, id: str = "") -> IlpInstance:
    """Min-cost cover as ``max -cost x`` with ``-sum x <= -1`` rows then ``x <= 1`` rows."""
    E, S = membership.shape
    rows = [[-int(membership[e, j]) for j in range(S)] for e in range(E)]
    rows += [[int(j == k) for j in range(S)] for k in range(S)]
    b = [-1] * E + [1] * S
    return IlpInstance(rows, b, [-int(cj) for cj in costs], id)


def _set_cover_at(cfg: GenConfig, i: int) -> IlpInstance:
    E, S = cfg.elements, cfg.sets
    need = min(2, S)
    rng = instance_rng(cfg, i)
    member = rng.random((E, S)) < cfg.coverage_p
    for _ in range(1000):
        short = np.flatnonzero(member.sum(axis=1) < need)
        if short.size == 0:
            break
        member[short] = rng.random((short.size, S)) < cfg.coverage_p
    else:
        raise GenerationError(f"instance {i}: could not cover every element {need} times")
    costs = rng.integers(cfg.cost_range[0], cfg.cost_range[1] + 1, size=S)
    return set_cover_instance(costs, member, f"setcover-{cfg.seed}-{i}")


def gen_set_cover(cfg: GenConfig) -> list[IlpInstance]:
    return list(_iter(cfg, _set_cover_at))


def facility_location_instance(fixed: Sequence[int], assign: np.ndarray, id: str = "") -> IlpInstance:
    """Uncapacitated facility location in max/<= form.

    Variables: ``y_i`` (open facility ``i``) then ``x_ij`` at ``F + i*C + j``.
    Rows: ``x_ij - y_i <= 0``; per client ``sum_i x_ij <= 1`` and
    ``-sum_i x_ij <= -1``; ``v <= 1`` for every variable.
    """
    F, C = assign.shape
    n = F + F * C
    rows, b = [], []
    for i in range(F):
        for j in range(C):
            row = [0] * n
            row[F + i * C + j] = 1
            row[i] = -1
            rows.append(row)
            b.append(0)
    for j in range(C):
        row = [0] * n
        for i in range(F):
            row[F + i * C + j] = 1
        rows.append(row)
        b.append(1)
        rows.append([-v for v in row])
        b.append(-1)
    for k in range(n):
        rows.append([int(j == k) for j in range(n)])
        b.append(1)
    c = [-int(f) for f in fixed] + [-int(assign[i, j]) for i in range(F) for j in range(C)]
    return IlpInstance(rows, b, c, id)


def _facility_at(cfg: GenConfig, i: int) -> IlpInstance:
    rng = instance_rng(cfg, i)
    fixed = rng.integers(cfg.fixed_cost_range[0], cfg.fixed_cost_range[1] + 1, size=cfg.facilities)
    assign = rng.integers(cfg.assign_cost_range[0], cfg.assign_cost_range[1] + 1, size=(cfg.facilities, cfg.clients))
    return facility_location_instance(fixed, assign, f"facility-{cfg.seed}-{i}")


def gen_facility_location(cfg: GenConfig) -> list[IlpInstance]:
    return list(_iter(cfg, _facility_at))


def worked_example_2d() -> IlpInstance:
    """``max 5x1 + 8x2`` s.t. ``x1 + x2 <= 6``, ``5x1 + 9x2 <= 45``."""
    return IlpInstance([[1, 1], [5, 9]], [6, 45], [5, 8], "example-2d")


def _shatter_at(cfg: GenConfig, i: int) -> IlpInstance:
    from .shatter import build_shatter_instance

    a = tuple(-int(v) for v in instance_rng(cfg, i).integers(0, 6, size=2))
    return build_shatter_instance(a, Fraction(cfg.gamma), id=f"shatter-{cfg.seed}-{i}")


def gen_shatter(cfg: GenConfig) -> list[IlpInstance]:
    return list(_iter(cfg, _shatter_at))


def _iter(cfg: GenConfig, make) -> Iterator[IlpInstance]:
    if cfg.family == "set_cover" and not 0 < cfg.coverage_p <= 1:
        raise ValueError("coverage probability must lie in (0, 1]")
    return (make(cfg, i) for i in range(cfg.count))


def iter_instances(cfg: GenConfig) -> Iterator[IlpInstance]:
    """Instances of ``cfg`` one at a time, in index order."""
    makers = {
        "set_cover": _set_cover_at,
        "facility_location": _facility_at,
        "example_2d": lambda cfg, i: worked_example_2d(),
        "shatter": _shatter_at,
    }
    return _iter(cfg, makers[cfg.family])


def generate(cfg: GenConfig) -> list[IlpInstance]:
    return list(iter_instances(cfg))


def drop_reason(inst: IlpInstance, cfg: BncConfig = BncConfig()) -> str | None:
    """Why ``inst`` is unusable for training, or ``None`` if it is kept."""
    lp = solve_lp(inst)
    if lp.status is LpStatus.INFEASIBLE:
        return "ip-infeasible"
    if lp.status is LpStatus.UNBOUNDED:
        return "unbounded"
    if lp.is_integral():
        return "integral-lp"
    res = solve_bnc(inst, (), cfg)
    if res.truncated:
        return "truncated"
    if res.incumbent_value is None:
        return "ip-infeasible"
    if res.incumbent_value == lp.objective:
        return "zero-gap"
    return None


@dataclass
class FilterReport:
    kept: list[IlpInstance] = field(default_factory=list)
    reasons: dict[str, str] = field(default_factory=dict)

    @property
    def counts(self) -> dict[str, int]:
        return dict(sorted(Counter(self.reasons.values()).items()))


def filter_with_report(insts: Sequence[IlpInstance], cfg: BncConfig = BncConfig(), reasons=None) -> FilterReport:
    report = FilterReport()
    if reasons is None:
        reasons = [drop_reason(inst, cfg) for inst in insts]
    for inst, why in zip(insts, reasons):
        if why is None:
            report.kept.append(inst)
        else:
            log.info("dropping %s: %s", inst.id, why)
            report.reasons[inst.id] = why
    return report


def filter_for_training(insts: Sequence[IlpInstance], cfg: BncConfig = BncConfig()) -> list[IlpInstance]:
    return filter_with_report(insts, cfg).kept
