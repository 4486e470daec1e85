"""Pipeline commands: generate, label, train, evaluate and the worked-example checks.

Every artifact is JSON/JSONL written with sorted keys and no timestamps, so
reruns with the same configuration produce identical bytes.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import multiprocessing
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .bnc import BncConfig, ScoredCutSet, label_instance, solve_bnc
from .cuts import cg_cut_from_weights, parallelism_score, tableau_cg_cuts
from .gnn import GnnModel, TrainConfig, select_cut, train_detailed
from .instance import Cut, IlpInstance, read_jsonl, write_jsonl
from .instgen import GenConfig, drop_reason, iter_instances, worked_example_2d
from .lp import solve_lp
from .shatter import Score, ShatterConfig, verify_shattering, verify_tableau_lemma

log = logging.getLogger(__name__)


def _fmt(values) -> str:
    return "(" + ", ".join(str(v) for v in values) + ")"

TEST_FRACTION = 0.25


class LabError(RuntimeError):
    pass


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


@contextmanager
def _mapper(workers: int):
    """Ordered map, in a process pool when ``workers > 1``."""
    if workers <= 1:
        yield lambda fn, items: [fn(x) for x in items]
        return
    with multiprocessing.get_context("spawn").Pool(workers) as pool:
        yield lambda fn, items: pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers)))


# ------------------------------------------------------------------ generate


def load_gen_config(path) -> tuple[GenConfig, int | None]:
    """Read a generation config; an optional ``keep`` key caps retained instances."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    keep = obj.pop("keep", None)
    return GenConfig.from_json(obj), keep


class _DropReason:
    def __init__(self, node_limit: int):
        self.cfg = BncConfig(node_limit)

    def __call__(self, text: str):
        return drop_reason(IlpInstance.from_json(json.loads(text)), self.cfg)


def cmd_generate(cfg: GenConfig, out_dir, keep: int | None = None, workers: int = 1,
                 node_limit: int = BncConfig().node_limit) -> dict:
    """Write ``raw.jsonl``, filtered ``instances.jsonl`` and ``manifest.json``.

    With ``keep`` set, only the first ``keep`` retained instances are written
    (``count`` then bounds how many raw instances may be drawn).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    source = iter_instances(cfg)
    raw, kept, drops = [], [], {}
    check = _DropReason(node_limit)
    with _mapper(workers) as pmap:
        while keep is None or len(kept) < keep:
            block = list(itertools.islice(source, max(64, 8 * workers)))
            if not block:
                break
            reasons = pmap(check, [json.dumps(inst.to_json(), sort_keys=True) for inst in block])
            for inst, why in zip(block, reasons):
                if keep is not None and len(kept) >= keep:
                    break
                raw.append(inst)
                if why is None:
                    kept.append(inst)
                else:
                    log.info("dropping %s: %s", inst.id, why)
                    drops[why] = drops.get(why, 0) + 1
    if keep is not None and len(kept) < keep:
        raise LabError(f"only {len(kept)} of the requested {keep} instances survived filtering")
    write_jsonl(out / "raw.jsonl", (inst.to_json() for inst in raw))
    write_jsonl(out / "instances.jsonl", (inst.to_json() for inst in kept))
    manifest = {
        "family": cfg.family,
        "seed": cfg.seed,
        "config": cfg.to_json(),
        "keep": keep,
        "node_limit": node_limit,
        "raw_count": len(raw),
        "retained_count": len(kept),
        "drop_counts": dict(sorted(drops.items())),
        "rng": "numpy PCG64, SeedSequence(seed, spawn_key=(family_code, index))",
        "sha256": {
            "raw.jsonl": file_sha256(out / "raw.jsonl"),
            "instances.jsonl": file_sha256(out / "instances.jsonl"),
        },
    }
    write_json(out / "manifest.json", manifest)
    return manifest


# --------------------------------------------------------------------- label


class _Labeler:
    def __init__(self, node_limit: int):
        self.cfg = BncConfig(node_limit)

    def __call__(self, obj: dict) -> dict:
        inst = IlpInstance.from_json(obj)
        try:
            return label_instance(inst, self.cfg).to_json()
        except Exception as exc:  # recorded inline, the run continues
            status = "truncated" if type(exc).__name__ == "TruncatedLabelError" else "error"
            return {"id": inst.id, "status": status, "error": f"{type(exc).__name__}: {exc}",
                    "instance": inst.to_json()}


def cmd_label(dataset, out_path, workers: int = 1, node_limit: int = BncConfig().node_limit) -> dict:
    records = read_jsonl(dataset)
    with _mapper(workers) as pmap:
        labeled = pmap(_Labeler(node_limit), records)
    write_jsonl(out_path, labeled)
    statuses: dict[str, int] = {}
    for rec in labeled:
        statuses[rec["status"]] = statuses.get(rec["status"], 0) + 1
    manifest = {
        "dataset_sha256": file_sha256(dataset),
        "labeled_sha256": file_sha256(out_path),
        "node_limit": node_limit,
        "count": len(labeled),
        "status_counts": dict(sorted(statuses.items())),
    }
    write_json(str(out_path) + ".manifest.json", manifest)
    return manifest


def split_records(records: list[dict], test_fraction: float = TEST_FRACTION) -> tuple[list[dict], list[dict]]:
    """Last ``test_fraction`` of the sequence is the test split."""
    n_test = int(round(test_fraction * len(records)))
    cut = len(records) - n_test
    return records[:cut], records[cut:]


def usable(records: Sequence[dict]) -> list[ScoredCutSet]:
    return [ScoredCutSet.from_json(r) for r in records if r.get("status") == "ok" and r["entries"]]


# --------------------------------------------------------------------- train


def cmd_train(labeled, out_path, cfg: TrainConfig, test_fraction: float = TEST_FRACTION) -> dict:
    records = read_jsonl(labeled)
    train_recs, _ = split_records(records, test_fraction)
    data = usable(train_recs)
    if not data:
        raise LabError("no usable labelled instances in the training split")
    res = train_detailed(data, cfg)
    manifest = {
        "config": cfg.to_json(),
        "dataset_sha256": file_sha256(labeled),
        "test_fraction": test_fraction,
        "train_instances": res.n_train,
        "validation_instances": res.n_val,
        "best_epoch": res.best_epoch,
        "train_losses": res.train_losses,
        "val_losses": res.val_losses,
        "params_sha256": res.model.digest(),
    }
    res.model.save(out_path, manifest)
    return manifest


# ------------------------------------------------------------------ evaluate


@dataclass
class EvalReport:
    averages: dict[str, float]
    rows: list[dict]
    n_test: int
    excluded: int
    seed: int
    dataset_sha256: str
    checkpoints: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "averages": self.averages,
            "rows": self.rows,
            "n_test": self.n_test,
            "excluded": self.excluded,
            "seed": self.seed,
            "dataset_sha256": self.dataset_sha256,
            "checkpoints": self.checkpoints,
        }

    def table(self) -> str:
        gnn_cols = [k for k in self.averages if k.startswith("GNN")]
        cols = [c[4:-1] for c in gnn_cols] or ["-"]
        header = f"{'Setting':<12}" + "".join(f"{c:>12}" for c in cols)
        lines = [f"Average tree size on {self.n_test} test instances ({self.excluded} excluded)", header]
        for name in ("Optimal", "Parallelism", "Random"):
            lines.append(f"{name:<12}" + "".join(_cell(self.averages[name]) for _ in cols))
        if gnn_cols:
            lines.append(f"{'GNN':<12}" + "".join(_cell(self.averages[c]) for c in gnn_cols))
        return "\n".join(lines)


def _cell(v) -> str:
    return f"{'n/a':>12}" if v is None else f"{v:>12.2f}"


def _first_argmax(values: Sequence[float]) -> int:
    return int(np.argmax(np.asarray(values)))


def evaluate_records(test: Sequence[dict], models: Sequence[tuple[str, GnnModel]], seed: int) -> tuple[dict, list[dict], int]:
    """Per-rule average tree size over the usable records of ``test``."""
    rows = []
    excluded = 0
    for pos, rec in enumerate(test):
        if rec.get("status") != "ok" or not rec["entries"]:
            excluded += 1
            continue
        s = ScoredCutSet.from_json(rec)
        sizes = [e.tree_size_after for e in s.entries]
        cuts = [e.cut for e in s.entries]
        picks = {
            "Optimal": int(np.argmin(sizes)),
            "Parallelism": _first_argmax([parallelism_score(s.instance, c) for c in cuts]),
            "Random": int(np.random.default_rng([seed, pos]).integers(len(cuts))),
        }
        for label, model in models:
            tie_seed = int(np.random.SeedSequence([seed, pos, 1]).generate_state(1)[0])
            picks[f"GNN[{label}]"] = select_cut(model, s.instance, cuts, seed=tie_seed)
        tree = {k: sizes[v] for k, v in picks.items()}
        rows.append({"id": s.instance_id, "picks": picks, "tree_sizes": tree})
    names = ["Optimal", "Parallelism", "Random"] + [f"GNN[{label}]" for label, _ in models]
    averages = {k: (float(np.mean([r["tree_sizes"][k] for r in rows])) if rows else None) for k in names}
    return averages, rows, excluded


def cmd_evaluate(labeled, checkpoints: Sequence, seed: int = 0, test_fraction: float = TEST_FRACTION) -> EvalReport:
    records = read_jsonl(labeled)
    _, test = split_records(records, test_fraction)
    models, meta = [], []
    for path in checkpoints:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        model = GnnModel.from_json(obj)
        label = obj.get("manifest", {}).get("config", {}).get("target", "gnn")
        if any(lbl == label for lbl, _ in models):
            label = f"{label}{len(models)}"
        models.append((label, model))
        meta.append({"label": label, "sha256": file_sha256(path)})
    averages, rows, excluded = evaluate_records(test, models, seed)
    return EvalReport(averages, rows, len(rows), excluded, seed, file_sha256(labeled), meta)


# ----- worked-example check


def example_checks() -> list[tuple[str, bool, str]]:
    """Worked-example regressions as ``(name, passed, detail)`` triples."""
    F = Fraction
    inst = worked_example_2d()
    out = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))

    def lp_vertex():
        s = solve_lp(inst)
        return s.x_star == (F(9, 4), F(15, 4)) and s.objective == F(165, 4), f"x*={_fmt(s.x_star)} z={s.objective}"

    def cuts():
        got = [c for _, c in tableau_cg_cuts(inst)]
        return got == [Cut((4, 7), 35), Cut((2, 3), 15)], ", ".join(str(c) for c in got)

    def weighted_cut():
        c = cg_cut_from_weights(inst, (F(1, 4), F(3, 4)))
        return c == Cut((4, 7), 35), str(c)

    def post_cut(cut, expected):
        def run():
            s = solve_lp(inst, (cut,))
            return s.x_star == expected, f"x*={_fmt(s.x_star)}"
        return run

    def scores():
        labels = label_instance(inst)
        gaps = [e.gap_closed for e in labels.entries]
        trees = [e.tree_size_after for e in labels.entries]
        ok = gaps == [F(1, 5), F(1)] and trees == [9, 1] and labels.baseline_tree_size == 9
        return ok, f"gap closed {_fmt(gaps)}, tree sizes {_fmt(trees)}, T0={labels.baseline_tree_size}"

    def bnc():
        r = solve_bnc(inst)
        return r.tree_size == 9 and r.incumbent_value == 40 and r.incumbent_x == (0, 5), f"{r.tree_size} nodes, x={_fmt(r.incumbent_x)}, z={r.incumbent_value}"

    def lemma():
        rep = verify_tableau_lemma()
        return rep.verdict, "; ".join(rep.failures) or "distance 4/5 > 1/5"

    def shatter(gamma):
        def run():
            cfg = ShatterConfig(gamma, ((-1, -1), (0, -1), (-2, -3)))
            reps = [verify_shattering(cfg, s) for s in Score]
            return all(r.verdict for r in reps), "; ".join(f for r in reps for f in r.failures) or "ok"
        return run

    check("LP vertex (9/4, 15/4), z = 165/4", lp_vertex)
    check("CG cut u=(1/4, 3/4) is 4x1 + 7x2 <= 35", weighted_cut)
    check("tableau cuts {4x1+7x2<=35, 2x1+3x2<=15}", cuts)
    check("vertex after 4x1+7x2<=35 is (7/3, 11/3)", post_cut(Cut((4, 7), 35), (F(7, 3), F(11, 3))))
    check("vertex after 2x1+3x2<=15 is (0, 5)", post_cut(Cut((2, 3), 15), (F(0), F(5))))
    check("B&C: 9 nodes, optimum (0, 5) value 40", bnc)
    check("scores: gap closed (1/5, 1), trees (9, 1)", scores)
    check("tableau lemma: scores more than 1/5 apart", lemma)
    for g in (F(1, 8), F(1, 4), F(3, 8), F(49, 100)):
        check(f"shattering verifier, gamma={g}", shatter(g))
    return out


def cmd_example_check(stream=None) -> int:
    results = example_checks()
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}  ({detail})", file=stream)
    failed = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=stream)
    return 1 if failed else 0

