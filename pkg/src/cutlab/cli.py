"""``cutlab`` command line."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from fractions import Fraction

from . import lab
from .bnc import BncConfig
from .gnn import Target, TrainConfig
from .shatter import Score, ShatterConfig, verify_shattering, verify_tableau_lemma


def _add_common(p: argparse.ArgumentParser, workers: bool = False, node_limit: bool = False) -> None:
    if workers:
        p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    if node_limit:
        p.add_argument("--node-limit", type=int, default=BncConfig().node_limit,
                       help="branch-and-cut node budget per solve")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cutlab", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate and filter a dataset")
    g.add_argument("--config", required=True, help="JSON generation config")
    g.add_argument("--seed", type=int, help="override the config seed")
    g.add_argument("--out", required=True, help="output directory")
    _add_common(g, workers=True, node_limit=True)

    lb = sub.add_parser("label", help="score every tableau cut of each instance")
    lb.add_argument("--dataset", required=True, help="instances JSONL")
    lb.add_argument("--out", required=True, help="labelled JSONL")
    _add_common(lb, workers=True, node_limit=True)

    t = sub.add_parser("train", help="train a GNN cut scorer")
    t.add_argument("--labeled", required=True)
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--config", help="JSON training config")
    t.add_argument("--target", choices=[x.value for x in Target])
    t.add_argument("--seed", type=int)
    t.add_argument("--epochs", type=int)

    e = sub.add_parser("evaluate", help="average tree size of each selection rule")
    e.add_argument("--labeled", required=True)
    e.add_argument("--checkpoint", action="append", default=[], help="repeatable")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", help="report JSON")

    sub.add_parser("paper-check", help="worked-example regression checks")

    s = sub.add_parser("verify-shattering", help="run the shattering verifier")
    s.add_argument("--gamma", default="1/4", help="rational in (0, 1/2)")
    s.add_argument("--directions", default="-1,-1;0,-1;-2,-3",
                   help="';'-separated objective directions a=(a1,a2), entries <= 0")
    s.add_argument("--score", choices=["gap", "tree", "both"], default="both")
    s.add_argument("--lemma", action="store_true", help="also check the tableau lemma")
    s.add_argument("--out", help="report JSON")
    _add_common(s, node_limit=True)
    return ap


def _train_config(args) -> TrainConfig:
    base = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
    cfg = TrainConfig.from_json(base)
    overrides = {k: v for k, v in (("target", args.target), ("seed", args.seed), ("epochs", args.epochs)) if v is not None}
    return dataclasses.replace(cfg, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except (lab.LabError, ValueError, OSError) as exc:
        print(f"cutlab {args.command}: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "generate":
        cfg, keep = lab.load_gen_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        m = lab.cmd_generate(cfg, args.out, keep, args.workers, args.node_limit)
        print(f"{m['retained_count']} of {m['raw_count']} instances retained; dropped {m['drop_counts']}")
    elif args.command == "label":
        m = lab.cmd_label(args.dataset, args.out, args.workers, args.node_limit)
        print(f"labelled {m['count']} instances: {m['status_counts']}")
    elif args.command == "train":
        m = lab.cmd_train(args.labeled, args.out, _train_config(args))
        print(f"trained on {m['train_instances']} instances, best epoch {m['best_epoch']}")
    elif args.command == "evaluate":
        rep = lab.cmd_evaluate(args.labeled, args.checkpoint, args.seed)
        if args.out:
            lab.write_json(args.out, rep.to_json())
        print(rep.table())
    elif args.command == "paper-check":
        return lab.cmd_example_check()
    elif args.command == "verify-shattering":
        dirs = tuple(tuple(Fraction(v) for v in d.split(",")) for d in args.directions.split(";") if d)
        cfg = ShatterConfig(Fraction(args.gamma), dirs)
        scores = list(Score) if args.score == "both" else [Score(args.score)]
        reports = [verify_shattering(cfg, s, BncConfig(args.node_limit)) for s in scores]
        if args.lemma:
            reports.append(verify_tableau_lemma(BncConfig(args.node_limit)))
        for r in reports:
            print(r.table())
        if args.out:
            lab.write_json(args.out, [r.to_json() for r in reports])
        return 0 if all(r.verdict for r in reports) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
