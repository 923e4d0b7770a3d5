"""Command-line entry point.

Subcommands: run-matrix, sweep-amount, ablate-hyper-only, augment-compose,
augment-gandalf, extend, neighbors. Each takes --config plus optional --seed
and --out overrides; flags win over config keys. Exit code 0 on success,
nonzero with a machine-readable ERROR line on stderr otherwise.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np
import yaml

from .compose import (AugmentationSet, ComposeConfig, generate_compose_pairs,
                      load_augmentation_set, load_compounds,
                      save_augmentation_set)
from .gandalf import gan_sample, gan_train, neighbor_report, save_generator
from .classifiers import derive_seed
from .datasets import parse_pairs, write_pairs
from .embeddings import load_space
from .errors import HyperAugError
from .harness import (ExperimentConfig, ablation_hyper_only, load_config,
                      run_matrix, sweep_amount, write_neighbor_csv)
from .taxonomy import extend_dataset, load_taxonomy

log = logging.getLogger(__name__)


def _add_common(parser):
    parser.add_argument("--config", required=True, help="flat-key YAML config")
    parser.add_argument("--seed", type=int, default=None, help="override seed")
    parser.add_argument("--out", default=None, help="override output directory")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")


def _build_config(args) -> ExperimentConfig:
    overrides = {}
    for item in args.set:
        key, _, value = item.partition("=")
        overrides[key] = yaml.safe_load(value)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    return load_config(args.config, overrides)


def _report_audit(result):
    violations = result.audit_violations()
    if violations:
        raise HyperAugError(f"leakage audit found {violations} violations")
    log.info("leakage audit: 0 violations")


def _print_rows(rows):
    for r in rows:
        delta_pts = 100.0 * r.delta_vs_baseline
        print(f"{r.dataset:>12} {r.augmentation:>10} amount={r.amount:<5} "
              f"acc={r.accuracy:.4f} delta={delta_pts:+.2f} pts")


def cmd_run_matrix(args):
    config = _build_config(args)
    os.makedirs(config.output_dir, exist_ok=True)
    csv_path = os.path.join(config.output_dir, "matrix.csv")
    result = run_matrix(config, out_path=csv_path)
    _report_audit(result)
    _print_rows(result.rows)
    if config.render_figures:
        from .plots import render_matrix_figure
        render_matrix_figure(result.rows,
                             os.path.join(config.output_dir, "matrix.png"))
    print(f"wrote {csv_path}")


def cmd_sweep_amount(args):
    config = _build_config(args)
    amounts = sorted(int(a) for a in args.amounts.split(","))
    if 0 not in amounts:
        amounts = [0] + amounts
    os.makedirs(config.output_dir, exist_ok=True)
    csv_path = os.path.join(config.output_dir, "sweep.csv")
    result = sweep_amount(config, amounts, out_path=csv_path)
    _report_audit(result)
    _print_rows(result.rows)
    if config.render_figures:
        from .plots import render_sweep_figure
        render_sweep_figure(result.rows,
                            os.path.join(config.output_dir, "sweep.png"))
    print(f"wrote {csv_path}")


def cmd_ablate_hyper_only(args):
    config = _build_config(args)
    os.makedirs(config.output_dir, exist_ok=True)
    csv_path = os.path.join(config.output_dir, "ablation.csv")
    result = ablation_hyper_only(config, out_path=csv_path)
    _report_audit(result)
    for r in result.rows:
        print(f"{r['dataset']:>12} {r['variant']:>10} {r['augmentation']:>10} "
              f"acc={r['accuracy']:.4f}")
    if config.render_figures:
        from .plots import render_ablation_figure
        render_ablation_figure(result.rows,
                               os.path.join(config.output_dir, "ablation.png"))
    print(f"wrote {csv_path}")


def cmd_augment_compose(args):
    config = _build_config(args)
    space = load_space(config.space_path)
    compounds = load_compounds(config.compounds_path)
    tax = load_taxonomy(config.taxonomy_path) if config.taxonomy_path else None
    cfg = ComposeConfig(
        mode=config.compose_mode,
        max_pairs=config.augmentation_amount,
        negative_strategy=config.compose_negative_strategy,
        seed=config.seed)
    aug = generate_compose_pairs(space, compounds, tax, cfg)
    os.makedirs(config.output_dir, exist_ok=True)
    vec_path = os.path.join(config.output_dir, "compose_vectors.txt")
    pairs_path = os.path.join(config.output_dir, "compose_pairs.tsv")
    save_augmentation_set(aug, vec_path, pairs_path)
    print(f"wrote {len(aug)} compose pairs to {pairs_path}")


def cmd_augment_gandalf(args):
    config = _build_config(args)
    space = load_space(config.space_path)
    name, path = sorted(config.dataset_paths.items())[0]
    ds = parse_pairs(path, name=name)
    positives = [p for p in ds.positives()
                 if p.hyponym in space and p.hypernym in space]
    vec_pairs = [(space.vector(p.hyponym), space.vector(p.hypernym))
                 for p in positives]
    gan_cfg = replace(config.gan, seed=config.seed)
    gen, _, train_log = gan_train(vec_pairs, gan_cfg)
    os.makedirs(config.output_dir, exist_ok=True)
    gen_path = os.path.join(config.output_dir, "generator.txt")
    save_generator(gen, gen_path)
    anchors = np.array([v for v, _ in vec_pairs])
    tokens = [p.hyponym for p in positives]
    per_anchor = max(1, -(-config.augmentation_amount // len(anchors)))
    aug = gan_sample(gen, anchors, per_anchor,
                                 seed=derive_seed(config.seed, "sample"),
                                 anchor_tokens=tokens)
    aug.entries = aug.entries[:config.augmentation_amount]
    vec_path = os.path.join(config.output_dir, "gandalf_vectors.txt")
    pairs_path = os.path.join(config.output_dir, "gandalf_pairs.tsv")
    save_augmentation_set(aug, vec_path, pairs_path)
    final = train_log.records[-1] if train_log.records else None
    if final is not None:
        print(f"trained {len(train_log)} steps, final d_loss={final.d_loss:.4f} "
              f"g_loss={final.g_loss:.4f}")
    print(f"wrote {len(aug)} GANDALF pairs to {pairs_path}")


def cmd_extend(args):
    config = _build_config(args)
    if config.extension is None or config.taxonomy_path is None:
        raise HyperAugError("extend requires extension.strategy and taxonomy_path")
    tax = load_taxonomy(config.taxonomy_path)
    os.makedirs(config.output_dir, exist_ok=True)
    for name, path in sorted(config.dataset_paths.items()):
        ds = parse_pairs(path, name=name)
        ext_cfg = replace(config.extension,
                          seed=derive_seed(config.seed, name, "extension"))
        extended = extend_dataset(ds, tax, ext_cfg)
        out_path = os.path.join(config.output_dir, f"{name}_extended.tsv")
        write_pairs(extended, out_path)
        print(f"{name}: {len(ds)} -> {len(extended)} pairs, wrote {out_path}")


def cmd_neighbors(args):
    config = _build_config(args)
    space = load_space(config.space_path)
    os.makedirs(config.output_dir, exist_ok=True)
    csv_path = os.path.join(config.output_dir, "neighbors.csv")
    if args.aug_vectors and args.aug_pairs:
        aug = load_augmentation_set(args.aug_vectors, args.aug_pairs)
    else:
        aug = AugmentationSet(entries=[], dim=space.dim)
    report = neighbor_report(space, aug, args.k)
    write_neighbor_csv(report, csv_path, config.config_hash())
    print(f"wrote {csv_path}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hyperaug",
        description="Hypernymy detection with automatic data augmentation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-matrix", help="run the experiment matrix")
    _add_common(p)
    p.set_defaults(func=cmd_run_matrix)

    p = sub.add_parser("sweep-amount", help="sweep augmentation amounts")
    _add_common(p)
    p.add_argument("--amounts", default="0,10,20,50",
                   help="comma-separated amounts (0 added if missing)")
    p.set_defaults(func=cmd_sweep_amount)

    p = sub.add_parser("ablate-hyper-only", help="hypernym-only ablation")
    _add_common(p)
    p.set_defaults(func=cmd_ablate_hyper_only)

    p = sub.add_parser("augment-compose", help="generate compose augmentation")
    _add_common(p)
    p.set_defaults(func=cmd_augment_compose)

    p = sub.add_parser("augment-gandalf", help="train GANDALF and sample pairs")
    _add_common(p)
    p.set_defaults(func=cmd_augment_gandalf)

    p = sub.add_parser("extend", help="taxonomy-based dataset extension")
    _add_common(p)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("neighbors", help="nearest-neighbor report")
    _add_common(p)
    p.add_argument("--aug-vectors", default=None,
                   help="embedding-format file of synthetic vectors")
    p.add_argument("--aug-pairs", default=None,
                   help="pairs TSV referencing the synthetic vectors")
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_neighbors)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print("ERROR " + json.dumps({"type": type(exc).__name__,
                                     "message": str(exc)}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
