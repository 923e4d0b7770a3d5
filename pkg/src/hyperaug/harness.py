"""Experiment driver: matrix runs, augmentation-amount sweeps, the
hypernym-only ablation and neighbor reports, all emitting deterministic CSVs.

Configs are flat key paths (dots group related keys) loaded from YAML; see
README for the schema. Every CSV carries a config-hash column binding rows
to the configuration that produced them.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .classifiers import (FeedforwardSpec, TrainSpec, aggregate, derive_seed,
                          evaluate, featurize_pairs, ff_fit, lr_fit)
from .compose import (ComposeConfig, compose_candidates, load_compounds)
from .datasets import PairDataset, filter_to_vocabulary, parse_pairs, stratified_folds
from .embeddings import load_space
from .errors import ConfigError, DataError
from .gandalf import GanConfig, gan_sample, gan_train, load_generator
from .taxonomy import ExtensionConfig, extend_dataset, load_taxonomy

log = logging.getLogger(__name__)

AUGMENTATION_CONDITIONS = ("none", "compose", "gandalf", "both", "extension")


@dataclass
class ExperimentConfig:
    space_path: str
    dataset_paths: dict  # name -> path
    taxonomy_path: str | None = None
    compounds_path: str | None = None
    generator_path: str | None = None
    classifier: str = "lr"
    aggregation: str = "concat_asym"
    augmentations: tuple = ("none",)
    augmentation_amount: int = 50
    folds: int = 5
    workers: int = 1
    lr_l2_strength: float = 0.001
    lr_max_iter: int = 500
    lr_tol: float = 1e-6
    ff_spec: FeedforwardSpec = field(default_factory=FeedforwardSpec)
    train: TrainSpec = field(default_factory=TrainSpec)
    gan: GanConfig = field(default_factory=GanConfig)
    compose_mode: str = "additive"
    compose_negative_strategy: str = "none"
    extension: ExtensionConfig | None = None
    seed: int = 0
    output_dir: str = "out"
    render_figures: bool = True

    def __post_init__(self):
        if self.classifier not in ("lr", "ff"):
            raise ConfigError(f"classifier must be lr or ff, got {self.classifier!r}")
        for aug in self.augmentations:
            if aug not in AUGMENTATION_CONDITIONS:
                raise ConfigError(f"unknown augmentation condition {aug!r}")
        if not self.dataset_paths:
            raise ConfigError("at least one dataset path is required")
        needs_compose = any(a in ("compose", "both") for a in self.augmentations)
        if needs_compose and not self.compounds_path:
            raise ConfigError("compose augmentation requires compounds_path")
        if "extension" in self.augmentations:
            if not self.taxonomy_path:
                raise ConfigError("extension requires taxonomy_path")
            if self.extension is None:
                self.extension = ExtensionConfig(strategy="closure_positives",
                                                 max_pairs=self.augmentation_amount)

    def to_flat_dict(self) -> dict:
        d = {
            "space_path": self.space_path,
            "taxonomy_path": self.taxonomy_path,
            "compounds_path": self.compounds_path,
            "generator_path": self.generator_path,
            "classifier": self.classifier,
            "aggregation": self.aggregation,
            "augmentations": ",".join(self.augmentations),
            "augmentation_amount": self.augmentation_amount,
            "folds": self.folds,
            "lr.l2_strength": self.lr_l2_strength,
            "lr.max_iter": self.lr_max_iter,
            "lr.tol": self.lr_tol,
            "ff.hidden_sizes": "-".join(str(h) for h in self.ff_spec.hidden_sizes),
            "ff.activation": self.ff_spec.activation,
            "ff.dropout": self.ff_spec.dropout,
            "train.epochs": self.train.epochs,
            "train.patience": self.train.early_stop_patience,
            "train.validation_fraction": self.train.validation_fraction,
            "train.learning_rate": self.train.learning_rate,
            "train.batch_size": self.train.batch_size,
            "gan.noise_dim": self.gan.noise_dim,
            "gan.learning_rate": self.gan.learning_rate,
            "gan.beta1": self.gan.beta1,
            "gan.beta2": self.gan.beta2,
            "gan.dropout_rate": self.gan.dropout_rate,
            "gan.real_label_range": list(self.gan.real_label_range),
            "gan.fake_label_range": list(self.gan.fake_label_range),
            "gan.label_flip_prob": self.gan.label_flip_prob,
            "gan.batch_size": self.gan.batch_size,
            "gan.steps": self.gan.steps,
            "gan.conditional": self.gan.conditional,
            "compose.mode": self.compose_mode,
            "compose.negative_strategy": self.compose_negative_strategy,
            "seed": self.seed,
        }
        for name, path in sorted(self.dataset_paths.items()):
            d[f"dataset.{name}"] = path
        if self.extension is not None:
            d["extension.strategy"] = self.extension.strategy
            d["extension.max_pairs"] = self.extension.max_pairs
        return d

    def config_hash(self) -> str:
        """Hash of everything that affects results (output_dir and worker
        count excluded — neither changes what gets computed)."""
        blob = json.dumps(self.to_flat_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def config_from_dict(flat: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from flat key paths (README schema)."""
    flat = dict(flat)
    dataset_paths = {}
    for key in list(flat):
        if key.startswith("dataset."):
            dataset_paths[key.split(".", 1)[1]] = flat.pop(key)

    def take(key, default=None, cast=None):
        val = flat.pop(key, default)
        if cast is not None and val is not None:
            val = cast(val)
        return val

    ff_spec = FeedforwardSpec(
        hidden_sizes=tuple(
            int(h) for h in str(take("ff.hidden_sizes", "200-100-50")).split("-")),
        activation=take("ff.activation", "tanh"),
        dropout=take("ff.dropout", 0.0, float),
        aggregation=flat.get("aggregation", "concat_asym"),
    )
    train = TrainSpec(
        epochs=take("train.epochs", 30, int),
        early_stop_patience=take("train.patience", 5, int),
        validation_fraction=take("train.validation_fraction", 0.1, float),
        learning_rate=take("train.learning_rate", 0.01, float),
        batch_size=take("train.batch_size", 64, int),
    )
    gan = GanConfig(
        noise_dim=take("gan.noise_dim", 0, int),
        learning_rate=take("gan.learning_rate", 0.0002, float),
        beta1=take("gan.beta1", 0.5, float),
        beta2=take("gan.beta2", 0.999, float),
        dropout_rate=take("gan.dropout_rate", 0.3, float),
        real_label_range=tuple(take("gan.real_label_range", (0.8, 1.0))),
        fake_label_range=tuple(take("gan.fake_label_range", (0.0, 0.2))),
        label_flip_prob=take("gan.label_flip_prob", 0.05, float),
        batch_size=take("gan.batch_size", 64, int),
        steps=take("gan.steps", 2000, int),
        conditional=bool(take("gan.conditional", True)),
    )
    extension = None
    if "extension.strategy" in flat:
        extension = ExtensionConfig(
            strategy=take("extension.strategy"),
            max_pairs=take("extension.max_pairs", 50, int),
        )
    augmentations = take("augmentations", "none")
    if isinstance(augmentations, str):
        augmentations = tuple(a.strip() for a in augmentations.split(","))
    else:
        augmentations = tuple(augmentations)
    cfg = ExperimentConfig(
        space_path=take("space_path"),
        dataset_paths=dataset_paths,
        taxonomy_path=take("taxonomy_path"),
        compounds_path=take("compounds_path"),
        generator_path=take("generator_path"),
        classifier=take("classifier", "lr"),
        aggregation=take("aggregation", "concat_asym"),
        augmentations=augmentations,
        augmentation_amount=take("augmentation_amount", 50, int),
        folds=take("folds", 5, int),
        workers=take("workers", 1, int),
        lr_l2_strength=take("lr.l2_strength", 0.001, float),
        lr_max_iter=take("lr.max_iter", 500, int),
        lr_tol=take("lr.tol", 1e-6, float),
        ff_spec=ff_spec,
        train=train,
        gan=gan,
        compose_mode=take("compose.mode", "additive"),
        compose_negative_strategy=take("compose.negative_strategy", "none"),
        extension=extension,
        seed=take("seed", 0, int),
        output_dir=take("output_dir", "out"),
        render_figures=bool(take("render_figures", True)),
    )
    if cfg.space_path is None:
        raise ConfigError("space_path is required")
    unknown = set(flat)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def load_config(path, overrides=None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        flat = yaml.safe_load(fh) or {}
    if not isinstance(flat, dict):
        raise ConfigError("config file must be a mapping of flat key paths")
    if overrides:
        flat.update(overrides)
    return config_from_dict(flat)


# ------------------------------------------------------------- leakage audit

@dataclass
class LeakageRecord:
    dataset: str
    condition: str
    fold: int
    added_token_sets: list        # source-token sets of every added example
    eval_tokens: set


def audit_leakage(records) -> int:
    """Re-derive the intersection of every added example's source tokens with
    its evaluation fold's tokens; returns the number of violations."""
    violations = 0
    for rec in records:
        for tokens in rec.added_token_sets:
            if set(tokens) & rec.eval_tokens:
                violations += 1
    return violations


# ---------------------------------------------------------------- result rows

@dataclass
class ResultRow:
    dataset: str
    space: str
    classifier: str
    augmentation: str
    amount: int
    accuracy: float
    delta_vs_baseline: float
    seed: int


MATRIX_HEADER = ["dataset", "space", "classifier", "augmentation", "amount",
                 "accuracy", "delta_vs_baseline", "seed", "config_hash"]


def write_matrix_csv(rows, path, config_hash):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MATRIX_HEADER)
        for r in rows:
            writer.writerow([r.dataset, r.space, r.classifier, r.augmentation,
                             r.amount, f"{r.accuracy:.6f}",
                             f"{r.delta_vs_baseline:.6f}", r.seed, config_hash])


# --------------------------------------------------------------- shared setup

class _RunContext:
    """Loaded inputs shared by all cells of one run."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.space = load_space(config.space_path,
                                name=os.path.basename(str(config.space_path)))
        self.taxonomy = (load_taxonomy(config.taxonomy_path)
                         if config.taxonomy_path else None)
        self.compounds = (load_compounds(config.compounds_path)
                          if config.compounds_path else None)
        self.generator = (load_generator(config.generator_path)
                          if config.generator_path else None)
        self.datasets = {}
        for name, path in sorted(config.dataset_paths.items()):
            ds = parse_pairs(path, name=name)
            ds, dropped = filter_to_vocabulary(ds, self.space)
            if dropped:
                log.info("dataset %s: dropped %d out-of-vocabulary pairs",
                         name, dropped)
            if not ds.pairs:
                raise DataError(f"dataset {name} empty after vocabulary filter")
            self.datasets[name] = ds

    def fold_plan(self, name):
        return stratified_folds(self.datasets[name], self.config.folds,
                                seed=derive_seed(self.config.seed, name, "folds"))

    def compose_entries(self, name):
        """Full compose candidate list in a seeded random order (nested prefixes)."""
        cfg = ComposeConfig(mode=self.config.compose_mode,
                            negative_strategy=self.config.compose_negative_strategy,
                            include_transitive=True,
                            seed=derive_seed(self.config.seed, name, "compose"))
        entries = compose_candidates(self.space, self.compounds, self.taxonomy, cfg)
        rng = np.random.default_rng(derive_seed(self.config.seed, name, "compose-order"))
        perm = rng.permutation(len(entries))
        return [entries[i] for i in perm]

    def gandalf_entries(self, name, train_pairs, fold, amount):
        """GAN-generated entries for one training fold, in generation order."""
        positives = [p for p in train_pairs if p.label]
        vec_pairs = [(self.space.vector(p.hyponym), self.space.vector(p.hypernym))
                     for p in positives]
        gen = self.generator
        if gen is None:
            gan_cfg = replace(self.config.gan,
                              seed=derive_seed(self.config.seed, name, "gan", fold),
                              batch_size=min(self.config.gan.batch_size,
                                             max(1, len(vec_pairs) // 2)))
            gen, _, _ = gan_train(vec_pairs, gan_cfg)
        anchors = np.array([v for v, _ in vec_pairs])
        tokens = [p.hyponym for p in positives]
        per_anchor = max(1, -(-amount // max(1, len(anchors))))
        aug = gan_sample(gen, anchors, per_anchor,
                         seed=derive_seed(self.config.seed, name, "gan-sample", fold),
                         anchor_tokens=tokens)
        return aug.entries


def _fit_and_score(config, X_tr, y_tr, X_te, y_te, seed):
    if config.classifier == "lr":
        model = lr_fit(X_tr, y_tr, l2_strength=config.lr_l2_strength,
                       tol=config.lr_tol, max_iter=config.lr_max_iter)
    else:
        spec = replace(config.ff_spec, aggregation=config.aggregation)
        model, _ = ff_fit(spec, replace(config.train, seed=seed), X_tr, y_tr)
    return evaluate(model, X_te, y_te)


def _entry_features(entries, aggregation):
    hypos = np.array([e.hypo_vector for e in entries])
    hypers = np.array([e.hyper_vector for e in entries])
    labels = np.array([1 if e.label else 0 for e in entries])
    return aggregate(aggregation, hypos, hypers), labels


def _eval_condition(ctx: _RunContext, name: str, condition: str, amount: int,
                    aggregation: str | None = None, seed_scope: str = ""):
    """Mean CV accuracy of one (dataset, condition) cell plus audit records."""
    config = ctx.config
    ds = ctx.datasets[name]
    plan = ctx.fold_plan(name)
    agg = aggregation or config.aggregation
    compose_pool = (ctx.compose_entries(name)
                    if condition in ("compose", "both") else [])
    accs = []
    audit_records = []
    clamped = False
    for fold in range(config.folds):
        tr_pairs = [ds.pairs[i] for i in plan.complement_indices(fold)]
        te_pairs = [ds.pairs[i] for i in plan.fold_indices(fold)]
        eval_tokens = {t for p in te_pairs for t in (p.hyponym, p.hypernym)}

        X_tr, y_tr = featurize_pairs(tr_pairs, ctx.space, agg)
        te_X, te_y = featurize_pairs(te_pairs, ctx.space, agg)

        added_token_sets = []
        extra_entries = []
        if condition in ("compose", "both"):
            extra_entries.extend(e for e in compose_pool
                                 if not (e.source_tokens & eval_tokens))
        if condition in ("gandalf", "both"):
            gan_entries = ctx.gandalf_entries(name, tr_pairs, fold, amount)
            extra_entries.extend(e for e in gan_entries
                                 if not (e.source_tokens & eval_tokens))
        if condition in ("compose", "gandalf", "both"):
            if amount > len(extra_entries):
                clamped = True
            extra_entries = extra_entries[:amount]
            if extra_entries:
                X_aug, y_aug = _entry_features(extra_entries, agg)
                X_tr = np.vstack([X_tr, X_aug])
                y_tr = np.concatenate([y_tr, y_aug])
            added_token_sets = [e.source_tokens for e in extra_entries]
        elif condition == "extension":
            train_ds = PairDataset(name=name, pairs=tr_pairs)
            ext_cfg = replace(config.extension,
                              exclusion_tokens=set(eval_tokens),
                              seed=derive_seed(config.seed, name, "extension", fold))
            extended = extend_dataset(train_ds, ctx.taxonomy, ext_cfg)
            new_pairs = [p for p in extended.pairs if p.provenance == "extension"]
            in_vocab = [p for p in new_pairs
                        if p.hyponym in ctx.space and p.hypernym in ctx.space]
            if in_vocab:
                X_ext, y_ext = featurize_pairs(in_vocab, ctx.space, agg)
                X_tr = np.vstack([X_tr, X_ext])
                y_tr = np.concatenate([y_tr, y_ext])
            added_token_sets = [frozenset({p.hyponym, p.hypernym})
                                for p in in_vocab]

        audit_records.append(LeakageRecord(
            dataset=name, condition=condition, fold=fold,
            added_token_sets=added_token_sets, eval_tokens=eval_tokens))
        seed = derive_seed(config.seed, name, seed_scope, condition, fold)
        accs.append(_fit_and_score(config, X_tr, y_tr, te_X, te_y, seed))
    if clamped:
        log.warning("dataset %s condition %s: amount %d exceeds available "
                    "candidates, clamped", name, condition, amount)
    return float(np.mean(accs)), audit_records


@dataclass
class RunResult:
    rows: list
    audit_records: list
    config_hash: str

    def audit_violations(self) -> int:
        return audit_leakage(self.audit_records)


def run_matrix(config: ExperimentConfig, out_path=None) -> RunResult:
    """One row per (dataset x augmentation condition); baseline always included."""
    ctx = _RunContext(config)
    conditions = ["none"] + [a for a in config.augmentations if a != "none"]
    cells = [(name, cond) for name in sorted(ctx.datasets) for cond in conditions]

    def eval_cell(cell):
        name, cond = cell
        amount = 0 if cond == "none" else config.augmentation_amount
        acc, audit = _eval_condition(ctx, name, cond, amount)
        return acc, audit

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(eval_cell, cells))
    else:
        results = [eval_cell(c) for c in cells]

    rows = []
    audit_records = []
    baselines = {}
    for (name, cond), (acc, audit) in zip(cells, results):
        if cond == "none":
            baselines[name] = acc
        audit_records.extend(audit)
    for (name, cond), (acc, _) in zip(cells, results):
        amount = 0 if cond == "none" else config.augmentation_amount
        rows.append(ResultRow(
            dataset=name, space=ctx.space.name, classifier=config.classifier,
            augmentation=cond, amount=amount, accuracy=acc,
            delta_vs_baseline=acc - baselines[name], seed=config.seed))
    result = RunResult(rows=rows, audit_records=audit_records,
                       config_hash=config.config_hash())
    if out_path is not None:
        write_matrix_csv(rows, out_path, result.config_hash)
    return result


def sweep_amount(config: ExperimentConfig, amounts, out_path=None) -> RunResult:
    """Accuracy per augmentation amount per dataset; subsets are nested so the
    sweep varies quantity only."""
    amounts = list(amounts)
    if amounts != sorted(amounts):
        raise ConfigError("amounts must be sorted ascending")
    if 0 not in amounts:
        raise ConfigError("amounts must include 0 (the baseline)")
    conditions = [a for a in config.augmentations if a != "none"]
    condition = conditions[0] if conditions else "compose"
    ctx = _RunContext(config)
    rows = []
    audit_records = []
    for name in sorted(ctx.datasets):
        baseline = None
        for amount in amounts:
            cond = "none" if amount == 0 else condition
            acc, audit = _eval_condition(ctx, name, cond, amount)
            audit_records.extend(audit)
            if baseline is None:
                baseline = acc
            rows.append(ResultRow(
                dataset=name, space=ctx.space.name, classifier=config.classifier,
                augmentation=cond, amount=amount, accuracy=acc,
                delta_vs_baseline=acc - baseline, seed=config.seed))
    result = RunResult(rows=rows, audit_records=audit_records,
                       config_hash=config.config_hash())
    if out_path is not None:
        write_matrix_csv(rows, out_path, result.config_hash)
    return result


ABLATION_HEADER = ["dataset", "space", "classifier", "variant", "augmentation",
                   "amount", "accuracy", "seed", "config_hash"]


def ablation_hyper_only(config: ExperimentConfig, out_path=None):
    """Compare the full aggregation against hypernym-only, with and without
    each augmentation condition, on shared folds and seeds."""
    ctx = _RunContext(config)
    conditions = ["none"] + [a for a in config.augmentations if a != "none"]
    rows = []
    audit_records = []
    for name in sorted(ctx.datasets):
        for variant, agg in (("full", config.aggregation),
                             ("hyper_only", "hyper_only")):
            for cond in conditions:
                amount = 0 if cond == "none" else config.augmentation_amount
                # seed scope excludes the variant so folds/seeds match across cells
                acc, audit = _eval_condition(ctx, name, cond, amount,
                                             aggregation=agg)
                audit_records.extend(audit)
                rows.append({"dataset": name, "space": ctx.space.name,
                             "classifier": config.classifier, "variant": variant,
                             "augmentation": cond, "amount": amount,
                             "accuracy": acc, "seed": config.seed})
    result = RunResult(rows=rows, audit_records=audit_records,
                       config_hash=config.config_hash())
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(ABLATION_HEADER)
            for r in rows:
                writer.writerow([r["dataset"], r["space"], r["classifier"],
                                 r["variant"], r["augmentation"], r["amount"],
                                 f"{r['accuracy']:.6f}", r["seed"],
                                 result.config_hash])
    return result


NEIGHBOR_HEADER = ["query_token", "rank", "neighbor", "cosine", "config_hash"]


def write_neighbor_csv(report, path, config_hash):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(NEIGHBOR_HEADER)
        for token, neighbors in report:
            for rank, (neighbor, cos) in enumerate(neighbors, start=1):
                writer.writerow([token, rank, neighbor, f"{cos:.6f}", config_hash])
