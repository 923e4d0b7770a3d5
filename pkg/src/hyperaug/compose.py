"""Compositional augmentation: modifier-noun compounds plus hypernym transitivity.

A compound like "small dog" is assumed to be a hyponym of its head noun and,
transitively, of every taxonomy ancestor of that noun.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingSpace, save_space
from .errors import DuplicateError, LookupError_, ParseError, ShapeError
from .taxonomy import Taxonomy

log = logging.getLogger(__name__)

COMPOSE_MODES = ("additive", "mean")
NEGATIVE_STRATEGIES = ("none", "reversed", "random_noun")


@dataclass(frozen=True)
class CompoundSpec:
    modifier: str
    noun: str

    def __post_init__(self):
        if self.modifier == self.noun:
            raise ValueError("modifier and noun must differ")


@dataclass
class ComposeConfig:
    mode: str = "additive"
    max_pairs: int = 1_000_000
    include_transitive: bool = True
    negative_strategy: str = "none"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in COMPOSE_MODES:
            raise ValueError(f"unknown compose mode {self.mode!r}")
        if self.negative_strategy not in NEGATIVE_STRATEGIES:
            raise ValueError(f"unknown negative strategy {self.negative_strategy!r}")
        if self.max_pairs < 1:
            raise ValueError("max_pairs must be >= 1")


@dataclass(frozen=True)
class AugmentationEntry:
    hypo_vector: np.ndarray
    hyper_vector: np.ndarray
    label: bool
    hypo_token: str
    hyper_token: str
    provenance: str
    # real-vocabulary words this entry was derived from, for leakage audits
    source_tokens: frozenset = frozenset()


@dataclass
class AugmentationSet:
    entries: list[AugmentationEntry] = field(default_factory=list)
    dim: int = 0

    def __len__(self):
        return len(self.entries)

    def __post_init__(self):
        # one synthetic token must never name two different vectors
        seen = {}
        for e in self.entries:
            for tok, vec in ((e.hypo_token, e.hypo_vector),
                             (e.hyper_token, e.hyper_vector)):
                prev = seen.get(tok)
                if prev is not None and not np.array_equal(prev, vec):
                    raise DuplicateError(f"token {tok!r} bound to two vectors")
                seen[tok] = vec
        for e in self.entries:
            if self.dim and (len(e.hypo_vector) != self.dim
                             or len(e.hyper_vector) != self.dim):
                raise ShapeError("augmentation vectors must share one dimension")
            if not (np.all(np.isfinite(e.hypo_vector))
                    and np.all(np.isfinite(e.hyper_vector))):
                raise ValueError("non-finite augmentation vector")


def compose(space: EmbeddingSpace, spec: CompoundSpec, mode: str = "additive"):
    """Compose a modifier-noun compound vector: sum or mean of the two rows."""
    v_mod = space.vector(spec.modifier)
    v_noun = space.vector(spec.noun)
    if mode == "additive":
        return v_mod + v_noun
    if mode == "mean":
        return (v_mod + v_noun) / 2.0
    raise ValueError(f"unknown compose mode {mode!r}")


def load_compounds(path) -> list[CompoundSpec]:
    """Parse "modifier<TAB>noun" lines."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(f"expected 2 tab-separated fields, got "
                                 f"{len(fields)}", line_number=lineno)
            out.append(CompoundSpec(fields[0], fields[1]))
    return out


def compose_candidates(space: EmbeddingSpace, compounds, tax: Taxonomy | None,
                       config: ComposeConfig) -> list[AugmentationEntry]:
    """Full candidate set before truncation: one positive per compound per
    target in {noun} | ancestors(noun), plus configured negatives."""
    entries = []
    skipped = 0
    rng = np.random.default_rng(config.seed)
    nouns_in_vocab = sorted({c.noun for c in compounds if c.noun in space})
    for spec in compounds:
        if spec.modifier not in space or spec.noun not in space:
            skipped += 1
            continue
        compound_vec = compose(space, spec, config.mode)
        compound_token = f"{spec.modifier}_{spec.noun}"
        sources = frozenset({spec.modifier, spec.noun})
        targets = [spec.noun]
        if config.include_transitive and tax is not None and spec.noun in tax.nodes:
            targets.extend(sorted(tax.ancestors(spec.noun)))
        for target in targets:
            if target not in space:
                continue
            entries.append(AugmentationEntry(
                hypo_vector=compound_vec,
                hyper_vector=space.vector(target),
                label=True,
                hypo_token=compound_token,
                hyper_token=target,
                provenance="compose_aug",
                source_tokens=sources | {target},
            ))
        if config.negative_strategy == "reversed":
            entries.append(AugmentationEntry(
                hypo_vector=space.vector(spec.noun),
                hyper_vector=compound_vec,
                label=False,
                hypo_token=spec.noun,
                hyper_token=compound_token,
                provenance="compose_aug",
                source_tokens=sources,
            ))
        elif config.negative_strategy == "random_noun":
            pool = [n for n in nouns_in_vocab if n != spec.noun]
            if pool:
                other = pool[int(rng.integers(len(pool)))]
                entries.append(AugmentationEntry(
                    hypo_vector=compound_vec,
                    hyper_vector=space.vector(other),
                    label=False,
                    hypo_token=compound_token,
                    hyper_token=other,
                    provenance="compose_aug",
                    source_tokens=sources | {other},
                ))
    if skipped:
        log.info("skipped %d compounds with out-of-vocabulary members", skipped)
    return entries


def truncate_candidates(entries, max_pairs: int, seed: int):
    """Seeded uniform subset of the candidates, no quality ordering.

    The seeded permutation makes subsets nested: the first n of the permuted
    list for n < m is a subset of the first m.
    """
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(entries))
    return [entries[i] for i in perm[:max_pairs]]


def generate_compose_pairs(space: EmbeddingSpace, compounds, tax: Taxonomy | None,
                           config: ComposeConfig) -> AugmentationSet:
    """Compose-based augmentation set, truncated to max_pairs per the config."""
    if not compounds:
        raise ValueError("compounds must be non-empty")
    entries = compose_candidates(space, compounds, tax, config)
    if len(entries) > config.max_pairs:
        entries = truncate_candidates(entries, config.max_pairs, config.seed)
    return AugmentationSet(entries=entries, dim=space.dim)


def load_augmentation_set(vectors_path, pairs_path) -> AugmentationSet:
    """Inverse of save_augmentation_set."""
    from .embeddings import load_space
    space = load_space(vectors_path)
    entries = []
    with open(pairs_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ParseError(f"expected 4 fields, got {len(fields)}",
                                 line_number=lineno)
            hypo_tok, hyper_tok, raw_label, provenance = fields
            entries.append(AugmentationEntry(
                hypo_vector=space.vector(hypo_tok),
                hyper_vector=space.vector(hyper_tok),
                label=raw_label == "1",
                hypo_token=hypo_tok,
                hyper_token=hyper_tok,
                provenance=provenance,
            ))
    return AugmentationSet(entries=entries, dim=space.dim)


def save_augmentation_set(aug: AugmentationSet, vectors_path, pairs_path):
    """Persist an augmentation set: synthetic vectors in the embedding text
    format plus a pairs TSV referencing those tokens."""
    tokens = []
    rows = []
    seen = {}
    for e in aug.entries:
        for tok, vec in ((e.hypo_token, e.hypo_vector),
                         (e.hyper_token, e.hyper_vector)):
            if tok in seen:
                if not np.array_equal(seen[tok], vec):
                    raise DuplicateError(
                        f"token {tok!r} bound to two different vectors")
                continue
            seen[tok] = vec
            tokens.append(tok)
            rows.append(vec)
    space = EmbeddingSpace(tokens, np.array(rows).reshape(len(rows), aug.dim))
    save_space(space, vectors_path)
    with open(pairs_path, "w", encoding="utf-8", newline="\n") as fh:
        for e in aug.entries:
            fh.write(f"{e.hypo_token}\t{e.hyper_token}\t"
                     f"{1 if e.label else 0}\t{e.provenance}\n")
