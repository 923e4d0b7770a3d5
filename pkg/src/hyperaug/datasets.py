"""Hypernymy pair datasets: parsing, vocabulary filtering, stratified folds."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, DuplicateError, ParseError

PROVENANCES = ("original", "extension", "compose_aug", "gandalf_aug")
_POSITIVE_LABELS = {"1", "true"}
_NEGATIVE_LABELS = {"0", "false"}


@dataclass(frozen=True)
class LabeledPair:
    hyponym: str
    hypernym: str
    label: bool
    provenance: str = "original"


@dataclass
class PairDataset:
    name: str
    pairs: list[LabeledPair] = field(default_factory=list)
    split: str = "unsplit"

    def __len__(self):
        return len(self.pairs)

    def tokens(self) -> set[str]:
        out = set()
        for p in self.pairs:
            out.add(p.hyponym)
            out.add(p.hypernym)
        return out

    def positives(self):
        return [p for p in self.pairs if p.label]

    def negatives(self):
        return [p for p in self.pairs if not p.label]


def parse_pairs(path, name: str | None = None) -> PairDataset:
    """Parse a TSV of "hyponym<TAB>hypernym<TAB>label" lines.

    Labels are 1/0/true/false. An optional fourth column carries provenance.
    """
    pairs = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) not in (3, 4):
                raise ParseError(f"expected 3 or 4 tab-separated fields, got "
                                 f"{len(fields)}", line_number=lineno)
            hypo, hyper, raw_label = fields[0], fields[1], fields[2].strip().lower()
            if raw_label in _POSITIVE_LABELS:
                label = True
            elif raw_label in _NEGATIVE_LABELS:
                label = False
            else:
                raise ParseError(f"bad label {fields[2]!r}", line_number=lineno)
            provenance = fields[3] if len(fields) == 4 else "original"
            if provenance not in PROVENANCES:
                raise ParseError(f"unknown provenance {provenance!r}",
                                 line_number=lineno)
            if provenance == "original" and hypo == hyper:
                raise ParseError(f"self-pair {hypo!r}", line_number=lineno)
            key = (hypo, hyper)
            if key in seen:
                raise DuplicateError(f"duplicate pair {key} at line {lineno}")
            seen.add(key)
            pairs.append(LabeledPair(hypo, hyper, label, provenance))
    if name is None:
        name = str(path)
    return PairDataset(name=name, pairs=pairs)


def write_pairs(dataset: PairDataset, path):
    """Emit the TSV pair format with the provenance column appended."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in dataset.pairs:
            fh.write(f"{p.hyponym}\t{p.hypernym}\t{1 if p.label else 0}\t{p.provenance}\n")


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray  # per-pair fold index in [0, k)

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments == fold)[0]

    def complement_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments != fold)[0]


def stratified_folds(dataset: PairDataset, k: int, seed: int) -> FoldPlan:
    """Deterministic stratified k-fold plan; per-fold class counts within +-1
    of proportional."""
    if k < 1:
        raise ValueError("k must be >= 1")
    labels = np.array([p.label for p in dataset.pairs])
    assignments = np.full(len(dataset.pairs), -1, dtype=int)
    rng = np.random.default_rng(seed)
    for cls in (True, False):
        idx = np.nonzero(labels == cls)[0]
        if len(idx) < k:
            raise DataError(
                f"class {cls} has {len(idx)} members, need >= k={k} for stratification")
        perm = rng.permutation(len(idx))
        for pos, j in enumerate(perm):
            assignments[idx[j]] = pos % k
    return FoldPlan(k=k, assignments=assignments)


def write_fold_plan(plan: FoldPlan, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pair_index", "fold"])
        for i, f in enumerate(plan.assignments):
            writer.writerow([i, int(f)])


def filter_to_vocabulary(dataset: PairDataset, space) -> tuple[PairDataset, int]:
    """Drop pairs with out-of-vocabulary tokens; report the dropped count."""
    kept = [p for p in dataset.pairs if p.hyponym in space and p.hypernym in space]
    dropped = len(dataset.pairs) - len(kept)
    return PairDataset(name=dataset.name, pairs=kept, split=dataset.split), dropped
