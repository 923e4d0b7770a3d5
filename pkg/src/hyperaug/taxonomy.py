"""Hypernym taxonomy: DAG over lemmas, ancestor closures, dataset extension."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .datasets import LabeledPair, PairDataset
from .errors import CycleError, LookupError_, ParseError

log = logging.getLogger(__name__)

EXTENSION_STRATEGIES = (
    "closure_positives",
    "sibling_negatives",
    "random_negatives",
    "reversed_negatives",
)


class Taxonomy:
    """Directed acyclic graph of child -> parent (IS-A) edges."""

    def __init__(self, edges):
        self.parents: dict[str, set[str]] = {}
        self.children: dict[str, set[str]] = {}
        self.nodes: set[str] = set()
        for child, parent in edges:
            if child == parent:
                raise ParseError(f"self-edge on {child!r}")
            self.nodes.add(child)
            self.nodes.add(parent)
            self.parents.setdefault(child, set()).add(parent)
            self.children.setdefault(parent, set()).add(child)
        cycle = self._find_cycle()
        if cycle is not None:
            raise CycleError(f"taxonomy contains a cycle: {' -> '.join(cycle)}",
                             cycle=cycle)

    def _find_cycle(self):
        # iterative DFS over parent edges with a grey/black coloring
        color = {}
        for start in self.nodes:
            if color.get(start) == "black":
                continue
            stack = [(start, iter(self.parents.get(start, ())))]
            color[start] = "grey"
            path = [start]
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    c = color.get(nxt)
                    if c == "grey":
                        return path[path.index(nxt):] + [nxt]
                    if c is None:
                        color[nxt] = "grey"
                        path.append(nxt)
                        stack.append((nxt, iter(self.parents.get(nxt, ()))))
                        advanced = True
                        break
                if not advanced:
                    color[node] = "black"
                    stack.pop()
                    path.pop()
        return None

    def ancestors(self, node: str) -> set[str]:
        """Transitive closure of parents, excluding the node itself."""
        if node not in self.nodes:
            raise LookupError_(f"node {node!r} not in taxonomy")
        out = set()
        frontier = list(self.parents.get(node, ()))
        while frontier:
            n = frontier.pop()
            if n in out:
                continue
            out.add(n)
            frontier.extend(self.parents.get(n, ()))
        return out

    def siblings(self, node: str) -> set[str]:
        """Nodes sharing at least one parent with node, excluding node."""
        if node not in self.nodes:
            raise LookupError_(f"node {node!r} not in taxonomy")
        out = set()
        for parent in self.parents.get(node, ()):
            out |= self.children.get(parent, set())
        out.discard(node)
        return out


def load_taxonomy(path) -> Taxonomy:
    """Parse "child<TAB>parent" edge lines into a validated acyclic taxonomy."""
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(f"expected 2 tab-separated fields, got "
                                 f"{len(fields)}", line_number=lineno)
            edges.append((fields[0], fields[1]))
    return Taxonomy(edges)


def ancestors(tax: Taxonomy, node: str) -> set[str]:
    return tax.ancestors(node)


@dataclass
class ExtensionConfig:
    strategy: str
    max_pairs: int
    exclusion_tokens: set = field(default_factory=set)
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in EXTENSION_STRATEGIES:
            raise ValueError(f"unknown extension strategy {self.strategy!r}")
        if self.max_pairs < 1:
            raise ValueError("max_pairs must be >= 1")
        self.exclusion_tokens = set(self.exclusion_tokens)


def _extension_candidates(dataset: PairDataset, tax: Taxonomy,
                          config: ExtensionConfig, rng):
    tokens = sorted(dataset.tokens() & tax.nodes)
    existing = {(p.hyponym, p.hypernym) for p in dataset.pairs}
    excl = config.exclusion_tokens
    cands = []

    def ok(x, y):
        return (x != y and (x, y) not in existing
                and x not in excl and y not in excl)

    if config.strategy == "closure_positives":
        for tok in tokens:
            for anc in sorted(tax.ancestors(tok)):
                if ok(tok, anc):
                    cands.append(LabeledPair(tok, anc, True, "extension"))
    elif config.strategy == "sibling_negatives":
        for tok in tokens:
            anc = tax.ancestors(tok)
            for sib in sorted(tax.siblings(tok)):
                if sib in anc or tok in tax.ancestors(sib):
                    continue
                if ok(tok, sib):
                    cands.append(LabeledPair(tok, sib, False, "extension"))
    elif config.strategy == "reversed_negatives":
        for p in dataset.pairs:
            if p.label and ok(p.hypernym, p.hyponym):
                cands.append(LabeledPair(p.hypernym, p.hyponym, False, "extension"))
    elif config.strategy == "random_negatives":
        pool = sorted(tax.nodes - excl)
        closures = {t: tax.ancestors(t) for t in pool}
        seen = set()
        attempts = 0
        budget = 50 * config.max_pairs
        while len(cands) < config.max_pairs and attempts < budget and len(pool) >= 2:
            attempts += 1
            x, y = (pool[i] for i in rng.choice(len(pool), size=2, replace=False))
            if (x, y) in seen or not ok(x, y):
                continue
            if y in closures[x] or x in closures[y]:
                continue
            seen.add((x, y))
            cands.append(LabeledPair(x, y, False, "extension"))
    return cands


def extend_dataset(dataset: PairDataset, tax: Taxonomy,
                   config: ExtensionConfig) -> PairDataset:
    """Append up to max_pairs taxonomy-derived pairs; originals untouched.

    Deterministic per seed; an empty candidate pool yields zero growth with a
    warning, never an error.
    """
    rng = np.random.default_rng(config.seed)
    cands = _extension_candidates(dataset, tax, config, rng)
    if not cands:
        log.warning("extension strategy %s produced no candidates for %s",
                    config.strategy, dataset.name)
        return PairDataset(name=dataset.name, pairs=list(dataset.pairs),
                           split=dataset.split)
    if len(cands) > config.max_pairs:
        chosen = rng.choice(len(cands), size=config.max_pairs, replace=False)
        cands = [cands[i] for i in sorted(chosen)]
    return PairDataset(name=dataset.name, pairs=list(dataset.pairs) + cands,
                       split=dataset.split)
