"""GAN-based augmentation: generate synthetic hyponym-hypernym vector pairs.

The generator is conditioned on a real hyponym vector plus Gaussian noise and
emits a candidate hypernym vector; the discriminator scores the concatenated
pair. Training uses ADAM, soft labels and optional label flips.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .compose import AugmentationEntry, AugmentationSet
from .embeddings import EmbeddingSpace, nearest_neighbors
from .errors import NumericError, ShapeError
from .nn import (Adam, BatchNormLayer, DenseLayer, DropoutLayer,
                 bce_with_logits)

log = logging.getLogger(__name__)


@dataclass
class GanConfig:
    noise_dim: int = 0  # 0 means embedding_dim // 4, floor 8
    learning_rate: float = 0.0002
    beta1: float = 0.5
    beta2: float = 0.999
    dropout_rate: float = 0.3
    real_label_range: tuple = (0.8, 1.0)
    fake_label_range: tuple = (0.0, 0.2)
    label_flip_prob: float = 0.05
    batch_size: int = 64
    steps: int = 2000
    seed: int = 0
    conditional: bool = True

    def __post_init__(self):
        lo, hi = self.real_label_range
        if not (0.5 < lo <= hi <= 1.0):
            raise ValueError("real_label_range must lie in (0.5, 1.0]")
        lo, hi = self.fake_label_range
        if not (0.0 <= lo <= hi < 0.5):
            raise ValueError("fake_label_range must lie in [0, 0.5)")
        if not 0.0 <= self.label_flip_prob < 0.5:
            raise ValueError("label_flip_prob must be in [0, 0.5)")

    def resolved_noise_dim(self, embedding_dim: int) -> int:
        if self.noise_dim > 0:
            return self.noise_dim
        return max(8, embedding_dim // 4)


class Generator:
    """Single dense layer -> batchnorm -> tanh, output in embedding space."""

    def __init__(self, embedding_dim: int, noise_dim: int, conditional: bool,
                 rng):
        self.embedding_dim = embedding_dim
        self.noise_dim = noise_dim
        self.conditional = conditional
        in_dim = embedding_dim + noise_dim if conditional else noise_dim
        self.layer = DenseLayer(in_dim, embedding_dim, rng=rng)
        self.batchnorm = BatchNormLayer(embedding_dim)
        self.train_steps = 0
        self._pre_tanh = None

    def forward(self, x, train: bool = True):
        h = self.layer.forward(x, train=train)
        h = self.batchnorm.forward(h, train=train)
        self._pre_tanh = np.tanh(h)
        return self._pre_tanh

    def backward(self, grad):
        grad = grad * (1.0 - self._pre_tanh ** 2)
        grad = self.batchnorm.backward(grad)
        return self.layer.backward(grad)

    def parameters(self):
        return self.layer.parameters() + self.batchnorm.parameters()

    def gradients(self):
        return self.layer.gradients() + self.batchnorm.gradients()


class Discriminator:
    """Dropout on the concatenated pair, then a single dense layer to a logit."""

    def __init__(self, embedding_dim: int, dropout_rate: float, rng,
                 dropout_seed: int):
        self.embedding_dim = embedding_dim
        self.dropout = DropoutLayer(dropout_rate, seed=dropout_seed)
        self.layer = DenseLayer(2 * embedding_dim, 1, rng=rng)

    def forward(self, pairs, train: bool = True):
        h = self.dropout.forward(pairs, train=train)
        return self.layer.forward(h, train=train)

    def backward(self, grad):
        grad = self.layer.backward(grad)
        return self.dropout.backward(grad)

    def parameters(self):
        return self.layer.parameters()

    def gradients(self):
        return self.layer.gradients()


@dataclass
class GanStepRecord:
    step: int
    d_loss: float
    g_loss: float
    d_real_acc: float
    d_fake_acc: float


@dataclass
class GanTrainingLog:
    records: list[GanStepRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)


class GanTrainingError(NumericError):
    def __init__(self, message, step, checkpoint):
        super().__init__(message)
        self.step = step
        self.checkpoint = checkpoint


def _sample_targets(rng, n, value_range, other_range, flip_prob):
    lo, hi = value_range
    targets = rng.uniform(lo, hi, size=(n, 1))
    if flip_prob > 0:
        flips = rng.random(n) < flip_prob
        olo, ohi = other_range
        targets[flips] = rng.uniform(olo, ohi, size=(int(flips.sum()), 1))
    return targets


def gan_train(real_pairs, config: GanConfig, label_recorder=None):
    """Train generator/discriminator on real (hypo, hyper) vector pairs.

    Alternates one D step (real batch + fake batch) with one G step per
    iteration. Deterministic per seed. label_recorder, if given, is called
    with (step, kind, targets) for kinds d_real / d_fake / g.
    """
    hypos = np.asarray([p[0] for p in real_pairs], dtype=np.float64)
    hypers = np.asarray([p[1] for p in real_pairs], dtype=np.float64)
    if hypos.ndim != 2 or hypos.shape != hypers.shape:
        raise ShapeError("real pairs must be same-dimension vector pairs")
    n, dim = hypos.shape
    if n < 2 * config.batch_size:
        raise ValueError(
            f"need >= 2*batch_size={2 * config.batch_size} real pairs, got {n}")

    seeds = np.random.SeedSequence(config.seed).spawn(3)
    rng = np.random.default_rng(seeds[0])
    noise_dim = config.resolved_noise_dim(dim)
    gen = Generator(dim, noise_dim, config.conditional,
                    rng=np.random.default_rng(seeds[1]))
    disc = Discriminator(dim, config.dropout_rate,
                         rng=np.random.default_rng(seeds[2]),
                         dropout_seed=config.seed + 7919)

    g_opt = Adam(gen.parameters(), learning_rate=config.learning_rate,
                 beta1=config.beta1, beta2=config.beta2)
    d_opt = Adam(disc.parameters(), learning_rate=config.learning_rate,
                 beta1=config.beta1, beta2=config.beta2)

    log_ = GanTrainingLog()
    bs = config.batch_size
    checkpoint = [p.copy() for p in gen.parameters() + disc.parameters()]

    for step in range(config.steps):
        # ---- discriminator step
        idx = rng.choice(n, size=bs, replace=False)
        real_in = np.hstack([hypos[idx], hypers[idx]])
        real_targets = _sample_targets(rng, bs, config.real_label_range,
                                       config.fake_label_range,
                                       config.label_flip_prob)
        anchor_idx = rng.choice(n, size=bs, replace=False)
        anchors = hypos[anchor_idx]
        z = rng.standard_normal((bs, noise_dim))
        g_in = np.hstack([anchors, z]) if config.conditional else z
        fake = gen.forward(g_in, train=True)
        fake_in = np.hstack([anchors, fake])
        fake_targets = _sample_targets(rng, bs, config.fake_label_range,
                                       config.real_label_range,
                                       config.label_flip_prob)
        if label_recorder is not None:
            label_recorder(step, "d_real", real_targets.copy())
            label_recorder(step, "d_fake", fake_targets.copy())

        d_in = np.vstack([real_in, fake_in])
        d_targets = np.vstack([real_targets, fake_targets])
        logits = disc.forward(d_in, train=True)
        d_loss, dgrad = bce_with_logits(logits, d_targets)
        disc.backward(dgrad)
        d_opt.step(disc.gradients())

        d_real_acc = float((logits[:bs] > 0).mean())
        d_fake_acc = float((logits[bs:] <= 0).mean())

        # ---- generator step (through the frozen discriminator)
        anchor_idx = rng.choice(n, size=bs, replace=False)
        anchors = hypos[anchor_idx]
        z = rng.standard_normal((bs, noise_dim))
        g_in = np.hstack([anchors, z]) if config.conditional else z
        fake = gen.forward(g_in, train=True)
        logits = disc.forward(np.hstack([anchors, fake]), train=True)
        g_targets = _sample_targets(rng, bs, config.real_label_range,
                                    config.fake_label_range, 0.0)
        if label_recorder is not None:
            label_recorder(step, "g", g_targets.copy())
        g_loss, dgrad = bce_with_logits(logits, g_targets)
        d_input_grad = disc.backward(dgrad)
        gen.backward(d_input_grad[:, dim:])
        g_opt.step(gen.gradients())
        gen.train_steps += 1

        if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
            raise GanTrainingError(
                f"non-finite loss at step {step}", step=step,
                checkpoint=checkpoint)
        checkpoint = [p.copy() for p in gen.parameters() + disc.parameters()]
        log_.records.append(GanStepRecord(step=step, d_loss=float(d_loss),
                                          g_loss=float(g_loss),
                                          d_real_acc=d_real_acc,
                                          d_fake_acc=d_fake_acc))
    return gen, disc, log_


def gan_sample(gen: Generator, anchors, n_per_anchor: int, seed: int,
               anchor_tokens=None, token_prefix: str = "GANDALF",
               start_index: int = 0) -> AugmentationSet:
    """Sample synthetic hypernym vectors for each anchor hyponym vector.

    Batch-norm runs in eval mode (running statistics); deterministic per seed.
    """
    if gen.train_steps == 0:
        log.warning("sampling from an untrained generator")
    anchors = np.asarray(anchors, dtype=np.float64)
    if anchors.ndim != 2 or anchors.shape[1] != gen.embedding_dim:
        raise ShapeError(
            f"anchors must be [n x {gen.embedding_dim}], got {anchors.shape}")
    rng = np.random.default_rng(seed)
    entries = []
    counter = start_index
    for i, anchor in enumerate(anchors):
        z = rng.standard_normal((n_per_anchor, gen.noise_dim))
        g_in = (np.hstack([np.repeat(anchor[None, :], n_per_anchor, axis=0), z])
                if gen.conditional else z)
        fakes = gen.forward(g_in, train=False)
        anchor_token = (anchor_tokens[i] if anchor_tokens is not None
                        else f"{token_prefix}-anchor-{i}")
        sources = frozenset({anchor_tokens[i]}) if anchor_tokens is not None \
            else frozenset()
        for fake in fakes:
            entries.append(AugmentationEntry(
                hypo_vector=anchor.copy(),
                hyper_vector=fake.copy(),
                label=True,
                hypo_token=anchor_token,
                hyper_token=f"{token_prefix}-{counter}",
                provenance="gandalf_aug",
                source_tokens=sources,
            ))
            counter += 1
    return AugmentationSet(entries=entries, dim=gen.embedding_dim)


def neighbor_report(space: EmbeddingSpace, aug: AugmentationSet, k: int):
    """Nearest real-vocabulary neighbors per synthetic vector.

    Synthetic tokens never appear as neighbors; only words present in the
    real space do.
    """
    if aug.dim and space.dim != aug.dim:
        raise ShapeError("space and augmentation set dimensions differ")
    rows = []
    seen = set()
    for e in aug.entries:
        for tok, vec in ((e.hypo_token, e.hypo_vector),
                         (e.hyper_token, e.hyper_vector)):
            if tok in seen or tok in space:
                continue
            seen.add(tok)
            neighbors = nearest_neighbors(space, vec, min(k, len(space)))
            rows.append((tok, neighbors))
    rows.sort(key=lambda r: r[0])
    return rows


# --------------------------------------------------------- persistence

_GENERATOR_FORMAT = "hyperaug-generator"
_GENERATOR_VERSION = 1


def save_generator(gen: Generator, path):
    header = {
        "format": _GENERATOR_FORMAT,
        "version": _GENERATOR_VERSION,
        "embedding_dim": gen.embedding_dim,
        "noise_dim": gen.noise_dim,
        "conditional": gen.conditional,
        "train_steps": gen.train_steps,
    }
    arrays = {
        "weights": gen.layer.weights,
        "bias": gen.layer.bias,
        "gamma": gen.batchnorm.gamma,
        "beta": gen.batchnorm.beta,
        "running_mean": gen.batchnorm.running_mean,
        "running_var": gen.batchnorm.running_var,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        for name, arr in arrays.items():
            flat = " ".join(repr(float(v)) for v in np.ravel(arr))
            fh.write(f"{name} {flat}\n")


def load_generator(path) -> Generator:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != _GENERATOR_FORMAT:
            raise ValueError(f"not a generator file: {path}")
        if header.get("version") != _GENERATOR_VERSION:
            raise ValueError(f"unsupported generator version {header.get('version')}")
        arrays = {}
        for line in fh:
            name, *values = line.split()
            arrays[name] = np.array([float(v) for v in values])
    gen = Generator(header["embedding_dim"], header["noise_dim"],
                    header["conditional"], rng=np.random.default_rng(0))
    gen.layer.weights = arrays["weights"].reshape(gen.layer.weights.shape)
    gen.layer.bias = arrays["bias"]
    gen.batchnorm.gamma = arrays["gamma"]
    gen.batchnorm.beta = arrays["beta"]
    gen.batchnorm.running_mean = arrays["running_mean"]
    gen.batchnorm.running_var = arrays["running_var"]
    gen.train_steps = header["train_steps"]
    return gen
