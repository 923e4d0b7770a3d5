"""Hypernymy detection with compositional and GAN-based data augmentation."""

__version__ = "0.1.0"

from .classifiers import (FeedforwardSpec, LogisticModel, TrainSpec, aggregate,
                          evaluate, ff_fit, grid_search, lr_fit)
from .compose import (AugmentationEntry, AugmentationSet, ComposeConfig,
                      CompoundSpec, compose, generate_compose_pairs)
from .datasets import (FoldPlan, LabeledPair, PairDataset, filter_to_vocabulary,
                       parse_pairs, stratified_folds)
from .embeddings import EmbeddingSpace, cosine, load_space, nearest_neighbors, save_space
from .gandalf import GanConfig, Generator, gan_sample, gan_train, neighbor_report
from .harness import (ExperimentConfig, ablation_hyper_only, load_config,
                      run_matrix, sweep_amount)
from .taxonomy import ExtensionConfig, Taxonomy, extend_dataset, load_taxonomy
