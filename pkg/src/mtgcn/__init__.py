"""Mutual-teaching dual GCNs for semi-supervised node classification."""
from .graph import Dataset, RawGraph, Split, load_dataset, normalize_adjacency, sample_split, save_dataset
from .linalg import ConfigError, SparseMatrix
from .losses import LossReport, overall_loss
from .model import GcnModel, adam_step, backward, forward, init
from .pseudo import PseudoSet, select_top_t
from .trainer import Problem, TrainConfig, evaluate, run_experiment, train_mutual, train_single

__version__ = "0.1.0"
