"""Exact slice sampler for hierarchical Dirichlet process mixtures."""

from .generator import SyntheticTruth, generate_labels, generate_observations
from .kernels import EmissionKernel, GaussianKernel, MultinomialKernel, make_kernel
from .metrics import aggregate_labels, majority_vote, nmi
from .sampler import SliceBounds, TraceRecord, run, sweep
from .state import (ChainState, GroupedDataset, Hyperparams, Snapshot, derive_z,
                    init_state, load_checkpoint, log_joint, restore_snapshot,
                    save_checkpoint, take_snapshot)
from .sticks import (OccupancyCounts, StickVector, conditional_stick_draw,
                     occupancy, stick_weights, tail_products)

__version__ = "0.1.0"

__all__ = [
    "ChainState", "EmissionKernel", "GaussianKernel", "GroupedDataset",
    "Hyperparams", "MultinomialKernel", "OccupancyCounts", "SliceBounds",
    "Snapshot", "StickVector", "SyntheticTruth", "TraceRecord",
    "aggregate_labels", "conditional_stick_draw", "derive_z",
    "generate_labels", "generate_observations", "init_state",
    "load_checkpoint", "log_joint", "majority_vote", "make_kernel", "nmi",
    "occupancy", "restore_snapshot", "run", "save_checkpoint",
    "stick_weights", "sweep", "tail_products", "take_snapshot",
]
