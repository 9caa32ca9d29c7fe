"""Chain state: latent variables, caps, snapshots, joint density, checkpoints.

The latent state holds, per group j, the table of every customer t_ji, the
dish of every table k_jt, the customer slice variables u_ji and table
slice variables v_jt, and the group stick vector; globally it holds the
dish stick vector, the atom rows, and the truncation caps.  The dish label
of a customer is always derived, z_ji = k[j][t_ji].

Caps only ever grow.  Growing a cap materializes the new coordinates from
their conditional priors, which keeps the truncation exact: a dish for a
fresh table is drawn from the current dish weights (growing the dish cap
if the draw lands beyond it), its slice variable uniformly below the
chosen weight, and fresh break fractions and atoms from their priors.
"""

import copy
import json
import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import ConfigError, DataFormatError, DomainError, NumericalError
from .sticks import StickVector, clamp_fraction, draw_prior_sticks

CHECKPOINT_FORMAT = "hdpslice-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    """Model and run hyperparameters; concentrations stay fixed for a run."""

    gamma0: float
    alpha0: float
    initial_t_cap: int = 10
    initial_k_cap: int = 10
    growth_factor: float = 1.5
    max_iterations: int = 100
    seed: int = 0
    max_restarts: int = 50  # per iteration, before aborting

    def __post_init__(self):
        if self.gamma0 <= 0 or self.alpha0 <= 0:
            raise DomainError("concentrations must be positive")
        if self.initial_t_cap < 1 or self.initial_k_cap < 1:
            raise DomainError("initial caps must be >= 1")
        if self.growth_factor <= 1:
            raise DomainError("growth_factor must exceed 1")
        if self.max_iterations < 0 or self.max_restarts < 0:
            raise DomainError("iteration and restart budgets must be >= 0")


class GroupedDataset:
    """J groups of observations: token ids in 1..W, or d-vectors.

    Groups are nonempty and homogeneous in type across the dataset.
    """

    def __init__(self, groups, kind, vocab_size=None, dim=None):
        if kind not in ("tokens", "vectors"):
            raise DomainError(f"unknown dataset kind {kind!r}")
        if len(groups) < 1:
            raise DomainError("need at least one group")
        self.kind = kind
        self.groups = []
        for g in groups:
            if kind == "tokens":
                g = np.asarray(g, dtype=np.int64)
                if g.ndim != 1 or g.size < 1:
                    raise DomainError("each group needs at least one token")
                if vocab_size is None:
                    raise DomainError("token datasets need a vocab_size")
                if g.min() < 1 or g.max() > vocab_size:
                    raise DataFormatError(f"token id outside 1..{vocab_size}")
            else:
                g = np.asarray(g, dtype=np.float64)
                if g.ndim != 2 or g.shape[0] < 1:
                    raise DomainError("each group needs at least one vector")
                if dim is None:
                    dim = g.shape[1]
                if g.shape[1] != dim:
                    raise DataFormatError("inconsistent vector dimension")
                if not np.isfinite(g).all():
                    raise DataFormatError("non-finite vector entries")
            self.groups.append(g)
        self.vocab_size = int(vocab_size) if kind == "tokens" else None
        self.dim = int(dim) if kind == "vectors" else None

    @property
    def num_groups(self):
        return len(self.groups)

    @property
    def sizes(self):
        return np.array([len(g) for g in self.groups], dtype=np.int64)

    def flat(self):
        """All observations in group-major order."""
        if self.kind == "tokens":
            return np.concatenate(self.groups)
        return np.vstack(self.groups)


class ChainState:
    """Mutable latent state of one chain.  See the module docstring."""

    def __init__(self, beta_sticks, gamma_sticks, dish_of_table,
                 table_of_customer, u_slice, v_slice, atoms, t_cap, k_cap):
        self.beta_sticks = beta_sticks          # StickVector, len k_cap
        self.gamma_sticks = gamma_sticks        # list[StickVector], len t_cap[j]
        self.dish_of_table = dish_of_table      # list[int64 array], 1-based
        self.table_of_customer = table_of_customer  # list[int64 array], 1-based
        self.u_slice = u_slice                  # list[float array], per customer
        self.v_slice = v_slice                  # list[float array], per table
        self.atoms = atoms                      # (k_cap, dim) rows
        self.t_cap = np.asarray(t_cap, dtype=np.int64)
        self.k_cap = int(k_cap)

    @property
    def num_groups(self):
        return len(self.gamma_sticks)

    def all_dishes(self):
        """dish_of_table concatenated over groups (tracked tables only)."""
        return np.concatenate(self.dish_of_table)

    def min_v(self):
        return min(v.min() for v in self.v_slice)


@dataclass
class Snapshot:
    """Deep copy of a ChainState taken at the start of an iteration.

    Stream state needs no cursors: every draw comes from a stream derived
    from (seed, phase, iteration, index), so replaying an iteration from
    its snapshot reproduces it exactly.
    """

    payload: ChainState
    iteration: int = 0


def take_snapshot(state, iteration=0):
    return Snapshot(payload=copy.deepcopy(state), iteration=iteration)


def restore_snapshot(snapshot):
    """A fresh ChainState bit-identical to the captured one."""
    return copy.deepcopy(snapshot.payload)


def init_state(hp, data, kernel):
    """All-ones initialization.

    Every customer starts at table 1 and every table serves dish 1; break
    fractions and atoms come from their priors.  Slice variables are drawn
    uniform and immediately scaled below their stick weight, so every
    slice set is nonempty from the first sweep.
    """
    J = data.num_groups
    seed = hp.seed
    k_cap = hp.initial_k_cap

    beta_raw = draw_prior_sticks(hp.gamma0, k_cap, streams.substream(seed, streams.INIT_BETA))
    beta = StickVector(beta_raw)

    atoms = np.vstack([
        np.atleast_1d(kernel.sample_atom_prior(streams.substream(seed, streams.INIT_ATOM, 0, k)))
        for k in range(k_cap)
    ])

    gamma_sticks, dish_of_table, table_of_customer, u_slice, v_slice = [], [], [], [], []
    for j in range(J):
        cap = hp.initial_t_cap
        n_j = len(data.groups[j])
        raw = draw_prior_sticks(hp.alpha0, cap,
                                streams.substream(seed, streams.INIT_GAMMA, 0, j))
        sv = StickVector(raw)
        t_j = np.ones(n_j, dtype=np.int64)
        k_j = np.ones(cap, dtype=np.int64)
        ru = clamp_fraction(streams.substream(seed, streams.INIT_U, 0, j).random(n_j))
        rv = clamp_fraction(streams.substream(seed, streams.INIT_V, 0, j).random(cap))
        gamma_sticks.append(sv)
        table_of_customer.append(t_j)
        dish_of_table.append(k_j)
        u_slice.append(ru * sv.weights[t_j - 1])
        v_slice.append(rv * beta.weights[k_j - 1])

    return ChainState(beta, gamma_sticks, dish_of_table, table_of_customer,
                      u_slice, v_slice, atoms,
                      np.full(J, hp.initial_t_cap, dtype=np.int64), k_cap)


def derive_z(state):
    """Dish labels z_ji = dish_of_table[j][t_ji - 1], one array per group."""
    return [k_j[t_j - 1] for k_j, t_j in
            zip(state.dish_of_table, state.table_of_customer)]


def grown_cap(cap, factor):
    return int(math.ceil(cap * factor))


def grow_k_cap(state, new_cap, kernel, hp, rng):
    """Extend the dish cap: fresh prior break fractions and prior atoms."""
    extra = new_cap - state.k_cap
    if extra <= 0:
        return
    state.beta_sticks = state.beta_sticks.extended(
        draw_prior_sticks(hp.gamma0, extra, rng))
    new_atoms = np.vstack([np.atleast_1d(kernel.sample_atom_prior(rng))
                           for _ in range(extra)])
    state.atoms = np.vstack([state.atoms, new_atoms])
    state.k_cap = new_cap


def grow_t_cap(state, j, new_cap, kernel, hp, rng):
    """Extend group j's table cap, materializing the fresh tables.

    Each fresh table draws its dish from the current dish weights; if the
    draw lands beyond the dish cap the dish cap grows first, so the draw
    is never truncated.  The table's slice variable is then uniform below
    the chosen dish weight.
    """
    old_cap = int(state.t_cap[j])
    extra = new_cap - old_cap
    if extra <= 0:
        return
    state.gamma_sticks[j] = state.gamma_sticks[j].extended(
        draw_prior_sticks(hp.alpha0, extra, rng))

    new_k = np.empty(extra, dtype=np.int64)
    new_v = np.empty(extra, dtype=np.float64)
    for idx in range(extra):
        target = rng.random()
        cum = np.cumsum(state.beta_sticks.weights)
        while target > cum[-1]:
            grow_k_cap(state, grown_cap(state.k_cap, hp.growth_factor), kernel, hp, rng)
            cum = np.cumsum(state.beta_sticks.weights)
        dish = int(np.searchsorted(cum, target) + 1)
        new_k[idx] = dish
        new_v[idx] = clamp_fraction(rng.random()) * state.beta_sticks.weights[dish - 1]

    state.dish_of_table[j] = np.concatenate([state.dish_of_table[j], new_k])
    state.v_slice[j] = np.concatenate([state.v_slice[j], new_v])
    state.t_cap[j] = new_cap


def log_beta1_density(x, concentration):
    """Log density of Beta(1, c) at x."""
    return np.log(concentration) + (concentration - 1.0) * np.log1p(-x)


def log_joint(state, data, kernel, hp):
    """Log joint density of data and latents, truncated at the caps.

    Beyond the caps every factor is a data-independent prior term, so the
    capped sum is the joint up to an additive constant for fixed caps;
    only compare values between states with equal caps.
    """
    z = derive_z(state)
    total = 0.0
    beta_w = state.beta_sticks.weights
    for j in range(state.num_groups):
        lm = kernel.log_likelihood_matrix(data.groups[j], state.atoms)
        lik = lm[np.arange(len(z[j])), z[j] - 1].sum()
        if not np.isfinite(lik):
            raise NumericalError(f"non-finite likelihood factor in group {j + 1}")
        gw = state.gamma_sticks[j].weights
        seat = np.log(gw[state.table_of_customer[j] - 1]).sum()
        table_prior = log_beta1_density(state.gamma_sticks[j].raw, hp.alpha0).sum()
        dish_pick = np.log(beta_w[state.dish_of_table[j] - 1]).sum()
        part = lik + seat + table_prior + dish_pick
        if not np.isfinite(part):
            raise NumericalError(f"non-finite stick factor in group {j + 1}")
        total += part
    total += log_beta1_density(state.beta_sticks.raw, hp.gamma0).sum()
    atom_prior = sum(kernel.atom_log_prior(state.atoms[k]) for k in range(state.k_cap))
    if not np.isfinite(atom_prior):
        raise NumericalError("non-finite atom prior factor")
    total += atom_prior
    if not np.isfinite(total):
        raise NumericalError("non-finite log joint")
    return float(total)


def save_checkpoint(state, hp, next_iteration, path):
    """Write a versioned JSON checkpoint sufficient to resume the chain."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "seed": int(hp.seed),
        "next_iteration": int(next_iteration),
        "k_cap": int(state.k_cap),
        "t_cap": state.t_cap.tolist(),
        "beta_raw": state.beta_sticks.raw.tolist(),
        "gamma_raw": [sv.raw.tolist() for sv in state.gamma_sticks],
        "dish_of_table": [k.tolist() for k in state.dish_of_table],
        "table_of_customer": [t.tolist() for t in state.table_of_customer],
        "u_slice": [u.tolist() for u in state.u_slice],
        "v_slice": [v.tolist() for v in state.v_slice],
        "atoms": state.atoms.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path):
    """Read a checkpoint; returns (state, seed, next_iteration)."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise DataFormatError(f"{path}: not a checkpoint file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    state = ChainState(
        beta_sticks=StickVector(np.array(doc["beta_raw"])),
        gamma_sticks=[StickVector(np.array(r)) for r in doc["gamma_raw"]],
        dish_of_table=[np.array(k, dtype=np.int64) for k in doc["dish_of_table"]],
        table_of_customer=[np.array(t, dtype=np.int64) for t in doc["table_of_customer"]],
        u_slice=[np.array(u, dtype=np.float64) for u in doc["u_slice"]],
        v_slice=[np.array(v, dtype=np.float64) for v in doc["v_slice"]],
        atoms=np.array(doc["atoms"], dtype=np.float64),
        t_cap=np.array(doc["t_cap"], dtype=np.int64),
        k_cap=int(doc["k_cap"]),
    )
    return state, int(doc["seed"]), int(doc["next_iteration"])
