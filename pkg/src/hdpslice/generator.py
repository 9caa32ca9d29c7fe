"""Exact synthetic data generation from the HDP mixture.

Labels come from the franchise predictive scheme: a customer joins an
existing table with probability proportional to its occupancy or opens a
new one proportional to the group concentration; a new table serves an
existing dish proportional to the number of tables serving it anywhere,
or a new dish proportional to the top concentration.  This is an exact
draw from the label process with no truncation.

A truncated stick-breaking generator with negligible residual mass is
kept as a cross-check for tests only; the franchise scheme is the one
used for experiments.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .state import GroupedDataset
from .sticks import draw_prior_sticks, stick_weights


@dataclass
class SyntheticTruth:
    """Realized labels and assignments of one draw from the label process.

    Labels number dishes 1, 2, ... in order of first creation.  Atoms are
    filled in by `generate_observations`.
    """

    labels: list                 # z per group
    tables: list                 # table of each customer
    dish_of_table: list          # dish served at each table, per group
    num_dishes: int
    dish_sizes: np.ndarray       # customers per dish
    atoms: np.ndarray = field(default=None)


def generate_labels(gamma0, alpha0, group_sizes, rng):
    """Draw group labelings from the HDP label process.

    Parameters
    ----------
    gamma0, alpha0 : float
        Top-level and group-level concentrations, positive.
    group_sizes : sequence of int
        Number of customers per group, each >= 1.
    rng : numpy Generator
    """
    if gamma0 <= 0 or alpha0 <= 0:
        raise DomainError("concentrations must be positive")
    group_sizes = [int(n) for n in group_sizes]
    if len(group_sizes) < 1 or min(group_sizes) < 1:
        raise DomainError("need at least one customer per group")

    tables_per_dish = []        # global: number of tables serving each dish
    labels, tables, dish_of_table = [], [], []
    for n_j in group_sizes:
        table_counts = []       # occupancy within this group
        table_dish = []
        t_j = np.empty(n_j, dtype=np.int64)
        z_j = np.empty(n_j, dtype=np.int64)
        for i in range(n_j):
            r = rng.random() * (i + alpha0)
            acc = 0.0
            choice = len(table_counts)  # new table unless an existing one absorbs r
            for t, c in enumerate(table_counts):
                acc += c
                if r < acc:
                    choice = t
                    break
            if choice == len(table_counts):
                total_tables = sum(tables_per_dish)
                rd = rng.random() * (total_tables + gamma0)
                acc = 0.0
                dish = len(tables_per_dish)
                for k, m in enumerate(tables_per_dish):
                    acc += m
                    if rd < acc:
                        dish = k
                        break
                if dish == len(tables_per_dish):
                    tables_per_dish.append(0)
                tables_per_dish[dish] += 1
                table_counts.append(0)
                table_dish.append(dish)
            table_counts[choice] += 1
            t_j[i] = choice + 1
            z_j[i] = table_dish[choice] + 1
        labels.append(z_j)
        tables.append(t_j)
        dish_of_table.append(np.array(table_dish, dtype=np.int64) + 1)

    num_dishes = len(tables_per_dish)
    sizes = np.bincount(np.concatenate(labels), minlength=num_dishes + 1)[1:]
    return SyntheticTruth(labels=labels, tables=tables, dish_of_table=dish_of_table,
                          num_dishes=num_dishes, dish_sizes=sizes)


def generate_observations(truth, kernel, rng):
    """Emit observations for a realized labeling.

    Draws one atom per realized dish from the kernel prior (stored on the
    truth), then one observation per customer from its dish's atom.
    """
    truth.atoms = np.vstack([np.atleast_1d(kernel.sample_atom_prior(rng))
                             for _ in range(truth.num_dishes)])
    groups = []
    for z_j in truth.labels:
        obs = [kernel.sample_observation(truth.atoms[z - 1], rng) for z in z_j]
        groups.append(np.array(obs))
    if kernel.observation_kind == "tokens":
        return GroupedDataset(groups, "tokens", vocab_size=kernel.vocab_size)
    return GroupedDataset([np.atleast_2d(g) for g in groups], "vectors", dim=kernel.dim)


def stick_label_reference(gamma0, alpha0, group_sizes, rng, residual=1e-10):
    """Reference labeling via truncated stick-breaking, for tests.

    Sticks are materialized until the tail mass drops below `residual`,
    then categorical draws use the renormalized weights; the truncation
    bias is below the resolution of any statistical comparison here.
    Labels are stick indices, so only partition statistics are comparable
    with `generate_labels`.
    """

    def weights_to(concentration):
        raw = draw_prior_sticks(concentration, 8, rng)
        while np.prod(1.0 - raw) >= residual:
            raw = np.concatenate([raw, draw_prior_sticks(concentration, 8, rng)])
        w = stick_weights(raw)
        return w / w.sum()

    beta = weights_to(gamma0)
    labels = []
    for n_j in group_sizes:
        gw = weights_to(alpha0)
        dish_at = rng.choice(beta.size, size=gw.size, p=beta) + 1
        t_j = rng.choice(gw.size, size=n_j, p=gw)
        labels.append(dish_at[t_j])
    return labels
