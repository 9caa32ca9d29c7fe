"""Exact slice sampler for HDP mixtures.

One sweep runs, in order: per-group table-stick updates with the
admissible-table computation and table-cap guard; the global dish-stick
update with the admissible-dish computation and dish-cap guard; atom
updates; per-group dish-of-table and table-slice updates; per-group
table-of-customer and customer-slice updates; label derivation.

Updating a stick vector conditions on the seating counts with the slice
variables integrated out, so each slice variable is immediately refreshed
by rescaling: its fraction of the old stick weight is kept and applied to
the new weight.  The fraction is uniform on (0,1) independently of the
rest of the state, so this is exactly a redraw of the slice variable from
its conditional, and it keeps every slice set nonempty.

Truncation stays exact through the tail-product guards.  Whenever the
remaining stick mass beyond a cap is at least the smallest slice variable
measured against that stick, an index beyond the cap could be admissible;
the cap grows and the iteration restarts from its snapshot.  Restarted
iterations replay the same derived streams, so coordinates that already
existed reproduce their draws and only the fresh coordinates consume new
randomness.  The guards are re-checked against the end-of-iteration slice
variables as well; a failure there only materializes further coordinates
in place, so after every accepted iteration no mass beyond the caps is
admissible.

All randomness comes from streams keyed by (seed, phase, iteration,
coordinate), making chains bit-reproducible for any worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import streams
from .accel import categorical_rows, last_admissible
from .errors import InvariantError, NumericalError
from .metrics import aggregate_labels, nmi
from .state import (derive_z, grow_k_cap, grow_t_cap, grown_cap, log_joint,
                    restore_snapshot, take_snapshot)
from .sticks import clamp_fraction, draw_stick_vector, occupancy


@dataclass
class SliceBounds:
    """Admissible index bounds of one iteration.

    T[j][i] is the largest table index customer i of group j may move to;
    K_jt[j][t] the largest dish index table t may switch to.  T_j, K_j and
    K are the group and global maxima.
    """

    T: list
    K_jt: list

    @property
    def T_j(self):
        return np.array([int(t.max()) for t in self.T])

    @property
    def K_j(self):
        return np.array([int(k.max()) for k in self.K_jt])

    @property
    def K(self):
        return int(self.K_j.max())


@dataclass
class TraceRecord:
    """Per-iteration diagnostics."""

    iteration: int
    nmi: float          # nan when no reference labels were given
    active_dishes: int
    K: int
    max_T: int
    t_cap_max: int
    k_cap: int
    restarts: int
    log_joint: float


def update_gamma_sticks(state, j, alpha0, rng):
    """Redraw group j's stick vector from its seating-count conditional and
    rescale the customers' slice variables onto the new weights."""
    t_j = state.table_of_customer[j]
    old_w = state.gamma_sticks[j].weights
    frac = state.u_slice[j] / old_w[t_j - 1]
    counts = occupancy(t_j, int(state.t_cap[j]))
    sv = draw_stick_vector(counts, alpha0, rng)
    state.gamma_sticks[j] = sv
    state.u_slice[j] = frac * sv.weights[t_j - 1]


def update_beta_sticks(state, gamma0, rng):
    """Redraw the dish stick vector from the dish counts of all tracked
    tables (vacant ones included) and rescale the table slice variables."""
    old_w = state.beta_sticks.weights
    fracs = [state.v_slice[j] / old_w[k_j - 1]
             for j, k_j in enumerate(state.dish_of_table)]
    counts = occupancy(state.all_dishes(), state.k_cap)
    bv = draw_stick_vector(counts, gamma0, rng)
    state.beta_sticks = bv
    for j, k_j in enumerate(state.dish_of_table):
        state.v_slice[j] = fracs[j] * bv.weights[k_j - 1]


def compute_T(state, j):
    """Largest admissible table index per customer of group j.

    The scan covers every tracked table because the weights are not
    monotone.  The set always contains the customer's current table; an
    empty set means a broken slice update.
    """
    bound = last_admissible(state.gamma_sticks[j].weights, state.u_slice[j])
    if (bound == 0).any():
        raise InvariantError(f"empty admissible table set in group {j + 1}")
    return bound


def compute_K_jt(state, j):
    """Largest admissible dish index per tracked table of group j."""
    bound = last_admissible(state.beta_sticks.weights, state.v_slice[j])
    if (bound == 0).any():
        raise InvariantError(f"empty admissible dish set in group {j + 1}")
    return bound


def guard_t_cap(state, j):
    """True when group j's table cap must grow: the stick mass beyond the
    cap is not provably below every customer slice variable."""
    return bool(state.gamma_sticks[j].tail[-1] >= state.u_slice[j].min())


def guard_k_cap(state):
    """True when the dish cap must grow."""
    return bool(state.beta_sticks.tail[-1] >= state.min_v())


def update_atoms(state, kernel, data, seed, iteration):
    """Redraw every atom from its conjugate posterior given the customers
    currently assigned to it; unassigned dishes draw from the prior.
    Each dish uses its own stream, so dishes update independently."""
    z = derive_z(state)
    flat_y = data.flat()
    flat_z = np.concatenate(z)
    rows = []
    for k in range(1, state.k_cap + 1):
        rng = streams.substream(seed, streams.ATOM, iteration, k)
        assigned = flat_y[flat_z == k]
        rows.append(np.atleast_1d(kernel.sample_atom_posterior(assigned, rng)))
    state.atoms = np.vstack(rows)


def update_k(state, j, kernel, data, k_bound, rng_k, rng_v):
    """Redraw every tracked table's dish over its admissible dishes, then
    its slice variable uniformly below the new dish weight.

    A dish is admissible for a table when its weight covers the table's
    slice variable; the weights are not monotone, so the indicator filters
    inside the scan bound.  A vacant table has an empty likelihood
    product, so it draws uniformly over its admissible dishes.
    """
    cap = int(state.t_cap[j])
    logw = kernel.table_log_weights(data.groups[j], state.table_of_customer[j],
                                    cap, state.atoms)
    admissible = state.beta_sticks.weights[None, :] >= state.v_slice[j][:, None]
    logw = np.where(admissible, logw, -np.inf)
    draws = categorical_rows(np.ascontiguousarray(logw), k_bound, rng_k.random(cap))
    if (draws < 0).any():
        raise NumericalError(f"all dish weights vanished for a table in group {j + 1}")
    state.dish_of_table[j] = draws
    frac = clamp_fraction(rng_v.random(cap))
    state.v_slice[j] = frac * state.beta_sticks.weights[draws - 1]


def update_t(state, j, kernel, data, t_bound, rng_t, rng_u):
    """Redraw every customer's table over its admissible tables, weighted
    by the dish likelihood of each table, then the customer slice variable.

    A table is admissible when its weight covers the customer's slice
    variable; the indicator filters inside the scan bound because the
    weights are not monotone.
    """
    n_j = len(data.groups[j])
    lm = kernel.log_likelihood_matrix(data.groups[j], state.atoms)
    logw = lm[:, state.dish_of_table[j] - 1]
    admissible = state.gamma_sticks[j].weights[None, :] >= state.u_slice[j][:, None]
    logw = np.where(admissible, logw, -np.inf)
    draws = categorical_rows(np.ascontiguousarray(logw), t_bound, rng_t.random(n_j))
    if (draws < 0).any():
        raise NumericalError(f"all table weights vanished for a customer in group {j + 1}")
    state.table_of_customer[j] = draws
    frac = clamp_fraction(rng_u.random(n_j))
    state.u_slice[j] = frac * state.gamma_sticks[j].weights[draws - 1]


class _Restart(Exception):
    """Internal: an iteration attempt needs larger caps."""

    def __init__(self, t_groups, grow_k):
        self.t_groups = t_groups
        self.grow_k = grow_k


def _map(pool, fn, items):
    return list(pool.map(fn, items)) if pool is not None else [fn(x) for x in items]


def _attempt(state, data, kernel, hp, iteration, pool):
    """One pass over all phases; raises _Restart on any guard failure."""
    J = state.num_groups
    seed = hp.seed

    # table sticks: compute per group, commit only if every guard passes
    def stage_gamma(j):
        rng = streams.substream(seed, streams.GAMMA, iteration, j)
        t_j = state.table_of_customer[j]
        old_w = state.gamma_sticks[j].weights
        frac = state.u_slice[j] / old_w[t_j - 1]
        counts = occupancy(t_j, int(state.t_cap[j]))
        sv = draw_stick_vector(counts, hp.alpha0, rng)
        u_new = frac * sv.weights[t_j - 1]
        grow = bool(sv.tail[-1] >= u_new.min())
        return sv, u_new, grow

    staged = _map(pool, stage_gamma, range(J))
    bad = [j for j, (_, _, grow) in enumerate(staged) if grow]
    if bad:
        raise _Restart(bad, False)
    for j, (sv, u_new, _) in enumerate(staged):
        state.gamma_sticks[j] = sv
        state.u_slice[j] = u_new
    t_bounds = _map(pool, lambda j: compute_T(state, j), range(J))

    # dish sticks
    update_beta_sticks(state, hp.gamma0, streams.substream(seed, streams.BETA, iteration))
    if guard_k_cap(state):
        raise _Restart([], True)
    k_bounds = _map(pool, lambda j: compute_K_jt(state, j), range(J))
    bounds = SliceBounds(T=t_bounds, K_jt=k_bounds)

    update_atoms(state, kernel, data, seed, iteration)

    def stage_k(j):
        update_k(state, j, kernel, data, k_bounds[j],
                 streams.substream(seed, streams.KDRAW, iteration, j),
                 streams.substream(seed, streams.VDRAW, iteration, j))

    def stage_t(j):
        update_t(state, j, kernel, data, t_bounds[j],
                 streams.substream(seed, streams.TDRAW, iteration, j),
                 streams.substream(seed, streams.UDRAW, iteration, j))

    _map(pool, stage_k, range(J))
    _map(pool, stage_t, range(J))
    return bounds


def sweep(state, data, kernel, hp, iteration, truth=None, workers=1, pool=None):
    """Run one full iteration; returns (state, TraceRecord).

    On a guard failure inside the iteration the state restores its
    snapshot, every failing cap grows by the growth factor, and the
    iteration reruns; a failure of the end-of-iteration re-check just
    materializes more coordinates.  More than ``hp.max_restarts`` growth
    events in one iteration abort the run.
    """
    own_pool = None
    if pool is None and workers > 1:
        own_pool = pool = ThreadPoolExecutor(max_workers=workers)
    try:
        snap = take_snapshot(state, iteration)
        grow_events = 0

        def budget_check():
            if grow_events >= hp.max_restarts:
                raise NumericalError(
                    f"iteration {iteration}: cap growth did not settle "
                    f"within {hp.max_restarts} growth events")

        while True:
            try:
                bounds = _attempt(state, data, kernel, hp, iteration, pool)
                break
            except _Restart as r:
                budget_check()
                rng = streams.substream(hp.seed, streams.EXTEND, iteration, grow_events)
                state = restore_snapshot(snap)
                for j in r.t_groups:
                    grow_t_cap(state, j, grown_cap(int(state.t_cap[j]), hp.growth_factor),
                               kernel, hp, rng)
                if r.grow_k:
                    grow_k_cap(state, grown_cap(state.k_cap, hp.growth_factor),
                               kernel, hp, rng)
                snap = take_snapshot(state, iteration)
                grow_events += 1

        # The slice variables drawn this iteration must also clear the
        # tails, so that the state handed on certifies that no mass beyond
        # the caps is admissible.  Materializing further coordinates from
        # their conditional priors leaves the realized chain untouched.
        while True:
            bad = [j for j in range(state.num_groups) if guard_t_cap(state, j)]
            need_k = guard_k_cap(state)
            if not bad and not need_k:
                break
            budget_check()
            rng = streams.substream(hp.seed, streams.EXTEND, iteration, grow_events)
            for j in bad:
                grow_t_cap(state, j, grown_cap(int(state.t_cap[j]), hp.growth_factor),
                           kernel, hp, rng)
            if need_k:
                grow_k_cap(state, grown_cap(state.k_cap, hp.growth_factor),
                           kernel, hp, rng)
            grow_events += 1
    finally:
        if own_pool is not None:
            own_pool.shutdown(wait=True)

    z = derive_z(state)
    flat_z = aggregate_labels(z)
    score = nmi(flat_z, truth) if truth is not None else float("nan")
    record = TraceRecord(
        iteration=iteration,
        nmi=score,
        active_dishes=int(np.unique(flat_z).size),
        K=bounds.K,
        max_T=int(bounds.T_j.max()),
        t_cap_max=int(state.t_cap.max()),
        k_cap=state.k_cap,
        restarts=grow_events,
        log_joint=log_joint(state, data, kernel, hp),
    )
    return state, record


def run(data, kernel, hp, truth=None, workers=1, state=None, start_iteration=1,
        on_record=None, on_labels=None, labels_every=0):
    """Run ``hp.max_iterations`` sweeps; no burn-in, no thinning.

    Returns (records, final_state).  `truth` is an optional flat reference
    labeling scored with aggregate NMI each iteration.  `state` and
    `start_iteration` resume a checkpointed chain; resuming replays the
    exact trace an uninterrupted run would have produced.
    """
    from .state import init_state  # local import keeps module load light

    if state is None:
        state = init_state(hp, data, kernel)
    records = []
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for iteration in range(start_iteration, hp.max_iterations + 1):
            state, rec = sweep(state, data, kernel, hp, iteration,
                               truth=truth, workers=workers, pool=pool)
            records.append(rec)
            if on_record is not None:
                on_record(rec)
            if on_labels is not None and labels_every and iteration % labels_every == 0:
                on_labels(iteration, derive_z(state))
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    return records, state
